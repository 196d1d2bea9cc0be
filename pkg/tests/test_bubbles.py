import math

import numpy as np
import pytest

from theta_extremal.bubbles import (
    BubbleProfile,
    build_correction_system,
    bubble_values,
    corrected_integrals,
    corrected_test_function,
    default_global_rule,
    default_tau,
    integrate_bubble,
    leading_coefficients,
    limit_identity_check,
    monte_carlo_sphere_rule,
    phi_eps,
    phi_eps_prime,
    pick_bump_center,
    product_sphere_rule,
    radial_rule,
    rayleigh_sweep,
    sweep_rows_to_csv,
)
from theta_extremal.sobolev import SobolevParams, sharp_sobolev
from theta_extremal.sphere import random_rotation, simplex_vertices, surface_area

PARAMS = SobolevParams(n=2, p=1.5)


@pytest.fixture(scope="module")
def global_rule():
    return default_global_rule(2)


class TestQuadratureRules:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_radial_rule_sine_powers(self, n):
        rule = radial_rule(math.pi, panels=40, order=12)
        value = float(rule.weights @ np.sin(rule.nodes) ** (n - 1))
        target = surface_area(n) / surface_area(n - 1)
        assert value == pytest.approx(target, rel=1e-10)

    def test_radial_rule_circle_length(self):
        # n = 1 analogue: int_0^pi sin^0 = pi = |S^1| / (two endpoints)
        rule = radial_rule(math.pi, panels=40, order=12)
        assert float(rule.weights.sum()) == pytest.approx(math.pi, rel=1e-12)

    def test_product_rule_weight_sum(self, global_rule):
        assert global_rule.weights.sum() == pytest.approx(surface_area(2), rel=1e-6)
        assert global_rule.nodes.shape[0] >= 200_000
        assert np.max(np.abs(np.linalg.norm(global_rule.nodes, axis=1) - 1.0)) < 1e-12

    def test_product_rule_polynomial_exactness(self):
        rule = product_sphere_rule(2, polar_order=8, azimuth_count=16)
        x = rule.nodes
        assert float(rule.weights @ x[:, 0] ** 2) == pytest.approx(surface_area(2) / 3.0, rel=1e-12)
        assert abs(float(rule.weights @ (x[:, 0] * x[:, 1]))) < 1e-12

    def test_monte_carlo_rule(self):
        rule = monte_carlo_sphere_rule(3, count=20_000, seed=4)
        assert rule.weights.sum() == pytest.approx(surface_area(3), rel=1e-6)
        # deterministic for a fixed seed
        again = monte_carlo_sphere_rule(3, count=20_000, seed=4)
        assert np.array_equal(rule.nodes, again.nodes)

    def test_radial_convergence_order(self):
        # doubling the node count of a uniform composite rule cuts the error
        # by far more than 3x for a smooth integrand away from r = 0
        def value(panels):
            rule = radial_rule(math.pi, panels=panels, order=2)
            return float(rule.weights @ (np.sin(rule.nodes) ** 3 * np.exp(rule.nodes)))

        reference = value(400)
        err_coarse = abs(value(4) - reference)
        err_fine = abs(value(8) - reference)
        assert err_coarse / max(err_fine, 1e-16) >= 3.0


class TestProfile:
    def test_zero_beyond_double_radius(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        assert phi_eps(3.0 * profile.delta, profile) == 0.0

    def test_peak_value(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        expected = (1e-3) ** (-PARAMS.n / PARAMS.p_star)
        assert phi_eps(0.0, profile) == pytest.approx(expected, rel=1e-14)

    def test_continuity_at_taper(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        d = profile.delta
        left = phi_eps(d - 1e-12, profile)
        right = phi_eps(d + 1e-12, profile)
        assert left == pytest.approx(right, rel=1e-9)
        assert phi_eps(2.0 * d, profile) == pytest.approx(0.0, abs=1e-12)

    def test_derivative_matches_finite_differences(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-2)
        for t in (0.05, 0.2, 0.35, 0.5):
            h = 1e-7
            fd = (phi_eps(t + h, profile) - phi_eps(t - h, profile)) / (2.0 * h)
            assert phi_eps_prime(t, profile) == pytest.approx(fd, rel=1e-5)

    def test_eps_range_validated(self):
        with pytest.raises(ValueError):
            BubbleProfile(params=PARAMS, eps=0.5, delta=0.3)

    def test_cap_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            BubbleProfile(params=PARAMS, eps=1e-3, delta=0.5)

    def test_tau_bound_validated(self):
        with pytest.raises(ValueError):
            BubbleProfile(params=PARAMS, eps=1e-3, tau=0.7)
        assert 0.0 < default_tau(PARAMS) < 2.0 / 3.0

    def test_bubble_values_single_cap_active(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-2)
        vals = bubble_values(profile.centers, profile)
        assert np.allclose(vals, phi_eps(0.0, profile), rtol=1e-12)


class TestLeadingCoefficients:
    def test_values_n2_p15(self):
        lead = leading_coefficients(PARAMS)
        # c_num = 2*pi * (4/3) * B(4/3, 2/3) with B = 2*pi/(3*sqrt(3))
        exact = 2.0 * math.pi * (4.0 / 3.0) * 2.0 * math.pi / (3.0 * math.sqrt(3.0))
        assert lead.c_num == pytest.approx(exact, rel=1e-12)
        assert lead.c_num == pytest.approx(10.130166680469433, rel=1e-12)

    def test_limit_ratio_equals_target(self):
        lead = leading_coefficients(PARAMS)
        target = 4.0 ** (-0.75) * sharp_sobolev(PARAMS) ** 1.5
        assert lead.limit_ratio == pytest.approx(target, rel=1e-12)
        assert lead.limit_ratio == pytest.approx(0.0880557176488773, rel=1e-10)

    @pytest.mark.parametrize("n,p", [(2, 1.5), (3, 2.0), (5, 3.0), (6, 2.0)])
    def test_positive(self, n, p):
        lead = leading_coefficients(SobolevParams(n=n, p=p))
        assert lead.c_num > 0 and lead.c_grad > 0 and lead.limit_ratio > 0


class TestIdentityCheck:
    @pytest.mark.parametrize("n,p", [(3, 2.0), (2, 1.5), (5, 3.0)])
    def test_small_discrepancy(self, n, p):
        assert limit_identity_check(SobolevParams(n=n, p=p)) < 1e-10

    def test_full_grid(self):
        for n in range(2, 7):
            p_values = [1.2, 1.5] + ([2.0] if n > 2 else [])
            if (n + 1) / 2 < n:
                p_values.append((n + 1) / 2)
            for p in p_values:
                assert limit_identity_check(SobolevParams(n=n, p=p)) < 1e-10


class TestIntegrateBubble:
    def test_numerator_asymptote(self):
        lead = leading_coefficients(PARAMS)
        raw = integrate_bubble(BubbleProfile(params=PARAMS, eps=1e-4))
        ratio = raw.I_pstar / (lead.c_num * (1e-4) ** (-4.0 / 3.0))
        assert 0.95 <= ratio <= 1.05

    def test_moment_norm_scaled_bounded(self):
        # the moments of the symmetric family cancel, so the scaled norms
        # stay (very) bounded along the sweep
        tau = default_tau(PARAMS)
        scaled = []
        for eps in (1e-2, 1e-3, 1e-4):
            raw = integrate_bubble(BubbleProfile(params=PARAMS, eps=eps, tau=tau))
            scaled.append(np.linalg.norm(raw.moment_vec) * eps ** (4.0 / 3.0 - tau))
        assert max(scaled) < 1.0

    def test_lp_integral_scaled_bounded(self):
        tau = default_tau(PARAMS)
        theta = PARAMS.p / PARAMS.p_star
        scaled = []
        for eps in (1e-2, 1e-3, 1e-4):
            raw = integrate_bubble(BubbleProfile(params=PARAMS, eps=eps, tau=tau))
            scaled.append(raw.I_p * eps ** (PARAMS.n / PARAMS.p_star - theta * tau))
        assert max(scaled) < 10.0 * min(scaled) + 100.0

    def test_rotation_invariance(self):
        rot = random_rotation(3, np.random.default_rng(23))
        plain = BubbleProfile(params=PARAMS, eps=1e-3)
        rotated = BubbleProfile(params=PARAMS, eps=1e-3,
                                centers=simplex_vertices(2) @ rot.T)
        a = integrate_bubble(plain)
        b = integrate_bubble(rotated)
        assert b.I_pstar == pytest.approx(a.I_pstar, rel=1e-12)
        assert b.I_grad == pytest.approx(a.I_grad, rel=1e-12)
        assert np.linalg.norm(b.moment_vec) < 1e-8


@pytest.fixture(scope="module")
def system(global_rule):
    profile = BubbleProfile(params=PARAMS, eps=1e-3)
    return build_correction_system(profile, global_rule)


class TestCorrection:
    def test_bump_clear_of_caps(self):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        center = pick_bump_center(profile)
        dists = np.arccos(np.clip(profile.centers @ center, -1.0, 1.0))
        assert dists.min() > 2.0 * profile.delta + 0.25

    def test_condition_number_within_limit(self, system):
        assert system.condition_number < 1e8

    def test_matrix_symmetric_positive_definite(self, system):
        m = system.matrix
        assert np.allclose(m, m.T, atol=1e-14)
        assert np.min(np.linalg.eigvalsh(m)) > 0.0

    def test_tiny_bump_rejected_as_ill_conditioned(self, global_rule):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        with pytest.raises(ValueError, match="ill-conditioned|bump"):
            build_correction_system(profile, global_rule, bump_radius=0.02)

    def test_corrected_residual_small(self, system, global_rule):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        bubble = corrected_test_function(profile, system=system, rule=global_rule)
        assert bubble.moment_residual < 1e-8

    def test_floor_certified_everywhere(self, system, global_rule):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        bubble = corrected_test_function(profile, system=system, rule=global_rule)
        rng = np.random.default_rng(6)
        pts = rng.standard_normal((5000, 3))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        assert np.min(bubble.upstar_values(pts)) >= bubble.floor * (1.0 - 1e-9)
        assert bubble.c1 >= 1.0
        assert math.log2(bubble.c1) == int(math.log2(bubble.c1))

    def test_beta_small_for_symmetric_centers(self, system, global_rule):
        # the simplex moments cancel exactly, so the correction coefficients
        # sit at quadrature-noise level, far below the generic growth scale
        for eps in (1e-2, 1e-3):
            profile = BubbleProfile(params=PARAMS, eps=eps)
            bubble = corrected_test_function(profile, system=system, rule=global_rule)
            assert np.max(np.abs(bubble.beta_coeffs)) * eps ** (4.0 / 3.0 - profile.tau) < 1e-3

    def test_callable_handle(self, system, global_rule):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        bubble = corrected_test_function(profile, system=system, rule=global_rule)
        vals = bubble(profile.centers)
        expected = (phi_eps(0.0, profile) ** PARAMS.p_star + bubble.c1 * bubble.floor) ** (1.0 / PARAMS.p_star)
        assert np.allclose(vals, expected, rtol=1e-12)

    def test_corrected_integrals_finite_and_ordered(self, system, global_rule):
        profile = BubbleProfile(params=PARAMS, eps=1e-3)
        bubble = corrected_test_function(profile, system=system, rule=global_rule)
        i_pstar, i_p, i_grad = corrected_integrals(bubble, global_rule)
        raw = bubble.raw
        assert i_pstar > raw.I_pstar  # floor only adds mass
        assert i_p > 0 and i_grad > 0
        # the floor suppresses the gradient
        assert i_grad < raw.I_grad


@pytest.fixture(scope="module")
def rows(global_rule):
    return rayleigh_sweep(PARAMS, [1e-2, 1e-3, 1e-4], rule=global_rule)


class TestRayleighSweep:
    def test_rel_err_strictly_decreasing(self, rows):
        errs = [r.rel_err for r in rows]
        assert errs[0] > errs[1] > errs[2]

    def test_final_rel_err(self, rows):
        assert rows[-1].rel_err < 0.10

    def test_target_value(self, rows):
        assert rows[0].target == pytest.approx(0.0880557176488773, rel=1e-10)

    def test_quotient_below_unconstrained_envelope(self, rows):
        envelope = sharp_sobolev(PARAMS) ** PARAMS.p * 1.05
        for row in rows:
            assert row.R <= envelope
            assert row.corrected_R <= envelope

    def test_corrected_residuals_small(self, rows):
        for row in rows:
            assert row.moment_residual < 1e-8

    def test_csv_contract(self, rows):
        text = sweep_rows_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "eps,I_pstar,I_p,I_grad,moment_residual,R,target,rel_err"
        assert len(lines) == len(rows) + 1
        parsed = [float(v) for v in lines[1].split(",")]
        assert parsed[0] == rows[0].eps
        assert parsed[1] == rows[0].I_pstar  # 17 significant digits round-trip
        assert parsed[5] == rows[0].R

    def test_eps_validation(self, global_rule):
        with pytest.raises(ValueError):
            rayleigh_sweep(PARAMS, [0.5], delta=0.3, rule=global_rule)
        with pytest.raises(ValueError):
            rayleigh_sweep(PARAMS, [], rule=global_rule)
