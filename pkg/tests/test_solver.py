import math

import numpy as np
import pytest

from theta_extremal.measures import theta_energy
from theta_extremal.solver import (
    SolverConfig,
    bruteforce_theta_m1,
    closed_form_theta,
    minimal_support,
    minimize_theta,
    project_simplex,
    random_feasible_measure,
    weight_feasibility_m1,
)
from theta_extremal.sphere import random_rotation


def quick_config(support, restarts=8, seed=7, **kw):
    return SolverConfig(support_size=support, restarts=restarts, seed=seed, **kw)


class TestClosedForm:
    def test_first_order(self):
        assert closed_form_theta(1, 0.5, 4) == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_second_order(self):
        assert closed_form_theta(2, 0.5, 2) == pytest.approx(2.0, rel=1e-14)

    def test_third_order(self):
        assert closed_form_theta(3, 0.5, 2) == pytest.approx(math.sqrt(6.0), rel=1e-14)

    def test_circle_any_degree(self):
        assert closed_form_theta(5, 0.5, 1) == pytest.approx(math.sqrt(6.0), rel=1e-14)

    def test_open_case_absent(self):
        assert closed_form_theta(4, 0.5, 2) is None

    def test_circle_consistent_with_low_degrees(self):
        # on the circle the general formula agrees with the m = 1, 2, 3 values
        for m in (1, 2, 3):
            assert closed_form_theta(m, 0.3, 1) == pytest.approx((m + 1) ** 0.7, rel=1e-14)

    def test_validation(self):
        with pytest.raises(ValueError):
            closed_form_theta(1, 1.5, 2)
        with pytest.raises(ValueError):
            closed_form_theta(0, 0.5, 2)


class TestWeightFeasibility:
    def test_half_half(self):
        assert weight_feasibility_m1([0.5, 0.5]) is True

    def test_dominant_weight_infeasible(self):
        assert weight_feasibility_m1([0.6, 0.3, 0.1]) is False

    def test_dominant_weight_bruteforce_oracle(self):
        # grid search over circle angles confirms no placement balances (0.6, 0.3, 0.1)
        w = np.array([0.6, 0.3, 0.1])
        grid = np.linspace(0.0, 2.0 * math.pi, 181)
        a2, a3 = np.meshgrid(grid, grid, indexing="ij")
        sx = w[0] + w[1] * np.cos(a2) + w[2] * np.cos(a3)
        sy = w[1] * np.sin(a2) + w[2] * np.sin(a3)
        assert np.min(np.hypot(sx, sy)) > 0.05

    def test_equilateral(self):
        assert weight_feasibility_m1([1 / 3, 1 / 3, 1 / 3]) is True

    def test_simplex_membership_required(self):
        with pytest.raises(ValueError):
            weight_feasibility_m1([0.5, 0.6])


class TestBruteForce:
    def test_half_theta(self):
        val = bruteforce_theta_m1(0.5, 3, 100)
        assert abs(val - 2.0**0.5) < 2e-2

    def test_point_nine_theta(self):
        val = bruteforce_theta_m1(0.9, 4, 100)
        assert abs(val - 2.0**0.1) < 2e-2
        assert 2.0**0.1 == pytest.approx(1.0717734625362931, rel=1e-12)

    @pytest.mark.parametrize("theta", (0.21, 0.5, 0.83))
    def test_two_atoms_forced_exact(self, theta):
        assert bruteforce_theta_m1(theta, 2, 100) == pytest.approx(2.0 ** (1 - theta), rel=1e-13)

    def test_never_below_closed_form(self):
        for theta in (0.3, 0.5, 0.7):
            assert bruteforce_theta_m1(theta, 3, 60) >= 2.0 ** (1 - theta) - 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            bruteforce_theta_m1(0.5, 6, 100)
        with pytest.raises(ValueError):
            bruteforce_theta_m1(0.5, 3, 500)
        with pytest.raises(ValueError):
            bruteforce_theta_m1(1.5, 3, 100)


class TestProjectSimplex:
    def test_already_on_simplex(self):
        w = np.array([0.2, 0.3, 0.5])
        assert np.allclose(project_simplex(w), w, atol=1e-14)

    def test_projection_properties(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            v = rng.standard_normal(8) * 3.0
            w = project_simplex(v)
            assert np.all(w >= 0.0)
            assert w.sum() == pytest.approx(1.0, abs=1e-12)


class TestMinimizeTheta:
    def test_antipodal_case(self):
        report = minimize_theta(2, 1, 0.6, quick_config(6))
        assert report.converged
        assert report.residual_norm < 1e-8
        assert abs(report.energy - 2.0**0.4) < 1e-3
        assert report.best_measure.support_size == 2
        pts = report.best_measure.points
        assert float(pts[0] @ pts[1]) == pytest.approx(-1.0, abs=1e-6)
        assert np.allclose(report.best_measure.weights, 0.5, atol=1e-3)

    def test_gap_field(self):
        report = minimize_theta(2, 1, 0.5, quick_config(4, restarts=4))
        assert report.closed_form == pytest.approx(math.sqrt(2.0), rel=1e-14)
        assert report.gap == pytest.approx(report.energy - report.closed_form, abs=1e-15)

    def test_open_case_reports_no_closed_form(self):
        report = minimize_theta(2, 4, 0.5, quick_config(10, restarts=2,
                                                        max_outer_iters=6))
        assert report.closed_form is None and report.gap is None
        # still a genuine upper bound on a feasible measure when converged
        if report.converged:
            assert report.residual_norm < 1e-8

    def test_determinism_bit_identical(self):
        cfg = quick_config(6, restarts=4, seed=42)
        r1 = minimize_theta(2, 1, 0.5, cfg)
        r2 = minimize_theta(2, 1, 0.5, cfg)
        assert r1.to_json() == r2.to_json()

    def test_monotone_in_degree(self):
        cfg = quick_config(8, restarts=6, seed=3)
        e1 = minimize_theta(2, 1, 0.5, cfg).energy
        e2 = minimize_theta(2, 2, 0.5, cfg).energy
        assert e2 >= e1 - 1e-9

    def test_rotated_initialization_same_energy(self):
        cfg = quick_config(6, restarts=4, seed=5)
        base = minimize_theta(2, 1, 0.5, cfg)
        rot = random_rotation(3, np.random.default_rng(17))
        rotated = minimize_theta(2, 1, 0.5, cfg, init_transform=rot)
        assert rotated.energy == pytest.approx(base.energy, abs=1e-6)

    def test_energy_never_undercuts_certificate(self):
        report = minimize_theta(2, 2, 0.5, quick_config(8, restarts=6))
        assert report.energy >= 4.0**0.5 - 10.0 * report.residual_norm

    def test_never_below_bruteforce(self):
        for theta in (0.3, 0.5, 0.7):
            brute = bruteforce_theta_m1(theta, 3, 100)
            report = minimize_theta(2, 1, theta, quick_config(4, restarts=6))
            assert report.energy >= brute - 1e-6

    def test_support_below_minimum_rejected(self):
        with pytest.raises(ValueError):
            minimize_theta(2, 2, 0.5, quick_config(3))
        assert minimal_support(2, 2) == 4
        assert minimal_support(1, 4) == 5
        assert minimal_support(3, 1) == 2

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(support_size=4, penalty_growth=0.5)
        with pytest.raises(ValueError):
            SolverConfig(support_size=0)
        with pytest.raises(ValueError):
            SolverConfig(support_size=4, step_size=-1.0)

    def test_restart_energies_recorded(self):
        report = minimize_theta(2, 1, 0.5, quick_config(4, restarts=5))
        assert len(report.restart_energies) == 5

    def test_thread_count_does_not_change_result(self, monkeypatch):
        cfg = quick_config(4, restarts=4, seed=3)
        base = minimize_theta(2, 1, 0.5, cfg).to_json()
        monkeypatch.setenv("THETA_EXTREMAL_THREADS", "4")
        threaded = minimize_theta(2, 1, 0.5, cfg).to_json()
        assert threaded == base


class TestRandomFeasible:
    def test_residual_below_tolerance(self):
        mu = random_feasible_measure(2, 2, 10, seed=9)
        from theta_extremal.measures import is_feasible

        feasible, norm = is_feasible(mu, 2, 1e-8)
        assert feasible and norm < 1e-9

    def test_support_size_validated(self):
        with pytest.raises(ValueError):
            random_feasible_measure(2, 2, 3, seed=0)

    def test_energy_above_bound(self):
        mu = random_feasible_measure(3, 2, 12, seed=31)
        assert theta_energy(mu, 0.5) >= 5.0**0.5 - 1e-6
