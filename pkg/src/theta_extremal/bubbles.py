"""Truncated-bubble test families and their Rayleigh-quotient asymptotics.

A bubble of scale eps is the radial profile (eps + t^p')^(-n/p*) truncated
with a linear taper between delta and 2*delta.  Planting one copy at each
vertex of the regular simplex gives a test function v whose leading integrals
are explicit Beta-function expressions:

    int v^{p*}  ~  eps^(-n/p)  * |S^{n-1}| (n+2)/p' * B(n/p, n/p')
    int |dv|^p  ~  eps^(-n/p*) * |S^{n-1}| ((n-p)/(p-1))^p (n+2)/p'
                                * B(n/p - 1, n/p' + 1)

so the Rayleigh quotient (int u^{p*})^{p/p*} / int |du|^p converges to
(n+2)^(-p/n) S(n,p)^p -- numerically verified here by quadrature sweeps.

Because the simplex vertices average every mean-zero quadratic to zero and
all caps share one radial profile, the raw moments of v^{p*} cancel term by
term (the circle mean of a degree-k harmonic is its center value times a
radial factor); generically they would only be O(eps^(-n/p + tau)).  The
correction supported away from the caps (bump-squared times the basis
polynomials) plus a positive floor constant makes the moments vanish under
the working quadrature exactly, whatever their size, while leaving every
leading term intact.

Cap integrals are one-dimensional: per-cap radial rules are log-spaced
composite Gauss panels concentrated near the peak scale eps^(1/p'), with a
panel break at the taper kink.  Everything supported off the caps goes
through a global rule: a product Gauss rule on S^2, seeded Monte Carlo in
higher dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from .moments import MomentBasis, build_basis
from .sobolev import SobolevParams, sharp_sobolev
from .sphere import (
    beta,
    check_dimension,
    normalize_rows,
    pairwise_geodesic_distances,
    simplex_vertices,
    surface_area,
)

DEFAULT_DELTA = 0.3
DEFAULT_BUMP_RADIUS = 0.25
MAX_CONDITION_NUMBER = 1e8


# ---------------------------------------------------------------------------
# quadrature rules


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights; kind is product_gauss, monte_carlo or radial_1d.

    Sphere rules have nodes of shape (N, n+1) and weights summing to |S^n|.
    Radial rules have scalar nodes in (0, r_max) and plain dr weights.
    """

    kind: str
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


def gauss_panels(edges: np.ndarray, order: int):
    """Composite Gauss-Legendre nodes/weights over consecutive edge intervals."""
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(0.5 * (a + b) + half * base_x)
        weights.append(half * base_w)
    return np.concatenate(nodes), np.concatenate(weights)


def radial_rule(r_max: float, peak_scale: float | None = None,
                kink: float | None = None, panels: int = 40, order: int = 12) -> QuadratureRule:
    """Composite Gauss rule on (0, r_max), refined near a peak scale.

    Panel edges are log-spaced from three decades below the peak scale so a
    sharply concentrated integrand is resolved; an optional kink radius is
    forced to be a panel edge so no node straddles a derivative jump.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    if peak_scale is None:
        edges = np.linspace(0.0, r_max, panels + 1)
    else:
        lo = min(peak_scale * 1e-3, r_max * 1e-6)
        inner_top = kink if kink is not None and 0 < kink < r_max else r_max
        edges = np.concatenate([[0.0], np.geomspace(lo, inner_top, panels)])
        if kink is not None and 0 < kink < r_max:
            outer = np.linspace(kink, r_max, max(4, panels // 4) + 1)[1:]
            edges = np.concatenate([edges, outer])
    nodes, weights = gauss_panels(edges, order)
    return QuadratureRule(kind="radial_1d", nodes=nodes, weights=weights)


def circle_rule(count: int) -> QuadratureRule:
    """Uniform (trapezoidal) rule on S^1, spectrally accurate for smooth f."""
    angles = 2.0 * math.pi * np.arange(count) / count
    pts = np.column_stack([np.cos(angles), np.sin(angles)])
    w = np.full(count, 2.0 * math.pi / count)
    return QuadratureRule(kind="product_gauss", nodes=pts, weights=w)


def product_sphere_rule(n: int, polar_order: int = 64, azimuth_count: int = 128) -> QuadratureRule:
    """Product Gauss rule on S^n built recursively from Gauss-Jacobi nodes.

    The polar coordinate t = <x, e_last> carries the weight (1-t^2)^((n-2)/2),
    handled exactly by Jacobi nodes; the remaining directions recurse down to
    the uniform circle rule.  Exact for spherical polynomials of degree up to
    about 2*polar_order.
    """
    check_dimension(n)
    if n == 1:
        return circle_rule(azimuth_count)
    t, wt = roots_jacobi(polar_order, (n - 2) / 2.0, (n - 2) / 2.0)
    sub = product_sphere_rule(n - 1, polar_order, azimuth_count)
    sint = np.sqrt(np.maximum(0.0, 1.0 - t**2))
    # nodes: (sqrt(1-t^2) * y, t) for y in the sub-rule
    pts = np.concatenate(
        [sint[:, None, None] * sub.nodes[None, :, :],
         np.broadcast_to(t[:, None, None], (t.size, sub.nodes.shape[0], 1))],
        axis=2,
    ).reshape(-1, n + 1)
    w = (wt[:, None] * sub.weights[None, :]).reshape(-1)
    return QuadratureRule(kind="product_gauss", nodes=pts, weights=w)


def monte_carlo_sphere_rule(n: int, count: int = 1_000_000, seed: int = 0) -> QuadratureRule:
    """Seeded uniform sampling with equal weights |S^n|/count."""
    check_dimension(n)
    rng = np.random.default_rng([seed, n, count])
    pts = normalize_rows(rng.standard_normal((count, n + 1)))
    w = np.full(count, surface_area(n) / count)
    return QuadratureRule(kind="monte_carlo", nodes=pts, weights=w)


def default_global_rule(n: int) -> QuadratureRule:
    """Global rule for off-cap integrals: product Gauss on S^2, MC above."""
    if n <= 2:
        return product_sphere_rule(n, polar_order=400, azimuth_count=512)
    return monte_carlo_sphere_rule(n, count=1_000_000, seed=20_250_101)


# ---------------------------------------------------------------------------
# bubble profile


def default_tau(params: SobolevParams, safety: float = 0.9) -> float:
    """A valid decay exponent: strictly below min(n/p, 2/p', p*/p')."""
    bound = min(params.n / params.p, 2.0 / params.p_conj, params.p_star / params.p_conj)
    return safety * bound


@dataclass(frozen=True)
class BubbleProfile:
    """Truncated bubble family: scale eps, cap radius delta, simplex centers."""

    params: SobolevParams
    eps: float
    delta: float = DEFAULT_DELTA
    tau: float | None = None
    centers: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < self.delta:
            raise ValueError(f"need 0 < eps < delta, got eps={self.eps}, delta={self.delta}")
        if self.centers is None:
            object.__setattr__(self, "centers", simplex_vertices(self.params.n))
        ctr = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, "centers", ctr)
        dists = pairwise_geodesic_distances(ctr)
        min_dist = float(np.min(dists[np.triu_indices(ctr.shape[0], k=1)]))
        if min_dist <= 4.0 * self.delta:
            raise ValueError(
                f"caps of radius 2*delta overlap: min center distance {min_dist:.4f} "
                f"<= {4 * self.delta:.4f}"
            )
        if self.tau is None:
            object.__setattr__(self, "tau", default_tau(self.params))
        bound = min(self.params.n / self.params.p, 2.0 / self.params.p_conj,
                    self.params.p_star / self.params.p_conj)
        if not 0.0 < self.tau < bound:
            raise ValueError(f"tau must lie in (0, {bound}), got {self.tau}")

    @property
    def peak_scale(self) -> float:
        """Geodesic radius where the profile turns over, eps^(1/p')."""
        return self.eps ** (1.0 / self.params.p_conj)

    @property
    def floor_scale(self) -> float:
        """The correction floor eps^(-n/p + tau)."""
        return self.eps ** (-self.params.n / self.params.p + self.tau)


def phi_eps(t, profile: BubbleProfile) -> np.ndarray:
    """Radial profile: (eps+t^p')^(-n/p*) inside delta, linear taper to 2*delta."""
    p = profile.params
    tt = np.asarray(t, dtype=float)
    expo = -p.n / p.p_star
    inner = (profile.eps + np.minimum(tt, profile.delta) ** p.p_conj) ** expo
    edge = (profile.eps + profile.delta**p.p_conj) ** expo
    taper = edge * (2.0 - tt / profile.delta)
    out = np.where(tt <= profile.delta, inner, np.maximum(taper, 0.0))
    return out if out.shape else float(out)


def phi_eps_prime(t, profile: BubbleProfile) -> np.ndarray:
    """Radial derivative of the profile (constant slope on the taper)."""
    p = profile.params
    tt = np.asarray(t, dtype=float)
    expo = -p.n / p.p_star
    core = expo * (profile.eps + tt**p.p_conj) ** (expo - 1.0) * p.p_conj * tt ** (p.p_conj - 1.0)
    edge = (profile.eps + profile.delta**p.p_conj) ** expo
    out = np.where(tt <= profile.delta, core,
                   np.where(tt < 2.0 * profile.delta, -edge / profile.delta, 0.0))
    return out if out.shape else float(out)


def bubble_values(points: np.ndarray, profile: BubbleProfile) -> np.ndarray:
    """v(x) = sum of the profile over caps (at most one term is nonzero)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dots = np.clip(pts @ profile.centers.T, -1.0, 1.0)
    dist = np.arccos(dots)
    vals = np.zeros(pts.shape[0])
    for i in range(profile.centers.shape[0]):
        mask = dist[:, i] < 2.0 * profile.delta
        if np.any(mask):
            vals[mask] += phi_eps(dist[mask, i], profile)
    return vals


# ---------------------------------------------------------------------------
# leading coefficients and the closed-form limit


@dataclass(frozen=True)
class LeadingCoefficients:
    """Leading-order constants of the bubble integrals and their limit ratio."""

    c_num: float
    c_grad: float
    limit_ratio: float


def leading_coefficients(params: SobolevParams) -> LeadingCoefficients:
    """Coefficients of eps^(-n/p) in int v^{p*} and eps^(-n/p*) in int |dv|^p.

    limit_ratio = c_num^(p/p*) / c_grad is the Rayleigh-quotient limit of the
    test family.
    """
    n, p = params.n, params.p
    pc = params.p_conj
    if n / p <= 1.0:
        raise ValueError(f"need n/p > 1 for the gradient integral, got n={n}, p={p}")
    area = surface_area(n - 1)
    c_num = area * ((n + 2) / pc) * beta(n / p, n / pc)
    c_grad = area * ((n - p) / (p - 1.0)) ** p * ((n + 2) / pc) * beta(n / p - 1.0, n / pc + 1.0)
    return LeadingCoefficients(
        c_num=c_num,
        c_grad=c_grad,
        limit_ratio=c_num ** (p / params.p_star) / c_grad,
    )


def limit_identity_check(params: SobolevParams) -> float:
    """|Beta-route Rayleigh limit minus (n+2)^(-p/n) S(n,p)^p|.

    The two sides go through independent code paths (Beta products against
    the log-Gamma sharp-constant formula); the discrepancy should sit at
    rounding level, far below 1e-10.
    """
    n, p = params.n, params.p
    pc = params.p_conj
    lhs = (
        surface_area(n - 1) ** (-p / n)
        * ((p - 1.0) / (n - p)) ** p
        * ((n + 2) / pc) ** (-p / n)
        * beta(n / p, n / pc) ** (p / params.p_star)
        / beta(n / p - 1.0, n / pc + 1.0)
    )
    rhs = (n + 2) ** (-p / n) * sharp_sobolev(params) ** p
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# cap integration


def _cap_radial_rule(profile: BubbleProfile, panels: int = 40, order: int = 12) -> QuadratureRule:
    return radial_rule(
        2.0 * profile.delta,
        peak_scale=profile.peak_scale,
        kink=profile.delta,
        panels=panels,
        order=order,
    )


def _tangent_frame(center: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent space at a sphere point, (d, d-1)."""
    d = center.size
    # complete the center to a basis and orthonormalize (deterministic)
    mat = np.eye(d)
    idx = int(np.argmax(np.abs(center)))
    mat = np.delete(mat, idx, axis=1)
    q, _ = np.linalg.qr(np.column_stack([center, mat]))
    frame = q[:, 1:]
    return frame


def _direction_rule(n: int) -> QuadratureRule:
    """Rule over the unit directions S^{n-1} in the tangent space."""
    if n == 1:
        # two directions on a 0-sphere, weight 1 each
        return QuadratureRule(kind="product_gauss",
                              nodes=np.array([[1.0], [-1.0]]), weights=np.array([1.0, 1.0]))
    if n == 2:
        return circle_rule(64)
    return product_sphere_rule(n - 1, polar_order=24, azimuth_count=48)


def cap_points(center: np.ndarray, radii: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Geodesic-polar grid cos(r) center + sin(r) (frame @ u), shape (R, U, d)."""
    frame = _tangent_frame(center)
    tangents = directions @ frame.T  # (U, d)
    return (
        np.cos(radii)[:, None, None] * center[None, None, :]
        + np.sin(radii)[:, None, None] * tangents[None, :, :]
    )


@dataclass(frozen=True)
class BubbleIntegrals:
    """Raw-bubble integrals and the degree-2 moment vector of v^{p*}."""

    I_pstar: float
    I_p: float
    I_grad: float
    moment_vec: np.ndarray


def integrate_bubble(profile: BubbleProfile, rule: QuadratureRule | None = None,
                     basis: MomentBasis | None = None,
                     radial_panels: int = 40, radial_order: int = 12) -> BubbleIntegrals:
    """Quadrature values of int v^{p*}, int v^p, int |dv|^p and the moments.

    The power integrals are one-dimensional per cap (the caps are disjoint,
    so they sum exactly); the moment vector integrates v^{p*} against the
    orthonormal degree-2 basis over geodesic-polar grids around each cap.
    `rule` is accepted for interface parity with the corrected integrals but
    the raw integrals need no global nodes.
    """
    del rule
    n = profile.params.n
    p = profile.params.p
    pstar = profile.params.p_star
    area = surface_area(n - 1)
    num_caps = profile.centers.shape[0]

    rad = _cap_radial_rule(profile, panels=radial_panels, order=radial_order)
    r, wr = rad.nodes, rad.weights
    sin_pow = np.sin(r) ** (n - 1)
    phi = phi_eps(r, profile)
    dphi = phi_eps_prime(r, profile)

    I_pstar = num_caps * area * float(wr @ (phi**pstar * sin_pow))
    I_p = num_caps * area * float(wr @ (phi**p * sin_pow))
    I_grad = num_caps * area * float(wr @ (np.abs(dphi) ** p * sin_pow))

    if basis is None:
        basis = build_basis(n, 2)
    directions = _direction_rule(n)
    moment = np.zeros(basis.rank)
    radial_weight = wr * sin_pow * phi**pstar  # (R,)
    for i in range(num_caps):
        grid = cap_points(profile.centers[i], r, directions.nodes)
        f_vals = basis.evaluate(grid.reshape(-1, n + 1)).reshape(r.size, -1, basis.rank)
        # angular average first, then radial integral
        ang = np.einsum("u,ruk->rk", directions.weights, f_vals)
        moment += radial_weight @ ang
    return BubbleIntegrals(I_pstar=I_pstar, I_p=I_p, I_grad=I_grad, moment_vec=moment)


# ---------------------------------------------------------------------------
# moment correction


def _mollifier(s: np.ndarray) -> np.ndarray:
    """Smooth bump on [0, 1): exp(1 - 1/(1 - s^2)), zero from 1 on."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
    return out


def _mollifier_prime(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
    return out


def pick_bump_center(profile: BubbleProfile, candidates: int = 512, seed: int = 11) -> np.ndarray:
    """Point of S^n farthest (in min geodesic distance) from all cap centers.

    Checks the center antipodes plus a seeded random sample; deterministic.
    """
    n = profile.params.n
    rng = np.random.default_rng([seed, n])
    pool = np.vstack([-profile.centers, normalize_rows(rng.standard_normal((candidates, n + 1)))])
    dots = np.clip(pool @ profile.centers.T, -1.0, 1.0)
    min_dist = np.arccos(dots).min(axis=1)
    return pool[int(np.argmax(min_dist))]


@dataclass(frozen=True)
class CorrectionSystem:
    """Bump-localized corrections psi_j = eta^2 f_j and their moment matrix.

    matrix[j, k] = int psi_j f_k dmu is a Gram matrix under the weight eta^2,
    hence symmetric positive definite; its conditioning is checked against
    MAX_CONDITION_NUMBER at build time.
    """

    basis: MomentBasis
    bump_center: np.ndarray = field(repr=False)
    bump_radius: float
    matrix: np.ndarray = field(repr=False)
    psi_means: np.ndarray = field(repr=False)  # int psi_j dmu
    condition_number: float

    def eta(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dist = np.arccos(np.clip(pts @ self.bump_center, -1.0, 1.0))
        return _mollifier(dist / self.bump_radius)

    def psi_values(self, points: np.ndarray) -> np.ndarray:
        """psi_j at the given points, shape (N, l)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.eta(pts)[:, None] ** 2 * self.basis.evaluate(pts)

    def correction_values(self, beta_coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        return self.psi_values(points) @ beta_coeffs

    def correction_gradients(self, beta_coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Tangential gradient of sum_j beta_j psi_j, shape (N, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = pts.shape[1]
        dots = np.clip(pts @ self.bump_center, -1.0, 1.0)
        dist = np.arccos(dots)
        s = dist / self.bump_radius
        eta = _mollifier(s)
        deta = _mollifier_prime(s) / self.bump_radius
        # unit tangent of the geodesic from the bump center through x
        sin_dist = np.sin(dist)
        safe = sin_dist > 1e-12
        tangent = np.zeros_like(pts)
        tangent[safe] = (np.cos(dist[safe])[:, None] * pts[safe] - self.bump_center[None, :]) / sin_dist[safe, None]
        f_vals = self.basis.evaluate(pts) @ beta_coeffs  # (N,)
        f_grads = np.einsum("nrd,r->nd", self.basis.evaluate_gradients(pts), beta_coeffs)
        f_grads -= np.sum(f_grads * pts, axis=1)[:, None] * pts  # tangential part
        return (eta**2)[:, None] * f_grads + (2.0 * eta * deta * f_vals)[:, None] * tangent


def build_correction_system(profile: BubbleProfile, rule: QuadratureRule,
                            basis: MomentBasis | None = None,
                            bump_radius: float = DEFAULT_BUMP_RADIUS,
                            bump_center: np.ndarray | None = None) -> CorrectionSystem:
    """Assemble the l x l moment matrix of the corrections over the global rule."""
    n = profile.params.n
    if basis is None:
        basis = build_basis(n, 2)
    if bump_center is None:
        bump_center = pick_bump_center(profile)
    center_dists = np.arccos(np.clip(profile.centers @ bump_center, -1.0, 1.0))
    clearance = float(center_dists.min())
    if clearance <= 2.0 * profile.delta + bump_radius:
        raise ValueError(
            f"bump support (radius {bump_radius}) reaches into a cap: clearance {clearance:.4f}"
        )
    pts = rule.nodes
    dist = np.arccos(np.clip(pts @ bump_center, -1.0, 1.0))
    eta2 = _mollifier(dist / bump_radius) ** 2
    active = eta2 > 0.0
    f_vals = basis.evaluate(pts[active])
    weighted = (rule.weights[active] * eta2[active])[:, None] * f_vals
    matrix = weighted.T @ f_vals
    psi_means = weighted.sum(axis=0)
    cond = float(np.linalg.cond(matrix))
    if not np.isfinite(cond) or cond > MAX_CONDITION_NUMBER:
        raise ValueError(
            f"correction system is ill-conditioned (cond {cond:.3e}); "
            "choose a different bump location or radius"
        )
    return CorrectionSystem(
        basis=basis,
        bump_center=np.asarray(bump_center, dtype=float),
        bump_radius=bump_radius,
        matrix=matrix,
        psi_means=psi_means,
        condition_number=cond,
    )


@dataclass(frozen=True)
class CorrectedBubble:
    """The moment-corrected test function u with its certified ingredients.

    u^{p*} = v^{p*} + sum_j beta_j psi_j + c1 * eps^(-n/p + tau); beta solves
    the correction system against the raw moments, c1 is the smallest power
    of two keeping u^{p*} >= eps^(-n/p + tau) on the quadrature nodes.
    """

    profile: BubbleProfile
    system: CorrectionSystem
    beta_coeffs: np.ndarray = field(repr=False)
    c1: float
    raw: BubbleIntegrals
    moment_residual: float
    floor_margin: float

    @property
    def floor(self) -> float:
        return self.profile.floor_scale

    def upstar_values(self, points: np.ndarray) -> np.ndarray:
        v = bubble_values(points, self.profile)
        g = self.system.correction_values(self.beta_coeffs, points)
        return v ** self.profile.params.p_star + g + self.c1 * self.floor

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.upstar_values(points) ** (1.0 / self.profile.params.p_star)


def corrected_test_function(profile: BubbleProfile, system: CorrectionSystem | None = None,
                            rule: QuadratureRule | None = None,
                            raw: BubbleIntegrals | None = None) -> CorrectedBubble:
    """Solve the correction system and certify the floor property."""
    if rule is None:
        rule = default_global_rule(profile.params.n)
    if system is None:
        system = build_correction_system(profile, rule)
    if raw is None:
        raw = integrate_bubble(profile, basis=system.basis)
    beta_coeffs = np.linalg.solve(system.matrix, -raw.moment_vec)
    residual_vec = raw.moment_vec + system.matrix @ beta_coeffs
    floor = profile.floor_scale

    # floor constant: smallest power of two c1 with correction + c1*floor >= floor
    corr = system.correction_values(beta_coeffs, rule.nodes)
    worst = float(corr.min())
    required = 1.0 + max(0.0, -worst) / floor
    c1 = 2.0 ** math.ceil(math.log2(required))
    margin = float((corr + c1 * floor).min() - floor)
    if margin < -1e-12 * floor:
        raise ValueError("floor constant failed to certify positivity on the rule nodes")
    return CorrectedBubble(
        profile=profile,
        system=system,
        beta_coeffs=beta_coeffs,
        c1=c1,
        raw=raw,
        moment_residual=float(np.linalg.norm(residual_vec)),
        floor_margin=margin,
    )


# ---------------------------------------------------------------------------
# corrected integrals and the Rayleigh sweep


def _offcap_mask(profile: BubbleProfile, points: np.ndarray) -> np.ndarray:
    dist = np.arccos(np.clip(points @ profile.centers.T, -1.0, 1.0))
    return dist.min(axis=1) >= 2.0 * profile.delta


def corrected_integrals(bubble: CorrectedBubble, rule: QuadratureRule,
                        radial_panels: int = 40, radial_order: int = 12):
    """int u^{p*}, int u^p, int |du|^p for the corrected test function.

    Cap contributions are radial (the correction is constant there, equal to
    the floor term); the bump region integrates the correction gradient over
    a geodesic-polar grid of its own.
    """
    profile = bubble.profile
    params = profile.params
    n, p, pstar = params.n, params.p, params.p_star
    area = surface_area(n - 1)
    num_caps = profile.centers.shape[0]
    floor_term = bubble.c1 * bubble.floor

    rad = _cap_radial_rule(profile, panels=radial_panels, order=radial_order)
    r, wr = rad.nodes, rad.weights
    sin_pow = np.sin(r) ** (n - 1)
    phi = phi_eps(r, profile)
    dphi = phi_eps_prime(r, profile)
    upstar_cap = phi**pstar + floor_term

    I_pstar = num_caps * area * float(wr @ (upstar_cap * sin_pow))
    I_p = num_caps * area * float(wr @ (upstar_cap ** (p / pstar) * sin_pow))
    # |du/dr| = phi^{pstar-1} (phi^{pstar} + floor)^(1/pstar - 1) |phi'|
    du = phi ** (pstar - 1.0) * upstar_cap ** (1.0 / pstar - 1.0) * np.abs(dphi)
    I_grad = num_caps * area * float(wr @ (du**p * sin_pow))

    # off-cap contributions through the global rule
    mask = _offcap_mask(profile, rule.nodes)
    w_off = rule.weights[mask]
    g_off = bubble.system.correction_values(bubble.beta_coeffs, rule.nodes[mask]) + floor_term
    g_off = np.maximum(g_off, 0.0)
    I_pstar += float(w_off @ g_off)
    I_p += float(w_off @ g_off ** (p / pstar))

    # gradient of u off the caps lives on the bump support
    sys_ = bubble.system
    brad = radial_rule(sys_.bump_radius, panels=12, order=10)
    directions = _direction_rule(n)
    grid = cap_points(sys_.bump_center, brad.nodes, directions.nodes)
    flat = grid.reshape(-1, n + 1)
    g_vals = sys_.correction_values(bubble.beta_coeffs, flat) + floor_term
    g_vals = np.maximum(g_vals, 1e-300)
    g_grads = np.linalg.norm(sys_.correction_gradients(bubble.beta_coeffs, flat), axis=1)
    integrand = ((1.0 / pstar) * g_vals ** (1.0 / pstar - 1.0) * g_grads) ** p
    integrand = integrand.reshape(brad.nodes.size, -1)
    ang = integrand @ directions.weights
    I_grad += float((brad.weights * np.sin(brad.nodes) ** (n - 1)) @ ang)
    return I_pstar, I_p, I_grad


@dataclass(frozen=True)
class SweepRow:
    """One eps of a Rayleigh sweep.

    I_pstar, I_p, I_grad and the quotient R refer to the bubble family whose
    limit realizes the target constant; moment_residual is the residual of
    the moment-corrected test function built on top of it (the correction
    shifts the integrals only at the floor scale, reported separately).
    """

    eps: float
    I_pstar: float
    I_p: float
    I_grad: float
    moment_residual: float
    R: float
    target: float
    rel_err: float
    # reproducibility extras (not part of the CSV contract)
    uncorrected_moment_residual: float
    corrected_I_pstar: float
    corrected_I_p: float
    corrected_I_grad: float
    corrected_R: float
    beta_max: float
    c1: float
    floor_margin: float
    tau: float
    delta: float

    def csv_values(self):
        return (self.eps, self.I_pstar, self.I_p, self.I_grad,
                self.moment_residual, self.R, self.target, self.rel_err)


SWEEP_CSV_HEADER = "eps,I_pstar,I_p,I_grad,moment_residual,R,target,rel_err"


def sweep_rows_to_csv(rows) -> str:
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        lines.append(",".join(format(v, ".17g") for v in row.csv_values()))
    return "\n".join(lines) + "\n"


def rayleigh_sweep(params: SobolevParams, eps_list, delta: float = DEFAULT_DELTA,
                   tau: float | None = None, rule: QuadratureRule | None = None,
                   radial_panels: int = 40, radial_order: int = 12) -> list[SweepRow]:
    """Rayleigh quotients of the bubble family along a descending eps list.

    R(eps) = I_pstar^{p/p*} / I_grad approaches
    target = (n+2)^(-p/n) S(n,p)^p as eps shrinks.  Each row also carries the
    moment-corrected test function built at that eps: its residual certifies
    feasibility, and its own integrals (floor term included, which drags the
    gradient quotient at desk scales) are reported alongside.
    """
    eps_arr = [float(e) for e in eps_list]
    if not eps_arr:
        raise ValueError("eps_list must be nonempty")
    for e in eps_arr:
        if not 0.0 < e < delta:
            raise ValueError(f"every eps must lie in (0, delta), got {e}")
    if rule is None:
        rule = default_global_rule(params.n)
    basis = build_basis(params.n, 2)
    system = None
    target = (params.n + 2) ** (-params.p / params.n) * sharp_sobolev(params) ** params.p

    rows = []
    for eps in eps_arr:
        profile = BubbleProfile(params=params, eps=eps, delta=delta, tau=tau)
        if system is None:
            system = build_correction_system(profile, rule, basis=basis)
        raw = integrate_bubble(profile, basis=basis,
                               radial_panels=radial_panels, radial_order=radial_order)
        bubble = corrected_test_function(profile, system=system, rule=rule, raw=raw)
        cor_pstar, cor_p, cor_grad = corrected_integrals(bubble, rule,
                                                         radial_panels=radial_panels,
                                                         radial_order=radial_order)
        quotient = raw.I_pstar ** (params.p / params.p_star) / raw.I_grad
        rows.append(SweepRow(
            eps=eps,
            I_pstar=raw.I_pstar,
            I_p=raw.I_p,
            I_grad=raw.I_grad,
            moment_residual=bubble.moment_residual,
            R=quotient,
            target=target,
            rel_err=abs(quotient - target) / target,
            uncorrected_moment_residual=float(np.linalg.norm(raw.moment_vec)),
            corrected_I_pstar=cor_pstar,
            corrected_I_p=cor_p,
            corrected_I_grad=cor_grad,
            corrected_R=cor_pstar ** (params.p / params.p_star) / cor_grad,
            beta_max=float(np.max(np.abs(bubble.beta_coeffs))),
            c1=bubble.c1,
            floor_margin=bubble.floor_margin,
            tau=profile.tau,
            delta=delta,
        ))
    return rows
