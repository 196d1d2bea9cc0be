"""Numerical minimization of the theta-energy over moment-feasible measures.

The solve is a quadratic-penalty homotopy: for a fixed support size N we
minimize

    sum_i w_i^theta + (rho/2) * |residual(X, w)|^2

by projected gradient (weights projected back onto the probability simplex,
points renormalized to the sphere after every step), growing rho by a fixed
factor each outer round.  Because t^theta is concave with infinite slope at
t = 0, the energy term actively starves superfluous atoms; weights that fall
below the pruning floor are removed at outer-round boundaries, followed by a
feasibility re-solve on the remaining support.  The final iterate of each
restart is merged and polished to the feasible set by a projected
Gauss-Newton pass before energies are compared.

Everything is deterministic given the seed: each restart draws from its own
generator spawned from (seed, restart index), and the cross-restart reduction
is ordered by restart index regardless of how many worker threads ran.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .measures import DiscreteMeasure, merge_close_points, theta_energy
from .moments import MomentBasis, build_basis
from .sphere import check_dimension, normalize_rows

# weights are clamped here inside gradient evaluation only; t^(theta-1) is
# unbounded at 0 and the clamp keeps steps finite while projection still
# reaches exact zeros
WEIGHT_GRAD_FLOOR = 1e-12

ENERGY_TIE_TOL = 1e-12


def closed_form_theta(m: int, theta: float, n: int) -> float | None:
    """Known exact value of the constrained infimum, or None when open.

    Returns 2^(1-theta) for m=1, (n+2)^(1-theta) for m=2, (2n+2)^(1-theta)
    for m=3, and (m+1)^(1-theta) on the circle for every m.  For m >= 4 and
    n >= 2 no closed form is known; callers get None, not an error.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    check_dimension(n)
    if m < 1:
        raise ValueError(f"moment degree must be >= 1, got {m}")
    if m == 1:
        return 2.0 ** (1.0 - theta)
    if m == 2:
        return float(n + 2) ** (1.0 - theta)
    if m == 3:
        return float(2 * n + 2) ** (1.0 - theta)
    if n == 1:
        return float(m + 1) ** (1.0 - theta)
    return None


def weight_feasibility_m1(weights) -> bool:
    """Whether some unit vectors with these weights can sum to zero.

    A weight vector on the simplex admits points xi_i with sum w_i xi_i = 0
    exactly when no weight exceeds the sum of all the others (the closed
    polygon inequality), i.e. 2 max_i w_i <= 1.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < -1e-12) or abs(float(w.sum()) - 1.0) > 1e-12:
        raise ValueError("weights must form a probability vector")
    return bool(2.0 * float(w.max()) <= 1.0 + 1e-12)


def _partitions(total: int, max_parts: int, largest: int | None = None):
    """Partitions of `total` into at most `max_parts` positive parts."""
    if largest is None:
        largest = total
    if total == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, max_parts - 1, first):
            yield (first,) + rest


def bruteforce_theta_m1(theta: float, max_support: int, grid_steps: int) -> float:
    """Exhaustive grid minimum of the energy over centroid-feasible weights.

    Enumerates all weight vectors with at most `max_support` atoms on the
    simplex grid of denominator `grid_steps`, keeps those satisfying the
    polygon inequality, and returns the smallest energy.  Serves as an
    independent oracle for the m=1 solver and closed form.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if not 2 <= max_support <= 5:
        raise ValueError(f"max_support must be in [2, 5], got {max_support}")
    if not 2 <= grid_steps <= 200:
        raise ValueError(f"grid_steps must be in [2, 200], got {grid_steps}")
    best = math.inf
    for part in _partitions(grid_steps, max_support):
        if 2 * part[0] <= grid_steps:
            energy = sum((p / grid_steps) ** theta for p in part)
            if energy < best:
                best = energy
    return best


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    x = np.asarray(v, dtype=float)
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.size + 1)
    cond = u - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    tau = css[rho] / (rho + 1)
    return np.maximum(x - tau, 0.0)


@dataclass(frozen=True)
class SolverConfig:
    """Settings for one minimize_theta run."""

    support_size: int
    restarts: int = 20
    max_outer_iters: int = 12
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    step_size: float = 0.05
    grad_tol: float = 1e-9
    residual_tol: float = 1e-8
    seed: int = 0
    max_inner_iters: int = 250
    prune_tol: float = 1e-10
    merge_tol: float = 1e-6

    def __post_init__(self):
        if self.support_size < 1:
            raise ValueError("support_size must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.penalty_growth <= 1.0:
            raise ValueError("penalty_growth must exceed 1")
        for name in ("penalty_init", "step_size", "grad_tol", "residual_tol",
                     "prune_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.merge_tol < 0:
            raise ValueError("merge_tol must be >= 0")


@dataclass(frozen=True)
class OptimizerReport:
    """Outcome of a minimize_theta run (the best restart after merging)."""

    best_measure: DiscreteMeasure
    energy: float
    residual_norm: float
    closed_form: float | None
    gap: float | None
    iterations: int
    converged: bool
    n: int
    m: int
    theta: float
    config: SolverConfig
    restart_energies: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "theta": self.theta,
            "energy": self.energy,
            "residual_norm": self.residual_norm,
            "closed_form": self.closed_form,
            "gap": self.gap,
            "iterations": self.iterations,
            "converged": self.converged,
            "best_measure": self.best_measure.to_json_dict(),
            "restart_energies": list(self.restart_energies),
            "config": asdict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def csv_header() -> str:
        return "n,m,theta,support,energy,residual,converged,closed_form,gap"

    def csv_row(self) -> str:
        cf = "" if self.closed_form is None else format(self.closed_form, ".17g")
        gap = "" if self.gap is None else format(self.gap, ".17g")
        return ",".join([
            str(self.n), str(self.m), format(self.theta, ".17g"),
            str(self.best_measure.support_size),
            format(self.energy, ".17g"), format(self.residual_norm, ".17g"),
            str(int(self.converged)), cf, gap,
        ])


def minimal_support(n: int, m: int) -> int:
    """Smallest support size not excluded by the frame dimension counts."""
    lower = 2
    if m >= 2:
        lower = max(lower, n + 2)
    if n == 1:
        lower = max(lower, m + 1)
    return lower


class _PenaltyProblem:
    """Vectorized objective/gradient evaluations for one support size."""

    def __init__(self, basis: MomentBasis, theta: float):
        self.basis = basis
        self.theta = theta

    def residual(self, points, weights):
        return self.basis.evaluate(points).T @ weights

    def objective(self, points, weights, rho):
        wc = np.maximum(weights, WEIGHT_GRAD_FLOOR)
        r = self.residual(points, weights)
        return float(np.sum(wc**self.theta) + 0.5 * rho * (r @ r))

    def gradients(self, points, weights, rho):
        theta = self.theta
        f_vals = self.basis.evaluate(points)  # (N, l)
        r = f_vals.T @ weights
        wc = np.maximum(weights, WEIGHT_GRAD_FLOOR)
        grad_w = theta * wc ** (theta - 1.0) + rho * (f_vals @ r)
        f_grads = self.basis.evaluate_gradients(points)  # (N, l, d)
        grad_x = rho * weights[:, None] * np.einsum("nld,l->nd", f_grads, r)
        # tangential part only; the radial component is removed by the
        # renormalization anyway but distorts the line search if kept
        grad_x -= np.sum(grad_x * points, axis=1)[:, None] * points
        obj = float(np.sum(wc**theta) + 0.5 * rho * (r @ r))
        return obj, grad_x, grad_w


def _projected_gradient(problem, points, weights, rho, config):
    """Inner loop: projected/renormalized gradient descent with backtracking.

    The backtracking warm-starts from (a bit above) the last accepted step so
    steep stretches of the landscape do not pay a full halving cascade every
    iteration.
    """
    step0 = config.step_size
    step_start = step0
    iters_used = 0
    for _ in range(config.max_inner_iters):
        obj, grad_x, grad_w = problem.gradients(points, weights, rho)
        scale = max(1.0, float(np.max(np.abs(grad_w))), float(np.max(np.abs(grad_x))))
        step = step_start
        moved = False
        for _ in range(60):
            new_w = project_simplex(weights - step * grad_w)
            new_x = normalize_rows(points - step * grad_x)
            new_obj = problem.objective(new_x, new_w, rho)
            displacement = math.sqrt(
                float(np.sum((new_w - weights) ** 2) + np.sum((new_x - points) ** 2))
            )
            if new_obj <= obj - 1e-4 * displacement**2 / max(step, 1e-300):
                moved = True
                break
            step *= 0.5
        iters_used += 1
        if not moved:
            break
        points, weights = new_x, new_w
        step_start = min(step0, 4.0 * step)
        if displacement < config.grad_tol * max(1.0, scale) * step:
            break
    return points, weights, iters_used


def _feasibility_polish(basis, points, weights, fix_points=False, max_iters=80,
                        target=1e-13):
    """Projected Gauss-Newton on |residual|^2 over sphere x simplex.

    Used after pruning ("feasibility re-solve on the remaining support") and
    after the final merge.  Points stay on the sphere via renormalization,
    weights on the simplex via Euclidean projection; an extra Jacobian row
    keeps the weight perturbation sum-free.
    """
    pts = np.array(points, dtype=float)
    w = np.array(weights, dtype=float)
    npts, d = pts.shape
    r = basis.evaluate(pts).T @ w
    best_norm = float(np.linalg.norm(r))
    for _ in range(max_iters):
        if best_norm < target:
            break
        f_vals = basis.evaluate(pts)  # (N, l)
        jac_w = f_vals.T  # (l, N)
        if fix_points:
            jac = jac_w
        else:
            f_grads = basis.evaluate_gradients(pts)  # (N, l, d)
            jac_x = w[:, None, None] * f_grads
            radial = np.einsum("nld,nd->nl", jac_x, pts)
            jac_x = jac_x - radial[:, :, None] * pts[:, None, :]
            jac = np.concatenate([jac_x.transpose(1, 0, 2).reshape(r.size, npts * d), jac_w], axis=1)
        # keep weight updates inside the simplex hyperplane
        sum_row = np.zeros((1, jac.shape[1]))
        sum_row[0, -npts:] = 1.0
        aug = np.vstack([jac, sum_row])
        rhs = np.concatenate([-r, [0.0]])
        delta, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        step = 1.0
        improved = False
        for _ in range(25):
            if fix_points:
                new_pts = pts
                new_w = project_simplex(w + step * delta)
            else:
                new_pts = normalize_rows(pts + step * delta[: npts * d].reshape(npts, d))
                new_w = project_simplex(w + step * delta[npts * d:])
            new_r = basis.evaluate(new_pts).T @ new_w
            new_norm = float(np.linalg.norm(new_r))
            if new_norm < best_norm * (1.0 - 0.25 * step):
                pts, w, best_norm = new_pts, new_w, new_norm
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return pts, w, best_norm


def _prune(points, weights, prune_tol):
    live = weights > prune_tol
    if live.sum() < 1:
        live = weights == weights.max()
    if live.all():
        return points, weights, False
    w = weights[live]
    return points[live], w / w.sum(), True


@dataclass
class _RestartResult:
    points: np.ndarray
    weights: np.ndarray
    energy: float
    residual: float
    iterations: int
    converged: bool


def _run_restart(problem, config, restart_index, init_transform):
    rng = np.random.default_rng([config.seed, restart_index])
    npts = config.support_size
    d = problem.basis.n + 1
    points = normalize_rows(rng.standard_normal((npts, d)))
    if init_transform is not None:
        points = normalize_rows(points @ np.asarray(init_transform, dtype=float).T)
    weights = rng.dirichlet(np.ones(npts))

    basis = problem.basis
    rho = config.penalty_init
    iterations = 0
    for _ in range(config.max_outer_iters):
        points, weights, used = _projected_gradient(problem, points, weights, rho, config)
        iterations += used
        points, weights, pruned = _prune(points, weights, config.prune_tol)
        if pruned:
            # feasibility re-solve on the surviving support
            points, weights, _ = _feasibility_polish(basis, points, weights, fix_points=True,
                                                     max_iters=30, target=config.residual_tol * 1e-2)
        residual = float(np.linalg.norm(basis.evaluate(points).T @ weights))
        if residual < config.residual_tol:
            break
        rho *= config.penalty_growth

    # final hygiene: drop starved atoms, merge coincident ones, restore
    # feasibility exactly on the reduced support
    points, weights, _ = _prune(points, weights, config.prune_tol)
    try:
        merged = merge_close_points(
            DiscreteMeasure(points=points, weights=project_simplex(weights)),
            config.merge_tol,
        )
        points, weights = merged.points, merged.weights
    except ValueError:
        pass
    points, weights, residual = _feasibility_polish(basis, points, weights)
    weights = project_simplex(weights)
    residual = float(np.linalg.norm(basis.evaluate(points).T @ weights))
    live = weights > 0.0
    points, weights = points[live], weights[live]
    energy = float(np.sum(weights ** problem.theta))
    return _RestartResult(
        points=points,
        weights=weights,
        energy=energy,
        residual=residual,
        iterations=iterations,
        converged=residual < config.residual_tol,
    )


def _lexicographic_key(points: np.ndarray):
    order = np.lexsort(points.T[::-1])
    return tuple(points[order].ravel())


def _better(a: _RestartResult, b: _RestartResult) -> bool:
    """Tie-break rule: converged first, then energy, support size, point order."""
    if a.converged != b.converged:
        return a.converged
    if a.converged:
        if a.energy < b.energy - ENERGY_TIE_TOL:
            return True
        if a.energy > b.energy + ENERGY_TIE_TOL:
            return False
        if a.points.shape[0] != b.points.shape[0]:
            return a.points.shape[0] < b.points.shape[0]
        return _lexicographic_key(a.points) < _lexicographic_key(b.points)
    # nothing converged: prefer the smallest residual, never fabricate a minimum
    if a.residual != b.residual:
        return a.residual < b.residual
    return a.energy < b.energy


def _worker_count() -> int:
    raw = os.environ.get("THETA_EXTREMAL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def random_feasible_measure(n: int, m: int, support_size: int, seed: int,
                            residual_tol: float = 1e-9, max_attempts: int = 50) -> DiscreteMeasure:
    """A random measure satisfying the degree-m moment constraints.

    Solves the moment equations from a random draw in an unconstrained
    parametrization (points normalized from free vectors, weights through a
    softmax, so simplex membership is exact by construction) with a
    least-squares solver; retries with fresh draws when a basin is
    infeasible.  Used to exercise certificates on instances with no special
    structure.
    """
    from scipy.optimize import least_squares

    check_dimension(n)
    basis = build_basis(n, m)
    if support_size < minimal_support(n, m):
        raise ValueError(f"support_size must be at least {minimal_support(n, m)}")
    npts, d = support_size, n + 1

    def unpack(v):
        y = v[: npts * d].reshape(npts, d)
        z = v[npts * d:]
        x = y / np.linalg.norm(y, axis=1)[:, None]
        ez = np.exp(z - z.max())
        w = ez / ez.sum()
        return x, w

    def residual_fn(v):
        x, w = unpack(v)
        return basis.evaluate(x).T @ w

    def jac_fn(v):
        y = v[: npts * d].reshape(npts, d)
        x, w = unpack(v)
        f_vals = basis.evaluate(x)  # (N, l)
        r = f_vals.T @ w
        grads = basis.evaluate_gradients(x)  # (N, l, d)
        norms = np.linalg.norm(y, axis=1)
        # d r_k / d y_{i,:} = w_i grad f_k(x_i) (I - x x^T) / |y_i|
        gtang = grads - np.einsum("nld,nd->nl", grads, x)[:, :, None] * x[:, None, :]
        jy = (w / norms)[:, None, None] * gtang  # (N, l, d)
        jy = jy.transpose(1, 0, 2).reshape(r.size, npts * d)
        jz = (w[None, :] * (f_vals.T - r[:, None]))  # (l, N)
        return np.concatenate([jy, jz], axis=1)

    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        v0 = np.concatenate([
            rng.standard_normal(npts * d),
            0.3 * rng.standard_normal(npts),
        ])
        sol = least_squares(residual_fn, v0, jac=jac_fn, method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        res_norm = float(np.linalg.norm(sol.fun))
        x, w = unpack(sol.x)
        if res_norm < residual_tol and np.all(w > 1e-6):
            return DiscreteMeasure(points=x, weights=w / w.sum())
    raise RuntimeError(
        f"no feasible measure found in {max_attempts} attempts for (n={n}, m={m}, N={support_size})"
    )


def minimize_theta(n: int, m: int, theta: float, config: SolverConfig,
                   init_transform=None) -> OptimizerReport:
    """Minimize the theta-energy over degree-m feasible measures on S^n.

    Returns the best restart as an OptimizerReport; `converged` is False when
    no restart reached the residual tolerance (the report then carries the
    smallest-residual iterate rather than a fabricated minimum).  The run is
    bit-reproducible for a fixed config, including across thread counts.
    """
    check_dimension(n)
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    if m < 1:
        raise ValueError(f"moment degree must be >= 1, got {m}")
    lower = minimal_support(n, m)
    if config.support_size < lower:
        raise ValueError(
            f"support_size {config.support_size} is below the dimension-forced "
            f"minimum {lower} for (n={n}, m={m})"
        )

    basis = build_basis(n, m)
    problem = _PenaltyProblem(basis, theta)

    workers = _worker_count()
    indices = range(config.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda k: _run_restart(problem, config, k, init_transform), indices
            ))
    else:
        results = [_run_restart(problem, config, k, init_transform) for k in indices]

    best = results[0]
    for cand in results[1:]:
        if _better(cand, best):
            best = cand

    measure = DiscreteMeasure(points=best.points, weights=best.weights)
    cf = closed_form_theta(m, theta, n)
    return OptimizerReport(
        best_measure=measure,
        energy=best.energy,
        residual_norm=best.residual,
        closed_form=cf,
        gap=None if cf is None else best.energy - cf,
        iterations=best.iterations,
        converged=best.converged,
        n=n,
        m=m,
        theta=theta,
        config=config,
        restart_energies=tuple(r.energy for r in results),
    )
