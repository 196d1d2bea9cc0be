"""Mean-zero polynomial spaces on S^n and moment residuals.

A discrete probability measure matches the uniform measure up to degree m
exactly when it annihilates every polynomial of degree <= m with zero sphere
average.  This module constructs an L^2-orthonormal basis of that space
(restricted to the sphere) from centered monomials, and evaluates the vector
of basis moments of a weighted point set -- the feasibility residual used by
the solver and the certificates.

Monomial sphere averages are exact rational-times-Gamma expressions, so the
Gram matrix of the centered monomials is assembled exactly and the relations
generated by |x|^2 - 1 show up as (numerically) zero eigenvalues that get
discarded.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .sphere import check_dimension

# Eigenvalues of the exact Gram matrix below this cutoff are sphere relations
# (multiples of |x|^2 - 1), not basis directions.
RELATION_CUTOFF = 1e-10


def monomial_sphere_average(n: int, exponents) -> float:
    """Average of the monomial x^a over S^n w.r.t. normalized uniform measure.

    Zero if any exponent is odd; otherwise the classical Gamma-product value
    2 * prod Gamma((a_i+1)/2) / Gamma(sum (a_i+1)/2) divided by |S^n|.
    """
    n = check_dimension(n)
    a = np.asarray(exponents, dtype=int)
    if a.shape != (n + 1,):
        raise ValueError(f"need a multi-index of length {n + 1}, got shape {a.shape}")
    if np.any(a < 0):
        raise ValueError("exponents must be nonnegative")
    if np.any(a % 2 == 1):
        return 0.0
    half = (a + 1) / 2.0
    # log-space product; divide by |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
    log_num = math.log(2.0) + sum(math.lgamma(h) for h in half) - math.lgamma(float(half.sum()))
    log_area = math.log(2.0) + ((n + 1) / 2) * math.log(math.pi) - math.lgamma((n + 1) / 2)
    return math.exp(log_num - log_area)


def monomial_exponents(n: int, max_degree: int, include_constant: bool = True):
    """All multi-indices over R^{n+1} with total degree <= max_degree.

    Ordered by total degree, then lexicographically (graded lex), so the basis
    construction is deterministic across runs.
    """
    out = []
    for deg in range(0 if include_constant else 1, max_degree + 1):
        combos = sorted(
            (c for c in itertools.product(range(deg + 1), repeat=n + 1) if sum(c) == deg),
            reverse=True,
        )
        out.extend(combos)
    return [np.array(c, dtype=int) for c in out]


def evaluate_monomials(exponents, points: np.ndarray) -> np.ndarray:
    """Value matrix M[i, k] = points[i] ** exponents[k] (product over coords)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    exps = np.asarray(exponents, dtype=int)
    # (N, K): product over coordinates of pts[:, j] ** exps[k, j]
    return np.prod(pts[:, None, :] ** exps[None, :, :], axis=2)


@dataclass(frozen=True)
class MomentBasis:
    """Orthonormal basis of the mean-zero polynomials of degree <= m on S^n.

    basis functions are stored as coefficient rows over the monomial list
    `exponents` (which includes the constant monomial used for centering);
    they are orthonormal in L^2 of the normalized uniform measure and each
    has sphere average zero.
    """

    n: int
    m: int
    exponents: tuple = field(repr=False)
    coefficients: np.ndarray = field(repr=False)  # (rank, K)

    @property
    def rank(self) -> int:
        return self.coefficients.shape[0]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Basis values at sphere points, shape (N, rank)."""
        mono = evaluate_monomials(np.stack(self.exponents), points)
        return mono @ self.coefficients.T

    def evaluate_gradients(self, points: np.ndarray) -> np.ndarray:
        """Ambient gradients of the basis polynomials, shape (N, rank, n+1)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        exps = np.stack(self.exponents)  # (K, d)
        npts, d = pts.shape
        grads = np.zeros((npts, len(self.exponents), d))
        for j in range(d):
            lowered = exps.copy()
            lowered[:, j] = np.maximum(lowered[:, j] - 1, 0)
            vals = np.prod(pts[:, None, :] ** lowered[None, :, :], axis=2)
            grads[:, :, j] = exps[None, :, j] * vals
        return np.einsum("nkd,rk->nrd", grads, self.coefficients)


@lru_cache(maxsize=None)
def _build_basis_cached(n: int, m: int) -> MomentBasis:
    exps = monomial_exponents(n, m, include_constant=False)
    k = len(exps)
    averages = np.array([monomial_sphere_average(n, e) for e in exps])

    # exact Gram of the centered monomials: <x^a - avg, x^b - avg>
    gram = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            cross = monomial_sphere_average(n, exps[i] + exps[j])
            gram[i, j] = gram[j, i] = cross - averages[i] * averages[j]

    evals, evecs = np.linalg.eigh(gram)
    keep = evals > RELATION_CUTOFF
    # coefficient rows over centered monomials, normalized to unit L^2 norm
    centered_coeffs = (evecs[:, keep] / np.sqrt(evals[keep])).T  # (rank, k)

    # re-express over raw monomials including the constant: subtracting the
    # average of each monomial contributes a constant term
    full_exps = [np.zeros(n + 1, dtype=int)] + exps
    coeffs = np.zeros((centered_coeffs.shape[0], k + 1))
    coeffs[:, 1:] = centered_coeffs
    coeffs[:, 0] = -centered_coeffs @ averages

    return MomentBasis(
        n=n,
        m=m,
        exponents=tuple(map(tuple, full_exps)),
        coefficients=coeffs,
    )


def build_basis(n: int, m: int) -> MomentBasis:
    """Orthonormalized mean-zero polynomial basis for degrees 1..m on S^n.

    The rank equals the dimension of the restricted space; for m=2 it is
    (n^2 + 3n)/2 + n + 1.
    """
    n = check_dimension(n)
    if m < 1:
        raise ValueError(f"max degree must be >= 1, got {m}")
    basis = _build_basis_cached(n, int(m))
    # stored coefficient arrays are shared through the cache; hand out a
    # read-only view so callers cannot corrupt it
    basis.coefficients.setflags(write=False)
    return basis


def moment_residual(points: np.ndarray, weights: np.ndarray, basis: MomentBasis):
    """Vector of weighted basis sums sum_i w_i f_k(xi_i) and its 2-norm."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    if pts.shape[1] != basis.n + 1:
        raise ValueError(
            f"support dimension mismatch: points in R^{pts.shape[1]}, basis for S^{basis.n}"
        )
    if w.shape != (pts.shape[0],):
        raise ValueError("one weight per support point is required")
    vec = basis.evaluate(pts).T @ w
    return vec, float(np.linalg.norm(vec))
