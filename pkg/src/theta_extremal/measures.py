"""Discrete probability measures on S^n: energy, feasibility, certificates.

The theta-energy sum_i w_i^theta (0 < theta < 1) is strictly concave in each
weight, so splitting an atom raises it and merging coincident atoms lowers
it.  Feasibility in the moment-matching sense is measured through the
orthonormal mean-zero basis of :mod:`theta_extremal.moments`.

Two per-instance certificates turn near-feasibility into rigorous lower
bounds on the energy:

* the degree-2 frame certificate stacks sqrt(w_i) and sqrt((n+1) w_i) xi_{i,j}
  into n+2 vectors of R^N whose orthonormality is equivalent to degree-2
  feasibility; Bessel's inequality per coordinate then gives
  sum w_i^theta >= (n+2)^{1-theta} up to an explicit slack linear in the
  orthonormality deviation;
* on the circle, the analogous m+1 complex power vectors sqrt(w_j) xi_j^k
  must be unitary, giving (m+1)^{1-theta}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .moments import build_basis, moment_residual
from .sphere import as_unit_points, normalize_rows, pairwise_geodesic_distances

WEIGHT_SUM_TOL = 1e-12
DEFAULT_MERGE_TOL = 1e-6


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on S^n.

    points: (N, n+1) unit vectors, weights: (N,) nonnegative, summing to 1.
    Zero-weight atoms are dropped on construction.  Instances are treated as
    immutable; all operations return new measures.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_unit_points(self.points)
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != pts.shape[0]:
            raise ValueError("one weight per support point is required")
        if np.any(w < -WEIGHT_SUM_TOL):
            raise ValueError(f"negative weight: {float(w.min())}")
        w = np.where(w < 0, 0.0, w)
        total = float(w.sum())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        live = w > 0.0
        pts, w = pts[live], w[live]
        if pts.shape[0] == 0:
            raise ValueError("measure has empty support")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        """Sphere dimension (ambient dimension minus one)."""
        return self.points.shape[1] - 1

    @property
    def support_size(self) -> int:
        return self.points.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "points": [[float(c) for c in p] for p in self.points],
            "weights": [float(w) for w in self.weights],
        }

    def to_json(self) -> str:
        """Serialize to the documented JSON shape, round-trip bit-exact."""
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict) -> "DiscreteMeasure":
        pts = np.asarray(data["points"], dtype=float)
        w = np.asarray(data["weights"], dtype=float)
        measure = cls(points=pts, weights=w)
        if measure.n != int(data["n"]):
            raise ValueError(
                f"declared dimension n={data['n']} does not match points in R^{measure.n + 1}"
            )
        return measure

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        return cls.from_json_dict(json.loads(text))


def uniform_measure(points: np.ndarray) -> DiscreteMeasure:
    """Equal-weight measure on the given configuration."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return DiscreteMeasure(points=pts, weights=w)


def theta_energy(measure: DiscreteMeasure, theta: float) -> float:
    """sum_i w_i^theta over the support, for 0 < theta < 1."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    w = measure.weights
    return float(np.sum(w[w > 0.0] ** theta))


def is_feasible(measure: DiscreteMeasure, m: int, tol: float):
    """Moment feasibility up to degree m: residual norm below tol.

    Returns (feasible, residual_norm).
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    basis = build_basis(measure.n, m)
    _, norm = moment_residual(measure.points, measure.weights, basis)
    return norm < tol, norm


def merge_close_points(measure: DiscreteMeasure, dist_tol: float = DEFAULT_MERGE_TOL) -> DiscreteMeasure:
    """Merge support clusters of geodesic diameter ~ dist_tol.

    Clustered atoms are replaced by their weight-averaged Euclidean mean
    renormalized to the sphere, carrying the summed weight.  Merging exactly
    coincident atoms strictly lowers the theta-energy for every theta in
    (0, 1).  Requesting a merge whose weighted mean is numerically zero
    (antipodal atoms) raises instead of fabricating a point.
    """
    if dist_tol < 0:
        raise ValueError(f"merge tolerance must be >= 0, got {dist_tol}")
    pts, w = measure.points, measure.weights
    npts = pts.shape[0]
    if npts == 1:
        return measure
    dist = pairwise_geodesic_distances(pts)
    # union-find over the "within tolerance" graph
    parent = list(range(npts))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(npts):
        for j in range(i + 1, npts):
            if dist[i, j] <= dist_tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups: dict[int, list[int]] = {}
    for i in range(npts):
        groups.setdefault(find(i), []).append(i)
    if len(groups) == npts:
        return measure

    new_pts, new_w = [], []
    for members in groups.values():
        idx = np.array(members)
        weight = float(w[idx].sum())
        mean = w[idx] @ pts[idx]
        norm = np.linalg.norm(mean)
        if norm < 1e-12 * weight:
            raise ValueError("merge would average out to the origin (antipodal atoms)")
        new_pts.append(mean / norm)
        new_w.append(weight)
    return DiscreteMeasure(points=np.array(new_pts), weights=np.array(new_w))


@dataclass(frozen=True)
class FrameCertificate:
    """Orthonormal-frame certificate for degree-2 feasible measures.

    max_orthonormality_deviation is max |<u_a, u_b> - delta_ab| over the n+2
    stacked frame vectors; parseval_sums[i] = (n+2) w_i must all stay <= 1
    for Bessel's inequality to apply.  When the certificate applies, the
    theta-energy of the measure is at least lower_bound(theta).
    """

    n: int
    support_size: int
    max_orthonormality_deviation: float
    parseval_sums: np.ndarray = field(repr=False)
    tolerance: float

    @property
    def support_sufficient(self) -> bool:
        # n+2 orthonormal vectors cannot fit in fewer than n+2 dimensions
        return self.support_size >= self.n + 2

    @property
    def applicable(self) -> bool:
        return (
            self.support_sufficient
            and self.max_orthonormality_deviation < self.tolerance
            and bool(np.all(self.parseval_sums <= 1.0 + self.tolerance))
        )

    def lower_bound(self, theta: float) -> float:
        """Certified lower bound on the theta-energy, with explicit slack.

        With deviation d, each frame vector has squared norm >= 1 - d and each
        Parseval sum is <= 1 + d, so
            sum w_i^theta >= (n+2)^{1-theta} (1 - d) (1 + d)^{theta - 1}.
        The slack degrades continuously in d rather than as a boolean cutoff.
        """
        if not 0.0 < theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {theta}")
        d = self.max_orthonormality_deviation
        base = (self.n + 2) ** (1.0 - theta)
        if d >= 1.0:
            return 0.0
        return base * (1.0 - d) * (1.0 + d) ** (theta - 1.0)


def gram_certificate_m2(measure: DiscreteMeasure, tolerance: float = 1e-8) -> FrameCertificate:
    """Build the n+2 frame vectors of a measure and measure their orthonormality.

    Row i of the stacked frame has squared norm (n+2) w_i, reported as the
    Parseval sums.  Orthonormality of the frame is equivalent to degree-2
    feasibility of the measure.
    """
    pts, w = measure.points, measure.weights
    n = measure.n
    sqrt_w = np.sqrt(w)
    # columns: u_0 = sqrt(w), u_j = sqrt((n+1) w) * coordinate j
    frame = np.column_stack([sqrt_w, math.sqrt(n + 1) * sqrt_w[:, None] * pts])
    gram = frame.T @ frame
    deviation = float(np.max(np.abs(gram - np.eye(n + 2))))
    parseval = (n + 2) * w
    return FrameCertificate(
        n=n,
        support_size=measure.support_size,
        max_orthonormality_deviation=deviation,
        parseval_sums=parseval,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class CircleCertificate:
    """Unitarity certificate for degree-m feasible measures on the circle."""

    m: int
    support_size: int
    max_unitarity_deviation: float
    tolerance: float

    @property
    def support_sufficient(self) -> bool:
        return self.support_size >= self.m + 1

    @property
    def applicable(self) -> bool:
        return self.support_sufficient and self.max_unitarity_deviation < self.tolerance

    def lower_bound(self, theta: float) -> float:
        if not 0.0 < theta < 1.0:
            raise ValueError(f"theta must lie in (0, 1), got {theta}")
        d = self.max_unitarity_deviation
        base = (self.m + 1) ** (1.0 - theta)
        if d >= 1.0:
            return 0.0
        return base * (1.0 - d) * (1.0 + d) ** (theta - 1.0)


def circle_certificate(measure: DiscreteMeasure, m: int, tolerance: float = 1e-8) -> CircleCertificate:
    """Hermitian orthonormality of the m+1 power vectors sqrt(w_j) xi_j^k.

    Only defined on S^1; points are read as unit complex numbers.  The
    deviation is max |<u_a, u_b> - delta_ab| under the Hermitian inner
    product, and it vanishes exactly on measures matching all trigonometric
    moments up to degree m.
    """
    if measure.n != 1:
        raise ValueError(f"circle certificate requires S^1 support, got S^{measure.n}")
    if m < 1:
        raise ValueError(f"degree must be >= 1, got {m}")
    z = measure.points[:, 0] + 1j * measure.points[:, 1]
    sqrt_w = np.sqrt(measure.weights)
    cols = np.stack([sqrt_w * z**k for k in range(m + 1)], axis=1)  # (N, m+1)
    gram = cols.conj().T @ cols
    deviation = float(np.max(np.abs(gram - np.eye(m + 1))))
    return CircleCertificate(
        m=m,
        support_size=measure.support_size,
        max_unitarity_deviation=deviation,
        tolerance=tolerance,
    )


def rotate_measure(measure: DiscreteMeasure, rotation: np.ndarray) -> DiscreteMeasure:
    """Apply an orthogonal transform to every support point."""
    rot = np.asarray(rotation, dtype=float)
    if rot.shape != (measure.n + 1, measure.n + 1):
        raise ValueError("rotation matrix dimension mismatch")
    return DiscreteMeasure(points=normalize_rows(measure.points @ rot.T), weights=measure.weights)
