"""Alignment of point configurations modulo orthogonal transforms.

Extremal supports are unique only up to rotation (and relabeling), so
comparisons against reference configurations run through an
assignment-then-Procrustes iteration: match points by nearest distance
(Hungarian assignment), fit the best orthogonal map (SVD), repeat.  Several
seeded restarts guard against bad initial matchings.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .sphere import normalize_rows, random_rotation


def procrustes_rotation(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Orthogonal matrix Q minimizing |source @ Q.T - target| in Frobenius norm."""
    u, _, vt = np.linalg.svd(target.T @ source)
    return u @ vt


def align_configurations(points: np.ndarray, reference: np.ndarray,
                         restarts: int = 8, iters: int = 60, seed: int = 0):
    """Best orthogonal alignment of `points` onto `reference`.

    Returns (max_distance, rotation, permutation): after applying the
    rotation and reordering by the permutation, the i-th point sits within
    max_distance of reference[i].  Requires equal point counts.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.atleast_2d(np.asarray(reference, dtype=float))
    if pts.shape != ref.shape:
        raise ValueError(f"configuration shapes differ: {pts.shape} vs {ref.shape}")
    d = pts.shape[1]

    rng = np.random.default_rng(seed)
    trials = [np.eye(d)] + [random_rotation(d, rng) for _ in range(restarts - 1)]
    best = (np.inf, np.eye(d), np.arange(pts.shape[0]))
    for rot in trials:
        q = rot
        perm = None
        for _ in range(iters):
            moved = pts @ q.T
            cost = np.linalg.norm(moved[:, None, :] - ref[None, :, :], axis=2)
            rows, cols = linear_sum_assignment(cost)
            new_perm = np.empty_like(cols)
            new_perm[cols] = rows
            q_new = procrustes_rotation(pts[new_perm], ref)
            if perm is not None and np.array_equal(new_perm, perm) and np.allclose(q_new, q, atol=1e-14):
                break
            perm, q = new_perm, q_new
        moved = pts[perm] @ q.T
        err = float(np.max(np.linalg.norm(moved - ref, axis=1)))
        if err < best[0]:
            best = (err, q, perm)
    return best


def matches_configuration(points: np.ndarray, reference: np.ndarray, tol: float,
                          **kwargs) -> bool:
    """Whether the configurations coincide up to an orthogonal map within tol."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.atleast_2d(np.asarray(reference, dtype=float))
    if pts.shape != ref.shape:
        return False
    err, _, _ = align_configurations(normalize_rows(pts), normalize_rows(ref), **kwargs)
    return err <= tol
