"""Geometry of the unit sphere S^n and the special functions used everywhere else.

Points on S^n are plain numpy arrays of length n+1 with unit Euclidean norm;
configurations are arrays of shape (N, n+1) whose rows are points.  The four
canonical extremal configurations (antipodal pair, regular simplex,
cross-polytope, roots of unity on the circle) are generated here.
"""

from __future__ import annotations

import math

import numpy as np

UNIT_NORM_TOL = 1e-12

# arccos argument clamping; avoids NaN at numerically collinear points
_COS_CLAMP = 1e-14


def gamma(alpha: float) -> float:
    """Gamma function for positive real arguments.

    Relative error is at the double-precision level (<= 1e-12 on (0, 30]).
    """
    if alpha <= 0:
        raise ValueError(f"gamma requires a positive argument, got {alpha}")
    return math.gamma(alpha)


def beta(a: float, b: float) -> float:
    """Euler Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    if a <= 0 or b <= 0:
        raise ValueError(f"beta requires positive arguments, got ({a}, {b})")
    # log-space evaluation keeps the quotient stable for larger arguments
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def surface_area(n: int) -> float:
    """Surface area of the unit n-sphere S^n embedded in R^{n+1}.

    surface_area(1) = 2*pi (circle length), surface_area(2) = 4*pi.
    """
    if n < 1:
        raise ValueError(f"surface_area requires n >= 1, got {n}")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def check_dimension(n: int) -> int:
    """Validate a sphere dimension (n >= 1) and return it."""
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"sphere dimension must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {n}")
    return int(n)


def as_unit_points(points, n: int | None = None) -> np.ndarray:
    """Coerce to a float configuration array (N, n+1) and check unit norms."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if n is not None and pts.shape[1] != n + 1:
        raise ValueError(
            f"expected points in R^{n + 1} for S^{n}, got vectors of length {pts.shape[1]}"
        )
    norms = np.linalg.norm(pts, axis=1)
    if not np.all(np.abs(norms - 1.0) <= 1e-9):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"points must lie on the unit sphere (max |norm-1| = {worst:.3e})")
    return pts


def normalize_rows(points: np.ndarray) -> np.ndarray:
    """Project rows onto the unit sphere. Raises on a (near-)zero row."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms < 1e-14):
        raise ValueError("cannot normalize a zero vector onto the sphere")
    return pts / norms[:, None]


def geodesic_distance(x, y) -> float:
    """Great-circle distance arccos(<x, y>) in [0, pi] between two unit vectors."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    c = float(np.dot(xv, yv))
    if c > 1.0 + _COS_CLAMP or c < -1.0 - _COS_CLAMP:
        if abs(c) > 1.0 + 1e-9:
            raise ValueError(f"inputs are not unit vectors (inner product {c})")
    return math.acos(min(1.0, max(-1.0, c)))


def pairwise_geodesic_distances(points: np.ndarray) -> np.ndarray:
    """Matrix of great-circle distances between configuration rows."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = np.clip(pts @ pts.T, -1.0, 1.0)
    return np.arccos(g)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random rotation in O(dim) with det +1, from a seeded generator."""
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def simplex_vertices(n: int) -> np.ndarray:
    """Vertices of a regular (n+1)-simplex inscribed in S^n.

    Returns n+2 unit vectors in R^{n+1} with all pairwise inner products
    equal to -1/(n+1); the vertex sum is the zero vector.
    """
    n = check_dimension(n)
    d = n + 1
    target = -1.0 / d
    v = np.zeros((d + 1, d))
    for i in range(d):
        v[i, i] = math.sqrt(1.0 - float(np.dot(v[i, :i], v[i, :i])))
        for j in range(i + 1, d + 1):
            v[j, i] = (target - float(np.dot(v[j, :i], v[i, :i]))) / v[i, i]
    return v


def cross_polytope_vertices(n: int) -> np.ndarray:
    """The 2n+2 points +-e_i for the standard basis e_1..e_{n+1} of R^{n+1}."""
    n = check_dimension(n)
    eye = np.eye(n + 1)
    return np.vstack([eye, -eye])


def roots_of_unity_points(count: int, rotation: float = 0.0) -> np.ndarray:
    """count equally spaced points on the circle S^1, rotated by a fixed angle."""
    if count < 1:
        raise ValueError(f"need at least one point, got {count}")
    angles = rotation + 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def make_configuration(kind: str, n: int, **params) -> np.ndarray:
    """Build one of the canonical configurations on S^n.

    kind:
        "antipodal"      {xi, -xi}; params: point (default e_1).
        "simplex"        n+2 regular-simplex vertices; params: seed for an
                         optional random rotation (default: unrotated).
        "cross_polytope" 2n+2 points +-e_i; params: seed as above.
        "roots_of_unity" only n=1; params: count (number of points, required),
                         rotation (angle alpha, default 0).
    """
    n = check_dimension(n)
    if kind == "antipodal":
        point = params.pop("point", None)
        _reject_extra(kind, params)
        if point is None:
            xi = np.zeros(n + 1)
            xi[0] = 1.0
        else:
            xi = as_unit_points(point, n)[0]
        return np.vstack([xi, -xi])
    if kind == "simplex":
        seed = params.pop("seed", None)
        _reject_extra(kind, params)
        pts = simplex_vertices(n)
        if seed is not None:
            pts = pts @ random_rotation(n + 1, np.random.default_rng(seed)).T
        return pts
    if kind == "cross_polytope":
        seed = params.pop("seed", None)
        _reject_extra(kind, params)
        pts = cross_polytope_vertices(n)
        if seed is not None:
            pts = pts @ random_rotation(n + 1, np.random.default_rng(seed)).T
        return pts
    if kind == "roots_of_unity":
        if n != 1:
            raise ValueError("roots_of_unity configurations exist only on S^1")
        count = params.pop("count", None)
        rotation = params.pop("rotation", 0.0)
        _reject_extra(kind, params)
        if count is None:
            raise ValueError("roots_of_unity requires a point count")
        return roots_of_unity_points(int(count), float(rotation))
    raise ValueError(f"unknown configuration kind {kind!r}")


def _reject_extra(kind: str, params: dict) -> None:
    if params:
        raise ValueError(f"unsupported parameters for {kind!r}: {sorted(params)}")
