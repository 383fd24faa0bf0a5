"""Distance geometry for simplices.

Everything here works on the pairwise distances of n = k+1 labeled points in
R^k: the bordered squared-distance determinant, the constructibility test
based on its subset sign pattern, simplex volume, and the circumsphere.

Determinants are computed by LU factorization with partial pivoting
(``numpy.linalg.det``); "nonzero" is always judged against a scale-aware
tolerance ``1e-10 * (max d)**(2h)`` for an h-point subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial
from typing import Sequence

import numpy as np

from .errors import DegenerateSimplexError, InconsistentDistancesError

SIGN_TOL = 1e-10


@dataclass(frozen=True)
class DistanceSet:
    """Symmetric table of pairwise distances d_ij > 0 with zero diagonal."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"distance table must be square, got shape {d.shape}")
        if d.shape[0] < 2:
            raise ValueError("need at least 2 labeled points")
        if not np.all(np.isfinite(d)):
            raise ValueError("distances must be finite")
        if np.abs(d - d.T).max() > 1e-12 * max(1.0, np.abs(d).max()):
            raise ValueError("distance table must be symmetric")
        if np.abs(np.diag(d)).max() != 0.0:
            raise ValueError("diagonal entries must be exactly zero")
        off = d[~np.eye(d.shape[0], dtype=bool)]
        if off.size and off.min() <= 0.0:
            raise ValueError("off-diagonal distances must be strictly positive")

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @classmethod
    def from_triangle(cls, a: float, b: float, c: float) -> "DistanceSet":
        """Triangle with d01 = a, d02 = b, d12 = c."""
        return cls(np.array([[0.0, a, b], [a, 0.0, c], [b, c, 0.0]]))

    def restrict(self, subset: Sequence[int]) -> "DistanceSet":
        idx = np.asarray(subset, dtype=int)
        return DistanceSet(self.d[np.ix_(idx, idx)])

    def squared(self) -> np.ndarray:
        return self.d**2


@dataclass(frozen=True)
class Circumsphere:
    """Sphere through all vertices of a simplex."""

    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class SubsetSign:
    """Sign record for one index subset in a constructibility check."""

    subset: tuple[int, ...]
    det: float
    expected_sign: int
    ok: bool


@dataclass(frozen=True)
class ConstructibilityReport:
    constructible: bool
    records: tuple[SubsetSign, ...]

    def failures(self) -> tuple[SubsetSign, ...]:
        return tuple(r for r in self.records if not r.ok)


def cm_det(dset: DistanceSet, subset: Sequence[int] | None = None) -> float:
    """Bordered determinant of squared pairwise distances.

    For m points the matrix is (m+1)x(m+1): first row/column are
    (0, 1, ..., 1) and the lower-right block holds d_ij^2.
    """
    if subset is not None:
        dset = dset.restrict(subset)
    m = dset.n
    if m < 2:
        raise ValueError("cm_det needs at least 2 points")
    B = np.ones((m + 1, m + 1))
    B[0, 0] = 0.0
    B[1:, 1:] = dset.squared()
    return float(np.linalg.det(B))


def is_constructible(dset: DistanceSet) -> ConstructibilityReport:
    """Decide whether some point set in R^(n-1) realizes the distances.

    Checks every index subset of size 2..n: the bordered determinant must be
    nonzero with sign (-1)^h for an h-point subset. The full set is included
    so that flat configurations of all n points are rejected.
    """
    n = dset.n
    dmax = float(dset.d.max())
    records = []
    ok_all = True
    for h in range(2, n + 1):
        expected = -1 if h % 2 else 1
        tol = SIGN_TOL * dmax ** (2 * h)
        for subset in combinations(range(n), h):
            det = cm_det(dset, subset)
            ok = abs(det) > tol and (det > 0) == (expected > 0)
            ok_all = ok_all and ok
            records.append(SubsetSign(subset, det, expected, ok))
    return ConstructibilityReport(ok_all, tuple(records))


def simplex_volume(dset: DistanceSet) -> float:
    """k-volume of the simplex on n = k+1 points from its distances.

    Vol^2 = (-1)^(k+1) / (2^k (k!)^2) * cm_det. A squared volume below
    -tolerance means the distances are inconsistent; small negative values
    from rounding are clamped to zero.
    """
    n = dset.n
    k = n - 1
    cm = cm_det(dset)
    vol2 = (-1) ** (k + 1) / (2**k * factorial(k) ** 2) * cm
    dmax = float(dset.d.max())
    if vol2 < -SIGN_TOL * dmax ** (2 * k):
        raise InconsistentDistancesError(
            f"squared volume {vol2:.3e} is negative beyond tolerance"
        )
    return float(np.sqrt(max(vol2, 0.0)))


def heron_area(a: float, b: float, c: float) -> float:
    """Triangle area from side lengths, in the factored form stable near degeneracy."""
    if min(a, b, c) <= 0:
        raise ValueError("side lengths must be positive")
    prod = (a + b + c) * (a + b - c) * (a - b + c) * (-a + b + c)
    return float(np.sqrt(max(prod, 0.0) / 16.0))


def circumradius(dset: DistanceSet) -> float:
    """Circumradius from distances: R^2 = -det(d_ij^2) / (2 cm_det)."""
    cm = cm_det(dset)
    dmax = float(dset.d.max())
    if abs(cm) <= SIGN_TOL * dmax ** (2 * dset.n):
        raise DegenerateSimplexError("zero Cayley-Menger determinant: degenerate simplex")
    top = float(np.linalg.det(dset.squared()))
    r2 = -top / (2.0 * cm)
    if r2 <= 0:
        raise DegenerateSimplexError(f"nonpositive squared circumradius {r2:.3e}")
    return float(np.sqrt(r2))


def circumcenter(points: np.ndarray) -> Circumsphere:
    """Center and radius of the sphere through k+1 points in R^k.

    Solves the k linear equations |x - p_i|^2 = |x - p_0|^2.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] + 1:
        raise ValueError(f"expected k+1 points in R^k, got shape {p.shape}")
    A = 2.0 * (p[1:] - p[0])
    b = (p[1:] ** 2).sum(axis=1) - (p[0] ** 2).sum()
    try:
        center = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSimplexError("singular circumcenter system") from exc
    scale = max(1.0, float(np.abs(p).max()))
    if not np.all(np.isfinite(center)) or np.abs(center).max() > 1e12 * scale:
        raise DegenerateSimplexError("circumcenter system is numerically singular")
    return Circumsphere(center, float(np.linalg.norm(center - p[0])))


def distances_of(points: np.ndarray) -> DistanceSet:
    """Pairwise Euclidean distances of labeled points."""
    p = np.asarray(points, dtype=float)
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    n = p.shape[0]
    off = d[~np.eye(n, dtype=bool)]
    if off.size and off.min() == 0.0:
        raise ValueError("coincident points have no distance set")
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return DistanceSet(d)
