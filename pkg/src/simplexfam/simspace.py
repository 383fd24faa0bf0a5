"""The space of simplices similar to a fixed reference.

A configuration q = (q_0, ..., q_k) of k+1 labeled points in R^k is encoded
by its unit direction matrix Pi(q) = [pi_10 ... pi_k0] (column i is the unit
vector from q_0 toward q_i) together with the table of distance ratios
r_ijl = |q_i - q_j| / |q_i - q_l|. Configurations similar to the reference
share the ratio table, and Pi(q) = U P where P is the symmetric
positive-definite square root of the Gram matrix and U is the orthogonal
*pose*. The chart

    (U, lambda, c)  ->  q_0 = c,  q_i = c + lambda * rho_i * U @ pi_i0(ref)

with rho_i = d_0i/d_01 of the reference identifies the similarity space with
O(k) x (0, inf) x R^k; ``embed`` and ``ps`` are the two directions of that
chart.

Vertex labels are fixed throughout: two configurations that differ by a
relabeling are distinct. All values are immutable; everything here is safe
to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distgeo import circumcenter, distances_of
from .errors import (
    BoundaryConfigError,
    DegenerateClassError,
    DegenerateSimplexError,
    NotPositiveDefiniteError,
    NotSimilarError,
    RankDeficientError,
)

SIMILARITY_TOL = 1e-8


@dataclass(frozen=True)
class SimplexConfig:
    """Ordered (k+1)-tuple of points in R^k, stored as rows of q."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", q)
        if q.ndim != 2 or q.shape[0] != q.shape[1] + 1:
            raise ValueError(f"expected k+1 points in R^k, got shape {q.shape}")
        diff = q[:, None, :] - q[None, :, :]
        d = np.sqrt((diff**2).sum(axis=-1))
        if d[~np.eye(q.shape[0], dtype=bool)].min() == 0.0:
            raise ValueError("points must be pairwise distinct")

    @property
    def k(self) -> int:
        return self.q.shape[1]

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "points": self.q.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "SimplexConfig":
        data = json.loads(text)
        return cls(np.asarray(data["points"], dtype=float))


@dataclass(frozen=True)
class Pose:
    """Orthogonal k x k matrix with its determinant sign recorded."""

    U: np.ndarray
    det_sign: int

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        object.__setattr__(self, "U", U)
        k = U.shape[0]
        if U.shape != (k, k):
            raise ValueError("pose matrix must be square")
        if np.abs(U.T @ U - np.eye(k)).max() > 1e-8:
            raise ValueError("pose matrix is not orthogonal")
        if self.det_sign not in (-1, 1):
            raise ValueError("det_sign must be +1 or -1")

    @classmethod
    def from_matrix(cls, U: np.ndarray) -> "Pose":
        return cls(U, 1 if np.linalg.det(U) > 0 else -1)

    @classmethod
    def identity(cls, k: int) -> "Pose":
        return cls(np.eye(k), 1)

    @classmethod
    def rotation2d(cls, angle: float) -> "Pose":
        c, s = np.cos(angle), np.sin(angle)
        return cls(np.array([[c, -s], [s, c]]), 1)


@dataclass(frozen=True)
class SimParams:
    """Chart coordinates of a configuration: pose, scale, and base vertex."""

    pose: Pose
    scale: float
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    def to_json(self) -> str:
        return json.dumps(
            {
                "pose": self.pose.U.tolist(),
                "det_sign": self.pose.det_sign,
                "scale": self.scale,
                "center": self.center.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SimParams":
        data = json.loads(text)
        U = np.asarray(data["pose"], dtype=float)
        return cls(Pose(U, int(data["det_sign"])), float(data["scale"]),
                   np.asarray(data["center"], dtype=float))


def direction(config: SimplexConfig, i: int, j: int) -> np.ndarray:
    """Unit vector from q_j toward q_i."""
    v = config.q[i] - config.q[j]
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError(f"points {i} and {j} coincide")
    return v / n


def ratio(config: SimplexConfig, i: int, j: int, l: int) -> float:
    """|q_i - q_j| / |q_i - q_l| for pairwise distinct labels."""
    if len({i, j, l}) != 3:
        raise ValueError("indices must be pairwise distinct")
    dij = np.linalg.norm(config.q[i] - config.q[j])
    dil = np.linalg.norm(config.q[i] - config.q[l])
    if dij == 0.0 or dil == 0.0:
        raise ValueError("coincident points in ratio")
    return float(dij / dil)


def ratio_table(config: SimplexConfig) -> np.ndarray:
    """All ratios r[i, j, l] = d_ij / d_il; entries with repeated labels are NaN."""
    d = distances_of(config.q).d
    n = d.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = d[:, :, None] / d[:, None, :]
    idx = np.arange(n)
    r[idx, idx, :] = np.nan
    r[idx, :, idx] = np.nan
    r[:, idx, idx] = np.nan
    return r


def pi_matrix(config: SimplexConfig) -> np.ndarray:
    """Direction matrix with columns pi_10, ..., pi_k0."""
    rel = config.q[1:] - config.q[0]
    norms = np.linalg.norm(rel, axis=1)
    if norms.min() == 0.0:
        raise ValueError("coincident points")
    return (rel / norms[:, None]).T


def gram_from_ratios(ratios: np.ndarray) -> np.ndarray:
    """Gram matrix of the direction columns, from ratios alone.

    Entry (i, j) is the law-of-cosines combination
    (r_0ij + r_0ji - r_ij0 * r_ji0) / 2; the diagonal is 1.
    """
    n = ratios.shape[0]
    k = n - 1
    G = np.eye(k)
    for i in range(1, n):
        for j in range(1, n):
            if i == j:
                continue
            G[i - 1, j - 1] = 0.5 * (
                ratios[0, i, j] + ratios[0, j, i] - ratios[i, j, 0] * ratios[j, i, 0]
            )
    G = (G + G.T) / 2.0
    if np.linalg.eigvalsh(G).min() <= 1e-12:
        raise DegenerateClassError("ratio table does not define a positive-definite Gram matrix")
    return G


def spd_sqrt(M: np.ndarray) -> np.ndarray:
    """Unique symmetric positive-definite square root, via eigendecomposition."""
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > 1e-12 * scale:
        raise NotPositiveDefiniteError("matrix is not symmetric")
    w, V = np.linalg.eigh((M + M.T) / 2.0)
    if w.min() <= 1e-14 * max(w.max(), 1.0):
        raise NotPositiveDefiniteError(f"eigenvalue {w.min():.3e} not positive")
    B = (V * np.sqrt(w)) @ V.T
    return (B + B.T) / 2.0


def _gram_schmidt(U: np.ndarray) -> np.ndarray:
    """One modified Gram-Schmidt pass to scrub rounding off a near-orthogonal matrix."""
    Q = U.copy()
    k = Q.shape[1]
    for j in range(k):
        for i in range(j):
            Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        Q[:, j] /= np.linalg.norm(Q[:, j])
    return Q


def polar_decompose(A: np.ndarray) -> tuple[Pose, np.ndarray]:
    """Factor A = U P with U orthogonal and P symmetric positive-definite."""
    A = np.asarray(A, dtype=float)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.min() <= 1e-12 * sv.max():
        raise RankDeficientError("matrix is numerically singular")
    P = spd_sqrt(A.T @ A)
    U = _gram_schmidt(np.linalg.solve(P.T, A.T).T)
    return Pose.from_matrix(U), P


@dataclass(frozen=True)
class SimilarityClass:
    """Normalized reference simplex with its similarity invariants.

    The stored reference has circumcenter 0, circumradius 1, and identity
    pose, so its direction matrix equals the symmetric factor P.
    """

    delta_hat: SimplexConfig
    ratios: np.ndarray
    Pi: np.ndarray
    P: np.ndarray
    rho: np.ndarray  # rho[i] = d_0i / d_01; rho[0] = 0 is a placeholder

    @property
    def k(self) -> int:
        return self.delta_hat.k

    @property
    def scale_unit(self) -> float:
        """Edge length d_01 of the normalized reference."""
        return float(np.linalg.norm(self.delta_hat.q[1] - self.delta_hat.q[0]))


def normalize_reference(delta: SimplexConfig) -> SimilarityClass:
    """Translate, scale, and rotate a simplex into the canonical class representative.

    The circumcenter moves to the origin, the circumradius becomes 1, and the
    points are rotated by the inverse pose so the direction matrix comes out
    symmetric positive-definite (pose exactly identity).
    """
    try:
        sphere = circumcenter(delta.q)
    except DegenerateSimplexError:
        raise
    centered = (delta.q - sphere.center) / sphere.radius
    pose0, _ = polar_decompose(pi_matrix(SimplexConfig(centered)))
    ref = SimplexConfig(centered @ pose0.U)
    ratios = ratio_table(ref)
    orig = ratio_table(delta)
    mask = ~np.isnan(ratios)
    if np.abs(ratios[mask] - orig[mask]).max() > 1e-9:
        raise DegenerateClassError("normalization failed to preserve ratios")
    Pi = pi_matrix(ref)
    P = (Pi + Pi.T) / 2.0
    d = distances_of(ref.q).d
    rho = np.concatenate([[0.0], d[0, 1:] / d[0, 1]])
    return SimilarityClass(ref, ratios, Pi, P, rho)


def is_similar(config: SimplexConfig, cls: SimilarityClass,
               tol: float = SIMILARITY_TOL) -> bool:
    """True when every distance ratio matches the reference within tol."""
    return ratio_deviation(config, cls) <= tol


def ratio_deviation(config: SimplexConfig, cls: SimilarityClass) -> float:
    r = ratio_table(config)
    mask = ~np.isnan(cls.ratios)
    return float(np.abs(r[mask] - cls.ratios[mask]).max())


def pose(config: SimplexConfig, cls: SimilarityClass,
         tol: float = SIMILARITY_TOL) -> Pose:
    """Orthogonal factor carrying the reference directions onto the configuration's."""
    dev = ratio_deviation(config, cls)
    if dev > tol:
        raise NotSimilarError(dev, tol)
    U = _gram_schmidt(np.linalg.solve(cls.P.T, pi_matrix(config).T).T)
    return Pose.from_matrix(U)


def nearest_pose(config: SimplexConfig, cls: SimilarityClass) -> Pose:
    """Orthogonal polar factor of Pi(q) P^-1 without any similarity check.

    Useful for seeding solves from configurations that are only approximately
    similar to the reference.
    """
    M = np.linalg.solve(cls.P.T, pi_matrix(config).T).T
    pose_u, _ = polar_decompose(M)
    return pose_u


def embed(cls: SimilarityClass, params: SimParams) -> SimplexConfig:
    """Chart-to-configuration map: place the reference at a pose, scale, and center."""
    if params.scale <= 0.0:
        raise BoundaryConfigError(
            f"scale {params.scale} is not positive: boundary configuration"
        )
    k = cls.k
    pts = np.empty((k + 1, k))
    pts[0] = params.center
    dirs = params.pose.U @ cls.Pi  # columns are rotated reference directions
    for i in range(1, k + 1):
        pts[i] = params.center + params.scale * cls.rho[i] * dirs[:, i - 1]
    return SimplexConfig(pts)


def ps(config: SimplexConfig, cls: SimilarityClass,
       tol: float = SIMILARITY_TOL) -> SimParams:
    """Configuration-to-chart map, inverse to ``embed`` on the similarity space."""
    U = pose(config, cls, tol=tol)
    lam = float(np.linalg.norm(config.q[1] - config.q[0]))
    return SimParams(U, lam, config.q[0].copy())
