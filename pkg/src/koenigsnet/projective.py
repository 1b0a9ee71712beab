"""Projective linear algebra over RP^n.

Points are stored as canonical homogeneous representatives, subspaces as
orthonormal bases of their cones. Join and meet are rank-revealing SVD
computations; all rank decisions go through a single Tolerance object so
that callers can tighten or relax them uniformly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateQuadruple,
    InCenter,
    MixedAmbient,
    NotCollinear,
    NotSupplementary,
)


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used across the package.

    rank_rel: relative singular-value cutoff for rank decisions,
        sigma_i > rank_rel * sigma_1 counts toward the rank.
    residual_abs: absolute threshold for membership and degeneracy
        residuals on canonically scaled data.
    """

    rank_rel: float = 1e-9
    residual_abs: float = 1e-9


DEFAULT_TOL = Tolerance()


def _canonical_rep(coords) -> np.ndarray:
    v = np.asarray(coords, dtype=float).reshape(-1).copy()
    if v.size < 2:
        raise ValueError("need at least two homogeneous coordinates")
    if not np.all(np.isfinite(v)):
        raise ValueError("homogeneous coordinates must be finite")
    if not np.abs(v).max() > 0.0:
        raise ValueError("zero vector does not represent a projective point")
    # Two passes: the first normalizes the leading maximal entry to exactly
    # 1.0, the second re-anchors in case rounding created an earlier tie.
    # Division by +-1.0 is exact, so a third pass would be a no-op and the
    # canonical form is bitwise idempotent.
    for _ in range(2):
        k = int(np.argmax(np.abs(v)))
        v = v / v[k]
    return v


class HPoint:
    """A point of RP^n held as a canonical homogeneous representative.

    The representative is rescaled so its first entry of maximal absolute
    value is exactly +1.0 and all entries lie in [-1, 1]. Re-canonicalizing
    a canonical vector reproduces it bitwise.
    """

    __slots__ = ("v",)

    def __init__(self, coords):
        v = _canonical_rep(coords)
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def ambient_dim(self) -> int:
        return self.v.size - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, HPoint):
            return NotImplemented
        return self.v.size == other.v.size and bool(np.array_equal(self.v, other.v))

    def __hash__(self) -> int:
        return hash(self.v.tobytes())

    def __repr__(self) -> str:
        return f"HPoint({np.array2string(self.v, precision=6, suppress_small=True)})"


def chordal(p: HPoint, q: HPoint) -> float:
    """Chordal distance on RP^n: min over signs of |p_hat - q_hat| for unit reps."""
    if p.v.size != q.v.size:
        raise MixedAmbient("points live in different projective spaces")
    a = p.v / np.linalg.norm(p.v)
    b = q.v / np.linalg.norm(q.v)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def orthonormal_basis(columns: np.ndarray, rank_rel: float) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span, rank cut at rank_rel."""
    m = np.atleast_2d(np.asarray(columns, dtype=float))
    if m.shape[1] == 0:
        return m.reshape(m.shape[0], 0)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((m.shape[0], 0))
    r = int(np.count_nonzero(s > rank_rel * s[0]))
    return u[:, :r]


def null_basis(mat: np.ndarray, rank_rel: float) -> np.ndarray:
    """Orthonormal basis (as columns) of the kernel, rank cut at rank_rel."""
    m = np.atleast_2d(np.asarray(mat, dtype=float))
    _, s, vt = np.linalg.svd(m)
    if s.size and s[0] > 0.0:
        r = int(np.count_nonzero(s > rank_rel * s[0]))
    else:
        r = 0
    return vt[r:].T


class ProjSubspace:
    """Projective subspace of RP^n as an orthonormal basis of its cone.

    basis has shape (n+1, k+1) with orthonormal columns; the projective
    dimension is k. Zero columns encode the empty subspace (dimension -1).
    """

    __slots__ = ("basis",)

    def __init__(self, basis: np.ndarray):
        b = np.asarray(basis, dtype=float)
        if b.ndim != 2:
            raise ValueError("basis must be a 2d array of column vectors")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_spanning(cls, columns, tol: Tolerance = DEFAULT_TOL) -> "ProjSubspace":
        return cls(orthonormal_basis(columns, tol.rank_rel))

    @classmethod
    def from_points(cls, points, tol: Tolerance = DEFAULT_TOL) -> "ProjSubspace":
        pts = list(points)
        if not pts:
            raise ValueError("need at least one point")
        n1 = pts[0].v.size
        if any(p.v.size != n1 for p in pts):
            raise MixedAmbient("points live in different projective spaces")
        return cls.from_spanning(np.column_stack([p.v for p in pts]), tol)

    @classmethod
    def empty(cls, ambient_dim: int) -> "ProjSubspace":
        return cls(np.zeros((ambient_dim + 1, 0)))

    @classmethod
    def whole(cls, ambient_dim: int) -> "ProjSubspace":
        return cls(np.eye(ambient_dim + 1))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.basis.shape[1] - 1

    def is_empty(self) -> bool:
        return self.basis.shape[1] == 0

    def project_vector(self, vec: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ vec)

    def point_residual(self, p: HPoint) -> float:
        """Relative size of the component of p orthogonal to the subspace."""
        if p.v.size != self.basis.shape[0]:
            raise MixedAmbient("point and subspace ambient dimensions differ")
        r = p.v - self.project_vector(p.v)
        return float(np.linalg.norm(r)) / float(np.linalg.norm(p.v))

    def contains_point(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.point_residual(p) <= tol.residual_abs

    def contains_subspace(self, other: "ProjSubspace", tol: Tolerance = DEFAULT_TOL) -> bool:
        if other.ambient_dim != self.ambient_dim:
            raise MixedAmbient("subspace ambient dimensions differ")
        if other.is_empty():
            return True
        r = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.linalg.norm(r, ord=2)) <= tol.residual_abs

    def point(self) -> HPoint:
        """The unique point of a zero-dimensional subspace."""
        if self.dim != 0:
            raise ValueError(f"subspace has dimension {self.dim}, not a point")
        return HPoint(self.basis[:, 0])

    def __repr__(self) -> str:
        return f"ProjSubspace(ambient={self.ambient_dim}, dim={self.dim})"


def subspace_distance(a: ProjSubspace, b: ProjSubspace) -> float:
    """Spectral gap between the orthogonal projectors, sin of the largest principal angle."""
    if a.ambient_dim != b.ambient_dim:
        raise MixedAmbient("subspace ambient dimensions differ")
    pa = a.basis @ a.basis.T
    pb = b.basis @ b.basis.T
    return float(np.linalg.norm(pa - pb, ord=2))


def _columns_of(obj) -> tuple[int, np.ndarray]:
    if isinstance(obj, HPoint):
        return obj.v.size, obj.v.reshape(-1, 1)
    if isinstance(obj, ProjSubspace):
        return obj.basis.shape[0], obj.basis
    raise TypeError(f"cannot join object of type {type(obj).__name__}")


def join(*objects, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
    """Projective span of points and subspaces.

    Stacks all representatives as columns and keeps the singular directions
    above the rank cutoff. Joining nothing is an error; pass ambient-matching
    empty subspaces to express an empty join.
    """
    if not objects:
        raise ValueError("join needs at least one operand")
    sizes_cols = [_columns_of(o) for o in objects]
    n1 = sizes_cols[0][0]
    if any(sz != n1 for sz, _ in sizes_cols):
        raise MixedAmbient("join operands live in different projective spaces")
    stacked = np.column_stack([c for _, c in sizes_cols if c.shape[1] > 0]) if any(
        c.shape[1] > 0 for _, c in sizes_cols
    ) else np.zeros((n1, 0))
    return ProjSubspace(orthonormal_basis(stacked, tol.rank_rel))


def meet(*subspaces: ProjSubspace, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
    """Intersection of projective subspaces via the stacked complement projectors."""
    if not subspaces:
        raise ValueError("meet needs at least one operand")
    n1 = subspaces[0].basis.shape[0]
    if any(s.basis.shape[0] != n1 for s in subspaces):
        raise MixedAmbient("meet operands live in different projective spaces")
    eye = np.eye(n1)
    rows = [eye - s.basis @ s.basis.T for s in subspaces]
    return ProjSubspace(null_basis(np.vstack(rows), tol.rank_rel))


def cross_ratio(
    p1: HPoint,
    p2: HPoint,
    p3: HPoint,
    p4: HPoint,
    carrier: ProjSubspace | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Cross-ratio of four collinear points.

    Convention: cro(P1,P2,P3,P4) = det(p1,p2) det(p3,p4) / (det(p2,p3) det(p4,p1))
    evaluated in an orthonormal 2-basis of the carrier line, so that the
    harmonic configuration with separated pairs {P1,P3}, {P2,P4} yields -1.

    Parameters
    ----------
    carrier : line containing all four points; computed as their join when
        omitted. A carrier that is not a line raises NotCollinear.
    """
    pts = (p1, p2, p3, p4)
    n1 = p1.v.size
    if any(p.v.size != n1 for p in pts):
        raise MixedAmbient("points live in different projective spaces")
    if carrier is None:
        carrier = join(*pts, tol=tol)
        if carrier.dim == 0:
            raise DegenerateQuadruple("all four points coincide")
        if carrier.dim != 1:
            raise NotCollinear(f"points span dimension {carrier.dim}, not a line")
    else:
        if carrier.dim != 1:
            raise NotCollinear("carrier is not a line")
        for p in pts:
            if not carrier.contains_point(p, tol):
                raise NotCollinear("point off the carrier line")
    b = carrier.basis
    c = [b.T @ p.v for p in pts]
    scale = [float(np.linalg.norm(ci)) for ci in c]

    def det2(i: int, j: int) -> float:
        return float(c[i][0] * c[j][1] - c[i][1] * c[j][0])

    d12, d34 = det2(0, 1), det2(2, 3)
    d23, d41 = det2(1, 2), det2(3, 0)
    small = [
        abs(d) <= tol.residual_abs * scale[i] * scale[j]
        for d, (i, j) in zip(
            (d12, d34, d23, d41), ((0, 1), (2, 3), (1, 2), (3, 0))
        )
    ]
    if (small[2] and (small[0] or small[1])) or (small[3] and (small[0] or small[1])):
        raise DegenerateQuadruple("repeated points make the cross-ratio 0/0")
    if small[2] or small[3]:
        return math.inf
    return (d12 * d34) / (d23 * d41)


class CentralProjection:
    """Central projection of RP^n onto a target subspace from a supplementary center.

    The image of X is (X v C) ^ A. Points of the center have no image and
    raise InCenter.
    """

    __slots__ = ("center", "target", "_frame")

    def __init__(self, center: ProjSubspace, target: ProjSubspace, tol: Tolerance = DEFAULT_TOL):
        if center.ambient_dim != target.ambient_dim:
            raise MixedAmbient("center and target ambient dimensions differ")
        n = center.ambient_dim
        if center.dim + target.dim != n - 1:
            raise NotSupplementary(
                f"dims {center.dim} + {target.dim} != ambient {n} - 1"
            )
        frame = np.column_stack([target.basis, center.basis])
        if frame.shape[0] != frame.shape[1]:
            raise NotSupplementary("center and target do not frame the ambient space")
        sv = np.linalg.svd(frame, compute_uv=False)
        if sv[-1] <= tol.rank_rel * sv[0]:
            raise NotSupplementary("center and target overlap")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "_frame", frame)

    def __call__(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> HPoint:
        if p.v.size != self._frame.shape[0]:
            raise MixedAmbient("point ambient dimension differs from projection")
        coeff = np.linalg.solve(self._frame, p.v)
        k = self.target.basis.shape[1]
        image = self.target.basis @ coeff[:k]
        if np.linalg.norm(image) <= tol.residual_abs * np.linalg.norm(p.v):
            raise InCenter("point lies in the projection center")
        return HPoint(image)


class ProjMap:
    """Projective map RP^n -> RP^m given by a full-rank matrix of shape (m+1, n+1).

    Rank must equal min(m+1, n+1); square maps are collineations and can push
    subspaces forward, non-square maps act on points only.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray, tol: Tolerance = DEFAULT_TOL):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or min(m.shape) < 2:
            raise ValueError("projective map needs a 2d matrix, both sides >= 2")
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] <= tol.rank_rel * sv[0]:
            raise ValueError("projective map matrix is rank deficient")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, p: HPoint) -> HPoint:
        if p.v.size != self.matrix.shape[1]:
            raise MixedAmbient("point ambient dimension differs from map domain")
        return HPoint(self.matrix @ p.v)

    def push_subspace(self, s: ProjSubspace, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("subspace pushforward needs a square (invertible) map")
        if s.basis.shape[0] != self.matrix.shape[1]:
            raise MixedAmbient("subspace ambient dimension differs from map domain")
        return ProjSubspace(orthonormal_basis(self.matrix @ s.basis, tol.rank_rel))


def random_projective_map(
    ambient_dim: int, rng: np.random.Generator, cond_max: float = 1e6
) -> ProjMap:
    """Random collineation of RP^n with bounded condition number, for invariance tests."""
    for _ in range(64):
        m = rng.standard_normal((ambient_dim + 1, ambient_dim + 1))
        if np.linalg.cond(m) < cond_max:
            return ProjMap(m)
    raise RuntimeError("could not draw a well-conditioned projective map")
