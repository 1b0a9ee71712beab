"""Quadrics in RP^n as symmetric bilinear forms.

A quadric is stored as a Frobenius-normalized symmetric matrix. Signature
counts, polars, restrictions to subspaces and the two-hyperplane gluing
construction all live here; conic-specific helpers build on top of the
SubspaceQuadric restriction type.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    FitFailed,
    MixedAmbient,
    NotFullDimensional,
    RestrictionMismatch,
    UnexpectedSolutionDim,
)
from .projective import (
    DEFAULT_TOL,
    HPoint,
    ProjSubspace,
    Tolerance,
    meet,
    null_basis,
)


class BaseLocusWarning(UserWarning):
    """Selection point lies on every member of the pencil."""


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def sym_dim(n1: int) -> int:
    return n1 * (n1 + 1) // 2


def sym_to_vec(m: np.ndarray) -> np.ndarray:
    """Pack a symmetric matrix into the (diag, strict upper) coefficient vector."""
    n1 = m.shape[0]
    iu = np.triu_indices(n1, k=1)
    return np.concatenate([np.diag(m), m[iu]])


def vec_to_sym(x: np.ndarray, n1: int) -> np.ndarray:
    m = np.zeros((n1, n1))
    np.fill_diagonal(m, x[:n1])
    iu = np.triu_indices(n1, k=1)
    m[iu] = x[n1:]
    return m + np.triu(m, k=1).T


def quadratic_row(p: np.ndarray) -> np.ndarray:
    """Row r with r . vec(M) = p^T M p for symmetric M."""
    n1 = p.size
    iu = np.triu_indices(n1, k=1)
    return np.concatenate([p * p, 2.0 * p[iu[0]] * p[iu[1]]])

def bilinear_row(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row r with r . vec(M) = a^T M b for symmetric M."""
    n1 = a.size
    iu = np.triu_indices(n1, k=1)
    return np.concatenate([a * b, a[iu[0]] * b[iu[1]] + a[iu[1]] * b[iu[0]]])


def _signature_of(m: np.ndarray, rank_rel: float) -> tuple[int, int, int]:
    w = np.linalg.eigvalsh(m)
    scale = np.abs(w).max()
    if scale <= 0.0:
        return (0, 0, m.shape[0])
    cut = rank_rel * scale
    plus = int(np.count_nonzero(w > cut))
    minus = int(np.count_nonzero(w < -cut))
    zero = m.shape[0] - plus - minus
    # A quadric and its negative coincide projectively.
    if minus > plus:
        plus, minus = minus, plus
    return (plus, minus, zero)


def _full_dimensional(m: np.ndarray, proj_dim: int, rank_rel: float) -> bool:
    p, mi, z = _signature_of(m, rank_rel)
    return (p >= 1 and mi >= 1) or z == proj_dim


class Quadric:
    """Quadric in RP^n given by a symmetric form, Frobenius-normalized."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = _symmetrize(np.asarray(matrix, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise ValueError("quadric needs a square symmetric matrix, size >= 2")
        norm = float(np.linalg.norm(m))
        if norm <= 0.0 or not np.isfinite(norm):
            raise ValueError("quadric form must be nonzero and finite")
        m = m / norm
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0] - 1

    def evaluate(self, p: HPoint) -> float:
        if p.v.size != self.matrix.shape[0]:
            raise MixedAmbient("point and quadric ambient dimensions differ")
        return float(p.v @ self.matrix @ p.v)

    def bilinear(self, p: HPoint, q: HPoint) -> float:
        return float(p.v @ self.matrix @ q.v)

    def contains_point(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> bool:
        return abs(self.evaluate(p)) <= tol.residual_abs * float(p.v @ p.v)

    def signature(self, tol: Tolerance = DEFAULT_TOL) -> tuple[int, int, int]:
        """Counts (plus, minus, zero) of eigenvalue signs, plus >= minus."""
        return _signature_of(self.matrix, tol.rank_rel)

    def rank(self, tol: Tolerance = DEFAULT_TOL) -> int:
        p, m, _ = self.signature(tol)
        return p + m

    def is_full_dimensional(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        """True when the signature mixes signs, or the quadric is a double hyperplane."""
        return _full_dimensional(self.matrix, self.ambient_dim, tol.rank_rel)

    def singular_locus(self, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
        return ProjSubspace(null_basis(self.matrix, tol.rank_rel))

    def polar(self, obj, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
        """Polar subspace of a point or subspace: all x with b^T M x = 0."""
        if isinstance(obj, HPoint):
            rows = (obj.v @ self.matrix).reshape(1, -1)
        elif isinstance(obj, ProjSubspace):
            if obj.is_empty():
                return ProjSubspace.whole(self.ambient_dim)
            rows = obj.basis.T @ self.matrix
        else:
            raise TypeError("polar expects a point or a subspace")
        if rows.shape[1] != self.matrix.shape[0]:
            raise MixedAmbient("operand and quadric ambient dimensions differ")
        return ProjSubspace(null_basis(rows, tol.rank_rel))

    def restrict(self, sub: ProjSubspace) -> "SubspaceQuadric":
        if sub.basis.shape[0] != self.matrix.shape[0]:
            raise MixedAmbient("subspace and quadric ambient dimensions differ")
        return SubspaceQuadric(sub, sub.basis.T @ self.matrix @ sub.basis)

    def is_isotropic(self, sub: ProjSubspace, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Whole subspace on the quadric: the restricted form vanishes."""
        r = self.restrict(sub)
        return float(np.linalg.norm(r.form)) <= tol.residual_abs

    def tangent_along(
        self, a: ProjSubspace, b: ProjSubspace, tol: Tolerance = DEFAULT_TOL
    ) -> bool:
        """Whether the quadric is tangent to subspace a along contact locus b.

        Requires b isotropic and a inside the polar of b. The containment is
        equivalent to the bilinear block between the two bases vanishing,
        which avoids a rank decision inside the polar.
        """
        if not self.is_isotropic(b, tol):
            return False
        block = a.basis.T @ self.matrix @ b.basis
        return float(np.linalg.norm(block)) <= tol.residual_abs

    def __repr__(self) -> str:
        return f"Quadric(ambient={self.ambient_dim}, signature={self.signature()})"


@dataclass(frozen=True)
class SubspaceQuadric:
    """Restriction of a quadric to a subspace, as an intrinsic symmetric form.

    The form is expressed in the orthonormal basis of the carrier subspace and
    is deliberately not normalized: the zero form encodes an isotropic carrier.
    """

    carrier: ProjSubspace
    form: np.ndarray

    def __post_init__(self):
        f = _symmetrize(np.asarray(self.form, dtype=float))
        if f.shape != (self.carrier.basis.shape[1],) * 2:
            raise ValueError("intrinsic form shape must match the carrier basis")
        f.setflags(write=False)
        object.__setattr__(self, "form", f)

    @property
    def dim(self) -> int:
        return self.carrier.dim

    def is_zero(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return float(np.linalg.norm(self.form)) <= tol.residual_abs

    def signature(self, tol: Tolerance = DEFAULT_TOL) -> tuple[int, int, int]:
        return _signature_of(self.form, tol.rank_rel)

    def is_full_dimensional(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        if self.is_zero(tol):
            return False
        return _full_dimensional(self.form, self.dim, tol.rank_rel)

    def coords_of(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        if not self.carrier.contains_point(p, tol):
            raise ValueError("point does not lie on the carrier subspace")
        return self.carrier.basis.T @ p.v

    def evaluate(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> float:
        c = self.coords_of(p, tol)
        return float(c @ self.form @ c)

    def contains_point(self, p: HPoint, tol: Tolerance = DEFAULT_TOL) -> bool:
        c = self.coords_of(p, tol)
        scale = float(np.linalg.norm(self.form)) * float(c @ c)
        return abs(float(c @ self.form @ c)) <= tol.residual_abs * max(scale, 1e-300)

    def point_to_ambient(self, coords: np.ndarray) -> HPoint:
        return HPoint(self.carrier.basis @ np.asarray(coords, dtype=float))

    def as_quadric(self) -> Quadric:
        """Intrinsic form as a standalone quadric of the carrier's coordinates."""
        return Quadric(self.form)


def fit_quadric(
    ambient_dim: int,
    points=(),
    isotropic=(),
    tol: Tolerance = DEFAULT_TOL,
) -> Quadric:
    """Least-squares quadric through points and isotropic subspaces.

    Builds one linear condition per point and one per basis pair of each
    isotropic subspace, then extracts the kernel of the stacked system.
    Raises FitFailed unless the kernel is one-dimensional.
    """
    n1 = ambient_dim + 1
    rows = []
    for p in points:
        if p.v.size != n1:
            raise MixedAmbient("point ambient dimension differs from fit target")
        rows.append(quadratic_row(p.v))
    for sub in isotropic:
        if sub.basis.shape[0] != n1:
            raise MixedAmbient("subspace ambient dimension differs from fit target")
        b = sub.basis
        for i in range(b.shape[1]):
            for j in range(i, b.shape[1]):
                rows.append(bilinear_row(b[:, i], b[:, j]))
    if not rows:
        raise FitFailed("no constraints given")
    kernel = null_basis(np.vstack(rows), tol.rank_rel)
    if kernel.shape[1] != 1:
        raise FitFailed(
            f"constraint kernel has dimension {kernel.shape[1]}, expected 1"
        )
    return Quadric(vec_to_sym(kernel[:, 0], n1))


def glue_pencil(
    qe: SubspaceQuadric, qf: SubspaceQuadric, tol: Tolerance = DEFAULT_TOL
) -> tuple[Quadric, Quadric]:
    """Pencil of ambient quadrics restricting to two given hyperplane quadrics.

    qe and qf live on distinct hyperplanes E and F; both must be
    full-dimensional and must agree (up to joint rescaling of qf) on E ^ F,
    where the common restriction must again be full-dimensional. The result
    spans the unique pencil of quadrics with the prescribed restrictions;
    exactly one member (the double hyperplane through E ^ F pairings aside)
    may be degenerate to E u F itself.
    """
    e, f = qe.carrier, qf.carrier
    if e.ambient_dim != f.ambient_dim:
        raise MixedAmbient("hyperplane ambient dimensions differ")
    n = e.ambient_dim
    if e.dim != n - 1 or f.dim != n - 1:
        raise ValueError("glue expects quadrics on hyperplanes")
    if not qe.is_full_dimensional(tol):
        raise NotFullDimensional("first quadric is not full-dimensional")
    if not qf.is_full_dimensional(tol):
        raise NotFullDimensional("second quadric is not full-dimensional")
    g = meet(e, f, tol=tol)
    if g.dim != n - 2:
        raise ValueError("hyperplanes coincide, nothing to glue")
    ce = e.basis.T @ g.basis
    cf = f.basis.T @ g.basis
    re = ce.T @ qe.form @ ce
    rf = cf.T @ qf.form @ cf
    denom = float(np.sum(rf * rf))
    if denom <= 0.0 or not _full_dimensional(re, n - 2, tol.rank_rel):
        raise NotFullDimensional("common restriction is not full-dimensional")
    lam = float(np.sum(re * rf)) / denom
    mismatch = float(np.linalg.norm(re - lam * rf))
    scale = max(float(np.linalg.norm(re)), float(np.linalg.norm(lam * rf)))
    if mismatch > max(tol.residual_abs * scale, tol.residual_abs):
        raise RestrictionMismatch(
            f"restrictions to the overlap differ by {mismatch:.3e}"
        )
    qf_form = lam * qf.form

    # Unknowns: symmetric ambient form M plus one scalar s tying both
    # restrictions, B_E^T M B_E = s qe and B_F^T M B_F = s qf'. The kernel is
    # the pencil (2-dimensional); s = 0 picks out the split quadric E u F.
    nsym = sym_dim(n + 1)
    rows = []
    for carrier, form in ((e, qe.form), (f, qf_form)):
        b = carrier.basis
        k1 = b.shape[1]
        for i in range(k1):
            for j in range(i, k1):
                row = np.zeros(nsym + 1)
                row[:nsym] = bilinear_row(b[:, i], b[:, j])
                row[nsym] = -form[i, j]
                rows.append(row)
    kernel = null_basis(np.vstack(rows), tol.rank_rel)
    if kernel.shape[1] != 2:
        raise UnexpectedSolutionDim(
            f"glue solution space has dimension {kernel.shape[1]}, expected 2"
        )
    q1 = Quadric(vec_to_sym(kernel[:nsym, 0], n + 1))
    q2 = Quadric(vec_to_sym(kernel[:nsym, 1], n + 1))
    return q1, q2


def pencil_member_through(
    pencil: tuple[Quadric, Quadric], p: HPoint, tol: Tolerance = DEFAULT_TOL
) -> Quadric:
    """The unique pencil member through a point, or the first generator with a
    warning when the point lies in the base locus."""
    q1, q2 = pencil
    v1, v2 = q1.evaluate(p), q2.evaluate(p)
    scale = float(p.v @ p.v)
    if abs(v1) <= tol.residual_abs * scale and abs(v2) <= tol.residual_abs * scale:
        warnings.warn(
            "point lies in the base locus; every member passes through it",
            BaseLocusWarning,
        )
        return q1
    return Quadric(v2 * q1.matrix - v1 * q2.matrix)


def quadrics_equal(a: Quadric, b: Quadric, tol: float = 1e-9) -> bool:
    """Projective equality of quadrics: normalized forms match up to sign."""
    if a.matrix.shape != b.matrix.shape:
        return False
    d = min(
        float(np.linalg.norm(a.matrix - b.matrix)),
        float(np.linalg.norm(a.matrix + b.matrix)),
    )
    return d <= tol
