"""Koenigs d-grids: dimension certificates, genericity, the distinguished
touching instance, and patch extension along an inscribed quadric.

A d-grid is a Q-net all of whose row and column spans have projective
dimension d. For generic Koenigs d-grids the diagonal intersection net
collapses: its spans are d-dimensional instead of filling out the ambient
space, and meeting them with the edges singles out one touching instance
without any propagation. That instance determines the unique inscribed
quadric tangent to every row and column span, and the quadric in turn
drives the one-line extension of the patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conics import TouchingInstance, face_family, is_koenigs, window_instance
from .errors import (
    HypothesisFailed,
    MeetEmpty,
    MixedAmbient,
    NotGeneric,
    NotInParameterSpace,
    TangentConstructionFailed,
    VerifyFailed,
    WindowTooSmall,
)
from .inscribed import build_inscribed_quadric, verify_inscribed
from .nets import (
    QNet,
    diagonal_net,
    is_patch_extensive,
    iterated_laplace,
    parameter_space,
    reverse_cols,
    transpose_net,
)
from .projective import (
    DEFAULT_TOL,
    HPoint,
    ProjSubspace,
    Tolerance,
    chordal,
    join,
)
from .quadrics import Quadric


@dataclass(frozen=True)
class DGrid:
    """A Q-net whose row and column spans are certified d-dimensional."""

    net: QNet
    d: int


@dataclass(frozen=True)
class DimensionFailure:
    direction: str
    index: int
    dim: int


@dataclass(frozen=True)
class GridDimensionReport:
    """Names every parameter space whose span misses the requested dimension."""

    expected: int
    failures: tuple[DimensionFailure, ...]


def check_dgrid(
    net: QNet, d: int, tol: Tolerance = DEFAULT_TOL
) -> DGrid | GridDimensionReport:
    """Certify the span dimension of every row and column of the net."""
    if d < 1:
        raise ValueError("grid order must be positive")
    failures = []
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    for i in range(i0, i1 + 1):
        dim = parameter_space(net, "v", i, tol).dim
        if dim != d:
            failures.append(DimensionFailure("v", i, dim))
    for j in range(j0, j1 + 1):
        dim = parameter_space(net, "h", j, tol).dim
        if dim != d:
            failures.append(DimensionFailure("h", j, dim))
    if failures:
        return GridDimensionReport(expected=d, failures=tuple(failures))
    return DGrid(net=net, d=d)


@dataclass(frozen=True)
class GridGenericityReport:
    sigma_dd_extensive: bool
    p_d_exists: bool
    p_d_nowhere_degenerate: bool
    p_minus_d_exists: bool
    p_minus_d_nowhere_degenerate: bool

    @property
    def is_generic(self) -> bool:
        return (
            self.sigma_dd_extensive
            and self.p_d_exists
            and self.p_d_nowhere_degenerate
            and self.p_minus_d_exists
            and self.p_minus_d_nowhere_degenerate
        )


def is_generic_grid(
    grid: DGrid,
    tol: Tolerance = DEFAULT_TOL,
    coincide_tol: float = 1e-7,
) -> GridGenericityReport:
    """Extensivity of all d-by-d windows plus existence and non-degeneracy
    of the order-d Laplace transforms in both directions.

    Degeneracy flags are window-limited: a transform left with a single row
    or column in the tested direction passes vacuously.
    """
    net, d = grid.net, grid.d
    if net.rows < d + 1 or net.cols < d + 1:
        raise WindowTooSmall(
            f"order-{d} transforms need at least {d + 1} points per direction"
        )
    extensive = is_patch_extensive(net, d, d, tol)
    _, fwd = iterated_laplace(net, d, tol, coincide_tol)
    _, bwd = iterated_laplace(net, -d, tol, coincide_tol)
    return GridGenericityReport(
        sigma_dd_extensive=extensive,
        p_d_exists=fwd.exists,
        p_d_nowhere_degenerate=fwd.exists and fwd.nowhere_degenerate,
        p_minus_d_exists=bwd.exists,
        p_minus_d_nowhere_degenerate=bwd.exists and bwd.nowhere_degenerate,
    )


def _pierce(
    space: ProjSubspace, target: ProjSubspace
) -> tuple[HPoint, float]:
    """Best point of `space` lying in `target`, with its distance residual.

    The minimizer over the unit sphere of the spanning space is the
    eigenvector of the smallest eigenvalue of the complement Gram matrix.
    """
    if space.is_empty():
        raise MeetEmpty("cannot pierce with an empty space")
    b = space.basis
    if target.is_empty():
        r = b
    else:
        t = target.basis
        r = b - t @ (t.T @ b)
    gram = r.T @ r
    lam, vec = np.linalg.eigh(gram)
    point = HPoint(b @ vec[:, 0])
    return point, float(np.sqrt(max(lam[0], 0.0)))


def special_touching_conics(
    grid: DGrid,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> TouchingInstance:
    """The touching instance cut out by the diagonal-net spans.

    Each contact is the meet of an edge with the span of the diagonal
    points sharing the edge's fixed index; the last row and column fall
    back to the span one step inwards, which meets the same edges. The
    recovered per-face conics are cross-checked against all four contacts.
    """
    net, d = grid.net, grid.d
    if net.rows < d + 2 or net.cols < d + 2:
        raise WindowTooSmall(
            f"diagonal spans reach dimension {d} only with at least "
            f"{d + 2} points per direction"
        )
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    diag = diagonal_net(net, tol)
    d_h = {j: parameter_space(diag, "h", j, tol) for j in range(j0, j1)}
    d_v = {i: parameter_space(diag, "v", i, tol) for i in range(i0, i1)}
    for j, space in d_h.items():
        if space.dim != d:
            raise NotGeneric(
                f"diagonal span at column {j} has dimension {space.dim}, "
                f"expected {d}"
            )
    for i, space in d_v.items():
        if space.dim != d:
            raise NotGeneric(
                f"diagonal span at row {i} has dimension {space.dim}, "
                f"expected {d}"
            )
    meet_tol = 1e3 * tol.residual_abs

    def edge(p: HPoint, q: HPoint) -> ProjSubspace:
        line = join(p, q, tol=tol)
        if line.dim != 1:
            raise NotGeneric("coincident net points along an edge")
        return line

    s_pts = []
    for i in range(i0, i1):
        row = []
        for j in range(j0, j1 + 1):
            line = edge(net.at(i, j), net.at(i + 1, j))
            point, res = _pierce(line, d_h[min(j, j1 - 1)])
            if res > meet_tol:
                raise MeetEmpty(
                    f"edge ({i},{j})-({i + 1},{j}) misses the diagonal span "
                    f"by {res:.3e}"
                )
            row.append(point)
        s_pts.append(row)
    t_pts = []
    for i in range(i0, i1 + 1):
        row = []
        for j in range(j0, j1):
            line = edge(net.at(i, j), net.at(i, j + 1))
            point, res = _pierce(line, d_v[min(i, i1 - 1)])
            if res > meet_tol:
                raise MeetEmpty(
                    f"edge ({i},{j})-({i},{j + 1}) misses the diagonal span "
                    f"by {res:.3e}"
                )
            row.append(point)
        t_pts.append(row)

    def s_at(i: int, j: int) -> HPoint:
        return s_pts[i - i0][j - j0]

    def t_at(i: int, j: int) -> HPoint:
        return t_pts[i - i0][j - j0]

    t_grid: dict[tuple[int, int], float] = {}
    conics = {}
    worst = 0.0
    for i in range(i0, i1):
        for j in range(j0, j1):
            fam = face_family(net, i, j, tol)
            t = fam.t_from_contact("bottom", s_at(i, j), tol)
            t_grid[(i, j)] = t
            conics[(i, j)] = fam.primal(t)
            computed = fam.contacts(t)
            for label, point in (
                ("bottom", s_at(i, j)),
                ("top", s_at(i, j + 1)),
                ("left", t_at(i, j)),
                ("right", t_at(i + 1, j)),
            ):
                worst = max(worst, chordal(computed[label], point))
    if worst > closure_tol:
        raise VerifyFailed(
            f"contact meets disagree with the per-face conics by {worst:.3e}"
        )
    return TouchingInstance(
        net=net,
        t_grid=t_grid,
        conics=conics,
        s_net=QNet(s_pts, origin=net.origin),
        t_net=QNet(t_pts, origin=net.origin),
        max_residual=worst,
        seed=((i0, j0), float(t_grid[(i0, j0)])),
    )


def special_inscribed_quadric(
    grid: DGrid,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> Quadric:
    """The quadric inscribed for the distinguished touching instance.

    Built on the bottom-left d-by-d face window, where the ambient
    dimension matches the extensive count, then verified on the whole
    patch: every conic is a planar slice, every contact-space join is
    isotropic, and every row and column span is tangent along it.
    """
    net, d = grid.net, grid.d
    if net.ambient_dim != 2 * d:
        raise MixedAmbient(
            f"grid of order {d} must live in dimension {2 * d}, "
            f"got {net.ambient_dim}"
        )
    instance = special_touching_conics(grid, closure_tol, tol)
    i0, _ = net.i_range
    j0, _ = net.j_range
    window = window_instance(instance, i0, i0 + d, j0, j0 + d)
    result = build_inscribed_quadric(window.net, window, tol)
    quadric = result.quadric
    verification = verify_inscribed(net, instance, quadric, tol)
    residual = max(
        verification.conic_residual,
        verification.t_isotropy,
        verification.s_isotropy,
    )
    if not verification.all_tangent or residual > 1e3 * closure_tol:
        raise VerifyFailed(
            "inscribed quadric fails on the full patch: "
            f"worst residual {residual:.3e}, tangency "
            f"{verification.tangency_v + verification.tangency_h}"
        )
    if quadric.rank(tol) != 2 * d + 1:
        raise VerifyFailed(
            f"special quadric is degenerate with rank {quadric.rank(tol)}"
        )
    return quadric


def is_special_grid(
    grid: DGrid,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Koenigs d-grid whose diagonal-net spans collapse one dimension.

    Checkable spans must have dimension d-1 instead of the generic d;
    directions without enough points to reach d-1 are skipped. A window
    where no span could exceed d-1 certifies nothing and is rejected.
    """
    net, d = grid.net, grid.d
    # A join of k points never exceeds dimension k-1.
    v_informative = net.cols - 1 >= d + 1
    h_informative = net.rows - 1 >= d + 1
    if not (v_informative or h_informative):
        raise WindowTooSmall(
            "diagonal spans cannot exceed the special dimension on this window"
        )
    if not is_patch_extensive(net, d, d, tol):
        return False
    if not is_koenigs(net, closure_tol=closure_tol, tol=tol).propagation_closure:
        return False
    diag = diagonal_net(net, tol)
    i0, i1 = diag.i_range
    j0, j1 = diag.j_range
    if diag.cols >= d:
        for i in range(i0, i1 + 1):
            if parameter_space(diag, "v", i, tol).dim != d - 1:
                return False
    if diag.rows >= d:
        for j in range(j0, j1 + 1):
            if parameter_space(diag, "h", j, tol).dim != d - 1:
                return False
    return True


def incidence_check(
    grid: DGrid,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """One conic for free: when both one-line-short restrictions close,
    the full patch closes as well.

    The hypotheses are the grid's genericity and the Koenigs property of
    the restrictions dropping the last column and the last row; the return
    value is the propagation closure of the full patch.
    """
    net, d = grid.net, grid.d
    if net.rows < d + 3 or net.cols < d + 3:
        raise WindowTooSmall(
            f"the incidence statement needs at least {d + 3} points per direction"
        )
    if not is_generic_grid(grid, tol).is_generic:
        raise HypothesisFailed("grid is not generic")
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    restrictions = (
        ("column", net.window(i0, i1, j0, j1 - 1)),
        ("row", net.window(i0, i1 - 1, j0, j1)),
    )
    for label, restriction in restrictions:
        report = is_koenigs(restriction, closure_tol=closure_tol, tol=tol)
        if not report.propagation_closure:
            raise HypothesisFailed(
                f"restriction dropping the last {label} is not Koenigs "
                f"(closure residual {report.closure_residual:.3e})"
            )
    return is_koenigs(net, closure_tol=closure_tol, tol=tol).propagation_closure


def tangency_space(
    quadric: Quadric, space: ProjSubspace, tol: Tolerance = DEFAULT_TOL
) -> ProjSubspace:
    """Contact locus of a subspace tangent to the quadric.

    Tangency makes the restricted form rank one; the contact locus is its
    kernel pushed back to the ambient space.
    """
    sub = quadric.restrict(space)
    lam, vec = np.linalg.eigh(sub.form)
    order = np.argsort(np.abs(lam))
    lead = float(np.abs(lam[order[-1]]))
    if lead == 0.0:
        raise TangentConstructionFailed("subspace lies entirely on the quadric")
    second = float(np.abs(lam[order[-2]])) if len(lam) > 1 else 0.0
    if second > 1e3 * tol.rank_rel * lead:
        raise TangentConstructionFailed(
            f"subspace is not tangent to the quadric (rank gap {second / lead:.3e})"
        )
    kernel = vec[:, order[:-1]]
    return ProjSubspace(np.linalg.qr(space.basis @ kernel)[0])


def _second_tangency(
    form: np.ndarray, x: np.ndarray, known: np.ndarray, tol: Tolerance
) -> np.ndarray:
    """Second contact point of the tangents from x to a plane conic.

    Intersects the polar line of x with the conic; one intersection must
    reproduce the known contact, the other is returned.
    """
    scale = float(np.linalg.norm(form))
    if abs(float(np.linalg.det(form))) <= 1e3 * tol.rank_rel * scale**3:
        raise TangentConstructionFailed("sliced conic is degenerate")
    polar = form @ x
    basis = np.linalg.svd(polar.reshape(1, 3))[2][1:].T
    gram = basis.T @ form @ basis
    gram = 0.5 * (gram + gram.T)
    lam, rot = np.linalg.eigh(gram)
    if lam[0] * lam[1] > (1e3 * tol.rank_rel * scale) ** 2:
        raise TangentConstructionFailed(
            "no real second tangent: the point lies inside the conic"
        )
    root = np.sqrt(np.abs(lam))
    cand = [
        basis @ (rot @ np.array([root[1], root[0]])),
        basis @ (rot @ np.array([root[1], -root[0]])),
    ]

    def gap(a: np.ndarray, b: np.ndarray) -> float:
        ah = a / np.linalg.norm(a)
        bh = b / np.linalg.norm(b)
        return min(float(np.linalg.norm(ah - bh)), float(np.linalg.norm(ah + bh)))

    gaps = [gap(c, known) for c in cand]
    near, far = (0, 1) if gaps[0] <= gaps[1] else (1, 0)
    if gaps[near] > 1e-5:
        raise TangentConstructionFailed(
            f"known contact is not on the polar line (gap {gaps[near]:.3e})"
        )
    if gaps[far] <= 1e-7:
        raise TangentConstructionFailed(
            "tangency points coincide: the new point lies on the conic"
        )
    return cand[far]


def _extend_plus_j(
    net: QNet,
    d: int,
    point: HPoint,
    quadric: Quadric,
    tol: Tolerance,
) -> list[HPoint]:
    """New points above the last column, first row first."""
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    row_spaces = {
        i: parameter_space(net, "v", i, tol) for i in range(i0, i1 + 1)
    }
    first = row_spaces[i0]
    seed_residual = first.point_residual(point)
    if seed_residual > 1e3 * tol.residual_abs:
        raise NotInParameterSpace(
            f"seed point misses the first row span by {seed_residual:.3e}"
        )
    contacts = {
        i: tangency_space(quadric, row_spaces[i], tol) for i in range(i0, i1 + 1)
    }
    guard = 1e3 * tol.residual_abs
    seed_line = join(net.at(i0, j1), point, tol=tol)
    if seed_line.dim != 1:
        raise TangentConstructionFailed("seed point coincides with the corner")
    prev_contact, res = _pierce(contacts[i0], seed_line)
    if res > guard:
        raise TangentConstructionFailed(
            f"first row contact misses the seed edge by {res:.3e}"
        )
    new_points = [point]
    current = point
    for i in range(i0, i1):
        plane = join(net.at(i, j1), current, net.at(i + 1, j1), tol=tol)
        if plane.dim != 2:
            raise TangentConstructionFailed(
                f"new point over row {i} is collinear with the last column"
            )
        next_contact, res = _pierce(contacts[i + 1], plane)
        if res > guard:
            raise TangentConstructionFailed(
                f"row {i + 1} contact misses the face plane by {res:.3e}"
            )
        sliced = quadric.restrict(plane)
        # Residuals are already guarded, so project instead of coords_of
        # with its strict carrier check.
        x = plane.basis.T @ current.v
        known = plane.basis.T @ prev_contact.v
        other = _second_tangency(sliced.form, x, known, tol)
        tangent = np.cross(x, other)
        carrier = np.cross(
            plane.basis.T @ next_contact.v, plane.basis.T @ net.at(i + 1, j1).v
        )
        coords = np.cross(tangent, carrier)
        if np.linalg.norm(coords) <= tol.residual_abs:
            raise TangentConstructionFailed(
                f"tangent through row {i + 1} degenerates"
            )
        candidate = HPoint(plane.basis @ coords)
        row_residual = row_spaces[i + 1].point_residual(candidate)
        if row_residual > guard:
            raise TangentConstructionFailed(
                f"new point misses the row {i + 1} span by {row_residual:.3e}"
            )
        if chordal(candidate, net.at(i + 1, j1)) <= 1e-9:
            raise TangentConstructionFailed(
                f"new point collapses onto the corner of row {i + 1}"
            )
        new_points.append(candidate)
        current = candidate
        prev_contact = next_contact
    return new_points


_SIDES = ("+j", "-j", "+i", "-i")


def extend_grid(
    grid: DGrid,
    side: str,
    point: HPoint,
    quadric: Quadric,
    tol: Tolerance = DEFAULT_TOL,
) -> DGrid:
    """Grow the patch by one column ('+j', '-j') or one row ('+i', '-i').

    The seed point chooses the new line inside the span of the boundary
    row or column it extends; every further point follows from the
    inscribed quadric by a tangent construction inside one face plane.
    The seed must lie in the span of the first row (for column sides) or
    the first column (for row sides).
    """
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}, got {side!r}")
    net = grid.net
    if net.rows < 2 or net.cols < 2:
        raise WindowTooSmall("extension needs at least one face")
    if quadric.ambient_dim != net.ambient_dim:
        raise MixedAmbient(
            f"quadric lives in dimension {quadric.ambient_dim}, "
            f"net in {net.ambient_dim}"
        )
    work = net
    if side in ("+i", "-i"):
        work = transpose_net(work)
    if side in ("-j", "-i"):
        work = reverse_cols(work)
    new_points = _extend_plus_j(work, grid.d, point, quadric, tol)
    i0, j0 = net.origin
    if side == "+j":
        pts = [list(row) + [new_points[r]] for r, row in enumerate(net.points)]
        origin = (i0, j0)
    elif side == "-j":
        pts = [[new_points[r]] + list(row) for r, row in enumerate(net.points)]
        origin = (i0, j0 - 1)
    elif side == "+i":
        pts = [list(row) for row in net.points] + [new_points]
        origin = (i0, j0)
    else:
        pts = [new_points] + [list(row) for row in net.points]
        origin = (i0 - 1, j0)
    extended = QNet(pts, origin=origin)
    certified = check_dgrid(extended, grid.d, tol)
    if isinstance(certified, GridDimensionReport):
        raise TangentConstructionFailed(
            f"extension degenerated: {certified.failures[0]}"
        )
    return certified
