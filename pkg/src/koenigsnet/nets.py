"""Rectangular Q-nets and their Laplace theory.

A QNet stores a finite window of Z^2 with an explicit origin, so nets
obtained by transforms or windowing keep their absolute indices. Laplace
transforms, diagonal intersection nets, parameter spaces, the two families
of Laplace invariants and the extensive lift all operate on this type.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateFace,
    DegenerateNet,
    IndexOutOfRange,
    LiftFailed,
    MixedAmbient,
    StencilOutOfRange,
)
from .projective import (
    DEFAULT_TOL,
    HPoint,
    ProjMap,
    ProjSubspace,
    Tolerance,
    chordal,
    join,
    meet,
    cross_ratio,
)


@dataclass(frozen=True)
class NetReport:
    is_qnet: bool
    is_nondegenerate: bool
    worst_residual: float


@dataclass(frozen=True)
class LaplaceReport:
    """Outcome of an iterated Laplace transform.

    exists is False when non-degeneracy broke before the requested order;
    order_reached counts completed steps. The degeneracy flags follow the
    transform direction: forward transforms collapse along the first index,
    backward transforms along the second.
    """

    exists: bool
    order_reached: int
    degenerate: bool
    nowhere_degenerate: bool


class QNet:
    """Map from a rectangular window of Z^2 into RP^n.

    points[ii][jj] is the vertex at absolute index (origin[0]+ii, origin[1]+jj);
    the first index is the row of the storage and the i-direction of the net.
    """

    __slots__ = ("points", "origin")

    def __init__(self, points: Sequence[Sequence[HPoint]], origin: tuple[int, int] = (0, 0)):
        rows = [list(r) for r in points]
        if not rows or not rows[0]:
            raise ValueError("net needs at least one point")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("net rows must have equal length")
        n1 = rows[0][0].v.size
        for r in rows:
            for p in r:
                if not isinstance(p, HPoint):
                    raise TypeError("net entries must be HPoint")
                if p.v.size != n1:
                    raise MixedAmbient("net points live in different projective spaces")
        object.__setattr__(self, "points", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "origin", (int(origin[0]), int(origin[1])))

    @property
    def rows(self) -> int:
        return len(self.points)

    @property
    def cols(self) -> int:
        return len(self.points[0])

    @property
    def ambient_dim(self) -> int:
        return self.points[0][0].v.size - 1

    @property
    def i_range(self) -> tuple[int, int]:
        return (self.origin[0], self.origin[0] + self.rows - 1)

    @property
    def j_range(self) -> tuple[int, int]:
        return (self.origin[1], self.origin[1] + self.cols - 1)

    def at(self, i: int, j: int) -> HPoint:
        ii, jj = i - self.origin[0], j - self.origin[1]
        if not (0 <= ii < self.rows and 0 <= jj < self.cols):
            raise IndexOutOfRange(f"index ({i},{j}) outside window {self.i_range}x{self.j_range}")
        return self.points[ii][jj]

    def window(self, i_lo: int, i_hi: int, j_lo: int, j_hi: int) -> "QNet":
        """Subnet over the inclusive absolute index window."""
        if i_lo > i_hi or j_lo > j_hi:
            raise ValueError("empty window")
        pts = [
            [self.at(i, j) for j in range(j_lo, j_hi + 1)]
            for i in range(i_lo, i_hi + 1)
        ]
        return QNet(pts, origin=(i_lo, j_lo))

    def iter_points(self) -> Iterable[HPoint]:
        for row in self.points:
            yield from row

    def map_points(self, fn: Callable[[HPoint], HPoint], origin=None) -> "QNet":
        return QNet(
            [[fn(p) for p in row] for row in self.points],
            origin=self.origin if origin is None else origin,
        )

    def join_all(self, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
        return ProjSubspace.from_points(self.iter_points(), tol)

    def __repr__(self) -> str:
        return (
            f"QNet(rows={self.rows}, cols={self.cols}, origin={self.origin}, "
            f"ambient={self.ambient_dim})"
        )


def transpose_net(net: QNet) -> QNet:
    """Swap the two lattice directions; origin components swap along."""
    pts = [
        [net.points[i][j] for i in range(net.rows)]
        for j in range(net.cols)
    ]
    return QNet(pts, origin=(net.origin[1], net.origin[0]))


def reverse_cols(net: QNet) -> QNet:
    """Reverse the j-order of the columns, keeping the origin label."""
    pts = [list(reversed(row)) for row in net.points]
    return QNet(pts, origin=net.origin)


def face_vertices(net: QNet, i: int, j: int) -> tuple[HPoint, HPoint, HPoint, HPoint]:
    return (net.at(i, j), net.at(i + 1, j), net.at(i + 1, j + 1), net.at(i, j + 1))


def face_plane(net: QNet, i: int, j: int, tol: Tolerance = DEFAULT_TOL) -> ProjSubspace:
    plane = join(*face_vertices(net, i, j), tol=tol)
    if plane.dim != 2:
        raise DegenerateFace(f"face ({i},{j}) joins dimension {plane.dim}")
    return plane


def check_qnet(net: QNet, tol: Tolerance = DEFAULT_TOL) -> NetReport:
    """Planarity and non-degeneracy report.

    worst_residual is the largest ratio sigma_4/sigma_1 over all faces; a face
    is planar when that ratio stays below the rank cutoff. Non-degeneracy
    additionally needs every three of the four face points to span a plane,
    and distinct endpoints along bare edges of one-row or one-column nets.
    """
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    is_qnet = True
    nondeg = True
    worst = 0.0
    for i in range(i0, i1):
        for j in range(j0, j1):
            quad = [p.v for p in face_vertices(net, i, j)]
            sv = np.linalg.svd(np.column_stack(quad), compute_uv=False)
            # In RP^2 a face never exceeds rank 3; planarity is automatic.
            residual = float(sv[3] / sv[0]) if sv.size >= 4 and sv[0] > 0 else 0.0
            worst = max(worst, residual)
            if residual > tol.rank_rel:
                is_qnet = False
            for skip in range(4):
                triple = [q for k, q in enumerate(quad) if k != skip]
                tsv = np.linalg.svd(np.column_stack(triple), compute_uv=False)
                if tsv[2] <= tol.rank_rel * tsv[0]:
                    nondeg = False
    # Nets without faces still must have distinct edge endpoints.
    if i1 == i0 or j1 == j0:
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                for di, dj in ((1, 0), (0, 1)):
                    if i + di <= i1 and j + dj <= j1:
                        if chordal(net.at(i, j), net.at(i + di, j + dj)) <= tol.residual_abs:
                            nondeg = False
    return NetReport(is_qnet=is_qnet, is_nondegenerate=nondeg, worst_residual=worst)


_DIRECTION_ALIASES = {
    "v": "v",
    "col": "v",
    "h": "h",
    "row": "h",
}


def parameter_space(
    net: QNet, direction: str, index: int, tol: Tolerance = DEFAULT_TOL
) -> ProjSubspace:
    """Join of one coordinate polyline of the net.

    direction 'v' (alias 'col') fixes the first index i and joins over j;
    direction 'h' (alias 'row') fixes the second index j and joins over i.
    """
    d = _DIRECTION_ALIASES.get(direction)
    if d is None:
        raise ValueError(f"unknown direction {direction!r}")
    if d == "v":
        if not net.i_range[0] <= index <= net.i_range[1]:
            raise IndexOutOfRange(f"column index {index} outside {net.i_range}")
        pts = [net.at(index, j) for j in range(net.j_range[0], net.j_range[1] + 1)]
    else:
        if not net.j_range[0] <= index <= net.j_range[1]:
            raise IndexOutOfRange(f"row index {index} outside {net.j_range}")
        pts = [net.at(i, index) for i in range(net.i_range[0], net.i_range[1] + 1)]
    return ProjSubspace.from_points(pts, tol)


def is_extensive(net: QNet, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Non-degenerate and joining the maximal a+b dimensions."""
    report = check_qnet(net, tol)
    if not (report.is_qnet and report.is_nondegenerate):
        return False
    a = net.rows - 1
    b = net.cols - 1
    return net.join_all(tol).dim == a + b


def is_patch_extensive(net: QNet, c: int, d: int, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Every c x d window (inclusive side lengths c+1, d+1 points) is extensive."""
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if c > i1 - i0 or d > j1 - j0:
        return False
    for i in range(i0, i1 - c + 1):
        for j in range(j0, j1 - d + 1):
            if not is_extensive(net.window(i, i + c, j, j + d), tol):
                return False
    return True


def _edge_line(net: QNet, p: HPoint, q: HPoint, tol: Tolerance) -> ProjSubspace:
    line = join(p, q, tol=tol)
    if line.dim != 1:
        raise DegenerateNet("coinciding edge endpoints")
    return line


def _forward_point(net: QNet, i: int, j: int, tol: Tolerance) -> HPoint:
    l1 = _edge_line(net, net.at(i, j), net.at(i, j + 1), tol)
    l2 = _edge_line(net, net.at(i + 1, j), net.at(i + 1, j + 1), tol)
    pt = meet(l1, l2, tol=tol)
    if pt.dim != 0:
        raise DegenerateNet(f"forward Laplace point undefined at ({i},{j})")
    return pt.point()


def _backward_point(net: QNet, i: int, j: int, tol: Tolerance) -> HPoint:
    l1 = _edge_line(net, net.at(i, j), net.at(i + 1, j), tol)
    l2 = _edge_line(net, net.at(i, j + 1), net.at(i + 1, j + 1), tol)
    pt = meet(l1, l2, tol=tol)
    if pt.dim != 0:
        raise DegenerateNet(f"backward Laplace point undefined at ({i},{j})")
    return pt.point()


def laplace_transform(net: QNet, sign: int, tol: Tolerance = DEFAULT_TOL) -> QNet:
    """One Laplace transform step; the domain shrinks by one in each direction.

    Forward (+1) meets opposite j-edges, backward (-1) opposite i-edges.
    The input must be a non-degenerate Q-net.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if net.rows < 2 or net.cols < 2:
        raise DegenerateNet("need at least one face to transform")
    report = check_qnet(net, tol)
    if not (report.is_qnet and report.is_nondegenerate):
        raise DegenerateNet("Laplace transform needs a non-degenerate Q-net")
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    point_of = _forward_point if sign > 0 else _backward_point
    pts = [
        [point_of(net, i, j, tol) for j in range(j0, j1)]
        for i in range(i0, i1)
    ]
    return QNet(pts, origin=net.origin)


def is_laplace_degenerate(net: QNet, sign: int, coincide_tol: float = 1e-7) -> bool:
    """Forward transforms are degenerate when independent of i, backward of j."""
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if sign > 0:
        for j in range(j0, j1 + 1):
            for i in range(i0, i1):
                if chordal(net.at(i, j), net.at(i + 1, j)) > coincide_tol:
                    return False
    else:
        for i in range(i0, i1 + 1):
            for j in range(j0, j1):
                if chordal(net.at(i, j), net.at(i, j + 1)) > coincide_tol:
                    return False
    return True


def nowhere_laplace_degenerate(net: QNet, sign: int, coincide_tol: float = 1e-7) -> bool:
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if sign > 0:
        pairs = [
            (net.at(i, j), net.at(i + 1, j))
            for j in range(j0, j1 + 1)
            for i in range(i0, i1)
        ]
    else:
        pairs = [
            (net.at(i, j), net.at(i, j + 1))
            for i in range(i0, i1 + 1)
            for j in range(j0, j1)
        ]
    return all(chordal(p, q) > coincide_tol for p, q in pairs)


def iterated_laplace(
    net: QNet,
    m: int,
    tol: Tolerance = DEFAULT_TOL,
    coincide_tol: float = 1e-7,
) -> tuple[QNet, LaplaceReport]:
    """P_m for signed order m, with a degeneracy report for the final net."""
    if m == 0:
        raise ValueError("order must be nonzero")
    sign = 1 if m > 0 else -1
    current = net
    reached = 0
    for _ in range(abs(m)):
        try:
            current = laplace_transform(current, sign, tol)
        except DegenerateNet:
            return current, LaplaceReport(
                exists=False,
                order_reached=reached,
                degenerate=False,
                nowhere_degenerate=False,
            )
        reached += 1
    deg = is_laplace_degenerate(current, sign, coincide_tol)
    nowhere = nowhere_laplace_degenerate(current, sign, coincide_tol)
    return current, LaplaceReport(
        exists=True, order_reached=reached, degenerate=deg, nowhere_degenerate=nowhere
    )


def diagonal_net(net: QNet, tol: Tolerance = DEFAULT_TOL) -> QNet:
    """Per-face intersection of the two diagonals."""
    if net.rows < 2 or net.cols < 2:
        raise DegenerateNet("need at least one face")
    report = check_qnet(net, tol)
    if not (report.is_qnet and report.is_nondegenerate):
        raise DegenerateNet("diagonal net needs a non-degenerate Q-net")
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    pts = []
    for i in range(i0, i1):
        row = []
        for j in range(j0, j1):
            d1 = join(net.at(i, j), net.at(i + 1, j + 1), tol=tol)
            d2 = join(net.at(i + 1, j), net.at(i, j + 1), tol=tol)
            x = meet(d1, d2, tol=tol)
            if x.dim != 0:
                raise DegenerateNet(f"diagonals of face ({i},{j}) do not meet in a point")
            row.append(x.point())
        pts.append(row)
    return QNet(pts, origin=net.origin)


def laplace_h(net: QNet, i: int, j: int, tol: Tolerance = DEFAULT_TOL) -> float:
    """Laplace invariant on the vertical edge (i,j)-(i,j+1).

    H(i,j) = cro(P(i,j), P_1(i,j), P(i,j+1), P_1(i-1,j)); needs the faces
    (i-1,j) and (i,j) inside the window.
    """
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if not (i0 + 1 <= i <= i1 - 1 and j0 <= j <= j1 - 1):
        raise StencilOutOfRange(f"H({i},{j}) needs faces ({i - 1},{j}) and ({i},{j})")
    fw_here = _forward_point(net, i, j, tol)
    fw_left = _forward_point(net, i - 1, j, tol)
    carrier = join(net.at(i, j), net.at(i, j + 1), tol=tol)
    return cross_ratio(net.at(i, j), fw_here, net.at(i, j + 1), fw_left, carrier=carrier, tol=tol)


def laplace_k(net: QNet, i: int, j: int, tol: Tolerance = DEFAULT_TOL) -> float:
    """Laplace invariant on the horizontal edge (i,j)-(i+1,j).

    K(i,j) = cro(P(i,j), P_-1(i,j), P(i+1,j), P_-1(i,j-1)); needs the faces
    (i,j-1) and (i,j) inside the window.
    """
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if not (i0 <= i <= i1 - 1 and j0 + 1 <= j <= j1 - 1):
        raise StencilOutOfRange(f"K({i},{j}) needs faces ({i},{j - 1}) and ({i},{j})")
    bw_here = _backward_point(net, i, j, tol)
    bw_down = _backward_point(net, i, j - 1, tol)
    carrier = join(net.at(i, j), net.at(i + 1, j), tol=tol)
    return cross_ratio(net.at(i, j), bw_here, net.at(i + 1, j), bw_down, carrier=carrier, tol=tol)


def laplace_invariants(
    net: QNet, tol: Tolerance = DEFAULT_TOL
) -> tuple[dict[tuple[int, int], float], dict[tuple[int, int], float]]:
    """All defined H (vertical-edge) and K (horizontal-edge) invariants."""
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    h = {
        (i, j): laplace_h(net, i, j, tol)
        for i in range(i0 + 1, i1)
        for j in range(j0, j1)
    }
    k = {
        (i, j): laplace_k(net, i, j, tol)
        for i in range(i0, i1)
        for j in range(j0 + 1, j1)
    }
    return h, k


def reembed_in_join(net: QNet, tol: Tolerance = DEFAULT_TOL) -> tuple[QNet, ProjSubspace]:
    """Express the net in intrinsic coordinates of its own join.

    Returns the reembedded net together with the join subspace whose basis
    maps intrinsic coordinates back to the original ambient space.
    """
    j = net.join_all(tol)
    b = j.basis
    reembedded = net.map_points(lambda p: HPoint(b.T @ p.v))
    return reembedded, j


def _lift_once(net: QNet, rng: np.random.Generator, tol: Tolerance, max_tries: int) -> QNet:
    n1 = net.ambient_dim + 1
    i0, j0 = net.origin
    for _ in range(max_tries):
        lifted: dict[tuple[int, int], HPoint] = {}
        for j in range(j0, net.j_range[1] + 1):
            lifted[(i0, j)] = HPoint(np.append(net.at(i0, j).v, rng.standard_normal()))
        for i in range(i0 + 1, net.i_range[1] + 1):
            lifted[(i, j0)] = HPoint(np.append(net.at(i, j0).v, rng.standard_normal()))
        ok = True
        for i in range(i0 + 1, net.i_range[1] + 1):
            for j in range(j0 + 1, net.j_range[1] + 1):
                plane = join(
                    lifted[(i - 1, j - 1)], lifted[(i - 1, j)], lifted[(i, j - 1)], tol=tol
                )
                fiber = ProjSubspace.from_spanning(
                    np.column_stack(
                        [np.append(net.at(i, j).v, 0.0), np.eye(n1 + 1)[:, n1]]
                    )
                )
                x = meet(plane, fiber, tol=tol)
                if x.dim != 0:
                    ok = False
                    break
                lifted[(i, j)] = x.point()
            if not ok:
                break
        if not ok:
            continue
        candidate = QNet(
            [
                [lifted[(i, j)] for j in range(j0, net.j_range[1] + 1)]
                for i in range(i0, net.i_range[1] + 1)
            ],
            origin=net.origin,
        )
        report = check_qnet(candidate, tol)
        if (
            report.is_qnet
            and report.is_nondegenerate
            and candidate.join_all(tol).dim == net.ambient_dim + 1
        ):
            return candidate
    raise LiftFailed("resampling budget exhausted while lifting one dimension")


def lift_extensive(
    net: QNet,
    rng: np.random.Generator | None = None,
    tol: Tolerance = DEFAULT_TOL,
    max_tries: int = 32,
) -> tuple[QNet, ProjMap]:
    """Extensive lift of a non-degenerate Q-net, with the projection back.

    The lift lives in RP^(a+b) and satisfies pi(lift(i,j)) = P(i,j). The net
    must span its ambient space; if it does not, reembed_in_join first. Each
    lifting step appends one coordinate: boundary row and column get random
    fiber offsets, interior points are filled as plane(three lifted
    neighbors) ^ fiber, which keeps every face planar by construction.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    report = check_qnet(net, tol)
    if not (report.is_qnet and report.is_nondegenerate):
        raise DegenerateNet("lift needs a non-degenerate Q-net")
    a = net.rows - 1
    b = net.cols - 1
    span = net.join_all(tol).dim
    if span < net.ambient_dim:
        raise LiftFailed(
            "net does not span its ambient space; reembed_in_join before lifting"
        )
    if span == a + b:
        return net, ProjMap(np.eye(net.ambient_dim + 1))
    current = net
    for _ in range(a + b - span):
        current = _lift_once(current, rng, tol, max_tries)
    proj = np.zeros((net.ambient_dim + 1, a + b + 1))
    proj[:, : net.ambient_dim + 1] = np.eye(net.ambient_dim + 1)
    return current, ProjMap(proj)
