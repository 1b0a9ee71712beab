"""Inscribed conics of planar quads and touching-conic instances.

Every conic inscribed in a quad belongs to the dual pencil spanned by the
two diagonal point-pair forms; the pencil parameter t is normalized so that
t = 0 and t = 1 are the excluded diagonal members, t = infinity is the
third degenerate member, and the contact point on each edge moves affinely
with t. Instances of touching conics propagate one seed contact across
shared edges; closure of that propagation is the Koenigs predicate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateFace,
    DegenerateNet,
    FitFailed,
    OffEdge,
    VertexContact,
    WindowTooSmall,
)
from .nets import (
    QNet,
    check_qnet,
    diagonal_net,
    face_plane,
    face_vertices,
    laplace_h,
    laplace_k,
    parameter_space,
)
from .projective import (
    DEFAULT_TOL,
    HPoint,
    ProjSubspace,
    Tolerance,
    chordal,
    join,
    meet,
    null_basis,
)
from .quadrics import SubspaceQuadric

EDGES = ("bottom", "right", "top", "left")

# Edge name -> (corner at t=0, corner at t=1) in face corner order
# (p00, p10, p11, p01). The t=0 corner is the one on the main diagonal.
_EDGE_CORNERS = {
    "bottom": (0, 1),
    "right": (2, 1),
    "top": (2, 3),
    "left": (0, 3),
}


def _adjugate3(m: np.ndarray) -> np.ndarray:
    c0, c1, c2 = m[:, 0], m[:, 1], m[:, 2]
    return np.vstack([np.cross(c1, c2), np.cross(c2, c0), np.cross(c0, c1)])


def _hat(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class ConicFamily:
    """Dual pencil of conics inscribed in one planar quad.

    Corners are stored as intrinsic 3-vectors in an orthonormal basis of the
    face plane, scaled so the two diagonals share a midpoint representative;
    corner order is (p00, p10, p11, p01) counterclockwise in index space.
    A is the point-pair form of the off-diagonal corners, B of the
    main-diagonal corners; members are Phi(t) = t A + (1-t) B. The corner
    scaling pins the three degenerate members at t = 0, 1 and infinity, so
    every inscribed conic has a finite parameter.
    """

    plane: ProjSubspace
    corners: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    a_form: np.ndarray
    b_form: np.ndarray
    edge_lines: dict = field(repr=False)

    def dual_member(self, t: float) -> np.ndarray:
        return t * self.a_form + (1.0 - t) * self.b_form

    def is_excluded(self, t: float, tol: Tolerance = DEFAULT_TOL) -> bool:
        """Pencil endpoints reproduce the diagonals and are not inscribed conics."""
        return min(abs(t), abs(t - 1.0)) <= tol.residual_abs

    def primal(self, t: float) -> SubspaceQuadric:
        adj = _adjugate3(self.dual_member(t))
        return SubspaceQuadric(self.plane, 0.5 * (adj + adj.T))

    def contact_coords(self, t: float, edge: str) -> np.ndarray:
        line = self.edge_lines[edge]
        return self.dual_member(t) @ line

    def contact(self, t: float, edge: str) -> HPoint:
        return HPoint(self.plane.basis @ self.contact_coords(t, edge))

    def contacts(self, t: float) -> dict[str, HPoint]:
        return {e: self.contact(t, e) for e in EDGES}

    def t_from_contact(self, edge: str, contact: HPoint, tol: Tolerance = DEFAULT_TOL) -> float:
        """Invert the affine map t -> contact point on the given edge."""
        if edge not in _EDGE_CORNERS:
            raise ValueError(f"unknown edge {edge!r}")
        if not self.plane.contains_point(contact, tol):
            raise OffEdge("contact point is not in the face plane")
        c = _hat(self.plane.basis.T @ contact.v)
        line = _hat(self.edge_lines[edge])
        if abs(float(line @ c)) > 1e2 * tol.residual_abs:
            raise OffEdge("contact point is not on the edge line")
        k0, k1 = _EDGE_CORNERS[edge]
        for k in (k0, k1):
            corner = self.corners[k]
            gap = min(
                np.linalg.norm(c - _hat(corner)), np.linalg.norm(c + _hat(corner))
            )
            if gap <= 1e2 * tol.residual_abs:
                raise VertexContact("contact at a quad vertex forces a diagonal member")
        base = self.b_form @ line
        step = (self.a_form - self.b_form) @ line
        u = np.cross(c, base)
        v = np.cross(c, step)
        vv = float(v @ v)
        if vv <= float(step @ step) * tol.residual_abs**2:
            raise VertexContact("contact at a diagonal point forces the degenerate member")
        t = -float(u @ v) / vv
        if np.linalg.norm(u + t * v) > 1e3 * tol.residual_abs * np.linalg.norm(base + t * step):
            raise OffEdge("contact point is inconsistent with the pencil")
        return t

    def member_is_degenerate(self, t: float, tol: Tolerance = DEFAULT_TOL) -> bool:
        m = self.dual_member(t)
        scale = np.linalg.norm(m)
        return abs(float(np.linalg.det(m))) <= tol.rank_rel * scale**3


def conic_family(face, tol: Tolerance = DEFAULT_TOL) -> ConicFamily:
    """Inscribed-conic family of a quad given as (p00, p10, p11, p01).

    Each member of the dual pencil is tangent to all four edge-lines; the
    degenerate members t = 0, 1 are the two diagonal point pairs.
    """
    p00, p10, p11, p01 = face
    plane = join(p00, p10, p11, p01, tol=tol)
    if plane.dim != 2:
        raise DegenerateFace(f"face joins dimension {plane.dim}")
    for skip in range(4):
        triple = [p for k, p in enumerate(face) if k != skip]
        if join(*triple, tol=tol).dim != 2:
            raise DegenerateFace("three of the four corners are collinear")
    b = plane.basis
    c00, c10, c11, c01 = (b.T @ p.v for p in face)
    # Rescale the corners so c00 + c11 = c10 + c01; the excluded member
    # t = infinity is then the degenerate pair of diagonal points instead of
    # a representative-dependent accident.
    scales = null_basis(np.column_stack([c00, c11, -c10, -c01]), tol.rank_rel)
    if scales.shape[1] != 1 or float(np.abs(scales).min()) <= tol.rank_rel:
        raise DegenerateFace("corner scales of the diagonal relation are not determined")
    c00, c11, c10, c01 = (s * c for s, c in zip(scales[:, 0], (c00, c11, c10, c01)))
    a_form = np.outer(c10, c01) + np.outer(c01, c10)
    b_form = np.outer(c00, c11) + np.outer(c11, c00)
    edge_lines = {
        "bottom": np.cross(c00, c10),
        "right": np.cross(c10, c11),
        "top": np.cross(c11, c01),
        "left": np.cross(c01, c00),
    }
    return ConicFamily(
        plane=plane,
        corners=(c00, c10, c11, c01),
        a_form=a_form,
        b_form=b_form,
        edge_lines=edge_lines,
    )


def face_family(net: QNet, i: int, j: int, tol: Tolerance = DEFAULT_TOL) -> ConicFamily:
    p00, p10, p11, p01 = face_vertices(net, i, j)
    return conic_family((p00, p10, p11, p01), tol=tol)


def conic_from_contact(
    face, edge: str, contact: HPoint, tol: Tolerance = DEFAULT_TOL
) -> tuple[float, SubspaceQuadric]:
    fam = conic_family(face, tol)
    t = fam.t_from_contact(edge, contact, tol)
    return t, fam.primal(t)


def contact_points(face, t: float, tol: Tolerance = DEFAULT_TOL) -> dict[str, HPoint]:
    """The four tangency points of the member t with the edge-lines."""
    return conic_family(face, tol).contacts(t)


@dataclass(frozen=True)
class ClosureFailure:
    """Propagation reached a face along two paths with inconsistent contacts."""

    face: tuple[int, int]
    residual: float


@dataclass(frozen=True)
class TouchingInstance:
    """An instance of touching conics on a Q-net patch.

    s_net(i,j) is the contact on the horizontal edge (i,j)-(i+1,j), t_net(i,j)
    the contact on the vertical edge (i,j)-(i,j+1). t_grid holds the per-face
    pencil parameters; conics the primal forms on their face planes.
    """

    net: QNet
    t_grid: dict[tuple[int, int], float]
    conics: dict[tuple[int, int], SubspaceQuadric]
    s_net: QNet
    t_net: QNet
    max_residual: float
    seed: tuple


def _neighbor_transfers(i, j):
    # neighbor face, edge on this face, matching edge on the neighbor
    return (
        ((i, j + 1), "top", "bottom"),
        ((i, j - 1), "bottom", "top"),
        ((i + 1, j), "right", "left"),
        ((i - 1, j), "left", "right"),
    )


def propagate_instance(
    net: QNet,
    seed_t: float = 0.5,
    seed_face: tuple[int, int] | None = None,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> TouchingInstance | ClosureFailure:
    """Breadth-first propagation of one seeded inscribed conic.

    The seed fixes the member t on one face; contacts transport across shared
    edges. Faces reached along several paths record the chordal gap between
    the transported contact and their own; the instance exists when the worst
    gap stays below closure_tol, otherwise the failure is returned as a value.
    """
    report = check_qnet(net, tol)
    if not (report.is_qnet and report.is_nondegenerate):
        raise DegenerateNet("touching conics need a non-degenerate Q-net")
    if net.rows < 2 or net.cols < 2:
        raise DegenerateNet("need at least one face")
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if seed_face is None:
        seed_face = (i0, j0)
    families: dict[tuple[int, int], ConicFamily] = {}
    for i in range(i0, i1):
        for j in range(j0, j1):
            families[(i, j)] = face_family(net, i, j, tol)

    t_grid: dict[tuple[int, int], float] = {seed_face: float(seed_t)}
    contacts: dict[tuple[int, int], dict[str, HPoint]] = {
        seed_face: families[seed_face].contacts(float(seed_t))
    }
    worst = 0.0
    worst_face = seed_face
    frontier = [seed_face]
    while frontier:
        layer: list[tuple[int, int]] = []
        for fij in sorted(frontier):
            for nij, edge_here, edge_there in _neighbor_transfers(*fij):
                if nij not in families:
                    continue
                transported = contacts[fij][edge_here]
                if nij in t_grid:
                    gap = chordal(transported, contacts[nij][edge_there])
                    if gap > worst:
                        worst, worst_face = gap, nij
                    continue
                fam = families[nij]
                t = fam.t_from_contact(edge_there, transported, tol)
                t_grid[nij] = t
                contacts[nij] = fam.contacts(t)
                layer.append(nij)
        frontier = layer
    if worst > closure_tol:
        return ClosureFailure(face=worst_face, residual=worst)

    s_pts = [
        [contacts[(i, min(j, j1 - 1))]["bottom" if j < j1 else "top"] for j in range(j0, j1 + 1)]
        for i in range(i0, i1)
    ]
    t_pts = [
        [contacts[(min(i, i1 - 1), j)]["left" if i < i1 else "right"] for j in range(j0, j1)]
        for i in range(i0, i1 + 1)
    ]
    conics = {key: families[key].primal(t) for key, t in t_grid.items()}
    return TouchingInstance(
        net=net,
        t_grid=t_grid,
        conics=conics,
        s_net=QNet(s_pts, origin=net.origin),
        t_net=QNet(t_pts, origin=net.origin),
        max_residual=worst,
        seed=(seed_face, float(seed_t)),
    )


def touching_nets(instance: TouchingInstance, tol: Tolerance = DEFAULT_TOL) -> tuple[QNet, QNet]:
    """The contact nets S and T, with their planarity verified."""
    for label, contact_net in (("S", instance.s_net), ("T", instance.t_net)):
        if not check_qnet(contact_net, tol).is_qnet:
            raise DegenerateNet(f"contact net {label} is not a Q-net")
    return instance.s_net, instance.t_net


def contact_space(instance: TouchingInstance, direction: str, index: int) -> ProjSubspace:
    """Join of one line of contact points.

    direction 'v' joins the T contacts of column i, 'h' joins the S contacts
    of row j. These are the spaces an inscribed quadric must contain.
    """
    if direction in ("v", "col"):
        return parameter_space(instance.t_net, "v", index)
    if direction in ("h", "row"):
        return parameter_space(instance.s_net, "h", index)
    raise ValueError(f"unknown direction {direction!r}")


def window_instance(
    instance: TouchingInstance, i_lo: int, i_hi: int, j_lo: int, j_hi: int
) -> TouchingInstance:
    """Restriction of an instance to an inclusive index window of its net."""
    if i_hi <= i_lo or j_hi <= j_lo:
        raise WindowTooSmall("an instance window needs at least one face")
    keys = [(i, j) for i in range(i_lo, i_hi) for j in range(j_lo, j_hi)]
    return TouchingInstance(
        net=instance.net.window(i_lo, i_hi, j_lo, j_hi),
        t_grid={k: instance.t_grid[k] for k in keys},
        conics={k: instance.conics[k] for k in keys},
        s_net=instance.s_net.window(i_lo, i_hi - 1, j_lo, j_hi),
        t_net=instance.t_net.window(i_lo, i_hi, j_lo, j_hi - 1),
        max_residual=instance.max_residual,
        seed=instance.seed,
    )


def reembed_instance(
    instance: TouchingInstance, tol: Tolerance = DEFAULT_TOL
) -> tuple[TouchingInstance, ProjSubspace]:
    """Express an instance in intrinsic coordinates of its net's join.

    Contacts move with the vertices; each face parameter is recovered from
    the mapped bottom-edge contact and the primal conics are rebuilt in the
    new coordinates.
    """
    sub = instance.net.join_all(tol)
    basis = sub.basis

    def remap(p: HPoint) -> HPoint:
        return HPoint(basis.T @ p.v)

    net = instance.net.map_points(remap)
    s_net = instance.s_net.map_points(remap)
    t_net = instance.t_net.map_points(remap)
    t_grid: dict[tuple[int, int], float] = {}
    conics: dict[tuple[int, int], SubspaceQuadric] = {}
    for i, j in instance.t_grid:
        fam = face_family(net, i, j, tol)
        t = fam.t_from_contact("bottom", s_net.at(i, j), tol)
        t_grid[(i, j)] = t
        conics[(i, j)] = fam.primal(t)
    mapped = TouchingInstance(
        net=net,
        t_grid=t_grid,
        conics=conics,
        s_net=s_net,
        t_net=t_net,
        max_residual=instance.max_residual,
        seed=instance.seed,
    )
    return mapped, sub


@dataclass(frozen=True)
class KoenigsReport:
    propagation_closure: bool
    closure_residual: float
    vertex_coplanarity: bool | None
    coplanarity_residual: float | None


def is_koenigs(
    net: QNet,
    seed_t: float = 0.5,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> KoenigsReport:
    """Two characterizations of the Koenigs property.

    Propagation closure works in every ambient dimension. For nets in RP^n
    with n >= 3, the diagonal intersection points of the four faces around
    each interior vertex must additionally be coplanar; in the plane that
    test is vacuous and reported as None.
    """
    outcome = propagate_instance(net, seed_t=seed_t, closure_tol=closure_tol, tol=tol)
    if isinstance(outcome, ClosureFailure):
        closed, closure_residual = False, outcome.residual
    else:
        closed, closure_residual = True, outcome.max_residual

    if net.ambient_dim < 3:
        return KoenigsReport(closed, closure_residual, None, None)
    if net.rows < 3 or net.cols < 3:
        return KoenigsReport(closed, closure_residual, None, None)
    d = diagonal_net(net, tol)
    worst = 0.0
    i0, i1 = d.i_range
    j0, j1 = d.j_range
    for i in range(i0, i1):
        for j in range(j0, j1):
            stack = np.column_stack(
                [d.at(i, j).v, d.at(i + 1, j).v, d.at(i, j + 1).v, d.at(i + 1, j + 1).v]
            )
            sv = np.linalg.svd(stack, compute_uv=False)
            if sv.size >= 4 and sv[0] > 0:
                worst = max(worst, float(sv[3] / sv[0]))
    return KoenigsReport(closed, closure_residual, worst <= tol.rank_rel * 1e2, worst)


@dataclass(frozen=True)
class BinetReport:
    """Maxima of the two invariant identities between the contact nets."""

    max_hs_kt: float | None
    max_ht_ks: float | None
    samples: int


def binet_check(instance: TouchingInstance, tol: Tolerance = DEFAULT_TOL) -> BinetReport:
    """Laplace invariants of S and T agree edge by edge.

    Checks H^S(i,j) = K^T(i,j) and H^T(i+1,j) = K^S(i,j+1) over every stencil
    the patch supports.
    """
    s, t = instance.s_net, instance.t_net
    gaps1 = []
    si0, si1 = s.i_range
    sj0, sj1 = s.j_range
    for i in range(si0 + 1, si1):
        for j in range(sj0, sj1):
            if t.i_range[0] <= i <= t.i_range[1] - 1 and t.j_range[0] + 1 <= j <= t.j_range[1] - 1:
                gaps1.append(abs(laplace_h(s, i, j, tol) - laplace_k(t, i, j, tol)))
    gaps2 = []
    ti0, ti1 = t.i_range
    tj0, tj1 = t.j_range
    for i in range(ti0, ti1):
        for j in range(tj0, tj1 - 1):
            if (
                ti0 + 1 <= i + 1 <= ti1 - 1
                and si0 <= i <= si1 - 1
                and sj0 + 1 <= j + 1 <= sj1 - 1
            ):
                gaps2.append(abs(laplace_h(t, i + 1, j, tol) - laplace_k(s, i, j + 1, tol)))
    return BinetReport(
        max_hs_kt=max(gaps1) if gaps1 else None,
        max_ht_ks=max(gaps2) if gaps2 else None,
        samples=len(gaps1) + len(gaps2),
    )


def bipartite_hyperplanes(
    net: QNet, tol: Tolerance = DEFAULT_TOL
) -> tuple[ProjSubspace, ProjSubspace]:
    """The two hyperplanes containing the even and odd parity classes.

    For an extensive Koenigs net each parity class spans a hyperplane; the
    diagonal intersection net lies in their intersection. FitFailed when a
    parity class does not determine a unique hyperplane.
    """
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    planes = []
    for parity in (0, 1):
        rows = [
            net.at(i, j).v
            for i in range(i0, i1 + 1)
            for j in range(j0, j1 + 1)
            if (i + j) % 2 == parity
        ]
        normal = null_basis(np.vstack(rows), tol.rank_rel)
        if normal.shape[1] != 1:
            raise FitFailed(
                f"parity-{parity} vertices determine {normal.shape[1]} hyperplanes, expected 1"
            )
        planes.append(ProjSubspace(null_basis(normal.T, tol.rank_rel)))
    return planes[0], planes[1]


def sample_conic(conic: SubspaceQuadric, count: int = 64, tol: Tolerance = DEFAULT_TOL) -> list[HPoint]:
    """Points tracing a conic, via the line pencil through one of its points.

    The second intersection of the line p0 + s v with the conic is
    phi(v,v) p0 - 2 phi(p0,v) v, which stays valid when v itself is on the
    conic. Double-line members are sampled along their line instead.
    """
    if conic.dim != 2:
        raise ValueError("conic sampling needs a 2-dimensional carrier")
    f = conic.form
    scale = float(np.linalg.norm(f))
    if scale <= 0.0:
        raise ValueError("zero form cannot be sampled")
    f = f / scale
    w, vecs = np.linalg.eigh(f)
    order = np.argsort(w)
    w, vecs = w[order], vecs[:, order]
    cut = tol.rank_rel * float(np.abs(w).max())
    plus = int(np.count_nonzero(w > cut))
    minus = int(np.count_nonzero(w < -cut))
    if plus == 0 or minus == 0:
        kernel = vecs[:, np.abs(w) <= cut]
        if kernel.shape[1] == 2:
            # Double line: trace the kernel line.
            u0, u1 = kernel[:, 0], kernel[:, 1]
            return [
                conic.point_to_ambient(math.cos(a) * u0 + math.sin(a) * u1)
                for a in np.linspace(0.0, math.pi, count, endpoint=False)
            ]
        raise ValueError("conic has no real points to sample")
    # One point on the conic from the extreme eigenvectors.
    lo, hi = w[0], w[-1]
    p0 = math.sqrt(hi) * vecs[:, 0] + math.sqrt(-lo) * vecs[:, -1]

    def phi(x, y):
        return float(x @ f @ y)

    # Directions modulo p0: the middle eigenvector is already orthogonal to
    # p0, the low one only needs its p0 component removed.
    u1 = vecs[:, 1]
    u2 = vecs[:, 0] - (vecs[:, 0] @ p0) / (p0 @ p0) * p0
    pts = []
    for a in np.linspace(0.0, math.pi, count, endpoint=False):
        v = math.cos(a) * u1 + math.sin(a) * u2
        x = phi(v, v) * p0 - 2.0 * phi(p0, v) * v
        if np.linalg.norm(x) <= 1e-14:
            continue
        pts.append(conic.point_to_ambient(x))
    return pts
