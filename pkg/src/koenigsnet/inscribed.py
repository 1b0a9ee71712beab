"""Inscribed quadrics of extensive nets carrying touching conics.

The quadric is assembled by induction on the patch. Both subpatches one
column (or row) shorter span hyperplanes and carry unique inscribed
quadrics of their own; gluing those through the shared wall yields a
pencil of ambient quadrics, and the member vanishing on a contact space
that leaves both hyperplanes is the inscribed quadric. The base patch
with a single face returns its inscribed conic. Verification,
singular-locus bounds and the diagonal-net consequences live here as
well.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conics import (
    TouchingInstance,
    contact_space,
    reembed_instance,
    sample_conic,
    window_instance,
)
from .errors import DegenerateNet, NotExtensive, StencilOutOfRange, YSelectionFailed
from .nets import QNet, diagonal_net, is_extensive, laplace_transform, parameter_space
from .projective import DEFAULT_TOL, ProjSubspace, Tolerance, join, meet
from .quadrics import Quadric, SubspaceQuadric, fit_quadric, glue_pencil


def proportional_gap(m1: np.ndarray, m2: np.ndarray) -> float:
    """Frobenius distance of two symmetric forms after scale/sign alignment."""
    n1 = float(np.linalg.norm(m1))
    n2 = float(np.linalg.norm(m2))
    if n1 == 0.0 or n2 == 0.0:
        return 0.0 if n1 == n2 else float("inf")
    u1 = m1 / n1
    u2 = m2 / n2
    return min(float(np.linalg.norm(u1 - u2)), float(np.linalg.norm(u1 + u2)))


@dataclass(frozen=True)
class InscribedVerification:
    """Per-condition maxima for one candidate inscribed quadric."""

    conic_residual: float
    t_isotropy: float
    s_isotropy: float
    tangency_v: tuple[bool, ...]
    tangency_h: tuple[bool, ...]

    @property
    def all_tangent(self) -> bool:
        return all(self.tangency_v) and all(self.tangency_h)


@dataclass(frozen=True)
class InscribedQuadricResult:
    quadric: Quadric
    verification: InscribedVerification
    singular_locus: ProjSubspace
    oracle_distance: float


def _check_instance_matches(net: QNet, instance: TouchingInstance) -> None:
    same = (
        instance.net.i_range == net.i_range
        and instance.net.j_range == net.j_range
        and instance.net.ambient_dim == net.ambient_dim
    )
    if not same:
        raise ValueError("instance was propagated on a different net")


def _member_vanishing_on(
    pencil: tuple[Quadric, Quadric],
    space: ProjSubspace,
    rng: np.random.Generator,
    tol: Tolerance,
) -> Quadric:
    """Least-squares pencil member vanishing on a whole contact space.

    Resolving the pencil through a single point breaks down when that point
    sits near the base locus, where both generators evaluate to noise;
    stacking the vanishing condition over basis directions, pairwise
    combinations and random span points keeps the selection conditioned.
    """
    q1, q2 = pencil
    m1 = q1.matrix / float(np.linalg.norm(q1.matrix))
    m2 = q2.matrix / float(np.linalg.norm(q2.matrix))
    b = space.basis
    k = b.shape[1]
    vecs = [b[:, r] for r in range(k)]
    vecs += [b[:, r] + b[:, s] for r in range(k) for s in range(r + 1, k)]
    vecs += [b[:, r] - b[:, s] for r in range(k) for s in range(r + 1, k)]
    vecs += [b @ rng.standard_normal(k) for _ in range(16)]
    rows = []
    for vec in vecs:
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            continue
        u = vec / norm
        rows.append([float(u @ m1 @ u), float(u @ m2 @ u)])
    _, sv, vt = np.linalg.svd(np.asarray(rows))
    if sv[0] <= tol.residual_abs:
        raise YSelectionFailed(
            "selector space lies in the base locus of the glued pencil"
        )
    return Quadric(vt[1, 0] * m1 + vt[1, 1] * m2)


def _split_direction(a: int, b: int, mode: str) -> str:
    if mode == "i":
        return "i" if a >= 2 else "j"
    if mode == "j":
        return "j" if b >= 2 else "i"
    if mode == "auto":
        return "i" if a > b else "j"
    raise ValueError(f"unknown split mode {mode!r}")


def _build(
    instance: TouchingInstance,
    tol: Tolerance,
    rng: np.random.Generator,
    mode: str,
) -> Quadric:
    net = instance.net
    a = net.rows - 1
    b = net.cols - 1
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    if a == 1 and b == 1:
        conic = instance.conics[(i0, j0)]
        basis = conic.carrier.basis
        if basis.shape[1] != basis.shape[0]:
            raise NotExtensive("single-face patch does not span its ambient plane")
        return Quadric(basis @ conic.form @ basis.T)

    if _split_direction(a, b, mode) == "i":
        lo = window_instance(instance, i0, i1 - 1, j0, j1)
        hi = window_instance(instance, i0 + 1, i1, j0, j1)
        selector = contact_space(instance, "h", j0)
    else:
        lo = window_instance(instance, i0, i1, j0, j1 - 1)
        hi = window_instance(instance, i0, i1, j0 + 1, j1)
        selector = contact_space(instance, "v", i0)

    halves = []
    for part in (lo, hi):
        part_in, carrier = reembed_instance(part, tol)
        if carrier.dim != net.ambient_dim - 1:
            raise NotExtensive(
                f"subpatch spans dimension {carrier.dim}, expected a hyperplane"
            )
        sub = _build(part_in, tol, rng, mode)
        halves.append(SubspaceQuadric(carrier, sub.matrix))
    pencil = glue_pencil(halves[0], halves[1], tol)
    return _member_vanishing_on(pencil, selector, rng, tol)


def verify_inscribed(
    net: QNet,
    instance: TouchingInstance,
    quadric: Quadric,
    tol: Tolerance = DEFAULT_TOL,
) -> InscribedVerification:
    """Residuals of the three inscribed-quadric conditions.

    Condition one: the restriction to each face plane is the instance conic.
    Conditions two and three: the contact-space joins are isotropic and each
    net parameter space is tangent along its contact space.
    """
    _check_instance_matches(net, instance)
    conic_worst = 0.0
    for conic in instance.conics.values():
        gap = proportional_gap(quadric.restrict(conic.carrier).form, conic.form)
        conic_worst = max(conic_worst, gap)
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    t_worst = 0.0
    s_worst = 0.0
    tangency_v = []
    tangency_h = []
    for i in range(i0, i1 + 1):
        t_space = contact_space(instance, "v", i)
        t_worst = max(t_worst, float(np.linalg.norm(quadric.restrict(t_space).form)))
        tangency_v.append(
            quadric.tangent_along(parameter_space(net, "v", i), t_space, tol)
        )
    for j in range(j0, j1 + 1):
        s_space = contact_space(instance, "h", j)
        s_worst = max(s_worst, float(np.linalg.norm(quadric.restrict(s_space).form)))
        tangency_h.append(
            quadric.tangent_along(parameter_space(net, "h", j), s_space, tol)
        )
    return InscribedVerification(
        conic_residual=conic_worst,
        t_isotropy=t_worst,
        s_isotropy=s_worst,
        tangency_v=tuple(tangency_v),
        tangency_h=tuple(tangency_h),
    )


def fit_quadric_oracle(
    net: QNet,
    instance: TouchingInstance,
    samples_per_conic: int = 8,
    tol: Tolerance = DEFAULT_TOL,
) -> Quadric:
    """Independent quadric fit from conic samples and contact-space bases.

    Bypasses the gluing induction entirely: stacks point conditions sampled
    from every instance conic with isotropy conditions for all contact
    spaces and extracts the one-dimensional kernel.
    """
    _check_instance_matches(net, instance)
    points = []
    for conic in instance.conics.values():
        points.extend(sample_conic(conic, count=samples_per_conic, tol=tol))
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    spaces = [contact_space(instance, "v", i) for i in range(i0, i1 + 1)]
    spaces += [contact_space(instance, "h", j) for j in range(j0, j1 + 1)]
    return fit_quadric(net.ambient_dim, points, spaces, tol)


def build_inscribed_quadric(
    net: QNet,
    instance: TouchingInstance,
    tol: Tolerance = DEFAULT_TOL,
    split: str = "auto",
    rng: np.random.Generator | None = None,
) -> InscribedQuadricResult:
    """The unique quadric inscribed in an extensive net for a given instance.

    split controls which lattice direction the induction halves first:
    'auto' halves the longer side (ties halve along j), 'i' and 'j' force a
    direction where possible. All choices agree up to numerical tolerance;
    the knob exists so that agreement can be tested.
    """
    _check_instance_matches(net, instance)
    a = net.rows - 1
    b = net.cols - 1
    if net.ambient_dim != a + b:
        raise NotExtensive(
            f"net lives in RP^{net.ambient_dim}, expected RP^{a + b}; "
            "reembed it in its join first"
        )
    if not is_extensive(net, tol):
        raise NotExtensive("net does not join the maximal dimension")
    if rng is None:
        rng = np.random.default_rng(0)
    quadric = _build(instance, tol, rng, split)
    verification = verify_inscribed(net, instance, quadric, tol)
    oracle = fit_quadric_oracle(net, instance, tol=tol)
    distance = proportional_gap(quadric.matrix, oracle.matrix)
    return InscribedQuadricResult(
        quadric=quadric,
        verification=verification,
        singular_locus=quadric.singular_locus(tol),
        oracle_distance=distance,
    )


@dataclass(frozen=True)
class SingularReport:
    """Common contact-space intersections against the singular locus."""

    x_space: ProjSubspace
    y_space: ProjSubspace
    singular_locus: ProjSubspace
    bounds_ok: bool


def singular_analysis(
    net: QNet,
    instance: TouchingInstance,
    quadric: Quadric,
    tol: Tolerance = DEFAULT_TOL,
) -> SingularReport:
    """Locate forced singular points of an inscribed quadric.

    X intersects all S row joins, Y all T column joins; both consist of
    singular points, X has dimension at least a-b-1 and Y at least b-a-1.
    When a >= b and a singular point escapes X, the X bound tightens to a-b.
    """
    _check_instance_matches(net, instance)
    a = net.rows - 1
    b = net.cols - 1
    i0, i1 = net.i_range
    j0, j1 = net.j_range
    x_space = meet(*[contact_space(instance, "h", j) for j in range(j0, j1 + 1)], tol=tol)
    y_space = meet(*[contact_space(instance, "v", i) for i in range(i0, i1 + 1)], tol=tol)
    locus = quadric.singular_locus(tol)
    ok = locus.contains_subspace(x_space, tol) and locus.contains_subspace(y_space, tol)
    ok = ok and x_space.dim >= a - b - 1 and y_space.dim >= b - a - 1
    if a >= b and not locus.is_empty() and not x_space.contains_subspace(locus, tol):
        ok = ok and x_space.dim >= a - b
    return SingularReport(
        x_space=x_space, y_space=y_space, singular_locus=locus, bounds_ok=ok
    )


@dataclass(frozen=True)
class DiagonalReport:
    """Diagonal-net transforms measured against the inscribed quadric."""

    quadric_residual: float
    membership_residual: float
    orders_reached: tuple[int, int]


def _laplace_chain(start: QNet, sign: int, k_max: int, tol: Tolerance) -> list[QNet]:
    # The chain ends where the patch runs out of faces or the transform
    # degenerates; only a degenerate start is an error for the caller.
    chain: list[QNet] = []
    current = start
    for _ in range(k_max):
        if current.rows < 2 or current.cols < 2:
            break
        try:
            current = laplace_transform(current, sign, tol)
        except DegenerateNet:
            if not chain:
                raise
            break
        chain.append(current)
    return chain


def diagonal_corollary_check(
    net: QNet,
    instance: TouchingInstance,
    quadric: Quadric,
    k_max: int,
    tol: Tolerance = DEFAULT_TOL,
) -> DiagonalReport:
    """Check that the diagonal net's transform chain stays on the quadric.

    All vertices of the transforms of order 1..k_max of the diagonal net
    must lie on the quadric, and the first transforms must additionally sit
    inside the neighboring contact-space joins: the forward point (i,j) in
    the T column join i+1, the backward point in the S row join j+1.
    """
    _check_instance_matches(net, instance)
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if k_max == 0:
        return DiagonalReport(0.0, 0.0, (0, 0))
    diag = diagonal_net(net, tol)
    forward = _laplace_chain(diag, +1, k_max, tol)
    backward = _laplace_chain(diag, -1, k_max, tol)
    quad_worst = 0.0
    for chain in (forward, backward):
        for transformed in chain:
            for p in transformed.iter_points():
                quad_worst = max(
                    quad_worst, abs(quadric.evaluate(p)) / float(p.v @ p.v)
                )
    member_worst = 0.0
    if forward:
        d1 = forward[0]
        for i in range(d1.i_range[0], d1.i_range[1] + 1):
            for j in range(d1.j_range[0], d1.j_range[1] + 1):
                space = contact_space(instance, "v", i + 1)
                member_worst = max(member_worst, space.point_residual(d1.at(i, j)))
    if backward:
        dm1 = backward[0]
        for i in range(dm1.i_range[0], dm1.i_range[1] + 1):
            for j in range(dm1.j_range[0], dm1.j_range[1] + 1):
                space = contact_space(instance, "h", j + 1)
                member_worst = max(member_worst, space.point_residual(dm1.at(i, j)))
    return DiagonalReport(
        quadric_residual=quad_worst,
        membership_residual=member_worst,
        orders_reached=(len(forward), len(backward)),
    )


@dataclass(frozen=True)
class FaceConic:
    """Quadric restricted to one diagonal-net face plane."""

    conic: SubspaceQuadric
    residuals: tuple[float, ...]
    degenerate: bool


def doliwa_conics(
    net: QNet,
    instance: TouchingInstance,
    quadric: Quadric,
    tol: Tolerance = DEFAULT_TOL,
) -> dict[tuple[int, int], FaceConic]:
    """Face conics of the diagonal net, cut out of the inscribed quadric.

    For each face of the diagonal net D whose six surrounding transform
    points exist, restricts the quadric to the face plane and reports the
    incidence residuals of the three forward points D1(i-1..i+1, j) and the
    three backward points D-1(i, j-1..j+1), all of which lie in that plane.
    """
    _check_instance_matches(net, instance)
    diag = diagonal_net(net, tol)
    d1 = laplace_transform(diag, +1, tol)
    dm1 = laplace_transform(diag, -1, tol)
    i0, i1 = d1.i_range
    j0, j1 = dm1.j_range
    out: dict[tuple[int, int], FaceConic] = {}
    for i in range(i0 + 1, i1):
        for j in range(j0 + 1, j1):
            plane = join(diag.at(i, j), diag.at(i + 1, j), diag.at(i, j + 1), tol=tol)
            conic = quadric.restrict(plane)
            six = (
                d1.at(i - 1, j),
                d1.at(i, j),
                d1.at(i + 1, j),
                dm1.at(i, j - 1),
                dm1.at(i, j),
                dm1.at(i, j + 1),
            )
            residuals = tuple(
                max(
                    plane.point_residual(p),
                    abs(quadric.evaluate(p)) / float(p.v @ p.v),
                )
                for p in six
            )
            p_count, m_count, z_count = conic.signature(tol)
            out[(i, j)] = FaceConic(
                conic=conic,
                residuals=residuals,
                degenerate=z_count > 0,
            )
    if not out:
        raise StencilOutOfRange(
            "no diagonal-net face has all six transform points in range"
        )
    return out
