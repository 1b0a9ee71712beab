"""Discrete curves, osculating spaces, and the correspondence between
pairs of autoconjugate curves and Koenigs d-grids.

A curve is autoconjugate for a quadric when every window of d consecutive
points spans an isotropic subspace. Polar spaces of the osculating flags
of two such curves meet in the points of a Koenigs d-grid, and the grid's
distinguished contact spaces recover the curves by iterated meets; both
directions are implemented with the index conventions documented on the
functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .conics import contact_space
from .errors import (
    GenerationFailed,
    IndexOutOfRange,
    MeetEmpty,
    MixedAmbient,
    NotGeneric,
    NotGenericPair,
    VerifyFailed,
    WindowTooSmall,
)
from .grids import (
    DGrid,
    GridDimensionReport,
    check_dgrid,
    special_inscribed_quadric,
    special_touching_conics,
)
from .nets import QNet, diagonal_net, iterated_laplace
from .projective import (
    DEFAULT_TOL,
    HPoint,
    ProjSubspace,
    Tolerance,
    chordal,
    join,
    meet,
    null_basis,
    subspace_distance,
)
from .quadrics import Quadric


class DCurve:
    """Finite window of a discrete curve, indexed by consecutive integers."""

    def __init__(self, points: Iterable[HPoint], origin: int = 0):
        pts = tuple(points)
        if not pts:
            raise ValueError("a curve needs at least one point")
        ambient = pts[0].ambient_dim
        if any(p.ambient_dim != ambient for p in pts):
            raise MixedAmbient("curve points live in different dimensions")
        self.points = pts
        self.origin = int(origin)

    @property
    def ambient_dim(self) -> int:
        return self.points[0].ambient_dim

    @property
    def j_range(self) -> tuple[int, int]:
        return (self.origin, self.origin + len(self.points) - 1)

    def __len__(self) -> int:
        return len(self.points)

    def at(self, j: int) -> HPoint:
        lo, hi = self.j_range
        if not lo <= j <= hi:
            raise IndexOutOfRange(f"index {j} outside window [{lo}, {hi}]")
        return self.points[j - lo]

    def window(self, lo: int, hi: int) -> "DCurve":
        return DCurve([self.at(j) for j in range(lo, hi + 1)], origin=lo)

    def __repr__(self) -> str:
        lo, hi = self.j_range
        return f"DCurve(window=[{lo}, {hi}], ambient={self.ambient_dim})"


@dataclass(frozen=True)
class CurvePair:
    """Two curves autoconjugate for one quadric, sigma horizontal."""

    sigma: DCurve
    tau: DCurve
    quadric: Quadric
    d: int


def osculating_space(
    curve: DCurve, j: int, k: int, tol: Tolerance = DEFAULT_TOL
) -> ProjSubspace:
    """Join of the k+1 points starting at index j; k = -1 gives the empty
    space by convention."""
    if k < -1:
        raise IndexOutOfRange(f"osculating order {k} below -1")
    if k == -1:
        return ProjSubspace.empty(curve.ambient_dim)
    lo, hi = curve.j_range
    if j < lo or j + k > hi:
        raise IndexOutOfRange(
            f"window [{j}, {j + k}] outside curve range [{lo}, {hi}]"
        )
    return join(*(curve.at(j + r) for r in range(k + 1)), tol=tol)


def is_generic_curve(curve: DCurve, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Every osculating space has the maximal dimension its order allows."""
    n = curve.ambient_dim
    lo, hi = curve.j_range
    if len(curve) < n + 1:
        raise WindowTooSmall(
            f"genericity in dimension {n} needs at least {n + 1} points"
        )
    for k in range(n + 1):
        for j in range(lo, hi - k + 1):
            if osculating_space(curve, j, k, tol).dim != k:
                return False
    return True


def is_generic_pair(
    sigma: DCurve, tau: DCurve, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """Complementary osculating spaces of the two curves always span.

    For every split k + (n-k-1) of the ambient dimension n, each osculating
    k-space of sigma must join each (n-k-1)-space of tau to the whole space;
    the empty space takes part at both ends of the range.
    """
    n = sigma.ambient_dim
    if tau.ambient_dim != n:
        raise MixedAmbient("curves live in different dimensions")
    if len(sigma) < n + 1 or len(tau) < n + 1:
        raise WindowTooSmall(
            f"pair genericity in dimension {n} needs at least {n + 1} points"
        )
    s_lo, s_hi = sigma.j_range
    t_lo, t_hi = tau.j_range
    for k in range(-1, n + 1):
        m = n - k - 1
        for j in range(s_lo, s_hi - max(k, 0) + 1):
            s = osculating_space(sigma, j, k, tol)
            for i in range(t_lo, t_hi - max(m, 0) + 1):
                t = osculating_space(tau, i, m, tol)
                if join(s, t, tol=tol).dim != n:
                    return False
    return True


def is_autoconjugate(
    curve: DCurve, quadric: Quadric, d: int, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """All windows of d consecutive points span isotropic subspaces."""
    if curve.ambient_dim != quadric.ambient_dim:
        raise MixedAmbient("curve and quadric ambient dimensions differ")
    lo, hi = curve.j_range
    for j in range(lo, hi - d + 2):
        if not quadric.is_isotropic(osculating_space(curve, j, d - 1, tol), tol):
            return False
    return True


def standard_quadric(d: int) -> Quadric:
    """d hyperbolic coordinate pairs plus one square: signature (d+1, d).

    The Witt index d is exactly what isotropic (d-1)-spaces require, so
    autoconjugate curves exist for this form in every order.
    """
    m = np.zeros((2 * d + 1, 2 * d + 1))
    for k in range(d):
        m[2 * k, 2 * k + 1] = 0.5
        m[2 * k + 1, 2 * k] = 0.5
    m[2 * d, 2 * d] = 1.0
    return Quadric(m)


def _grow_autoconjugate(
    d: int,
    length: int,
    matrix: np.ndarray,
    rng: np.random.Generator,
    tol: Tolerance,
) -> list[HPoint] | None:
    """One curve on the quadric with consecutive windows isotropic.

    Each point satisfies conjugacy against the previous d-1 points (that is
    what keeps every d-point window isotropic; one more condition would
    overrun the Witt index) plus the on-quadric equation, solved on a random
    2-plane inside the admissible linear space.
    """
    n1 = matrix.shape[0]
    pts: list[np.ndarray] = []
    for _ in range(length):
        prev = pts[-(d - 1):] if d > 1 else []
        if prev:
            constraints = np.array([matrix @ p for p in prev])
            basis = null_basis(constraints, tol.rank_rel)
        else:
            basis = np.eye(n1)
        if basis.shape[1] < 2:
            return None
        for _ in range(16):
            u = basis @ rng.standard_normal(basis.shape[1])
            v = basis @ rng.standard_normal(basis.shape[1])
            a = float(u @ matrix @ u)
            b = float(u @ matrix @ v)
            c = float(v @ matrix @ v)
            disc = b * b - a * c
            if disc <= 0.0:
                continue
            if abs(c) > 1e-12:
                t = (-b + np.sqrt(disc)) / c
                cand = u + t * v
            elif abs(b) > 1e-12:
                cand = u - (a / (2.0 * b)) * v
            else:
                continue
            norm = float(np.linalg.norm(cand))
            if norm < 1e-9:
                continue
            pts.append(cand / norm)
            break
        else:
            return None
    return [HPoint(p) for p in pts]


def generate_pair(
    d: int,
    length: int,
    seed: int,
    max_tries: int = 32,
    tol: Tolerance = DEFAULT_TOL,
) -> CurvePair:
    """Seeded generic pair of autoconjugate curves on the standard quadric.

    Curves are regrown from scratch until the genericity predicates hold,
    so the result is generic by construction, not by accident.
    """
    if d < 1:
        raise GenerationFailed("curve order must be at least 1")
    if length < 2 * d + 2:
        raise GenerationFailed(
            f"order {d} needs at least {2 * d + 2} points per curve"
        )
    quadric = standard_quadric(d)
    matrix = quadric.matrix
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        grown_s = _grow_autoconjugate(d, length, matrix, rng, tol)
        grown_t = _grow_autoconjugate(d, length, matrix, rng, tol)
        if grown_s is None or grown_t is None:
            continue
        sigma = DCurve(grown_s)
        tau = DCurve(grown_t)
        if not (is_generic_curve(sigma, tol) and is_generic_curve(tau, tol)):
            continue
        if not is_generic_pair(sigma, tau, tol):
            continue
        if not (
            is_autoconjugate(sigma, quadric, d, tol)
            and is_autoconjugate(tau, quadric, d, tol)
        ):
            continue
        return CurvePair(sigma=sigma, tau=tau, quadric=quadric, d=d)
    raise GenerationFailed(
        f"no generic autoconjugate pair after {max_tries} attempts"
    )


def curves_to_grid(
    pair: CurvePair,
    formula_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> DGrid:
    """Grid of polar meets: P(i,j) joins the polar of sigma's (d-1)-space at
    j with the polar of tau's at i.

    The transform nets of every order up to d are cross-checked against
    their closed forms: shifting the sigma window and widening the tau
    window (or vice versa for backward transforms) must reproduce the
    transform points up to formula_tol.
    """
    sigma, tau, quadric, d = pair.sigma, pair.tau, pair.quadric, pair.d
    n = 2 * d
    if sigma.ambient_dim != n or quadric.ambient_dim != n:
        raise MixedAmbient(f"order {d} needs ambient dimension {n}")
    if not (is_generic_curve(sigma, tol) and is_generic_curve(tau, tol)):
        raise NotGenericPair("a curve of the pair is not generic")
    if not is_generic_pair(sigma, tau, tol):
        raise NotGenericPair("osculating spans of the pair are deficient")
    if not (
        is_autoconjugate(sigma, quadric, d, tol)
        and is_autoconjugate(tau, quadric, d, tol)
    ):
        raise NotGenericPair("pair is not autoconjugate for its quadric")

    def polar_meet(i: int, k_tau: int, j: int, k_sigma: int) -> HPoint:
        s_polar = quadric.polar(osculating_space(sigma, j, k_sigma, tol), tol)
        t_polar = quadric.polar(osculating_space(tau, i, k_tau, tol), tol)
        point = meet(s_polar, t_polar, tol=tol)
        if point.dim != 0:
            raise NotGenericPair(
                f"polar spaces at (i={i}, j={j}) meet in dimension {point.dim}"
            )
        return point.point()

    s_lo, s_hi = sigma.j_range
    t_lo, t_hi = tau.j_range
    pts = [
        [polar_meet(i, d - 1, j, d - 1) for j in range(s_lo, s_hi - d + 2)]
        for i in range(t_lo, t_hi - d + 2)
    ]
    net = QNet(pts, origin=(t_lo, s_lo))
    certified = check_dgrid(net, d, tol)
    if isinstance(certified, GridDimensionReport):
        raise NotGenericPair(
            f"polar meets degenerate: {certified.failures[0]}"
        )
    for k in range(1, d + 1):
        forward, rep = iterated_laplace(net, k, tol)
        if not rep.exists:
            raise NotGenericPair(f"transform of order {k} degenerates")
        fi0, fi1 = forward.i_range
        fj0, fj1 = forward.j_range
        for i in range(fi0, fi1 + 1):
            for j in range(fj0, fj1 + 1):
                expected = polar_meet(i, d + k - 1, j + k, d - k - 1)
                gap = chordal(forward.at(i, j), expected)
                if gap > formula_tol:
                    raise NotGenericPair(
                        f"order {k} transform misses its closed form by {gap:.3e}"
                    )
        backward, rep = iterated_laplace(net, -k, tol)
        if not rep.exists:
            raise NotGenericPair(f"transform of order {-k} degenerates")
        bi0, bi1 = backward.i_range
        bj0, bj1 = backward.j_range
        for i in range(bi0, bi1 + 1):
            for j in range(bj0, bj1 + 1):
                s_polar = quadric.polar(
                    osculating_space(sigma, j, d + k - 1, tol), tol
                )
                t_polar = quadric.polar(
                    osculating_space(tau, i + k, d - k - 1, tol), tol
                )
                point = meet(s_polar, t_polar, tol=tol)
                if point.dim != 0:
                    raise NotGenericPair(
                        f"backward polar spaces at (i={i}, j={j}) meet in "
                        f"dimension {point.dim}"
                    )
                gap = chordal(backward.at(i, j), point.point())
                if gap > formula_tol:
                    raise NotGenericPair(
                        f"order {-k} transform misses its closed form by {gap:.3e}"
                    )
    return certified


def grid_to_curves(
    grid: DGrid,
    verify_tol: float = 1e-8,
    closure_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> CurvePair:
    """Curves recovered as iterated meets of the special contact spaces.

    sigma(j) meets the d row contact spaces starting at j, tau(i) the d
    column ones; the order-d transforms of the diagonal net must reproduce
    the curves shifted by one, which is verified here. Indices follow the
    window starts, so a round trip shifts indices by d-1.
    """
    net, d = grid.net, grid.d
    instance = special_touching_conics(grid, closure_tol, tol)
    quadric = special_inscribed_quadric(grid, closure_tol, tol)
    i0, i1 = net.i_range
    j0, j1 = net.j_range

    def iterated_meet(direction: str, start: int) -> HPoint:
        spaces = [
            contact_space(instance, direction, start + r) for r in range(d)
        ]
        got = spaces[0] if d == 1 else meet(*spaces, tol=tol)
        if got.dim != 0:
            raise MeetEmpty(
                f"{d} consecutive contact spaces ({direction}, {start}) meet "
                f"in dimension {got.dim}"
            )
        return got.point()

    sigma = DCurve(
        [iterated_meet("h", j) for j in range(j0, j1 - d + 2)], origin=j0
    )
    tau = DCurve(
        [iterated_meet("v", i) for i in range(i0, i1 - d + 2)], origin=i0
    )
    diag = diagonal_net(net, tol)
    forward, rep = iterated_laplace(diag, d, tol)
    if not rep.exists:
        raise NotGeneric("diagonal transform chain degenerates forward")
    for i in range(forward.i_range[0], forward.i_range[1] + 1):
        for j in range(forward.j_range[0], forward.j_range[1] + 1):
            gap = chordal(forward.at(i, j), tau.at(i + 1))
            if gap > verify_tol:
                raise NotGeneric(
                    f"forward diagonal transform misses tau({i + 1}) by {gap:.3e}"
                )
    backward, rep = iterated_laplace(diag, -d, tol)
    if not rep.exists:
        raise NotGeneric("diagonal transform chain degenerates backward")
    for i in range(backward.i_range[0], backward.i_range[1] + 1):
        for j in range(backward.j_range[0], backward.j_range[1] + 1):
            gap = chordal(backward.at(i, j), sigma.at(j + 1))
            if gap > verify_tol:
                raise NotGeneric(
                    f"backward diagonal transform misses sigma({j + 1}) by {gap:.3e}"
                )
    if not (
        is_autoconjugate(sigma, quadric, d, tol)
        and is_autoconjugate(tau, quadric, d, tol)
    ):
        raise NotGeneric("recovered curves are not autoconjugate")
    # Pair genericity is certifiable only when the recovered windows are
    # long enough; smaller windows pass through unchecked.
    if len(sigma) >= 2 * d + 1 and len(tau) >= 2 * d + 1:
        if not is_generic_pair(sigma, tau, tol):
            raise NotGeneric("recovered pair is not generic")
    return CurvePair(sigma=sigma, tau=tau, quadric=quadric, d=d)


def _polar_law(
    net: QNet,
    quadric: Quadric,
    d: int,
    polar_tol: float,
    tol: Tolerance,
) -> None:
    """Polar of an order-d diagonal point spans the 2d flanking transform
    points; checked in both directions wherever the window allows."""
    diag = diagonal_net(net, tol)
    for sign in (+1, -1):
        d_net, rep = iterated_laplace(diag, sign * d, tol)
        if not rep.exists:
            raise VerifyFailed("diagonal transform chain degenerates")
        p_net, rep = iterated_laplace(net, sign * d, tol)
        if not rep.exists:
            raise VerifyFailed("transform chain degenerates")
        if sign > 0:
            d_idx = range(d_net.i_range[0], d_net.i_range[1] + 1)
            p_lo, p_hi = p_net.i_range
            d_fixed = d_net.j_range[0]
            p_fixed = p_net.j_range[0]
        else:
            d_idx = range(d_net.j_range[0], d_net.j_range[1] + 1)
            p_lo, p_hi = p_net.j_range
            d_fixed = d_net.i_range[0]
            p_fixed = p_net.i_range[0]
        for k in d_idx:
            if k + 1 - d < p_lo or k + d > p_hi:
                continue
            if sign > 0:
                center = d_net.at(k, d_fixed)
                flank = [p_net.at(k + r, p_fixed) for r in range(1 - d, d + 1)]
            else:
                center = d_net.at(d_fixed, k)
                flank = [p_net.at(p_fixed, k + r) for r in range(1 - d, d + 1)]
            polar = quadric.polar(center, tol)
            span = join(*flank, tol=tol)
            gap = subspace_distance(polar, span)
            if gap > polar_tol:
                raise VerifyFailed(
                    f"polar of the order-{sign * d} diagonal point {k} misses "
                    f"the flanking span by {gap:.3e}"
                )


def roundtrip_check(
    obj: CurvePair | DGrid,
    polar_tol: float = 1e-8,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Maximal pointwise deviation of the composed correspondence.

    For a pair: generate the grid, recover the curves, compare against the
    input shifted by d-1. For a grid: recover the curves, rebuild the grid,
    compare against the input shifted by d-1 in both directions. Both runs
    also check that the polar of each order-d diagonal point spans the 2d
    flanking transform points.
    """
    if isinstance(obj, CurvePair):
        d = obj.d
        grid = curves_to_grid(obj, tol=tol)
        recovered = grid_to_curves(grid, tol=tol)
        worst = 0.0
        for original, came_back in (
            (obj.sigma, recovered.sigma),
            (obj.tau, recovered.tau),
        ):
            lo, hi = came_back.j_range
            for j in range(lo, hi + 1):
                worst = max(
                    worst, chordal(came_back.at(j), original.at(j + d - 1))
                )
        _polar_law(grid.net, obj.quadric, d, polar_tol, tol)
        return worst
    if isinstance(obj, DGrid):
        d = obj.d
        pair = grid_to_curves(obj, tol=tol)
        rebuilt = curves_to_grid(pair, tol=tol)
        worst = 0.0
        ri0, ri1 = rebuilt.net.i_range
        rj0, rj1 = rebuilt.net.j_range
        for i in range(ri0, ri1 + 1):
            for j in range(rj0, rj1 + 1):
                worst = max(
                    worst,
                    chordal(
                        rebuilt.net.at(i, j),
                        obj.net.at(i + d - 1, j + d - 1),
                    ),
                )
        _polar_law(obj.net, pair.quadric, d, polar_tol, tol)
        return worst
    raise TypeError(f"expected CurvePair or DGrid, got {type(obj).__name__}")
