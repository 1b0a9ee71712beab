"""Deterministic fixture generators used by tests and the CLI.

Everything is seeded; identical seeds reproduce identical nets bitwise.
"""
from __future__ import annotations

import math

import numpy as np

from .conics import ClosureFailure, TouchingInstance, propagate_instance
from .curves import CurvePair, DCurve, curves_to_grid, generate_pair
from .errors import DegenerateNet, GenerationFailed
from .grids import DGrid, check_dgrid, is_special_grid
from .nets import QNet, check_qnet, lift_extensive
from .projective import DEFAULT_TOL, HPoint, Tolerance, join, meet
from .quadrics import Quadric


def circle_tangent(theta: float) -> np.ndarray:
    """Line tangent to the unit circle at angle theta, as (w, x, y) coefficients."""
    return np.array([-1.0, math.cos(theta), math.sin(theta)])


def tangent_grid(col_angles, row_angles) -> QNet:
    """Koenigs 1-grid from unit-circle tangents.

    P(i,j) is the intersection of the tangents at col_angles[i] and
    row_angles[j], so each column lies on one tangent line and the circle is
    inscribed in every face.
    """
    cols = [circle_tangent(float(t)) for t in col_angles]
    rows = [circle_tangent(float(t)) for t in row_angles]
    if len(cols) < 2 or len(rows) < 2:
        raise ValueError("need at least two angles per direction")
    pts = [[HPoint(np.cross(ci, rj)) for rj in rows] for ci in cols]
    return QNet(pts)


def default_tangent_grid(rows: int = 4, cols: int = 4, seed: int = 0) -> QNet:
    """Well-spread tangent angles with a seeded jitter, rows x cols points."""
    rng = np.random.default_rng(seed)
    col_angles = [0.3 + 0.5 * i + 0.05 * rng.random() for i in range(rows)]
    row_angles = [3.45 + 0.5 * j + 0.05 * rng.random() for j in range(cols)]
    return tangent_grid(col_angles, row_angles)


def lifted_koenigs(
    rows: int = 3,
    cols: int = 3,
    seed: int = 0,
    seed_t: float = 0.5,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[QNet, TouchingInstance]:
    """Extensive net with touching conics, lifted from a tangent grid.

    The planar tangent grid is lifted one dimension at a time until it joins
    RP^{(rows-1)+(cols-1)}. Lifting is face-projective, so the touching
    property survives and the fresh propagation on the lift closes.
    """
    base = default_tangent_grid(rows, cols, seed)
    lifted, _ = lift_extensive(base, rng=np.random.default_rng(seed + 0x5EED), tol=tol)
    instance = propagate_instance(lifted, seed_t=seed_t, tol=tol)
    if isinstance(instance, ClosureFailure):
        raise GenerationFailed(
            f"lifted instance does not close, residual {instance.residual:.3e}"
        )
    return lifted, instance


def autoconjugate_grid(
    d: int = 2, length: int = 8, seed: int = 42
) -> tuple[DGrid, CurvePair]:
    """Koenigs d-grid built from a seeded generic autoconjugate pair."""
    pair = generate_pair(d, length, seed)
    return curves_to_grid(pair), pair


def _confined_candidates(
    matrix: np.ndarray, window: list[np.ndarray], rng: np.random.Generator, want: int = 6
) -> list[np.ndarray]:
    """Quadric points inside span(window) that are conjugate to its last point.

    The window spans a hyperplane, the conjugacy condition cuts a plane inside
    it, and the quadric meets that plane in a conic. Candidates are the real
    intersections of seeded random lines with that conic.
    """
    hull = np.linalg.svd(np.vstack(window))[2][: len(window)]
    row = (matrix @ window[-1]) @ hull.T
    plane = hull.T @ np.linalg.svd(row[None, :])[2][1:].T
    conic = plane.T @ matrix @ plane
    out: list[np.ndarray] = []
    for _ in range(256):
        a = rng.standard_normal(conic.shape[0])
        b = rng.standard_normal(conic.shape[0])
        aa = float(a @ conic @ a)
        bb = float(a @ conic @ b)
        cc = float(b @ conic @ b)
        disc = bb * bb - aa * cc
        if disc <= 0.0 or abs(aa) < 1e-12:
            continue
        for s in ((-bb + math.sqrt(disc)) / aa, (-bb - math.sqrt(disc)) / aa):
            v = plane @ (s * a + b)
            out.append(v / np.linalg.norm(v))
        if len(out) >= want:
            break
    return out


def special_grid(seed: int = 0) -> DGrid:
    """Koenigs 2-grid on a 4x4 window whose diagonal spans all collapse.

    Starts from a seeded generic autoconjugate pair and pulls the fifth point
    of each curve back into the span of its first four, staying on the quadric
    and conjugate to the fourth point. One confinement per curve collapses
    every parameter space of the diagonal intersection net to a line, so the
    grid is special: the order-two Laplace transforms in both directions
    degenerate to a single point, and no instance of touching conics has
    full-dimensional contact spans.
    """
    pair = generate_pair(2, 8, seed)
    matrix = pair.quadric.matrix
    polar = pair.quadric.polar
    taus = [pair.tau.at(i).v for i in range(4)]
    sigs = [pair.sigma.at(j).v for j in range(4)]
    rng = np.random.default_rng(seed + 0xD1A6)
    sig_cands = _confined_candidates(matrix, sigs, rng)
    tau_cands = _confined_candidates(matrix, taus, rng)
    for s_new in sig_cands:
        for t_new in tau_cands:
            ts = taus + [t_new]
            ss = sigs + [s_new]
            rows = []
            for i in range(4):
                row = []
                tp = polar(join(HPoint(ts[i]), HPoint(ts[i + 1])))
                for j in range(4):
                    got = meet(tp, polar(join(HPoint(ss[j]), HPoint(ss[j + 1]))))
                    if got.dim != 0:
                        break
                    row.append(got.point())
                if len(row) < 4:
                    break
                rows.append(row)
            if len(rows) < 4:
                continue
            net = QNet(rows)
            if not check_qnet(net).is_nondegenerate:
                continue
            grid = check_dgrid(net, 2)
            if not isinstance(grid, DGrid):
                continue
            try:
                if is_special_grid(grid):
                    return grid
            except DegenerateNet:
                continue
    raise GenerationFailed(f"no special grid reachable from seed {seed}")


def circle_pair(sigma_angles, tau_angles) -> CurvePair:
    """Order-1 autoconjugate pair on the unit circle.

    Its grid is the tangent grid of the same angles: polar spaces of circle
    points are their tangent lines.
    """
    circle = Quadric(np.diag([-1.0, 1.0, 1.0]))
    sigma = DCurve(
        [HPoint([1.0, math.cos(float(a)), math.sin(float(a))]) for a in sigma_angles]
    )
    tau = DCurve(
        [HPoint([1.0, math.cos(float(a)), math.sin(float(a))]) for a in tau_angles]
    )
    return CurvePair(sigma=sigma, tau=tau, quadric=circle, d=1)


def random_qnet(
    rows: int,
    cols: int,
    ambient_dim: int,
    rng: np.random.Generator,
    tol: Tolerance = DEFAULT_TOL,
    max_tries: int = 64,
) -> QNet:
    """Random non-degenerate Q-net: seeded boundary, planar interior filling.

    Interior points are random combinations of the three already-filled face
    corners, which makes every face planar; generically the result is not a
    Koenigs net.
    """
    n1 = ambient_dim + 1
    for _ in range(max_tries):
        grid = [[None] * cols for _ in range(rows)]
        for j in range(cols):
            grid[0][j] = HPoint(rng.standard_normal(n1))
        for i in range(1, rows):
            grid[i][0] = HPoint(rng.standard_normal(n1))
        for i in range(1, rows):
            for j in range(1, cols):
                coeff = rng.standard_normal(3)
                coeff /= np.abs(coeff).max()
                v = (
                    coeff[0] * grid[i - 1][j - 1].v
                    + coeff[1] * grid[i - 1][j].v
                    + coeff[2] * grid[i][j - 1].v
                )
                if np.abs(v).max() <= 1e-12:
                    break
                grid[i][j] = HPoint(v)
            else:
                continue
            break
        if any(p is None for row in grid for p in row):
            continue
        net = QNet(grid)
        report = check_qnet(net, tol)
        if report.is_qnet and report.is_nondegenerate:
            return net
    raise GenerationFailed("could not draw a non-degenerate random Q-net")


def perturb_net(net: QNet, rng: np.random.Generator, magnitude: float = 1e-3) -> QNet:
    """Jitter every point; destroys Koenigs closure at the given scale."""
    return net.map_points(
        lambda p: HPoint(p.v + magnitude * rng.standard_normal(p.v.size))
    )


def unit_square_face() -> tuple[HPoint, HPoint, HPoint, HPoint]:
    """Corners (p00, p10, p11, p01) of the affine unit square in RP^2."""
    return (
        HPoint([1.0, 0.0, 0.0]),
        HPoint([1.0, 1.0, 0.0]),
        HPoint([1.0, 1.0, 1.0]),
        HPoint([1.0, 0.0, 1.0]),
    )
