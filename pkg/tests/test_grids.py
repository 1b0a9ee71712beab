import math

import numpy as np
import pytest

from koenigsnet.conics import is_koenigs, propagate_instance
from koenigsnet.errors import (
    HypothesisFailed,
    NotInParameterSpace,
    WindowTooSmall,
)
from koenigsnet.fixtures import autoconjugate_grid, tangent_grid
from koenigsnet.grids import (
    DGrid,
    GridDimensionReport,
    check_dgrid,
    extend_grid,
    incidence_check,
    is_generic_grid,
    is_special_grid,
    special_inscribed_quadric,
    special_touching_conics,
    tangency_space,
)
from koenigsnet.nets import QNet, iterated_laplace, parameter_space
from koenigsnet.projective import HPoint, chordal, join, meet, subspace_distance
from koenigsnet.quadrics import Quadric, quadrics_equal

COLS = [0.3, 0.85, 1.3, 1.95]
ROWS = [3.45, 3.9, 4.5, 4.95]

UNIT_CIRCLE = Quadric(np.diag([-1.0, 1.0, 1.0]))


def tangent_point(a: float, b: float) -> HPoint:
    # Intersection of the unit-circle tangents at angles a and b.
    return HPoint(
        [
            math.cos(0.5 * (a - b)),
            math.cos(0.5 * (a + b)),
            math.sin(0.5 * (a + b)),
        ]
    )


def circle_point(theta: float) -> HPoint:
    return HPoint([1.0, math.cos(theta), math.sin(theta)])


def tangent_1grid() -> DGrid:
    grid = check_dgrid(tangent_grid(COLS, ROWS), 1)
    assert isinstance(grid, DGrid)
    return grid


def random_line_grid(seed: int) -> QNet:
    # Rows and columns collinear by construction, but the lines are not
    # tangent to a common conic, so the net is not Koenigs.
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((4, 3))
    b = rng.standard_normal((4, 3))
    pts = [[HPoint(np.cross(a[i], b[j])) for j in range(4)] for i in range(4)]
    return QNet(pts)


def test_check_dgrid_accepts_tangent_grid():
    grid = tangent_1grid()
    assert grid.d == 1
    assert grid.net.rows == 4 and grid.net.cols == 4


def test_check_dgrid_reports_offending_index():
    report = check_dgrid(tangent_grid(COLS, ROWS), 2)
    assert isinstance(report, GridDimensionReport)
    assert report.expected == 2
    # Every row and column span is a line, so everything is reported.
    assert len(report.failures) == 8
    assert {f.dim for f in report.failures} == {1}


def test_tangent_grid_is_generic():
    report = is_generic_grid(tangent_1grid())
    assert report.sigma_dd_extensive
    assert report.p_d_exists and report.p_minus_d_exists
    assert report.is_generic


def test_generic_grid_window_too_small():
    net = tangent_grid(COLS[:2], ROWS[:2]).window(0, 0, 0, 1)
    with pytest.raises(WindowTooSmall):
        is_generic_grid(DGrid(net, 1))


def test_laplace_point_is_row_span_meet():
    # The order-d transform is independent of j and equals the meet of
    # d+1 consecutive row spans; for tangents that meet is closed-form.
    grid = tangent_1grid()
    p1, report = iterated_laplace(grid.net, 1)
    assert report.exists
    for i in range(3):
        expected = tangent_point(COLS[i], COLS[i + 1])
        for j in range(p1.cols):
            assert chordal(p1.at(i, j), expected) < 1e-9
    spans = [parameter_space(grid.net, "v", i) for i in range(3)]
    assert meet(*spans).is_empty()


def test_special_touching_conics_tangent_grid():
    grid = tangent_1grid()
    inst = special_touching_conics(grid)
    assert inst.max_residual < 1e-9
    for i in range(3):
        for j in range(4):
            assert chordal(inst.s_net.at(i, j), circle_point(ROWS[j])) < 1e-9
    for i in range(4):
        for j in range(3):
            assert chordal(inst.t_net.at(i, j), circle_point(COLS[i])) < 1e-9


def test_special_instance_agrees_with_propagation():
    grid = tangent_1grid()
    inst = special_touching_conics(grid)
    seeded = propagate_instance(
        grid.net, seed_t=inst.seed[1], seed_face=inst.seed[0]
    )
    for i in range(3):
        for j in range(4):
            assert chordal(inst.s_net.at(i, j), seeded.s_net.at(i, j)) < 1e-9
    for i in range(4):
        for j in range(3):
            assert chordal(inst.t_net.at(i, j), seeded.t_net.at(i, j)) < 1e-9


def test_special_inscribed_quadric_is_unit_circle():
    quadric = special_inscribed_quadric(tangent_1grid())
    assert quadrics_equal(quadric, UNIT_CIRCLE, tol=1e-8)


def test_tangency_space_of_row_span():
    grid = tangent_1grid()
    for i in range(4):
        span = parameter_space(grid.net, "v", i)
        contact = tangency_space(UNIT_CIRCLE, span)
        assert contact.dim == 0
        assert chordal(contact.point(), circle_point(COLS[i])) < 1e-10


def test_is_special_grid_false_for_tangent_grid():
    assert not is_special_grid(tangent_1grid())


def test_is_special_grid_window_too_small():
    grid = DGrid(tangent_grid(COLS[:2], ROWS[:2]), 1)
    with pytest.raises(WindowTooSmall):
        is_special_grid(grid)


def test_incidence_check_tangent_grid():
    assert incidence_check(tangent_1grid())


def test_incidence_check_window():
    grid = DGrid(tangent_grid(COLS[:3], ROWS[:3]), 1)
    with pytest.raises(WindowTooSmall):
        incidence_check(grid)


def test_incidence_check_rejects_non_koenigs_restriction():
    net = random_line_grid(5)
    grid = check_dgrid(net, 1)
    assert isinstance(grid, DGrid)
    with pytest.raises(HypothesisFailed):
        incidence_check(grid)


def test_extend_grid_new_column_matches_tangents():
    grid = tangent_1grid()
    theta = 5.6
    seed = tangent_point(COLS[0], theta)
    extended = extend_grid(grid, "+j", seed, UNIT_CIRCLE)
    assert extended.net.cols == 5
    assert extended.net.origin == (0, 0)
    for i in range(4):
        assert chordal(extended.net.at(i, 4), tangent_point(COLS[i], theta)) < 1e-9
        for j in range(4):
            assert chordal(extended.net.at(i, j), grid.net.at(i, j)) < 1e-15


def test_extend_grid_remaining_sides():
    grid = tangent_1grid()
    theta = 5.9
    cases = {
        "-j": (tangent_point(COLS[0], theta), (0, -1)),
        "+i": (tangent_point(ROWS[0], theta), (0, 0)),
        "-i": (tangent_point(ROWS[0], theta), (-1, 0)),
    }
    for side, (seed, origin) in cases.items():
        extended = extend_grid(grid, side, seed, UNIT_CIRCLE)
        assert extended.net.origin == origin, side
        if side == "-j":
            expected = [tangent_point(COLS[i], theta) for i in range(4)]
            got = [extended.net.at(i, -1) for i in range(4)]
        elif side == "+i":
            expected = [tangent_point(ROWS[j], theta) for j in range(4)]
            got = [extended.net.at(4, j) for j in range(4)]
        else:
            expected = [tangent_point(ROWS[j], theta) for j in range(4)]
            got = [extended.net.at(-1, j) for j in range(4)]
        for want, have in zip(expected, got):
            assert chordal(want, have) < 1e-9, side


def test_extend_grid_rejects_outside_seed():
    grid = tangent_1grid()
    with pytest.raises(NotInParameterSpace):
        extend_grid(grid, "+j", HPoint([1.0, 0.2, 0.3]), UNIT_CIRCLE)


@pytest.fixture(scope="module")
def gen2():
    return autoconjugate_grid()


def test_order_two_contacts_lie_on_curve_chords(gen2):
    # The contact points of the distinguished instance fill the chords of
    # the generating curves: column contacts the sigma chords, row
    # contacts the tau chords.
    grid, pair = gen2
    inst = special_touching_conics(grid)
    assert inst.max_residual < 1e-8
    i0, i1 = grid.net.i_range
    j0, j1 = grid.net.j_range
    for j in range(j0, j1 + 1):
        chord = join(pair.sigma.at(j), pair.sigma.at(j + 1))
        for i in range(i0, i1):
            assert chord.point_residual(inst.s_net.at(i, j)) < 1e-8
    for i in range(i0, i1 + 1):
        chord = join(pair.tau.at(i), pair.tau.at(i + 1))
        for j in range(j0, j1):
            assert chord.point_residual(inst.t_net.at(i, j)) < 1e-8


def test_order_two_spans_touch_along_chords(gen2):
    # Row spans are the polar spaces of isotropic tau chords, so the
    # quadric restricts to rank one and the contact locus is the chord.
    grid, pair = gen2
    for i in range(7):
        span = parameter_space(grid.net, "v", i)
        contact = tangency_space(pair.quadric, span)
        assert contact.dim == 1
        chord = join(pair.tau.at(i), pair.tau.at(i + 1))
        assert subspace_distance(contact, chord) < 1e-8
    for j in range(7):
        span = parameter_space(grid.net, "h", j)
        contact = tangency_space(pair.quadric, span)
        chord = join(pair.sigma.at(j), pair.sigma.at(j + 1))
        assert subspace_distance(contact, chord) < 1e-8


def test_special_quadric_matches_generating_quadric(gen2):
    grid, pair = gen2
    assert quadrics_equal(special_inscribed_quadric(grid), pair.quadric, tol=1e-7)


def test_special_quadric_is_window_independent(gen2):
    grid, _ = gen2
    first = check_dgrid(grid.net.window(0, 3, 0, 3), 2)
    shifted = check_dgrid(grid.net.window(1, 4, 1, 4), 2)
    assert isinstance(first, DGrid) and isinstance(shifted, DGrid)
    assert quadrics_equal(
        special_inscribed_quadric(first),
        special_inscribed_quadric(shifted),
        tol=1e-8,
    )


def test_extend_order_two_grid(gen2):
    grid, _ = gen2
    window = check_dgrid(grid.net.window(0, 3, 0, 3), 2)
    quadric = special_inscribed_quadric(window)
    span = parameter_space(window.net, "v", 0)
    seed = HPoint(span.basis @ np.random.default_rng(17).standard_normal(3))
    extended = extend_grid(window, "+j", seed, quadric)
    assert extended.d == 2
    assert extended.net.rows == 4 and extended.net.cols == 5
    assert is_koenigs(extended.net).propagation_closure
    # The grown column joins the same special quadric.
    assert quadrics_equal(special_inscribed_quadric(extended), quadric, tol=1e-7)


def test_incidence_check_order_two(gen2):
    grid, _ = gen2
    window = check_dgrid(grid.net.window(0, 4, 0, 4), 2)
    assert incidence_check(window)


def test_generated_grid_is_not_special(gen2):
    grid, _ = gen2
    assert not is_special_grid(grid)
