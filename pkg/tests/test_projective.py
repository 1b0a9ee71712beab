import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koenigsnet.errors import (
    DegenerateQuadruple,
    InCenter,
    MixedAmbient,
    NotCollinear,
    NotSupplementary,
)
from koenigsnet.projective import (
    CentralProjection,
    HPoint,
    ProjMap,
    ProjSubspace,
    Tolerance,
    chordal,
    cross_ratio,
    join,
    meet,
    random_projective_map,
    subspace_distance,
)

# Frozen cross-ratio values, derived with exact fraction arithmetic from the
# affine form (x2-x1)(x4-x3) / ((x3-x2)(x1-x4)) before the implementation
# existed. Points (1, x_i) on RP^1 realize these affine parameters.
CRO_2345 = -1.0 / 3.0
CRO_GENERIC = 67.0 / 117.0  # parameters 0.3, 1.7, -2.2, 4.5
CRO_HARMONIC_ARGS = (-1.0, 0.5, 1.0, 2.0)  # separated pairs {-1,1}, {1/2,2}


def line_points(xs, a, b):
    return [HPoint(a + x * b) for x in xs]


finite_vec = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False),
    min_size=3,
    max_size=6,
).filter(lambda xs: max(abs(x) for x in xs) > 1e-6)


@given(finite_vec)
def test_canonicalization_bitwise_idempotent(xs):
    p = HPoint(xs)
    q = HPoint(p.v)
    assert np.array_equal(p.v, q.v)


@given(finite_vec)
def test_canonical_leading_entry(xs):
    v = HPoint(xs).v
    k = int(np.argmax(np.abs(v)))
    assert v[k] == 1.0
    assert np.abs(v).max() == 1.0


def test_hpoint_rejects_bad_input():
    with pytest.raises(ValueError):
        HPoint([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        HPoint([1.0, float("nan")])
    with pytest.raises(ValueError):
        HPoint([2.0])


def test_chordal_scale_and_sign_invariance():
    p = HPoint([1.0, 2.0, -3.0])
    assert chordal(p, HPoint([-2.0, -4.0, 6.0])) == 0.0
    q = HPoint([1.0, 2.0, -3.0 + 1e-8])
    assert 0.0 < chordal(p, q) < 1e-7


def test_join_points_spans_line():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 5))
    p, q = HPoint(a), HPoint(b)
    line = join(p, q)
    assert line.dim == 1
    assert line.contains_point(HPoint(0.25 * a - 1.5 * b))
    assert not line.contains_point(HPoint(rng.standard_normal(5)))


def test_join_is_rank_aware():
    # Three collinear points still span only a line.
    a = np.array([1.0, 0.0, 2.0, 0.0])
    b = np.array([0.0, 1.0, 0.0, -1.0])
    pts = [HPoint(a), HPoint(b), HPoint(a + 2 * b)]
    assert join(*pts).dim == 1


def test_join_mixed_ambient_rejected():
    with pytest.raises(MixedAmbient):
        join(HPoint([1.0, 2.0]), HPoint([1.0, 2.0, 3.0]))


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_generic_join_meet_dimension_formula(seed):
    # In RP^5, generic subspaces of projective dims a and b satisfy
    # dim join = min(a+b+1, 5) and dim meet = max(a+b-5, -1).
    rng = np.random.default_rng(seed)
    n = 5
    a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
    sa = ProjSubspace.from_spanning(rng.standard_normal((n + 1, a + 1)))
    sb = ProjSubspace.from_spanning(rng.standard_normal((n + 1, b + 1)))
    assert sa.dim == a and sb.dim == b
    assert join(sa, sb).dim == min(a + b + 1, n)
    assert meet(sa, sb).dim == max(a + b - n, -1)


def test_meet_planes_in_rp3_is_line():
    rng = np.random.default_rng(2)
    shared = rng.standard_normal((4, 2))
    pa = ProjSubspace.from_spanning(np.column_stack([shared, rng.standard_normal(4)]))
    pb = ProjSubspace.from_spanning(np.column_stack([shared, rng.standard_normal(4)]))
    line = meet(pa, pb)
    assert line.dim == 1
    assert subspace_distance(line, ProjSubspace.from_spanning(shared)) < 1e-9


def test_cross_ratio_frozen_values_rp1():
    def cro_of(xs):
        pts = [HPoint([1.0, x]) for x in xs]
        return cross_ratio(*pts)

    assert math.isclose(cro_of((2, 3, 4, 5)), CRO_2345, rel_tol=0, abs_tol=1e-14)
    assert math.isclose(cro_of((0, 1, 2, 3)), CRO_2345, rel_tol=0, abs_tol=1e-14)
    assert math.isclose(
        cro_of((0.3, 1.7, -2.2, 4.5)), CRO_GENERIC, rel_tol=0, abs_tol=1e-13
    )
    assert math.isclose(cro_of(CRO_HARMONIC_ARGS), -1.0, rel_tol=0, abs_tol=1e-14)


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_cross_ratio_parameterization_independent(seed):
    # Embedding x -> a + x b into any ambient space preserves the affine value.
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 6))
    pts = line_points((0.3, 1.7, -2.2, 4.5), a, b)
    assert abs(cross_ratio(*pts) - CRO_GENERIC) < 1e-9


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_cross_ratio_projective_invariance(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 5))
    pts = line_points((2.0, 3.0, 4.0, 5.0), a, b)
    before = cross_ratio(*pts)
    g = random_projective_map(4, rng)
    after = cross_ratio(*[g(p) for p in pts])
    assert abs(before - after) < 1e-10


def test_cross_ratio_explicit_carrier_checked():
    pts = [HPoint([1.0, x, 0.0]) for x in (0, 1, 2, 3)]
    carrier = join(pts[0], pts[1])
    assert abs(cross_ratio(*pts, carrier=carrier) - CRO_2345) < 1e-14
    off = ProjSubspace.from_spanning(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(NotCollinear):
        cross_ratio(*pts, carrier=off)


def test_cross_ratio_error_cases():
    p = HPoint([1.0, 0.0, 0.0])
    q = HPoint([0.0, 1.0, 0.0])
    r = HPoint([0.0, 0.0, 1.0])
    with pytest.raises(NotCollinear):
        cross_ratio(p, q, r, HPoint([1.0, 1.0, 1.0]))
    with pytest.raises(DegenerateQuadruple):
        cross_ratio(p, p, p, p)
    with pytest.raises(DegenerateQuadruple):
        cross_ratio(p, p, p, q)
    # A single coincident pair in a denominator slot is projectively infinity.
    s = HPoint([1.0, 1.0, 0.0])
    assert cross_ratio(p, q, q, s) == math.inf


def test_central_projection_drops_last_coordinate():
    center = ProjSubspace.from_spanning(np.array([[0.0], [0.0], [0.0], [1.0]]))
    target = ProjSubspace.from_spanning(np.eye(4)[:, :3])
    proj = CentralProjection(center, target)
    img = proj(HPoint([2.0, -4.0, 1.0, 7.0]))
    assert chordal(img, HPoint([2.0, -4.0, 1.0, 0.0])) < 1e-12
    with pytest.raises(InCenter):
        proj(HPoint([0.0, 0.0, 0.0, 3.0]))


def test_central_projection_requires_supplementary():
    line = ProjSubspace.from_spanning(np.eye(4)[:, :2])
    plane = ProjSubspace.from_spanning(np.eye(4)[:, 1:])
    with pytest.raises(NotSupplementary):
        CentralProjection(line, plane)  # they share a direction


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_central_projection_preserves_cross_ratio(seed):
    rng = np.random.default_rng(seed)
    n = 4
    center = ProjSubspace.from_spanning(rng.standard_normal((n + 1, 2)))
    target = ProjSubspace.from_spanning(rng.standard_normal((n + 1, n - 1)))
    proj = CentralProjection(center, target)
    a, b = rng.standard_normal((2, n + 1))
    pts = line_points((0.0, 1.0, 2.0, 3.0), a, b)
    imgs = [proj(p) for p in pts]
    assert abs(cross_ratio(*imgs) - cross_ratio(*pts)) < 1e-8


def test_projmap_rank_checks():
    with pytest.raises(ValueError):
        ProjMap(np.array([[1.0, 2.0], [2.0, 4.0]]))
    rect = ProjMap(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    assert rect(HPoint([3.0, 5.0, 9.0])) == HPoint([3.0, 5.0])
    with pytest.raises(ValueError):
        rect.push_subspace(ProjSubspace.whole(2))


def test_subspace_point_extraction():
    s = ProjSubspace.from_points([HPoint([1.0, 2.0, 2.0])])
    assert s.dim == 0
    assert chordal(s.point(), HPoint([1.0, 2.0, 2.0])) < 1e-15
    with pytest.raises(ValueError):
        ProjSubspace.whole(2).point()


def test_tolerance_defaults():
    tol = Tolerance()
    assert tol.rank_rel == 1e-9 and tol.residual_abs == 1e-9
