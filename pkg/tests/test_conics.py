import math

import numpy as np
import pytest

from koenigsnet.conics import (
    ClosureFailure,
    TouchingInstance,
    binet_check,
    bipartite_hyperplanes,
    conic_family,
    conic_from_contact,
    contact_points,
    is_koenigs,
    propagate_instance,
    sample_conic,
    touching_nets,
)
from koenigsnet.errors import DegenerateFace, OffEdge, VertexContact
from koenigsnet.fixtures import (
    default_tangent_grid,
    perturb_net,
    random_qnet,
    unit_square_face,
)
from koenigsnet.nets import QNet, check_qnet, parameter_space
from koenigsnet.projective import HPoint, chordal, cross_ratio, join, meet


def generic_quad():
    return (
        HPoint([1.0, 0.1, -0.2]),
        HPoint([1.0, 1.3, 0.15]),
        HPoint([1.0, 1.1, 1.4]),
        HPoint([1.0, -0.25, 0.9]),
    )


def test_dual_pencil_tangency():
    fam = conic_family(generic_quad())
    for t in np.linspace(0.1, 0.9, 9):
        member = fam.dual_member(float(t))
        for edge, line in fam.edge_lines.items():
            assert abs(float(line @ member @ line)) < 1e-10, edge


def test_unit_square_contact_is_affine_in_t():
    fam = conic_family(unit_square_face())
    for t in (0.2, 0.5, 0.73):
        c = fam.contact(t, "bottom")
        assert chordal(c, HPoint([1.0, t, 0.0])) < 1e-12


def test_unit_square_circle_member():
    # Frozen: contact at the bottom midpoint belongs to the inscribed circle
    # x^2 + y^2 - x - y + 1/4 = 0, touching all four edge midpoints.
    t, primal = conic_from_contact(unit_square_face(), "bottom", HPoint([1.0, 0.5, 0.0]))
    assert abs(t - 0.5) < 1e-12
    for theta in (0.0, 0.9, 2.4, 4.0):
        p = HPoint([1.0, 0.5 + 0.5 * math.cos(theta), 0.5 + 0.5 * math.sin(theta)])
        assert primal.contains_point(p)


def test_contact_parameter_roundtrip():
    fam = conic_family(generic_quad())
    for edge in ("bottom", "right", "top", "left"):
        for t in (0.3, 0.62, -0.4, 1.7):
            c = fam.contact(t, edge)
            assert abs(fam.t_from_contact(edge, c) - t) < 1e-9


def test_contact_errors():
    face = unit_square_face()
    with pytest.raises(VertexContact):
        conic_from_contact(face, "bottom", HPoint([1.0, 0.0, 0.0]))
    with pytest.raises(OffEdge):
        conic_from_contact(face, "bottom", HPoint([1.0, 0.5, 0.25]))


def test_degenerate_face_rejected():
    p = HPoint([1.0, 0.0, 0.0])
    q = HPoint([1.0, 1.0, 0.0])
    r = HPoint([1.0, 2.0, 0.0])
    s = HPoint([1.0, 0.0, 1.0])
    with pytest.raises(DegenerateFace):
        conic_family((p, q, r, s))


def test_contact_points_of_circle_are_midpoints():
    pts = contact_points(unit_square_face(), 0.5)
    expected = {
        "bottom": HPoint([1.0, 0.5, 0.0]),
        "right": HPoint([1.0, 1.0, 0.5]),
        "top": HPoint([1.0, 0.5, 1.0]),
        "left": HPoint([1.0, 0.0, 0.5]),
    }
    for edge, point in expected.items():
        assert chordal(pts[edge], point) < 1e-12


def test_harmonic_separation_of_diagonals():
    p00, p10, p11, p01 = generic_quad()
    fam = conic_family((p00, p10, p11, p01))
    cts = fam.contacts(0.37)
    diag1 = join(p00, p11)
    diag2 = join(p10, p01)
    s_line = join(cts["bottom"], cts["top"])
    t_line = join(cts["left"], cts["right"])
    x = meet(diag1, diag2)
    assert x.dim == 0
    for line in (s_line, t_line):
        assert line.contains_point(x.point())
    transversal = join(HPoint([1.0, -2.0, 0.3]), HPoint([1.0, 3.0, -1.1]))
    samples = [
        meet(line, transversal).point() for line in (diag1, s_line, diag2, t_line)
    ]
    assert abs(cross_ratio(*samples, carrier=transversal) + 1.0) < 1e-9


def test_third_degenerate_member_sits_at_infinity():
    # The corner scaling pushes the third singular member to t = infinity:
    # the determinant of the dual member is only quadratic in t with roots
    # 0 and 1, and the limit direction A - B is the dual pair of the two
    # diagonal points of the complete quadrilateral.
    p00, p10, p11, p01 = generic_quad()
    fam = conic_family((p00, p10, p11, p01))
    ts = np.linspace(-2.0, 3.0, 7)
    coeffs = np.polyfit(ts, [np.linalg.det(fam.dual_member(float(t))) for t in ts], 3)
    assert abs(coeffs[0]) < 1e-10 * max(abs(c) for c in coeffs[1:])
    finite_roots = sorted(r.real for r in np.roots(coeffs[1:]))
    assert abs(finite_roots[0]) < 1e-9 and abs(finite_roots[1] - 1.0) < 1e-9
    fwd = meet(join(p00, p01), join(p10, p11)).point()
    bwd = meet(join(p00, p10), join(p01, p11)).point()
    cf = fam.plane.basis.T @ fwd.v
    cb = fam.plane.basis.T @ bwd.v
    pair = np.outer(cf, cb) + np.outer(cb, cf)
    limit = fam.a_form - fam.b_form
    pair /= np.linalg.norm(pair)
    limit /= np.linalg.norm(limit)
    assert min(np.linalg.norm(limit - pair), np.linalg.norm(limit + pair)) < 1e-9


def test_propagation_closes_on_tangent_grid():
    net = default_tangent_grid(4, 4, seed=2)
    for t in (0.15, 0.5, 0.82):
        instance = propagate_instance(net, seed_t=t)
        assert isinstance(instance, TouchingInstance)
        assert instance.max_residual < 1e-10


def test_propagation_fails_on_random_qnet():
    rng = np.random.default_rng(13)
    net = random_qnet(3, 3, 3, rng)
    outcome = propagate_instance(net, seed_t=0.4)
    assert isinstance(outcome, ClosureFailure)
    assert outcome.residual > 1e-4


def test_circle_instance_has_constant_contact_rows():
    # Seeding with the circle's own tangency point must reproduce the circle
    # on every face: S is then constant along i.
    net = default_tangent_grid(4, 4, seed=5)
    edge_line = join(net.at(0, 0), net.at(1, 0))
    # Tangency point of that edge with the unit circle is its pole.
    circle = np.diag([-1.0, 1.0, 1.0])
    line_coeffs = np.cross(net.at(0, 0).v, net.at(1, 0).v)
    pole = HPoint(np.linalg.solve(circle, line_coeffs))
    assert edge_line.contains_point(pole)
    t_seed, _ = conic_from_contact(
        [net.at(0, 0), net.at(1, 0), net.at(1, 1), net.at(0, 1)], "bottom", pole
    )
    instance = propagate_instance(net, seed_t=t_seed)
    assert isinstance(instance, TouchingInstance)
    s, t = touching_nets(instance)
    for j in range(s.j_range[0], s.j_range[1] + 1):
        col = [s.at(i, j) for i in range(s.i_range[0], s.i_range[1] + 1)]
        for p in col[1:]:
            assert chordal(p, col[0]) < 1e-9
    for i in range(t.i_range[0], t.i_range[1] + 1):
        row = [t.at(i, j) for j in range(t.j_range[0], t.j_range[1] + 1)]
        for p in row[1:]:
            assert chordal(p, row[0]) < 1e-9


def test_is_koenigs_planar_reports():
    net = default_tangent_grid(3, 3, seed=7)
    report = is_koenigs(net)
    assert report.propagation_closure
    assert report.vertex_coplanarity is None
    rng = np.random.default_rng(3)
    bad = perturb_net(net, rng, 1e-2)
    report2 = is_koenigs(bad)
    assert not report2.propagation_closure


def test_is_koenigs_spatial_random_net_fails_both():
    rng = np.random.default_rng(23)
    net = random_qnet(4, 4, 3, rng)
    report = is_koenigs(net)
    assert not report.propagation_closure
    assert report.vertex_coplanarity is False


def test_binet_identities_on_tangent_grid():
    net = default_tangent_grid(5, 5, seed=1)
    instance = propagate_instance(net, seed_t=0.3)
    assert isinstance(instance, TouchingInstance)
    report = binet_check(instance)
    assert report.samples > 0
    assert report.max_hs_kt is not None and report.max_hs_kt < 1e-8
    assert report.max_ht_ks is not None and report.max_ht_ks < 1e-8


def test_bipartite_hyperplanes_of_single_quad():
    face = unit_square_face()
    net = QNet([[face[0], face[3]], [face[1], face[2]]])
    u1, u2 = bipartite_hyperplanes(net)
    # Parity classes of a quad are its diagonals.
    assert u1.dim == 1 and u2.dim == 1
    assert u1.contains_point(face[0]) and u1.contains_point(face[2])
    assert u2.contains_point(face[1]) and u2.contains_point(face[3])


def test_sample_conic_points_lie_on_it():
    _, primal = conic_from_contact(unit_square_face(), "bottom", HPoint([1.0, 0.5, 0.0]))
    pts = sample_conic(primal, count=32)
    assert len(pts) == 32
    for p in pts:
        assert primal.contains_point(p)
