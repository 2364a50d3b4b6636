"""Curve, domain validation, and excision tests."""

import numpy as np
import pytest

from circlemap.errors import (
    DegenerateCurve,
    OverlappingCurves,
    PunctureOutsideDomain,
    RhoTooLarge,
)
from circlemap.geometry import (
    Curve,
    PunctureSet,
    build_domain,
    curve_frame,
    omega_rho,
    total_turning,
    winding_number,
)

from conftest import annulus, disk, wobbly_curve


def test_circle_geometry_exact():
    c = Curve.circle((1.0, -2.0), 0.5)
    t = np.linspace(0, 2 * np.pi, 7)
    p = c.point(t)
    assert np.allclose(np.linalg.norm(p - [1.0, -2.0], axis=-1), 0.5)
    assert np.allclose(c.speed(t), 0.5)
    assert abs(c.diameter - 1.0) < 1e-12


def test_curve_frame_normals_point_out_of_domain():
    outer = Curve.circle((0, 0), 1.0)
    hole = Curve.circle((0, 0), 0.4)
    p, tau, nu, sp = curve_frame(outer, 0.0, hole=False)
    assert np.allclose(nu, [1.0, 0.0], atol=1e-14)   # outward on the outer
    p, tau, nu, sp = curve_frame(hole, 0.0, hole=True)
    assert np.allclose(nu, [-1.0, 0.0], atol=1e-14)  # into the hole


def test_winding_and_turning():
    c = Curve.circle((0, 0), 1.0)
    assert winding_number(c, [(0.0, 0.0)])[0] == 1
    assert winding_number(c, [(2.0, 0.0)])[0] == 0
    assert abs(total_turning(c) - 2 * np.pi) < 1e-10


def test_wobbly_curve_is_valid_and_contains_center():
    c = wobbly_curve((0.2, 0.1), 1.0, 0.15, 4, phase=0.7)
    dom = build_domain(c, panels=128)
    assert dom.contains([(0.2, 0.1)])[0]


def test_clockwise_curve_rejected():
    cw = Curve.fourier(ax=(0, 1), bx=(0, 0), ay=(0, 0), by=(0, -1))
    with pytest.raises(DegenerateCurve):
        build_domain(cw)


def test_zero_speed_curve_rejected():
    degenerate = Curve.fourier(ax=(0.0,), bx=(0.0,), ay=(0.0,), by=(0.0,))
    with pytest.raises(DegenerateCurve):
        build_domain(degenerate)


def test_self_intersecting_curve_rejected():
    # figure-eight-like curve: x = cos t, y = sin 2t
    fig8 = Curve.fourier(ax=(0, 1), bx=(0, 0), ay=(0, 0), by=(0, 0, 1))
    with pytest.raises(DegenerateCurve):
        build_domain(fig8)


def test_hole_outside_outer_rejected():
    with pytest.raises(OverlappingCurves):
        build_domain(Curve.circle((0, 0), 1.0),
                     holes=(Curve.circle((2.0, 0), 0.3),))


def test_overlapping_holes_rejected():
    with pytest.raises(OverlappingCurves):
        build_domain(Curve.circle((0, 0), 1.0),
                     holes=(Curve.circle((0.1, 0), 0.3),
                            Curve.circle((-0.1, 0), 0.3),))


def test_puncture_inside_hole_rejected():
    with pytest.raises(PunctureOutsideDomain):
        annulus(r_in=0.4, punctures=((0.0, 0.0),), degrees=(1,))


def test_zero_degree_puncture_rejected():
    with pytest.raises(PunctureOutsideDomain):
        disk(punctures=((0.3, 0.0),), degrees=(0,))


def test_rho_max_clearances():
    dom = disk(punctures=((0.0, 0.0), (0.5, 0.0)), degrees=(1, 1))
    # punctures are 0.5 apart, boundary clearance 0.5 -> rho_max = 0.25
    assert abs(dom.rho_max - 0.25) < 1e-3
    assert disk().rho_max == np.inf


def test_omega_rho_excises_circles():
    dom = disk(punctures=((0.3, 0.0),), degrees=(1,))
    om = omega_rho(dom, 0.1)
    assert om.n_holes == 1
    assert om.punctures.k == 0
    assert not om.contains([(0.3, 0.0)])[0]
    assert om.contains([(-0.3, 0.0)])[0]
    with pytest.raises(RhoTooLarge):
        omega_rho(dom, 0.9)
    with pytest.raises(RhoTooLarge):
        omega_rho(disk(), 0.1)


def test_punctures_immutable_and_typed():
    ps = PunctureSet(((0.1, 0.2),), (2,))
    assert ps.degrees == (2,)
    assert ps.total_degree == 2
    assert ps.points_array.shape == (1, 2)
