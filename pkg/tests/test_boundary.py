"""Boundary data, degree quadrature, and compatibility bookkeeping."""

import numpy as np
import pytest

from circlemap.boundary import (
    FourierPhase,
    boundary_data_for,
    check_compatibility,
    current_density,
    degree,
    eval_g,
)
from circlemap.errors import BadComponentIndex
from circlemap.geometry import PunctureSet

from conftest import annulus, disk


def test_unit_modulus_exact():
    dom = disk()
    bd = boundary_data_for(dom, [3], [FourierPhase((0.2, 0.5), (0.0, -0.3))])
    t = np.linspace(0, 2 * np.pi, 50)
    assert np.allclose(np.abs(eval_g(bd, 0, t)), 1.0, atol=0.0)


def test_degree_returns_winding():
    dom = annulus()
    bd = boundary_data_for(
        dom, [2, -1],
        [FourierPhase((0.0, 0.4, 0.1)), FourierPhase((0.0,), (0.0, 0.7))],
    )
    for c, w in ((0, 2), (1, -1)):
        d, resid = degree(bd, c)
        assert d == w
        assert abs(resid) < 1e-10


def test_degree_random_phases():
    rng = np.random.default_rng(7)
    dom = disk()
    for _ in range(20):
        w = int(rng.integers(-4, 5))
        cos = rng.normal(0, 0.3, 4)
        sin = rng.normal(0, 0.3, 4)
        bd = boundary_data_for(dom, [w], [FourierPhase(tuple(cos), tuple(sin))])
        d, resid = degree(bd, 0)
        assert d == w and abs(resid) < 1e-10


def test_component_index_checked():
    bd = boundary_data_for(disk(), [1])
    with pytest.raises(BadComponentIndex):
        bd.component(1)
    with pytest.raises(BadComponentIndex):
        boundary_data_for(disk(), [1, 0])


def test_current_density_is_phase_rate_over_speed():
    dom = disk(radius=2.0)
    bd = boundary_data_for(dom, [1])
    t = np.linspace(0, 2 * np.pi, 9)
    # unit winding on a radius-2 circle: dphase/ds = 1/2
    assert np.allclose(current_density(dom, bd, 0, t), 0.5)


def test_compatibility_relation():
    dom = annulus(punctures=((0.7, 0.0),), degrees=(1,))
    bd = boundary_data_for(dom, [2, 1])
    verdict = check_compatibility(bd, dom.punctures)
    assert verdict.relation_holds
    assert bool(verdict)
    assert verdict.unpunctured_class_nonempty is None

    bad = boundary_data_for(dom, [1, 1])
    verdict = check_compatibility(bad, dom.punctures)
    assert not verdict.relation_holds


def test_unpunctured_class_verdict():
    dom = annulus()
    ok = check_compatibility(boundary_data_for(dom, [1, 1]), PunctureSet())
    assert ok.relation_holds and ok.unpunctured_class_nonempty
    bad = check_compatibility(boundary_data_for(dom, [1, 0]), PunctureSet())
    assert not bad.relation_holds and not bad.unpunctured_class_nonempty
