from dataclasses import replace

import numpy as np
import pytest

from isowill.errors import ConstantCurvature, DegenerateStep, SupportTouchesForbidden, ZeroField
from isowill.mesh import k_ring
from isowill.surfaces import TorusSpec, gen_ellipsoid, gen_icosphere, gen_torus
from isowill.variation import (
    build_variation,
    discrete_mean_curvature,
    first_variation_rates,
    mean_edge_length,
    select_variation_point,
    variation_deltas,
)


@pytest.fixture(scope="module")
def torus():
    return gen_torus(TorusSpec(1.0, 1 / np.sqrt(2), 64, 64))


@pytest.fixture(scope="module")
def torus_spec(torus):
    p = select_variation_point(torus, forbidden=0)
    return build_variation(torus, p, 5 * mean_edge_length(torus), forbidden=0)


def test_selected_point_sits_on_a_level_set_boundary(torus):
    p = select_variation_point(torus, forbidden=0)
    assert p != 0
    H, _, _ = discrete_mean_curvature(torus)
    nb = k_ring(torus, p, 1)
    assert np.ptp(H[nb]) > 0


def test_ellipsoid_selection_has_varying_neighbourhood(ellipsoid_112):
    p = select_variation_point(ellipsoid_112)
    H, _, _ = discrete_mean_curvature(ellipsoid_112)
    assert np.ptp(H[k_ring(ellipsoid_112, p, 2)]) > 0


def test_sphere_has_no_variation_point():
    with pytest.raises(ConstantCurvature):
        select_variation_point(gen_icosphere(1.0, 3))


def test_variation_field_invariants(torus_spec):
    s = torus_spec
    assert s.volume_residual <= 1e-12
    assert s.phi.min() >= 0 and s.phi[s.p] == 1.0
    assert s.phi[s.forbidden] == 0.0
    # normal-valued field
    _, n, _ = discrete_mean_curvature(s.mesh)
    tangential = s.xi - np.sum(s.xi * n, axis=1)[:, None] * n
    assert np.abs(tangential).max() <= 1e-15 * np.abs(s.xi).max() + 1e-300
    outside = np.setdiff1d(np.arange(s.mesh.n_vertices), s.support)
    assert np.all(s.xi[outside] == 0.0)


def test_strict_area_decrease_weight(torus_spec):
    s = torus_spec
    H, _, g = discrete_mean_curvature(s.mesh)
    assert np.sum(s.phi * (H - s.h) ** 2 * g) > 0


@pytest.mark.parametrize("which", ["torus", "ellipsoid"])
def test_first_variation_signs_and_fd(which, torus_spec, ellipsoid_112):
    if which == "torus":
        spec = torus_spec
    else:
        m = ellipsoid_112
        spec = build_variation(m, select_variation_point(m), 5 * mean_edge_length(m))
    rates = first_variation_rates(spec)
    assert spec.volume_residual <= 1e-12
    assert rates.dArea < 0 and rates.dIso < 0
    assert rates.fd_rel_error < 1e-4
    assert np.isfinite(rates.dW_bound)


def test_iso_rate_is_scale_invariant(torus, torus_spec):
    lam = 2.0
    big = torus.transformed(np.eye(3), np.zeros(3), lam)
    spec = build_variation(big, torus_spec.p, lam * torus_spec.radius, forbidden=0)
    # transport the original field by the similarity: lam * xi
    transported = replace(spec, xi=lam * torus_spec.xi)
    a = first_variation_rates(torus_spec).dIso
    b = first_variation_rates(transported).dIso
    assert b == pytest.approx(a, rel=1e-8)


def test_forced_zero_field(torus_spec):
    zero = replace(torus_spec, xi=np.zeros_like(torus_spec.xi))
    rates = first_variation_rates(zero)
    assert rates.dArea == 0.0 and rates.dVol == 0.0


def test_support_touching_forbidden_vertex(torus):
    p = select_variation_point(torus, forbidden=0)
    with pytest.raises(SupportTouchesForbidden):
        build_variation(torus, p, 10 * torus.diameter(), forbidden=0)


def test_zero_field_on_flat_patch():
    # a single-vertex support has H == h, so phi (H - h) vanishes
    m = gen_torus(TorusSpec(1.0, 0.5, 32, 32))
    with pytest.raises(ZeroField):
        build_variation(m, 3, 1e-9)


def test_large_step_flips_triangles(torus_spec):
    with pytest.raises(DegenerateStep):
        first_variation_rates(torus_spec, steps=(1e-5, 1e6))


def test_finite_step_matches_rates(torus_spec):
    s0 = 1e-5 / np.abs(torus_spec.xi).max()
    d = variation_deltas(torus_spec, s0)
    rates = first_variation_rates(torus_spec)
    assert d["dA"] == pytest.approx(rates.dArea * s0, rel=0.1)
    # the volume change is second order in the step
    assert abs(d["dV"]) < 1e-2 * abs(d["dA"])
