import numpy as np
import pytest

from isowill.errors import QuadratureDivergence
from isowill.graphs import (
    BlendedGraph,
    Cutoff,
    LinearCombination,
    PiecewiseRadial,
    ScaledGraph,
    graph_energetics,
    smoothstep,
)


def flat(z):
    z = np.asarray(z)
    return np.zeros(z.shape[:-1]), np.zeros(z.shape), np.zeros(z.shape + (2,))


def paraboloid(z):
    z = np.asarray(z)
    return 0.5 * np.sum(z * z, axis=-1), z.copy(), np.broadcast_to(np.eye(2), z.shape + (2,)).copy()


def hemisphere(z):
    z = np.asarray(z)
    s = np.sqrt(1 - np.sum(z * z, axis=-1))
    g = -z / s[..., None]
    h = -(np.eye(2) / s[..., None, None] + z[..., :, None] * z[..., None, :] / (s ** 3)[..., None, None])
    return s, g, h


def numeric_derivatives(f, z, h=1e-5):
    w0, g0, _ = f(z)
    g = np.zeros(2)
    H = np.zeros((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        g[k] = (f(z + e)[0] - f(z - e)[0]) / (2 * h)
        H[k] = (f(z + e)[1] - f(z - e)[1]) / (2 * h)
    return g, H


def test_flat_annulus():
    e = graph_energetics(flat, 0.5, 1.0)
    assert e.area == pytest.approx(0.75 * np.pi, rel=1e-10)
    assert e.willmore == 0.0


def test_paraboloid_area_closed_form():
    e = graph_energetics(paraboloid, 0.1, 1.0)
    ref = 2 * np.pi / 3 * ((1 + 1.0) ** 1.5 - (1 + 0.01) ** 1.5)
    assert e.area == pytest.approx(ref, rel=1e-8)
    assert e.area >= np.pi * (1 - 0.01)


def test_hemisphere_willmore():
    e = graph_energetics(hemisphere, 0.0, 0.9)
    cap = 2 * np.pi * (1 - np.sqrt(1 - 0.81))
    assert abs(e.willmore - cap) < 1e-4 * cap
    assert e.area == pytest.approx(cap, rel=1e-6)


def test_quadrature_converges_on_smooth_integrand():
    e = graph_energetics(paraboloid, 0.1, 1.0)
    assert e.converged and e.extras["refinement_change"] < 1e-6


def test_divergence_reported_or_raised():
    def kinked(z):
        z = np.asarray(z)
        r = np.hypot(z[..., 0], z[..., 1])
        return np.abs(r - 0.55), np.zeros(z.shape), np.zeros(z.shape + (2,))

    e = graph_energetics(kinked, 0.1, 1.0, n_r=4, n_theta=8)
    assert not e.converged and e.message
    with pytest.raises(QuadratureDivergence):
        graph_energetics(kinked, 0.1, 1.0, n_r=4, n_theta=8, strict=True)


def test_smoothstep_endpoints():
    s, ds, d2s = smoothstep(np.array([0.0, 1.0]))
    np.testing.assert_allclose(s, [0, 1])
    np.testing.assert_allclose(ds, 0)
    np.testing.assert_allclose(d2s, 0)


def test_cutoff_band():
    eta = Cutoff(0.4)
    v, _, _ = eta(np.array([0.0, 0.1, 0.3, 0.5]))
    np.testing.assert_allclose(v, [0, 0, 1, 1])


def test_handle_derivatives_by_finite_differences():
    scaled = ScaledGraph(hemisphere, 0.5)
    combo = LinearCombination((2.0, paraboloid), (-0.5, flat))
    blended = BlendedGraph(paraboloid, ScaledGraph(hemisphere, 2.0), Cutoff(0.2), 0.5, +1)
    z = np.array([0.31, 0.27])
    for f in (scaled, combo, blended):
        _, g, H = f(z)
        g_fd, H_fd = numeric_derivatives(f, z)
        np.testing.assert_allclose(g, g_fd, atol=1e-7)
        np.testing.assert_allclose(H, H_fd, atol=1e-6)


def test_piecewise_dispatch():
    pw = PiecewiseRadial([(0.0, 0.5, flat), (0.5, 1.0, paraboloid)])
    w, _, _ = pw(np.array([[0.2, 0.0], [0.8, 0.0]]))
    np.testing.assert_allclose(w, [0.0, 0.32])
    assert pw.breakpoints() == [0.0, 0.5, 1.0]
