import numpy as np
import pytest

from isowill.errors import DomainError, GeometryClash
from isowill.mesh import ISO_SPHERE, measure
from isowill.surfaces import (
    GraphPatch,
    TorusSpec,
    gen_graph_mesh,
    gen_icosphere,
    gen_necked_spheres,
    gen_torus,
    polar_grid,
    solution_interval_constants,
    torus_closed_forms,
)
from oracles import interval_constants_math


def test_icosahedron_and_sphere_volume():
    s0 = measure(gen_icosphere(1.0, 0))
    assert gen_icosphere(1.0, 0).n_vertices == 12 and s0.euler_char == 2
    s = measure(gen_icosphere(3.0, 4))
    assert abs(s.volume - 36 * np.pi) < 0.005 * 36 * np.pi
    for k in range(4):
        assert measure(gen_icosphere(1.0, k)).iso >= ISO_SPHERE


def test_torus_topology():
    s = measure(gen_torus(TorusSpec(1.0, 0.5, 128, 128)))
    assert s.euler_char == 0 and s.genus == 1


def test_torus_near_c1_is_near_eight_pi():
    c1 = solution_interval_constants().c1
    s = measure(gen_torus(TorusSpec(1.0, c1, 128, 128)))
    assert abs(s.willmore - 8 * np.pi) < 0.015 * 8 * np.pi


@pytest.mark.parametrize("c", [0.3, 1 / np.sqrt(2), 0.9])
def test_closed_forms_agree_with_meshes(c):
    W, iso = torus_closed_forms(c)
    s = measure(gen_torus(TorusSpec(1.0, c, 128, 128)))
    assert abs(s.willmore - W) < 0.015 * W
    assert abs(s.iso - iso) < 0.015 * iso


def test_closed_form_values():
    W, iso = torus_closed_forms(1 / np.sqrt(2))
    assert W == pytest.approx(2 * np.pi ** 2, rel=1e-14)
    assert iso == pytest.approx((16 * np.sqrt(2) * np.pi ** 2) ** (1 / 3), rel=1e-14)
    cs = np.linspace(0.05, 0.95, 9001)
    Ws = [torus_closed_forms(c)[0] for c in cs]
    assert cs[int(np.argmin(Ws))] == pytest.approx(1 / np.sqrt(2), abs=1e-4)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            torus_closed_forms(bad)


def test_interval_constants_against_math_module():
    got = solution_interval_constants()
    ref = interval_constants_math()
    for key, val in ref.items():
        assert getattr(got, key) == pytest.approx(val, rel=1e-12)
    assert got.c1 == pytest.approx(0.43646, abs=1e-5)
    assert got.iso_sphere == pytest.approx(4.83598, abs=1e-5)
    assert got.iso_Tc1 > got.iso_clifford


def test_polar_grid_faces_are_counterclockwise():
    Z, F, rings = polar_grid([0.0, 0.5, 1.0], 16, center=True)
    a, b, c = Z[F[:, 0]], Z[F[:, 1]], Z[F[:, 2]]
    cross = (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
    assert np.all(cross > 0)
    assert all(len(r) == 16 for r in rings)


def _flat(z):
    z = np.asarray(z)
    return np.zeros(z.shape[:-1]), np.zeros(z.shape), np.zeros(z.shape + (2,))


def _paraboloid(z):
    z = np.asarray(z)
    return 0.5 * np.sum(z * z, axis=-1), z.copy(), np.broadcast_to(np.eye(2), z.shape + (2,)).copy()


def test_graph_mesh_areas():
    from isowill.mesh import face_areas

    m = gen_graph_mesh(GraphPatch(0.5, 1.0, _flat, n_r=16, n_theta=256))
    assert abs(face_areas(m).sum() - 0.75 * np.pi) < 0.005 * 0.75 * np.pi
    assert len(m.meta["rings"]["outer"]) == 256
    disk = gen_graph_mesh(GraphPatch(0.0, 1.0, _paraboloid, n_r=64, n_theta=256))
    ref = 2 * np.pi * (2 * np.sqrt(2) - 1) / 3
    assert abs(face_areas(disk).sum() - ref) < 0.01 * ref


def test_graph_patch_rejects_bad_domain():
    with pytest.raises(DomainError):
        GraphPatch(1.0, 0.5, _flat)


def test_necked_spheres_trend():
    coarse = measure(gen_necked_spheres(1, 0.05, 0.005))
    fine = measure(gen_necked_spheres(1, 0.02, 0.001))
    assert coarse.genus == 1 and fine.genus == 1
    assert coarse.willmore > 8 * np.pi and fine.willmore > 8 * np.pi
    assert fine.willmore < coarse.willmore
    assert fine.iso > coarse.iso


def test_necked_spheres_higher_genus_and_clash():
    s = measure(gen_necked_spheres(3, 0.05, 0.005))
    assert s.genus == 3 and s.euler_char == -4
    with pytest.raises(GeometryClash):
        gen_necked_spheres(1, 0.05, 0.02)
    with pytest.raises(DomainError):
        gen_necked_spheres(0, 0.05, 0.005)
