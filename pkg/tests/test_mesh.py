import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from isowill.errors import BadIndex, DegenerateFace, NonManifold, NonPositiveVolume, OpenBoundary
from isowill.mesh import (
    ISO_SPHERE,
    SecondFundamentalForm2D,
    area_gradient,
    build_mesh,
    face_areas,
    is_round_sphere,
    measure,
    second_fundamental_form_at,
    signed_volume,
    volume_gradient,
)
from isowill.surfaces import TorusSpec, gen_ellipsoid, gen_icosphere, gen_torus, torus_vertex
from oracles import sphere_closed_forms, torus_closed_forms

TET_V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
TET_F = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])


def test_tetrahedron_measures():
    m = build_mesh(TET_V, TET_F)
    s = measure(m)
    assert s.volume == pytest.approx(1 / 6, rel=1e-14)
    assert s.area == pytest.approx(1.5 + np.sqrt(3) / 2, rel=1e-14)
    assert s.euler_char == 2 and s.genus == 0


def test_validation_errors():
    with pytest.raises(BadIndex):
        build_mesh(TET_V, np.vstack([TET_F[:3], [1, 2, 7]]))
    with pytest.raises(DegenerateFace):
        build_mesh(TET_V, np.vstack([TET_F[:3], [1, 1, 3]]))
    with pytest.raises(OpenBoundary):
        build_mesh(TET_V, TET_F[:3])
    flipped = TET_F.copy()
    flipped[3] = flipped[3, ::-1]
    with pytest.raises(NonManifold):
        build_mesh(TET_V, flipped)
    # the open patch is accepted when declared open
    assert not build_mesh(TET_V, TET_F[:3], closed=False).closed


def test_inward_orientation_gives_no_iso():
    m = build_mesh(TET_V, TET_F[:, ::-1])
    assert measure(m).iso is None
    with pytest.raises(NonPositiveVolume):
        measure(m, strict=True)


def test_icosphere_against_closed_forms():
    ref = sphere_closed_forms(1.0)
    s = measure(gen_icosphere(1.0, 4))
    assert abs(s.willmore - ref["willmore"]) < 0.01 * ref["willmore"]
    assert abs(s.iso - ref["iso"]) < 0.005 * ref["iso"]
    assert ISO_SPHERE == pytest.approx(ref["iso"], rel=1e-15)


def test_willmore_converges_on_refinement():
    errs = [abs(measure(gen_icosphere(1.0, k)).willmore - 4 * np.pi) for k in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("R,r", [(1.0, 1 / np.sqrt(2)), (2.0, 0.6), (1.0, 0.3)])
def test_torus_against_closed_forms(R, r):
    ref = torus_closed_forms(R, r)
    s = measure(gen_torus(TorusSpec(R, r, 128, 128)))
    assert s.genus == 1 and s.euler_char == 0
    assert abs(s.willmore - ref["willmore"]) < 0.01 * ref["willmore"]
    assert abs(s.iso - ref["iso"]) < 0.005 * ref["iso"]
    assert abs(s.area - ref["area"]) < 1e-3 * ref["area"]


def test_gradients_match_central_differences():
    m = gen_ellipsoid(1.0, 1.3, 0.8, subdiv=2)
    rng = np.random.default_rng(3)
    d = rng.normal(size=m.vertices.shape)
    h = 1e-6
    plus, minus = m.with_vertices(m.vertices + h * d), m.with_vertices(m.vertices - h * d)
    fd_a = (face_areas(plus).sum() - face_areas(minus).sum()) / (2 * h)
    fd_v = (signed_volume(plus) - signed_volume(minus)) / (2 * h)
    assert np.sum(area_gradient(m) * d) == pytest.approx(fd_a, rel=1e-6)
    assert np.sum(volume_gradient(m) * d) == pytest.approx(fd_v, rel=1e-6)


def test_second_fundamental_form_of_sphere_is_identity():
    m = gen_icosphere(2.0, 4)
    form, frame = second_fundamental_form_at(m, 17)
    np.testing.assert_allclose(form.matrix(), 0.5 * np.eye(2), atol=0.02)
    assert frame[2] @ m.vertices[17] > 0


def test_fitted_form_on_torus_outer_equator():
    spec = TorusSpec(1.0, 0.5, 128, 128)
    m = gen_torus(spec)
    form, _ = second_fundamental_form_at(m, torus_vertex(spec, 0, 0))
    eig = np.sort(np.linalg.eigvalsh(form.matrix()))
    np.testing.assert_allclose(eig, [1 / 1.5, 2.0], rtol=0.01)


def test_form_algebra():
    P = SecondFundamentalForm2D(1.0, 0.5, -2.0)
    assert P.trace == -1.0
    assert P.trace_free().trace == 0.0
    # rotation by pi/2 swaps the diagonal and negates the off-diagonal
    R = P.rotated(np.pi / 2)
    np.testing.assert_allclose([R.a11, R.a12, R.a22], [-2.0, -0.5, 1.0], atol=1e-15)
    assert P.norm2() == pytest.approx(1 + 2 * 0.25 + 4)
    assert P.pair(P) == pytest.approx(P.norm2())


def test_round_sphere_detection():
    assert is_round_sphere(gen_icosphere(1.0, 3))
    assert not is_round_sphere(gen_ellipsoid(1.0, 1.0, 2.0, 3))
    assert not is_round_sphere(gen_torus(TorusSpec(1.0, 0.5, 32, 32)))


_BASE = gen_ellipsoid(1.0, 1.4, 0.7, subdiv=2)


@settings(max_examples=20, deadline=None)
@given(
    rot=st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3),
    shift=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    scale=st.floats(0.2, 5.0),
)
def test_rigid_motion_and_scaling_invariance(rot, shift, scale):
    R = Rotation.from_euler("xyz", rot).as_matrix()
    a = measure(_BASE)
    b = measure(_BASE.transformed(R, np.array(shift), scale))
    assert b.willmore == pytest.approx(a.willmore, rel=1e-10)
    assert b.iso == pytest.approx(a.iso, rel=1e-10)
    assert b.area == pytest.approx(scale ** 2 * a.area, rel=1e-10)
    assert b.volume == pytest.approx(scale ** 3 * a.volume, rel=1e-10)
    assert (b.euler_char, b.genus) == (a.euler_char, a.genus)


@settings(max_examples=25, deadline=None)
@given(
    axes=st.lists(st.floats(0.3, 3.0), min_size=3, max_size=3),
)
def test_isoperimetric_inequality_for_embedded_ellipsoids(axes):
    s = measure(gen_ellipsoid(*axes, subdiv=2))
    assert s.iso >= ISO_SPHERE


@settings(max_examples=15, deadline=None)
@given(c=st.floats(0.1, 0.9), n=st.sampled_from([16, 24, 32]))
def test_isoperimetric_inequality_for_embedded_tori(c, n):
    s = measure(gen_torus(TorusSpec(1.0, c, n, n)))
    assert s.iso >= ISO_SPHERE
