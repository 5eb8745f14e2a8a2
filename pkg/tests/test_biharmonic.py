import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isowill.biharmonic import (
    FourierBiharmonicSolution,
    FourierBoundaryData,
    Radial,
    evaluate_bridge,
    linearity_check,
    quadratic_field,
    solve_annulus_biharmonic,
    trace_free_field,
)
from isowill.errors import OutOfDomain
from isowill.mesh import SecondFundamentalForm2D
from oracles import fd_biharmonic_polar

GAMMA = 0.1
P = SecondFundamentalForm2D(1.0, 0.3, -0.5)
Q = SecondFundamentalForm2D(0.8, -0.2, 0.1)


def mode2_data(gamma=GAMMA):
    return FourierBoundaryData.from_fields(gamma, trace_free_field(P), quadratic_field(Q))


def test_constant_is_reproduced():
    sol = solve_annulus_biharmonic(FourierBoundaryData(GAMMA, {0: np.array([1.0, 0.0, 1.0, 0.0])}, {}))
    np.testing.assert_allclose(sol.cos[0], [1.0, 0.0, 0.0, 0.0], atol=1e-12)
    r = np.linspace(GAMMA, 1.0, 50)
    w, g, h = evaluate_bridge(sol, r, 0.7 * r)
    np.testing.assert_allclose(w, 1.0, atol=1e-12)
    assert np.abs(g).max() < 1e-12 and np.abs(h).max() < 1e-11


def test_r_squared_is_reproduced():
    g0 = GAMMA
    sol = solve_annulus_biharmonic(FourierBoundaryData(g0, {0: np.array([g0 ** 2, 2 * g0, 1.0, 2.0])}, {}))
    np.testing.assert_allclose(sol.cos[0], [0.0, 1.0, 0.0, 0.0], atol=1e-12)
    r = np.linspace(g0, 1.0, 40)
    th = np.linspace(0, 6, 40)
    w, _, h = evaluate_bridge(sol, r, th)
    np.testing.assert_allclose(w, r ** 2, rtol=1e-12)
    np.testing.assert_allclose(np.trace(h, axis1=-2, axis2=-1), 4.0, rtol=1e-10)


def test_matches_finite_difference_oracle():
    data = mode2_data()
    sol = solve_annulus_biharmonic(data)
    nt = 64
    th = 2 * np.pi * np.arange(nt) / nt
    inner, outer = trace_free_field(P), quadratic_field(Q)
    iv, idr = inner.polar(np.full(nt, GAMMA), th)[:2]
    ov, odr = outer.polar(np.ones(nt), th)[:2]
    s, theta, ref = fd_biharmonic_polar(GAMMA, iv, idr, ov, odr, n_r=512)
    R, T = np.meshgrid(np.exp(s), theta, indexing="ij")
    w = sol.field().polar(R, T)[0]
    assert np.abs(w - ref).max() <= 1e-4 * np.abs(w).max()


def test_boundary_traces_reproduced():
    data = mode2_data()
    sol = solve_annulus_biharmonic(data)
    field = sol.field()
    for n, (a, da, b, db) in data.cos.items():
        f = field.cos[n]
        got = [f(GAMMA), f.derivative()(GAMMA), f(1.0), f.derivative()(1.0)]
        np.testing.assert_allclose(got, [a, da, b, db], atol=1e-10 * data.norm())
    assert sol.residual <= 1e-10


def test_random_mode_three_is_biharmonic():
    rng = np.random.default_rng(11)
    c = rng.normal(size=4)
    sol = FourierBiharmonicSolution(GAMMA, {3: c}, {3: rng.normal(size=4)})
    bil = sol.field().laplacian().laplacian()
    r = rng.uniform(GAMMA, 1.0, 100)
    th = rng.uniform(0, 2 * np.pi, 100)
    val = bil.polar(r, th)[0]
    assert np.abs(val).max() <= 1e-9 * np.linalg.norm(c)


def test_bilaplacian_of_solution_vanishes():
    sol = solve_annulus_biharmonic(mode2_data())
    rng = np.random.default_rng(5)
    r = rng.uniform(GAMMA, 1.0, 200)
    th = rng.uniform(0, 2 * np.pi, 200)
    val = sol.field().laplacian().laplacian().polar(r, th)[0]
    scale = np.abs(sol.coefficient_vector()).max()
    assert np.abs(val).max() <= 1e-9 * scale


def test_linearity_examples():
    d = mode2_data()
    sol = solve_annulus_biharmonic(d)
    twice = solve_annulus_biharmonic(d.combine(2.0, d, 0.0))
    np.testing.assert_allclose(twice.coefficient_vector(), 2 * sol.coefficient_vector(), rtol=1e-12)
    zero = solve_annulus_biharmonic(d.combine(1.0, d, -1.0))
    assert np.abs(zero.coefficient_vector()).max() == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_linearity_random_pairs(seed):
    rng = np.random.default_rng(seed)

    def rand():
        return FourierBoundaryData(
            GAMMA, {n: rng.normal(size=4) for n in (0, 1, 2, 3)}, {n: rng.normal(size=4) for n in (1, 2)}
        )

    assert linearity_check(rand(), rand(), 0.3, -1.7)["residual"] <= 1e-12


def test_domain_guards():
    sol = solve_annulus_biharmonic(mode2_data())
    with pytest.raises(OutOfDomain):
        evaluate_bridge(sol, np.array([0.05]), np.array([0.0]))
    with pytest.raises(OutOfDomain):
        solve_annulus_biharmonic(FourierBoundaryData(1e-4, {0: np.ones(4)}, {}))


def test_radial_algebra():
    f = Radial({(2, 1): 1.0})  # r^2 log r
    r = np.array([0.3, 0.7])
    np.testing.assert_allclose(f.derivative()(r), 2 * r * np.log(r) + r, rtol=1e-14)
    # Laplacian of r^2 log r is 4 log r + 4
    np.testing.assert_allclose(f.laplacian(0)(r), 4 * np.log(r) + 4, rtol=1e-13)
