"""Biharmonic Dirichlet-Neumann bridge on an annulus, solved mode by mode.

Functions on the plane are represented as finite Fourier sums whose radial
profiles are linear combinations of ``r**p * log(r)**k`` with ``k in {0, 1}``.
That class is closed under radial differentiation and under the Laplacian,
so values, gradients, Hessians and even the bilaplacian are exact up to
roundoff. The same representation carries the model quadrics ``q`` and the
degree-zero functions ``p°`` that supply the boundary data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, OutOfDomain

COND_LIMIT = 1e12


def _radial_basis(n: int):
    """Exponent/log pairs spanning the biharmonic radial profiles of mode n."""
    if n == 0:
        return [(0, 0), (2, 0), (0, 1), (2, 1)]
    if n == 1:
        return [(1, 0), (3, 0), (-1, 0), (1, 1)]
    return [(n, 0), (n + 2, 0), (-n, 0), (2 - n, 0)]


class Radial:
    """Radial profile sum_j c_j r**p_j (log r)**k_j."""

    def __init__(self, terms: dict | None = None):
        self.terms = {}
        for key, c in (terms or {}).items():
            if c != 0.0:
                self.terms[(int(key[0]), int(key[1]))] = self.terms.get(key, 0.0) + float(c)

    def __add__(self, other: "Radial") -> "Radial":
        t = dict(self.terms)
        for key, c in other.terms.items():
            t[key] = t.get(key, 0.0) + c
        return Radial(t)

    def scale(self, k: float) -> "Radial":
        return Radial({key: k * c for key, c in self.terms.items()})

    def derivative(self) -> "Radial":
        out: dict = {}
        for (p, k), c in self.terms.items():
            if p != 0:
                out[(p - 1, k)] = out.get((p - 1, k), 0.0) + c * p
            if k == 1:
                out[(p - 1, 0)] = out.get((p - 1, 0), 0.0) + c
        return Radial(out)

    def divided_by_r(self, power: int = 1) -> "Radial":
        return Radial({(p - power, k): c for (p, k), c in self.terms.items()})

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for (p, k), c in self.terms.items():
            term = r ** p
            if k:
                term = term * np.log(r)
            out = out + c * term
        return out

    def laplacian(self, n: int) -> "Radial":
        """Radial part of Laplace(f(r) trig(n theta))."""
        d1 = self.derivative()
        return d1.derivative() + d1.divided_by_r() + self.divided_by_r(2).scale(-float(n * n))


@dataclass
class ModalField:
    """Sum over modes of radial profiles times cos(n theta) or sin(n theta)."""

    cos: dict  # n -> Radial
    sin: dict  # n -> Radial

    @classmethod
    def zero(cls) -> "ModalField":
        return cls({}, {})

    def __add__(self, other: "ModalField") -> "ModalField":
        def merge(a, b):
            out = dict(a)
            for n, f in b.items():
                out[n] = out[n] + f if n in out else f
            return out

        return ModalField(merge(self.cos, other.cos), merge(self.sin, other.sin))

    def scale(self, k: float) -> "ModalField":
        return ModalField(
            {n: f.scale(k) for n, f in self.cos.items()}, {n: f.scale(k) for n, f in self.sin.items()}
        )

    def laplacian(self) -> "ModalField":
        return ModalField(
            {n: f.laplacian(n) for n, f in self.cos.items()}, {n: f.laplacian(n) for n, f in self.sin.items()}
        )

    def polar(self, r, theta):
        """Return w, w_r, w_t, w_rr, w_rt, w_tt."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = [np.zeros(np.broadcast(r, theta).shape) for _ in range(6)]
        for table, trig, dtrig in (
            (self.cos, np.cos, lambda x: -np.sin(x)),
            (self.sin, np.sin, np.cos),
        ):
            for n, f in table.items():
                d1 = f.derivative()
                d2 = d1.derivative()
                fr, f1, f2 = f(r), d1(r), d2(r)
                c, s = trig(n * theta), dtrig(n * theta)
                out[0] += fr * c
                out[1] += f1 * c
                out[2] += n * fr * s
                out[3] += f2 * c
                out[4] += n * f1 * s
                out[5] += -n * n * fr * c
        return tuple(out)

    def __call__(self, z):
        """Cartesian value, gradient and Hessian at points z of shape (..., 2)."""
        z = np.asarray(z, dtype=float)
        r = np.hypot(z[..., 0], z[..., 1])
        theta = np.arctan2(z[..., 1], z[..., 0])
        return polar_to_cartesian(r, theta, *self.polar(r, theta))


def polar_to_cartesian(r, theta, w, wr, wt, wrr, wrt, wtt):
    """Convert polar partial derivatives to Cartesian gradient and Hessian."""
    c, s = np.cos(theta), np.sin(theta)
    g_t = wt / r
    grad = np.stack([wr * c - g_t * s, wr * s + g_t * c], axis=-1)
    hrr = wrr
    hrt = wrt / r - wt / r ** 2
    htt = wr / r + wtt / r ** 2
    hxx = hrr * c * c - 2 * hrt * c * s + htt * s * s
    hyy = hrr * s * s + 2 * hrt * c * s + htt * c * c
    hxy = (hrr - htt) * c * s + hrt * (c * c - s * s)
    hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
    return w, grad, hess


def trace_free_field(form) -> ModalField:
    """p°(z) = (1/2) P°(z/|z|, z/|z|), a pure mode-2 function of degree zero."""
    tf = form.trace_free()
    return ModalField({2: Radial({(0, 0): 0.5 * tf.a11})}, {2: Radial({(0, 0): 0.5 * tf.a12})})


def quadratic_field(form) -> ModalField:
    """q(z) = (1/2) Q(z, z) split into its mode-0 and mode-2 parts."""
    tf = form.trace_free()
    return ModalField(
        {0: Radial({(2, 0): 0.25 * form.trace}), 2: Radial({(2, 0): 0.5 * tf.a11})},
        {2: Radial({(2, 0): 0.5 * tf.a12})},
    )


@dataclass
class FourierBoundaryData:
    """Boundary traces per mode.

    ``cos[n]`` and ``sin[n]`` hold ``(w(gamma), w_r(gamma), w(1), w_r(1))``.
    """

    gamma: float
    cos: dict
    sin: dict

    @classmethod
    def from_fields(cls, gamma: float, inner: ModalField, outer: ModalField) -> "FourierBoundaryData":
        data: dict = {"cos": {}, "sin": {}}
        for name in ("cos", "sin"):
            fi, fo = getattr(inner, name), getattr(outer, name)
            for n in sorted(set(fi) | set(fo)):
                a = fi.get(n, Radial())
                b = fo.get(n, Radial())
                data[name][n] = np.array(
                    [a(gamma), a.derivative()(gamma), b(1.0), b.derivative()(1.0)], dtype=float
                )
        return cls(float(gamma), data["cos"], data["sin"])

    def combine(self, a: float, other: "FourierBoundaryData", b: float) -> "FourierBoundaryData":
        if other.gamma != self.gamma:
            raise ValueError("boundary data on different annuli")
        out = {}
        for name in ("cos", "sin"):
            x, y = getattr(self, name), getattr(other, name)
            out[name] = {
                n: a * x.get(n, np.zeros(4)) + b * y.get(n, np.zeros(4)) for n in sorted(set(x) | set(y))
            }
        return FourierBoundaryData(self.gamma, out["cos"], out["sin"])

    def norm(self) -> float:
        vals = [np.abs(v).max() for v in list(self.cos.values()) + list(self.sin.values())]
        return float(max(vals, default=0.0))


@dataclass
class FourierBiharmonicSolution:
    """Per-mode coefficients of the bridge in the basis of :func:`_radial_basis`."""

    gamma: float
    cos: dict  # n -> 4 coefficients
    sin: dict
    residual: float = 0.0
    condition: float = 1.0

    def field(self) -> ModalField:
        def radial(n, coef):
            return Radial(dict(zip(_radial_basis(n), coef)))

        return ModalField(
            {n: radial(n, c) for n, c in self.cos.items()}, {n: radial(n, c) for n, c in self.sin.items()}
        )

    def coefficient_vector(self) -> np.ndarray:
        parts = [self.cos[n] for n in sorted(self.cos)] + [self.sin[n] for n in sorted(self.sin)]
        return np.concatenate(parts) if parts else np.zeros(0)


def _mode_system(n: int, gamma: float):
    basis = [Radial({key: 1.0}) for key in _radial_basis(n)]
    r0 = np.sqrt(gamma)
    col_scale = np.array([1.0 / abs(f(r0)) for f in basis])
    M = np.empty((4, 4))
    for j, f in enumerate(basis):
        d = f.derivative()
        # derivative rows use r d/dr, i.e. the derivative in log r
        M[:, j] = [f(gamma), gamma * d(gamma), f(1.0), d(1.0)]
    return M * col_scale, col_scale


def solve_annulus_biharmonic(data: FourierBoundaryData) -> FourierBiharmonicSolution:
    """Solve Laplace^2 w = 0 on gamma < r < 1 with value and r-derivative on both circles."""
    g = data.gamma
    if not (1e-3 <= g < 1.0):
        raise OutOfDomain(f"inner radius {g} outside [1e-3, 1)")
    coefs: dict = {"cos": {}, "sin": {}}
    worst_res, worst_cond = 0.0, 1.0
    for name in ("cos", "sin"):
        for n, rhs in getattr(data, name).items():
            rhs = np.asarray(rhs, dtype=float)
            if name == "sin" and n == 0:
                continue
            M, col_scale = _mode_system(n, g)
            cond = np.linalg.cond(M)
            worst_cond = max(worst_cond, cond)
            if cond > COND_LIMIT:
                raise IllConditioned(f"mode {n}: condition number {cond:.3g} exceeds {COND_LIMIT:g}")
            b = rhs * np.array([1.0, g, 1.0, 1.0])
            y = np.linalg.solve(M, b)
            res = np.abs(M @ y - b).max() / max(np.abs(b).max(), 1e-300)
            worst_res = max(worst_res, res)
            coefs[name][n] = y * col_scale
    return FourierBiharmonicSolution(g, coefs["cos"], coefs["sin"], worst_res, worst_cond)


def evaluate_bridge(sol: FourierBiharmonicSolution, r, theta):
    """Value, Cartesian gradient and Hessian of the bridge at polar points."""
    r = np.asarray(r, dtype=float)
    eps = 1e-12
    if np.any(r < sol.gamma * (1 - eps)) or np.any(r > 1.0 + eps):
        raise OutOfDomain(f"radius outside [{sol.gamma}, 1]")
    return polar_to_cartesian(r, theta, *sol.field().polar(r, theta))


def linearity_check(data1, data2, a: float, b: float) -> dict:
    """Compare solve(a d1 + b d2) against a solve(d1) + b solve(d2) coefficientwise."""
    s1 = solve_annulus_biharmonic(data1).coefficient_vector()
    s2 = solve_annulus_biharmonic(data2).coefficient_vector()
    s12 = solve_annulus_biharmonic(data1.combine(a, data2, b)).coefficient_vector()
    ref = a * s1 + b * s2
    scale = max(np.abs(a * s1).max(initial=0), np.abs(b * s2).max(initial=0), 1e-300)
    resid = float(np.abs(s12 - ref).max() / scale)
    return {"residual": resid, "ok": resid <= 1e-12}
