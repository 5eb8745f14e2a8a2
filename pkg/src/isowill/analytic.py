"""Exact descriptions of the generated test surfaces.

Each surface is given in its own canonical position by an implicit function
``F`` (negative inside) together with a smooth parametrization used for
spectrally accurate surface quadrature. A :class:`Placed` wrapper carries the
similarity that maps canonical coordinates to world coordinates, so meshes can
be moved and rescaled while keeping their exact geometry available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .mesh import SecondFundamentalForm2D


class Torus:
    """Torus of revolution about the z-axis with radii ``0 < r < R``."""

    def __init__(self, R: float, r: float):
        self.R, self.r = float(R), float(r)

    def implicit(self, x):
        R = self.R
        rho = np.hypot(x[..., 0], x[..., 1])
        F = (rho - R) ** 2 + x[..., 2] ** 2 - self.r ** 2
        g = np.empty(x.shape)
        g[..., 0] = 2 * (rho - R) * x[..., 0] / rho
        g[..., 1] = 2 * (rho - R) * x[..., 1] / rho
        g[..., 2] = 2 * x[..., 2]
        H = np.zeros(x.shape + (3,))
        for i in range(2):
            for j in range(2):
                H[..., i, j] = 2 * ((1 - R / rho) * (i == j) + R * x[..., i] * x[..., j] / rho ** 3)
        H[..., 2, 2] = 2.0
        return F, g, H

    def point(self, u, v):
        R, r = self.R, self.r
        return np.stack(
            [(R + r * np.cos(v)) * np.cos(u), (R + r * np.cos(v)) * np.sin(u), r * np.sin(v)], axis=-1
        )

    def quadrature(self, n: int = 256):
        u = 2 * np.pi * np.arange(n) / n
        U, Vv = np.meshgrid(u, u, indexing="ij")
        X = self.point(U, Vv).reshape(-1, 3)
        w = (self.r * (self.R + self.r * np.cos(Vv)) * (2 * np.pi / n) ** 2).ravel()
        return X, w

    def closed_forms(self) -> dict:
        R, r = self.R, self.r
        c = r / R
        return {
            "area": 4 * np.pi ** 2 * R * r,
            "volume": 2 * np.pi ** 2 * R * r * r,
            "willmore": np.pi ** 2 / (c * np.sqrt(1 - c * c)),
        }


class Ellipsoid:
    """Axis-aligned ellipsoid with semi-axes (a, b, c); a sphere when equal."""

    def __init__(self, a: float, b: float, c: float):
        self.axes = np.array([a, b, c], dtype=float)

    def implicit(self, x):
        a2 = self.axes ** 2
        F = np.sum(x * x / a2, axis=-1) - 1.0
        g = 2 * x / a2
        H = np.zeros(x.shape + (3,))
        for i in range(3):
            H[..., i, i] = 2.0 / a2[i]
        return F, g, H

    def point(self, theta, phi):
        a, b, c = self.axes
        return np.stack(
            [a * np.sin(theta) * np.cos(phi), b * np.sin(theta) * np.sin(phi), c * np.cos(theta)], axis=-1
        )

    def quadrature(self, n: int = 128):
        t, wt = roots_legendre(n)
        phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
        T, P = np.meshgrid(t, phi, indexing="ij")
        theta = np.arccos(T)
        X = self.point(theta, P)
        a, b, c = self.axes
        st, ct = np.sin(theta), T
        # |x_theta x x_phi| / sin(theta), smooth in t = cos(theta)
        nx = b * c * st * np.cos(P)
        ny = a * c * st * np.sin(P)
        nz = a * b * ct
        jac = np.sqrt(nx ** 2 + ny ** 2 + nz ** 2)
        w = jac * wt[:, None] * (2 * np.pi / (2 * n))
        return X.reshape(-1, 3), w.ravel()

    def closed_forms(self) -> dict:
        a, b, c = self.axes
        out = {"volume": 4.0 / 3.0 * np.pi * a * b * c}
        if np.allclose(self.axes, a):
            out.update(area=4 * np.pi * a * a, willmore=4 * np.pi)
        return out


@dataclass(frozen=True)
class Placed:
    """Canonical surface mapped to world coordinates by x -> s R x + t."""

    shape: object
    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    @classmethod
    def identity(cls, shape) -> "Placed":
        return cls(shape, np.eye(3), np.zeros(3), 1.0)

    def transformed(self, R, t, s) -> "Placed":
        R = np.asarray(R, dtype=float)
        t = np.asarray(t, dtype=float)
        return Placed(self.shape, R @ self.rotation, s * R @ self.translation + t, s * self.scale)

    def to_local(self, x):
        return ((np.asarray(x) - self.translation) @ self.rotation) / self.scale

    def to_world(self, x):
        return self.scale * np.asarray(x) @ self.rotation.T + self.translation

    def implicit(self, x):
        """World-space implicit function with gradient and Hessian."""
        F, g, H = self.shape.implicit(self.to_local(x))
        R, s = self.rotation, self.scale
        gw = g @ R.T / s
        Hw = (R @ H @ R.T) / s ** 2
        return F, gw, Hw

    def normal(self, x):
        _, g, _ = self.implicit(x)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def quadrature(self, n: int | None = None):
        """World points, outward unit normals and area weights."""
        X, w = self.shape.quadrature() if n is None else self.shape.quadrature(n)
        Xw = self.to_world(X)
        return Xw, self.normal(Xw), w * self.scale ** 2

    def form_at(self, x, frame) -> SecondFundamentalForm2D:
        """Exact second fundamental form (outward normal) in the frame's (e1, e2)."""
        _, g, H = self.implicit(np.asarray(x, dtype=float))
        E = np.asarray(frame)[:2].T
        return SecondFundamentalForm2D.from_matrix(E.T @ H @ E / np.linalg.norm(g))

    def mean_curvature(self, x):
        _, g, H = self.implicit(x)
        gn = np.linalg.norm(g, axis=-1)
        tr = np.trace(H, axis1=-2, axis2=-1)
        gHg = np.einsum("...i,...ij,...j->...", g, H, g)
        return (gn ** 2 * tr - gHg) / gn ** 3

    def measures(self, n: int | None = None) -> dict:
        """Area, volume and Willmore energy by surface quadrature."""
        X, N, w = self.quadrature(n)
        H = self.mean_curvature(X)
        return {
            "area": float(w.sum()),
            "volume": float(np.sum(np.einsum("ij,ij->i", X, N) * w) / 3.0),
            "willmore": float(0.25 * np.sum(H * H * w)),
        }


class LocalGraph:
    """Graph representation z -> u(z) of a placed surface over a tangent plane.

    ``origin`` lies on the surface and ``frame`` has rows (e1, e2, e3); the
    surface near the origin is {origin + z1 e1 + z2 e2 + u(z) e3}. Values and
    the first two derivatives come from Newton's method on the implicit
    function and implicit differentiation, so they are exact to roundoff.
    """

    def __init__(self, surface: Placed, origin, frame, radius: float):
        self.surface = surface
        self.origin = np.asarray(origin, dtype=float)
        self.frame = np.asarray(frame, dtype=float)
        self.radius = float(radius)
        form = surface.form_at(self.origin, self.frame)
        n_out = surface.normal(self.origin)
        self.sign = float(np.sign(n_out @ self.frame[2]))
        # Hessian of the graph at 0: the surface bends away from its outward normal
        self.hessian0 = -self.sign * form.matrix()

    def _lift(self, z, u):
        E = self.frame
        return self.origin + z[..., 0, None] * E[0] + z[..., 1, None] * E[1] + u[..., None] * E[2]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        u = 0.5 * np.einsum("...i,ij,...j->...", z, self.hessian0, z)
        e3 = self.frame[2]
        for _ in range(60):
            F, g, _ = self.surface.implicit(self._lift(z, u))
            du = F / (g @ e3)
            u = u - du
            # roundoff in F is relative to the size of the whole surface
            scale = self.surface.scale + np.abs(u) + np.linalg.norm(z, axis=-1)
            if np.all(np.abs(du) <= 1e-13 * scale):
                break
        F, g, H = self.surface.implicit(self._lift(z, u))
        E = self.frame[:2].T  # 3x2
        Gu = g @ e3
        Gz = g @ E
        Du = -Gz / Gu[..., None]
        Gzz = np.einsum("ai,...ab,bj->...ij", E, H, E)
        Gzu = np.einsum("ai,...ab,b->...i", E, H, e3)
        Guu = np.einsum("a,...ab,b->...", e3, H, e3)
        M = (
            Gzz
            + Gzu[..., :, None] * Du[..., None, :]
            + Du[..., :, None] * Gzu[..., None, :]
            + Guu[..., None, None] * Du[..., :, None] * Du[..., None, :]
        )
        D2u = -M / Gu[..., None, None]
        return u, Du, D2u
