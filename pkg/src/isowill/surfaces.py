"""Generators for the test surfaces and the closed-form torus constants."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import ConvexHull

from .analytic import Ellipsoid, Placed, Torus
from .errors import DomainError, GeometryClash
from .graphs import smoothstep
from .mesh import ISO_SPHERE, TriangleMesh, build_mesh


# ---------------------------------------------------------------------------
# closed forms


def torus_closed_forms(c: float) -> tuple[float, float]:
    """Willmore energy and isoperimetric ratio of the torus of revolution with r/R = c."""
    if not (0.0 < c < 1.0):
        raise DomainError(f"radius ratio c={c} outside (0, 1)")
    willmore = np.pi ** 2 / (c * np.sqrt(1.0 - c * c))
    iso = np.cbrt(16.0 * np.pi ** 2 / c)
    return float(willmore), float(iso)


@dataclass(frozen=True)
class IntervalConstants:
    iso_sphere: float
    c1: float
    iso_Tc1: float
    iso_clifford: float
    eight_pi: float
    two_pi_sq: float

    def as_row(self) -> dict:
        return dict(self.__dict__)


def solution_interval_constants() -> IntervalConstants:
    c1 = np.sqrt(0.5 - np.sqrt(16.0 - np.pi ** 2) / 8.0)
    return IntervalConstants(
        iso_sphere=float(ISO_SPHERE),
        c1=float(c1),
        iso_Tc1=float(np.cbrt(16.0 * np.pi ** 2 / c1)),
        iso_clifford=float(np.cbrt(16.0 * np.sqrt(2.0) * np.pi ** 2)),
        eight_pi=float(8.0 * np.pi),
        two_pi_sq=float(2.0 * np.pi ** 2),
    )


# ---------------------------------------------------------------------------
# closed surfaces


def _icosahedron():
    t = (1.0 + np.sqrt(5.0)) / 2.0
    V = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    F = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return V / np.linalg.norm(V, axis=1, keepdims=True), F


def _subdivide(V, F):
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = V[uniq[:, 0]] + V[uniq[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    m = len(F)
    a = inv[:m] + len(V)
    b = inv[m:2 * m] + len(V)
    c = inv[2 * m:] + len(V)
    F2 = np.concatenate(
        [
            np.column_stack([F[:, 0], a, c]),
            np.column_stack([F[:, 1], b, a]),
            np.column_stack([F[:, 2], c, b]),
            np.column_stack([a, b, c]),
        ]
    )
    return np.vstack([V, mid]), F2


def _unit_icosphere(subdiv: int):
    V, F = _icosahedron()
    for _ in range(subdiv):
        V, F = _subdivide(V, F)
    return V, F


def gen_icosphere(radius: float = 1.0, subdiv: int = 4) -> TriangleMesh:
    """Geodesic icosphere, outward oriented."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    if not (0 <= subdiv <= 7):
        raise DomainError("subdiv must lie in [0, 7]")
    V, F = _unit_icosphere(subdiv)
    src = Placed.identity(Ellipsoid(radius, radius, radius))
    return build_mesh(radius * V, F, source=src)


def gen_ellipsoid(a: float, b: float, c: float, subdiv: int = 5) -> TriangleMesh:
    """Icosphere stretched onto the ellipsoid with semi-axes (a, b, c)."""
    if min(a, b, c) <= 0:
        raise DomainError("semi-axes must be positive")
    V, F = _unit_icosphere(subdiv)
    src = Placed.identity(Ellipsoid(a, b, c))
    return build_mesh(V * np.array([a, b, c]), F, source=src)


@dataclass(frozen=True)
class TorusSpec:
    R: float = 1.0
    r: float = 0.5
    nu: int = 128
    nv: int = 128

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise DomainError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if self.nu < 8 or self.nv < 8:
            raise DomainError("torus grid resolutions must be at least 8")

    @property
    def c(self) -> float:
        return self.r / self.R


def _periodic_grid_faces(nu: int, nv: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    a = i * nv + j
    b = ((i + 1) % nu) * nv + j
    c = ((i + 1) % nu) * nv + (j + 1) % nv
    d = i * nv + (j + 1) % nv
    F1 = np.stack([a, b, c], -1).reshape(-1, 3)
    F2 = np.stack([a, c, d], -1).reshape(-1, 3)
    return np.concatenate([F1, F2])


def gen_torus(spec: TorusSpec) -> TriangleMesh:
    """Torus of revolution about e3 on a uniform (u, v) grid.

    Vertex ``i * nv + j`` sits at angles u = 2 pi i/nu (around the axis) and
    v = 2 pi j/nv (around the tube), so j = 0 is the outer equator and
    j = nv/2 the inner one.
    """
    shape = Torus(spec.R, spec.r)
    u = 2 * np.pi * np.arange(spec.nu) / spec.nu
    v = 2 * np.pi * np.arange(spec.nv) / spec.nv
    U, Vv = np.meshgrid(u, v, indexing="ij")
    X = shape.point(U, Vv).reshape(-1, 3)
    mesh = build_mesh(X, _periodic_grid_faces(spec.nu, spec.nv), source=Placed.identity(shape))
    mesh.meta.update(kind="torus", nu=spec.nu, nv=spec.nv)
    return mesh


def torus_vertex(spec: TorusSpec, i: int, j: int) -> int:
    return (i % spec.nu) * spec.nv + (j % spec.nv)


# ---------------------------------------------------------------------------
# graph patches


@dataclass
class GraphPatch:
    """Polar domain r_in <= |z| <= r_out (r_in = 0 for a disk) with a height handle."""

    r_in: float
    r_out: float
    height: Callable
    n_r: int = 32
    n_theta: int = 128
    radii: Optional[np.ndarray] = None  # explicit ring radii override n_r

    def __post_init__(self):
        if not (0 <= self.r_in < self.r_out):
            raise DomainError("graph patch needs 0 <= r_in < r_out")

    def ring_radii(self) -> np.ndarray:
        if self.radii is not None:
            return np.asarray(self.radii, dtype=float)
        return np.linspace(self.r_in, self.r_out, self.n_r + 1)


def polar_grid(radii, n_theta: int, center: bool):
    """Planar polar grid; returns points, faces (CCW from above) and ring index arrays."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    radii = np.asarray(radii, dtype=float)
    if center and radii[0] == 0.0:
        radii = radii[1:]
    pts = [np.stack([r * np.cos(th), r * np.sin(th)], -1) for r in radii]
    Z = np.concatenate(pts)
    rings = [np.arange(k * n_theta, (k + 1) * n_theta) for k in range(len(radii))]
    faces = []
    for k in range(len(radii) - 1):
        a, b = rings[k], rings[k + 1]
        a1, b1 = np.roll(a, -1), np.roll(b, -1)
        faces.append(np.stack([a, b1, a1], -1))
        faces.append(np.stack([a, b, b1], -1))
    if center:
        c = len(Z)
        Z = np.vstack([Z, [[0.0, 0.0]]])
        a = rings[0]
        faces.append(np.stack([np.full(n_theta, c), a, np.roll(a, -1)], -1))
    return Z, np.concatenate(faces), rings


def gen_graph_mesh(patch: GraphPatch) -> TriangleMesh:
    """Open polar-grid triangulation of {(z, w(z))} with upward normals.

    ``meta['rings']`` lists the vertex indices of the innermost and outermost
    rings (in increasing angle) for stitching.
    """
    disk = patch.r_in == 0.0
    Z, F, rings = polar_grid(patch.ring_radii(), patch.n_theta, center=disk)
    w, _, _ = patch.height(Z)
    X = np.column_stack([Z, w])
    mesh = build_mesh(X, F, closed=False)
    mesh.meta["rings"] = {"inner": None if disk else rings[0], "outer": rings[-1]}
    return mesh


# ---------------------------------------------------------------------------
# two nearly concentric spheres joined by catenoidal necks


def _sites(n: int) -> np.ndarray:
    if n == 2:
        return np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + np.sqrt(5.0)) * k
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _frame_about(d):
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - helper.dot(d) * d
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + np.sqrt(5.0)) * k
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def gen_necked_spheres(
    g: int,
    eps: float,
    delta: float,
    n_ring: int = 48,
    n_neck: int = 24,
    far_points: int | None = None,
    collar: float = 0.15,
) -> TriangleMesh:
    """Spheres of radii 1 and 1 + eps joined by g + 1 catenoidal necks of waist delta.

    Around each neck axis d the surface is a surface of revolution written in
    spherical-shell coordinates: a point at angular distance rho from d has
    radius 1 + eps/2 +- h(rho). Near the waist h follows the catenoid
    rho = delta cosh(h / delta); a quintic blend over [rho_hole, rho_flat]
    then bends it onto the sheets h = eps/2, with rho_flat = ``collar``. The
    enclosed solid is the shell between the spheres with g + 1 tunnels
    drilled through it.
    """
    if g < 1:
        raise DomainError("genus must be at least 1")
    if not (0 < delta < eps < 1):
        raise DomainError("need 0 < delta < eps < 1")
    s_hole = 1.5
    rho_hole = delta * np.cosh(s_hole)
    rho_flat = float(collar)
    rho_out = 1.25 * rho_flat
    if delta * s_hole >= 0.25 * eps or rho_hole >= 0.5 * rho_flat:
        raise GeometryClash(f"neck waist {delta} too large for gap {eps}")
    sites = _sites(g + 1)
    cosang = np.clip(sites @ sites.T, -1, 1)
    np.fill_diagonal(cosang, -1)
    min_sep = float(np.arccos(cosang.max()))
    if min_sep <= 2.2 * rho_out:
        raise GeometryClash(f"{g + 1} necks of collar radius {rho_out:.3g} overlap (separation {min_sep:.3g})")

    mid = 1.0 + 0.5 * eps

    def height(rho):
        cat = delta * np.arccosh(np.maximum(rho / delta, 1.0))
        b, _, _ = smoothstep((rho - rho_hole) / (rho_flat - rho_hole))
        return (1 - b) * cat + b * 0.5 * eps

    # graded log-polar rings around each site, uniform points elsewhere
    q = 1.0 + 2 * np.pi / n_ring
    n_levels = int(np.ceil(np.log(rho_out / rho_hole) / np.log(q))) + 1
    levels = rho_hole * q ** np.arange(n_levels)
    phis = 2 * np.pi * np.arange(n_ring) / n_ring
    dirs, rho_of = [], []
    ring_ids = []
    for d in sites:
        e1, e2 = _frame_about(d)
        dirs.append(d[None, :])
        rho_of.append([0.0])
        for k, rho in enumerate(levels):
            ph = phis + (np.pi / n_ring) * (k % 2)
            P = np.cos(rho) * d + np.sin(rho) * (np.cos(ph)[:, None] * e1 + np.sin(ph)[:, None] * e2)
            if k == 0:
                start = sum(len(x) for x in dirs)
                ring_ids.append(np.arange(start, start + n_ring))
            dirs.append(P)
            rho_of.append(np.full(n_ring, rho))
    if far_points is None:
        spacing = 2 * np.pi * levels[-1] / n_ring
        far_points = int(4 * np.pi / spacing ** 2)
    far = _fibonacci_sphere(far_points)
    ang = np.arccos(np.clip(far @ sites.T, -1, 1))
    keep = ang.min(axis=1) > levels[-1] * (1 + 0.5 * (q - 1)) + 0.5 * np.sqrt(4 * np.pi / far_points)
    far = far[keep]
    D = np.vstack(dirs + [far])
    rho_all = np.concatenate([np.concatenate(rho_of), np.full(len(far), np.inf)])
    ang_far = np.arccos(np.clip(D @ sites.T, -1, 1)).min(axis=1)
    rho_all = np.where(np.isinf(rho_all), ang_far, rho_all)

    hull = ConvexHull(D)
    F = hull.simplices.copy()
    normals = np.cross(D[F[:, 1]] - D[F[:, 0]], D[F[:, 2]] - D[F[:, 0]])
    flip = np.einsum("ij,ij->i", normals, D[F].mean(axis=1)) < 0
    F[flip] = F[flip][:, ::-1]
    centers = np.array([sum(len(x) for x in dirs[: i * (n_levels + 1)]) for i in range(len(sites))])
    F = F[~np.isin(F, centers).any(axis=1)]
    # compact away the site centres
    alive = np.ones(len(D), dtype=bool)
    alive[centers] = False
    remap = -np.ones(len(D), dtype=int)
    remap[alive] = np.arange(alive.sum())
    D, rho_all, F = D[alive], rho_all[alive], remap[F]
    ring_ids = [remap[r] for r in ring_ids]

    h = height(rho_all)
    n = len(D)
    outer = D * (mid + h)[:, None]
    inner = D * (mid - h)[:, None]
    V = [outer, inner]
    faces = [F, F[:, ::-1] + n]
    base = 2 * n
    s = np.linspace(-s_hole, s_hole, n_neck + 1)[1:-1]
    for d, ring in zip(sites, ring_ids):
        e1, e2 = _frame_about(d)
        ring_dirs = D[ring]
        tang = ring_dirs - (ring_dirs @ d)[:, None] * d
        tang /= np.linalg.norm(tang, axis=1, keepdims=True)
        rows = [ring + n]  # inner sheet ring (h = -delta s_hole)
        pts = []
        for sk in s:
            rho = delta * np.cosh(sk)
            P = (mid + delta * sk) * (np.cos(rho) * d + np.sin(rho) * tang)
            rows.append(np.arange(base, base + len(ring)))
            pts.append(P)
            base += len(ring)
        rows.append(ring)  # outer sheet ring
        V.extend(pts)
        tube = []
        for a, b in zip(rows[:-1], rows[1:]):
            a1, b1 = np.roll(a, -1), np.roll(b, -1)
            tube.append(np.stack([a, a1, b1], -1))
            tube.append(np.stack([a, b1, b], -1))
        tube = np.concatenate(tube)
        Vall = np.vstack(V)
        # the solid's outward normal on the tube points toward the neck axis
        t0 = tube[0]
        nrm = np.cross(Vall[t0[1]] - Vall[t0[0]], Vall[t0[2]] - Vall[t0[0]])
        c0 = Vall[t0].mean(axis=0)
        radial = c0 - (c0 @ d) * d
        if nrm @ radial > 0:
            tube = tube[:, ::-1]
        faces.append(tube)
    mesh = build_mesh(np.vstack(V), np.concatenate(faces))
    mesh.meta.update(kind="necked_spheres", g=g, eps=eps, delta=delta)
    return mesh
