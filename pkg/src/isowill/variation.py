"""Volume-preserving normal variations that strictly lower the isoperimetric ratio.

Discretization: with the exact vertex gradients of area and enclosed volume,
``g_v = |dVol/dx_v|`` and ``n_v = (dVol/dx_v) / g_v`` (the area-weighted vertex
normal), the discrete mean curvature is ``H_v = (dA/dx_v . n_v) / g_v``. The
field ``xi_v = -phi_v (H_v - h) n_v`` with ``h`` the g-weighted average of H
over the bump then has volume derivative exactly zero and area derivative
``-sum phi (H - h)^2 g <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .errors import ConstantCurvature, DegenerateStep, SupportTouchesForbidden, ZeroField
from .graphs import smoothstep
from .mesh import (
    TriangleMesh,
    area_gradient,
    face_normals,
    is_round_sphere,
    measure,
    signed_volume,
    vertex_adjacency,
    volume_gradient,
    willmore_energy,
)
from .mesh import face_areas


def discrete_mean_curvature(mesh: TriangleMesh):
    """Return (H, n, g): volume-gradient normals, their lengths, and dA.n / g."""
    GV = volume_gradient(mesh)
    g = np.linalg.norm(GV, axis=1)
    n = GV / g[:, None]
    H = np.einsum("ij,ij->i", area_gradient(mesh), n) / g
    return H, n, g


def edge_graph(mesh: TriangleMesh) -> sparse.csr_matrix:
    A = sparse.triu(vertex_adjacency(mesh), k=1).tocoo()
    length = np.linalg.norm(mesh.vertices[A.row] - mesh.vertices[A.col], axis=1)
    n = mesh.n_vertices
    return sparse.coo_matrix((length, (A.row, A.col)), shape=(n, n)).tocsr()


def mean_edge_length(mesh: TriangleMesh) -> float:
    return float(edge_graph(mesh).data.mean())


def select_variation_point(mesh: TriangleMesh, forbidden: int | None = None, rtol: float = 1e-6) -> int:
    """A vertex on the edge of the (near-)maximal mean curvature region.

    Candidates are vertices within ``1e-3`` of the H range below the maximum
    that have a neighbour with strictly smaller H; the highest such vertex
    (then the lowest index) wins.
    """
    if is_round_sphere(mesh):
        raise ConstantCurvature("mesh is a round sphere; mean curvature is constant")
    H, _, _ = discrete_mean_curvature(mesh)
    spread = H.max() - H.min()
    if spread < rtol * np.abs(H).mean():
        raise ConstantCurvature(f"mean curvature relative spread {spread / np.abs(H).mean():.3g} below {rtol}")
    adj = vertex_adjacency(mesh).tocsr()
    top = np.flatnonzero(H >= H.max() - 1e-3 * spread)
    # smallest neighbouring H for each candidate
    cand = []
    for v in top:
        if forbidden is not None and v == forbidden:
            continue
        nb = adj.indices[adj.indptr[v]:adj.indptr[v + 1]]
        if np.min(H[nb]) < H[v] - 1e-12 * spread:
            cand.append(v)
    if not cand:
        raise ConstantCurvature("no vertex on the boundary of the maximal mean curvature region")
    cand = np.array(cand)
    return int(cand[np.lexsort((cand, -H[cand]))][0])


@dataclass(frozen=True)
class VariationSpec:
    mesh: TriangleMesh
    p: int
    forbidden: int | None
    radius: float
    phi: np.ndarray
    h: float
    xi: np.ndarray
    volume_residual: float
    meta: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.phi > 0)

    def apply(self, t: float) -> TriangleMesh:
        return self.mesh.with_vertices(self.mesh.vertices + t * self.xi)


def build_variation(mesh: TriangleMesh, p: int, radius: float, forbidden: int | None = None) -> VariationSpec:
    """Bump phi = 1 - smoothstep(d / radius) of the edge-path distance d from ``p``."""
    d = dijkstra(edge_graph(mesh), directed=False, indices=p, limit=radius * (1 + 1e-12))
    phi = np.zeros(mesh.n_vertices)
    inside = np.isfinite(d) & (d < radius)
    phi[inside] = 1.0 - smoothstep(d[inside] / radius)[0]
    if forbidden is not None and phi[forbidden] > 0:
        raise SupportTouchesForbidden(f"support of radius {radius:.4g} around {p} reaches vertex {forbidden}")
    H, n, g = discrete_mean_curvature(mesh)
    h = float(np.sum(phi * H * g) / np.sum(phi * g))
    amp = phi * (H - h)
    if not np.any(amp != 0.0):
        raise ZeroField("phi (H - h) vanishes on the whole support")
    xi = -amp[:, None] * n
    GV = volume_gradient(mesh)
    dvol = float(np.sum(GV * xi))
    scale = float(np.sum(np.abs(GV * xi)))
    return VariationSpec(mesh, int(p), forbidden, float(radius), phi, h, xi, abs(dvol) / scale)


@dataclass
class VariationRates:
    dArea: float
    dVol: float
    dIso: float
    dW_bound: float
    dArea_fd: float
    dVol_fd: float
    fd_rel_error: float
    steps: tuple

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in ("dArea", "dVol", "dIso", "dW_bound", "dArea_fd", "dVol_fd", "fd_rel_error")}


def _check_step(spec: VariationSpec, t: float) -> TriangleMesh:
    moved = spec.apply(t)
    if np.any(np.einsum("ij,ij->i", face_normals(moved, unit=False), face_normals(spec.mesh, unit=False)) <= 0):
        raise DegenerateStep(f"step {t:.3g} flips a triangle")
    return moved


def first_variation_rates(spec: VariationSpec, steps=None) -> VariationRates:
    """Exact discrete derivatives of area, volume and iso along xi, with central-difference checks.

    ``steps`` are absolute parameter values; by default a single step moving
    the fastest vertex by ``1e-5`` of the mesh diameter.
    """
    mesh = spec.mesh
    dA = float(np.sum(area_gradient(mesh) * spec.xi))
    dV = float(np.sum(volume_gradient(mesh) * spec.xi))
    A, V = float(face_areas(mesh).sum()), signed_volume(mesh)
    # iso = A V^(-2/3)
    dIso = (dA - (2.0 / 3.0) * A * dV / V) / V ** (2.0 / 3.0)
    vmax = np.abs(spec.xi).max()
    if steps is None:
        steps = (1e-5 * mesh.diameter() / vmax,) if vmax > 0 else (1e-5,)
    steps = tuple(sorted(float(s) for s in steps))
    if vmax == 0:
        return VariationRates(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, steps)
    W0 = willmore_energy(mesh)
    t = steps[0]
    plus, minus = _check_step(spec, t), _check_step(spec, -t)
    for s in steps[1:]:
        _check_step(spec, s)
        _check_step(spec, -s)
    dA_fd = (face_areas(plus).sum() - face_areas(minus).sum()) / (2 * t)
    dV_fd = (signed_volume(plus) - signed_volume(minus)) / (2 * t)
    err = abs(dA_fd - dA) / abs(dA)
    dW = abs(willmore_energy(plus) - W0) / t
    return VariationRates(dA, dV, dIso, dW, float(dA_fd), float(dV_fd), float(err), steps)


def variation_deltas(spec: VariationSpec, s: float) -> dict:
    """Changes in area, volume and Willmore energy of the mesh moved by s * xi."""
    base = measure(spec.mesh)
    moved = measure(spec.apply(s))
    return {
        "dA": moved.area - base.area,
        "dV": moved.volume - base.volume,
        "dW": moved.willmore - base.willmore,
    }
