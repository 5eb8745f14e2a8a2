"""Sphere inversions and the normalized inversion at a surface point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .analytic import LocalGraph
from .biharmonic import ModalField, Radial, trace_free_field
from .errors import CenterOnSurface, NoBracket, NotNormalized, TargetOutOfRange, UmbilicPoint
from .mesh import (
    ISO_SPHERE,
    SecondFundamentalForm2D,
    TriangleMesh,
    build_mesh,
    k_ring,
    measure,
    second_fundamental_form_at,
    signed_volume,
    vertex_mean_curvature,
    vertex_normals,
)

UMBILIC_RTOL = 0.05


def _point_triangle_distance(p, A, B, C):
    """Distance from point p to each triangle (A, B, C), vectorized over triangles."""
    ab, ac, ap = B - A, C - A, p - A
    d1, d2 = np.einsum("ij,ij->i", ab, ap), np.einsum("ij,ij->i", ac, ap)
    bp = p - B
    d3, d4 = np.einsum("ij,ij->i", ab, bp), np.einsum("ij,ij->i", ac, bp)
    cp = p - C
    d5, d6 = np.einsum("ij,ij->i", ab, cp), np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    denom = va + vb + vc
    with np.errstate(divide="ignore", invalid="ignore"):
        v = vb / denom
        w = vc / denom
    Q = A + v[:, None] * ab + w[:, None] * ac  # interior projection
    # Clamp to edges and vertices where the projection falls outside.
    cand = [Q]
    for P0, P1 in ((A, B), (B, C), (C, A)):
        e = P1 - P0
        t = np.clip(np.einsum("ij,ij->i", p - P0, e) / np.einsum("ij,ij->i", e, e), 0, 1)
        cand.append(P0 + t[:, None] * e)
    inside = (va >= 0) & (vb >= 0) & (vc >= 0)
    dists = np.stack([np.linalg.norm(p - c, axis=1) for c in cand])
    dists[0] = np.where(inside, dists[0], np.inf)
    return dists.min(axis=0)


def distance_to_mesh(mesh: TriangleMesh, point) -> float:
    V, F = mesh.vertices, mesh.faces
    p = np.asarray(point, dtype=float)[None, :]
    return float(_point_triangle_distance(p, V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]).min())


def invert(mesh: TriangleMesh, center, keep_center: bool = False, tol: float = 1e-9) -> TriangleMesh:
    """Sphere inversion x -> (x - a)/|x - a|^2.

    With ``keep_center`` the image is translated back by ``a`` so the map is
    the inversion in the unit sphere about ``a`` and an exact involution.
    Faces are re-oriented so a closed image has positive signed volume.
    """
    a = np.asarray(center, dtype=float)
    if distance_to_mesh(mesh, a) <= tol * max(mesh.diameter(), 1.0):
        raise CenterOnSurface(f"inversion center {a} lies on the surface")
    d = mesh.vertices - a
    Y = d / np.sum(d * d, axis=1, keepdims=True)
    if keep_center:
        Y = Y + a
    out = build_mesh(Y, mesh.faces[:, ::-1], mesh.labels, closed=mesh.closed)
    if mesh.closed and signed_volume(out) < 0:
        out = out.flipped()
    return out


# ---------------------------------------------------------------------------
# graph of the normalized inversion at infinity


class InvertedGraph:
    """u°(zeta) for the inverted surface x/|x|^2 - c e3 of a local graph (z, u(z)).

    Exact to roundoff: Newton's method inverts zeta = z/(|z|^2 + u^2) and the
    derivatives follow from the chain rule.
    """

    def __init__(self, local: LocalGraph, shift: float):
        self.local = local
        self.shift = float(shift)

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        z = zeta / np.sum(zeta * zeta, axis=-1, keepdims=True)
        for _ in range(50):
            u, Du, _ = self.local(z)
            s = np.sum(z * z, axis=-1) + u * u
            gs = 2 * z + 2 * u[..., None] * Du
            F = z / s[..., None] - zeta
            J = np.eye(2) / s[..., None, None] - z[..., :, None] * gs[..., None, :] / (s ** 2)[..., None, None]
            step = np.linalg.solve(J, F[..., None])[..., 0]
            z = z - step
            if np.all(np.abs(step) <= 1e-13 * np.linalg.norm(z, axis=-1, keepdims=True)):
                break
        u, Du, D2u = self.local(z)
        s = np.sum(z * z, axis=-1) + u * u
        gs = 2 * z + 2 * u[..., None] * Du
        Hs = 2 * np.eye(2) + 2 * Du[..., :, None] * Du[..., None, :] + 2 * u[..., None, None] * D2u
        s1, s2, s3 = s[..., None], (s ** 2)[..., None, None], (s ** 3)[..., None, None]
        J = np.eye(2) / s[..., None, None] - z[..., :, None] * gs[..., None, :] / s2
        h = u / s - self.shift
        gh = Du / s1 - u[..., None] * gs / s1 ** 2
        Hh = (
            D2u / s[..., None, None]
            - (Du[..., :, None] * gs[..., None, :] + gs[..., :, None] * Du[..., None, :]) / s2
            - u[..., None, None] * Hs / s2
            + 2 * u[..., None, None] * gs[..., :, None] * gs[..., None, :] / s3
        )
        Jinv = np.linalg.inv(J)
        JinvT = np.swapaxes(Jinv, -1, -2)
        g = np.einsum("...ij,...j->...i", JinvT, gh)
        M = Hh.copy()
        for k in range(2):
            ek = np.zeros(2)
            ek[k] = 1.0
            Hz = (
                -(ek[:, None] * gs[..., None, :] + gs[..., :, None] * ek[None, :]) / s2
                - z[..., k, None, None] * Hs / s2
                + 2 * z[..., k, None, None] * gs[..., :, None] * gs[..., None, :] / s3
            )
            M = M - g[..., k, None, None] * Hz
        D2 = JinvT @ M @ Jinv
        return h, g, D2


def fit_graph_at_infinity(points: np.ndarray, n_max: int = 4) -> ModalField:
    """Least-squares fit of heights at scattered planar points by a decaying modal expansion.

    Basis: constant and mode-2 terms of degree 0, then r^-k times modes
    0..k+2 for k = 1, 2.
    """
    Z, h = points[:, :2], points[:, 2]
    r = np.hypot(Z[:, 0], Z[:, 1])
    th = np.arctan2(Z[:, 1], Z[:, 0])
    cols, keys = [], []
    for p, modes in ((0, (0, 2)), (-1, range(0, 4)), (-2, range(0, n_max + 1))):
        for n in modes:
            for trig, fn in (("cos", np.cos), ("sin", np.sin)):
                if trig == "sin" and n == 0:
                    continue
                cols.append(r ** p * fn(n * th))
                keys.append((trig, n, p))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, h, rcond=None)
    field = ModalField({}, {})
    for (trig, n, p), c in zip(keys, coef):
        table = field.cos if trig == "cos" else field.sin
        table[n] = table.get(n, Radial()) + Radial({(p, 0): c})
    return field


@dataclass
class InvertedSurface:
    mesh: TriangleMesh
    center: np.ndarray
    shift: float  # tr P / 4, subtracted along e3
    shifted: bool
    form: SecondFundamentalForm2D  # P = D^2 u at the inversion point
    graph: Any  # handle for u° outside radius R
    fitted: ModalField
    R: float
    C_est: float
    exact: Optional[InvertedGraph] = None

    def p_circ(self) -> ModalField:
        return trace_free_field(self.form)


def point_form(mesh: TriangleMesh, vertex: int, frame=None) -> SecondFundamentalForm2D:
    """Second fundamental form w.r.t. the outward normal, exact if an analytic source exists."""
    if mesh.source is not None:
        if frame is None:
            from .mesh import tangent_frame

            frame = tangent_frame(mesh.source.normal(mesh.vertices[vertex]))
        return mesh.source.form_at(mesh.vertices[vertex], frame)
    form, _ = second_fundamental_form_at(mesh, vertex)
    return form


def check_nonumbilic(form: SecondFundamentalForm2D, rtol: float = UMBILIC_RTOL) -> None:
    tf = np.sqrt(form.trace_free().norm2())
    scale = np.sqrt(form.norm2())
    if scale == 0.0 or tf < rtol * scale:
        raise UmbilicPoint(f"trace-free part {tf:.3g} is below {rtol} of |P| = {scale:.3g}")


def normalized_inversion(mesh: TriangleMesh, vertex: int, graph_radius: float | None = None) -> InvertedSurface:
    """Invert a normalized mesh at its origin vertex and translate by -(tr P/4) e3.

    The mesh must have ``vertex`` at the origin with tangent plane z = 0; the
    graph convention is height along +e3, so P = D^2 u at the origin. The
    2-ring of the vertex is excised before inverting.
    """
    x0 = mesh.vertices[vertex]
    scale = mesh.diameter()
    if np.linalg.norm(x0) > 1e-9 * scale:
        raise NotNormalized(f"vertex {vertex} is not at the origin")
    n = mesh.source.normal(x0) if mesh.source is not None else vertex_normals(mesh)[vertex]
    if np.linalg.norm(np.cross(n, [0.0, 0.0, 1.0])) > (1e-8 if mesh.source is not None else 0.05):
        raise NotNormalized("tangent plane at the vertex is not horizontal")
    sign = float(np.sign(n[2]))
    outward = point_form(mesh, vertex, np.eye(3))
    form = outward * (-sign)  # D^2 u along +e3
    check_nonumbilic(form)
    shift = form.trace / 4.0

    cut = k_ring(mesh, vertex, 1)
    keep_face = ~np.isin(mesh.faces, cut).any(axis=1)
    F = mesh.faces[keep_face]
    used = np.unique(F)
    remap = -np.ones(mesh.n_vertices, dtype=int)
    remap[used] = np.arange(len(used))
    X = mesh.vertices[used]
    Y = X / np.sum(X * X, axis=1, keepdims=True)
    Y[:, 2] -= shift
    # inversion reverses orientation
    inv_mesh = build_mesh(Y, remap[F][:, ::-1], mesh.labels[keep_face], closed=False)

    ring2 = k_ring(mesh, vertex, 2)
    ring2 = ring2[np.isin(ring2, used)]
    extent = np.hypot(*Y[remap[ring2], :2].T).max() if len(ring2) else 1.0
    R = graph_radius if graph_radius is not None else extent / 3.0
    R_fit = R
    pts = Y[np.hypot(Y[:, 0], Y[:, 1]) > R_fit]
    fitted = fit_graph_at_infinity(pts)

    exact = None
    handle: Any = fitted
    if mesh.source is not None:
        rho = 0.3 / max(abs(form.a11) + abs(form.a12) + abs(form.a22), 1e-12)
        local = LocalGraph(mesh.source, np.zeros(3), np.eye(3), rho)
        exact = InvertedGraph(local, shift)
        handle = exact
    # decay constant of phi° = u° - p° on sample rings outside R
    p_c = trace_free_field(form)
    rr = R * np.geomspace(1.0, 8.0, 6)
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    RR, TT = np.meshgrid(rr, th, indexing="ij")
    Zs = np.stack([RR * np.cos(TT), RR * np.sin(TT)], -1)
    u, Du, _ = handle(Zs)
    p, Dp, _ = p_c(Zs)
    C_est = float(np.max(RR * np.abs(u - p) + RR ** 2 * np.linalg.norm(Du - Dp, axis=-1)))
    return InvertedSurface(inv_mesh, np.zeros(3), shift, True, form, handle, fitted, float(R), C_est, exact)


# ---------------------------------------------------------------------------
# matching the isoperimetric ratio along a ray of inversion centers


def _iso_after(mesh, center):
    m = invert(mesh, center)
    s = measure(m)
    return s.iso, m


def match_iso_by_inversion(mesh: TriangleMesh, target: float, rtol: float = 1e-3, decades: float = 6.0, n_samples: int = 25):
    """Find an inversion center whose image has isoperimetric ratio ``target``.

    Centers run along the outward normal ray from the vertex of largest |H|,
    sampled logarithmically from far (1e2 diameters) to near the surface.
    """
    base = measure(mesh, strict=True)
    if not (ISO_SPHERE < target <= base.iso * (1 + 1e-12)):
        raise TargetOutOfRange(f"target {target} outside ({ISO_SPHERE:.6f}, {base.iso:.6f}]")
    H = vertex_mean_curvature(mesh)
    v = int(np.nanargmax(np.abs(H)))
    x, n = mesh.vertices[v], vertex_normals(mesh)[v]
    D = mesh.diameter()
    ts = D * np.logspace(2.0, 2.0 - decades, n_samples)
    samples = []
    prev = None
    for t in ts:
        iso, m = _iso_after(mesh, x + t * n)
        samples.append((float(t), float(iso)))
        if abs(iso - target) <= rtol * target:
            return x + t * n, m
        if prev is not None and (prev[1] - target) * (iso - target) < 0:
            lo, hi = np.log(prev[0]), np.log(t)
            f_lo = prev[1] - target
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                iso_m, m = _iso_after(mesh, x + np.exp(mid) * n)
                if abs(iso_m - target) <= rtol * target:
                    return x + np.exp(mid) * n, m
                if (iso_m - target) * f_lo > 0:
                    lo, f_lo = mid, iso_m - target
                else:
                    hi = mid
            break
        prev = (t, iso)
    raise NoBracket(f"iso never crossed {target} along the sampled ray", samples)
