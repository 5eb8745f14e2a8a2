"""Connected sums through a biharmonic bridge, their energetics, and the harness.

Coordinates: both input surfaces are moved so the gluing point sits at the
origin with outward normal +e3, so near that point each is the graph of a
height function over the horizontal plane. The inverted first surface is
scaled by ``alpha`` and occupies the disk of radius ``gamma``; the second
surface is scaled by ``1/beta`` and lies outside the unit circle; the bridge
fills the annulus between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import roots_legendre
from scipy.stats import linregress
from scipy.stats import t as student_t

from .analytic import LocalGraph, Placed
from .biharmonic import (
    FourierBoundaryData,
    ModalField,
    quadratic_field,
    solve_annulus_biharmonic,
    trace_free_field,
)
from .errors import (
    BandTooWide,
    BisectionNoBracket,
    NoNegativeExcess,
    StitchMismatch,
    SupportTouchesForbidden,
    DegeneratePair,
    MissingBeta,
    OriginNotUnique,
    ValidationError,
)
from .graphs import BlendedGraph, Cutoff, LinearCombination, PiecewiseRadial, ScaledGraph, graph_energetics
from .mesh import (
    SecondFundamentalForm2D,
    TriangleMesh,
    build_mesh,
    measure,
    k_ring,
    second_fundamental_form_at,
    tangent_frame,
    vertex_adjacency,
)
from .mobius import InvertedGraph, check_nonumbilic
from .surfaces import polar_grid

# ---------------------------------------------------------------------------
# normalization and alignment


def _point_frame(mesh: TriangleMesh, vertex: int) -> np.ndarray:
    """Tangent frame (rows e1, e2, n_out) at a vertex, exact when a source is known."""
    if mesh.source is not None:
        return tangent_frame(mesh.source.normal(mesh.vertices[vertex]))
    _, frame = second_fundamental_form_at(mesh, vertex)
    return frame


def normalize_at_point(mesh: TriangleMesh, vertex: int, sign: int = 1):
    """Rigidly move ``mesh`` so ``vertex`` is at 0 with outward normal ``sign * e3``.

    Returns the moved mesh and the second derivative P = D^2 u of its local
    height function u at the origin. The applied motion is stored in
    ``meta['motion']`` as ``(rotation, translation)``.
    """
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    frame = _point_frame(mesh, vertex)
    if sign < 0:
        frame = np.vstack([frame[0], -frame[1], -frame[2]])
    Rm = frame
    t = -Rm @ mesh.vertices[vertex]
    moved = mesh.transformed(Rm, t)
    moved = replace(moved, meta={**mesh.meta, "motion": (Rm, t), "origin_vertex": int(vertex)})

    # another sheet through the origin shows up as a second cluster of nearby vertices
    h = np.linalg.norm(moved.vertices[k_ring(moved, vertex, 1)], axis=1).max()
    near = np.flatnonzero(np.linalg.norm(moved.vertices, axis=1) < 2.0 * h)
    adj = vertex_adjacency(moved)[near][:, near]
    _, comp = connected_components(adj, directed=False)
    if np.any(comp != comp[np.searchsorted(near, vertex)]):
        raise OriginNotUnique(f"another part of the surface passes within {2 * h:.3g} of the origin")

    if moved.source is not None:
        outward = moved.source.form_at(np.zeros(3), np.eye(3))
    else:
        outward, _ = second_fundamental_form_at(moved, vertex)
    form = outward * (-float(sign))
    check_nonumbilic(form)
    return moved, form


def align_orientation(P: SecondFundamentalForm2D, Q: SecondFundamentalForm2D) -> float:
    """Rotation angle about e3 maximizing <P°, Q°(theta)>; the maximum is sqrt(A^2 + B^2)."""
    Pc, Qc = P.trace_free(), Q.trace_free()
    A = Pc.pair(Qc)
    B = Pc.pair(Qc.rotated(np.pi / 4))
    if np.hypot(A, B) <= 1e-14 * max(np.sqrt(Pc.norm2() * Qc.norm2()), 1e-300):
        raise DegeneratePair("trace-free parts cannot be aligned (A = B = 0)")
    return float(0.5 * np.arctan2(B, A))


def rotation_about_e3(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def omega_g(g: int, beta: dict) -> float:
    """min over partitions g = g_1 + ... + g_k (k >= 2, parts in [1, g-1]) of 4 pi + sum (beta_{g_i} - 4 pi)."""
    if g < 1:
        raise ValidationError("genus must be positive")
    best = np.inf
    for parts in _partitions(g, g - 1):
        if len(parts) < 2:
            continue
        missing = [p for p in parts if p not in beta]
        if missing:
            raise MissingBeta(f"no value for genus {missing[0]}")
        best = min(best, 4 * np.pi + sum(beta[p] - 4 * np.pi for p in parts))
    return float(best)


def _partitions(n: int, largest: int):
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


# ---------------------------------------------------------------------------
# parameters and the glued surface


@dataclass(frozen=True)
class GluingParams:
    """alpha: scale of the inverted first surface; beta = t alpha; gamma: bridge inner radius.

    The cutoff band has width ``band_scale * sqrt(alpha)``. The first surface
    is rescaled before inversion so that |P°| equals ``p_norm``.
    """

    alpha: float
    t: Optional[float] = None
    gamma: float = 0.1
    band_scale: float = 0.15
    m: float = 2.25
    p_norm: float = 0.03

    def __post_init__(self):
        if not (0 < self.alpha < self.gamma < 1):
            raise ValidationError(f"need 0 < alpha < gamma < 1, got alpha={self.alpha}, gamma={self.gamma}")
        if self.t is not None and self.t <= 0:
            raise ValidationError("t must be positive")
        if not (2.0 < self.m < 2.5):
            raise ValidationError("tuning exponent m must lie in (2, 2.5)")
        if self.band_scale <= 0 or self.p_norm <= 0:
            raise ValidationError("band_scale and p_norm must be positive")

    @property
    def band(self) -> float:
        return self.band_scale * np.sqrt(self.alpha)


def design_t(P: SecondFundamentalForm2D, Q: SecondFundamentalForm2D) -> float:
    """t = 2 |P°|^2 / <P°, Q°>, making the predicted leading coefficient -pi |P°|^2."""
    Pc, Qc = P.trace_free(), Q.trace_free()
    return 2.0 * Pc.norm2() / Pc.pair(Qc)


@dataclass
class PreparedPair:
    """Both surfaces normalized at their gluing points, f1 rescaled, f2 aligned."""

    f1: TriangleMesh
    f2: TriangleMesh
    P: SecondFundamentalForm2D
    Q: SecondFundamentalForm2D
    scale1: float
    theta: float
    p1: int
    p2: int
    rho1: float
    rho2: float
    Rc: float


def prepare_pair(
    f1: TriangleMesh, p1: int, f2: TriangleMesh, p2: int, p_norm: float = 0.03, cap_factor: float = 2.5
) -> PreparedPair:
    """Normalize both surfaces at their gluing vertices.

    The inverted first surface is treated as a graph outside the disk of
    radius ``Rc = cap_factor / rho1``; ``cap_factor > 2`` keeps that disk
    clear of everything except the local graph of f1 near the origin.
    """
    for m in (f1, f2):
        if m.source is None:
            raise ValidationError("gluing needs surfaces with a known analytic description")
    g1, P = normalize_at_point(f1, p1, +1)
    lam = np.sqrt(P.trace_free().norm2()) / p_norm
    g1 = g1.scaled(lam)
    P = P * (1.0 / lam)
    g2, Q = normalize_at_point(f2, p2, +1)
    theta = align_orientation(P, Q)
    g2 = g2.transformed(rotation_about_e3(theta))
    Q = Q.rotated(theta)
    rho1 = _graph_radius(g1)
    rho2 = _graph_radius(g2)
    return PreparedPair(g1, g2, P, Q, lam, theta, p1, p2, rho1, rho2, cap_factor / rho1)


def _graph_radius(mesh: TriangleMesh) -> float:
    """Radius on which the surface is a graph over its tangent plane at the origin.

    Conservative: 0.3 over the largest principal curvature sampled on the surface.
    """
    X, N, _ = mesh.source.quadrature(64)
    _, g, H = mesh.source.implicit(X)
    gn = np.linalg.norm(g, axis=-1)
    # principal curvatures from the Hessian restricted to the tangent plane
    P = np.eye(3) - N[:, :, None] * N[:, None, :]
    S = P @ H @ P / gn[:, None, None]
    kmax = np.abs(np.linalg.eigvalsh(S)).max()
    return 0.3 / kmax


@dataclass
class GluedSurface:
    params: GluingParams
    pair: PreparedPair
    t: float
    beta: float
    band: float
    bridge: Any  # FourierBiharmonicSolution
    u_alpha: Any  # scaled inverted graph of f1
    v_beta: Any  # scaled graph of f2
    w: PiecewiseRadial  # patched height on gamma - band <= r <= 1 + band
    inverted: InvertedGraph
    mesh: Optional[TriangleMesh] = None
    meta: dict = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def predicted_coefficient(self) -> float:
        Pc, Qc = self.pair.P.trace_free(), self.pair.Q.trace_free()
        return float(np.pi * (Pc.norm2() - self.t * Pc.pair(Qc)))


def build_handles(pair: PreparedPair, params: GluingParams) -> GluedSurface:
    a, g = params.alpha, params.gamma
    t = params.t if params.t is not None else design_t(pair.P, pair.Q)
    beta = t * a
    b = params.band
    if g - b <= a * pair.Rc:
        raise BandTooWide(
            f"inverted cap radius {a * pair.Rc:.4g} reaches the cutoff band at {g - b:.4g}; "
            "enlarge gamma or shrink alpha"
        )
    if (1 + b) * beta >= pair.rho2:
        raise BandTooWide(f"outer band {1 + b:.4g} exceeds the graph radius {pair.rho2 / beta:.4g} of f2")

    local1 = LocalGraph(pair.f1.source, np.zeros(3), np.eye(3), pair.rho1)
    inv = InvertedGraph(local1, pair.P.trace / 4.0)
    u_alpha = ScaledGraph(inv, a)
    p_field = trace_free_field(pair.P).scale(a)
    local2 = LocalGraph(pair.f2.source, np.zeros(3), np.eye(3), pair.rho2)
    v_beta = ScaledGraph(local2, 1.0 / beta)
    q_field = quadratic_field(pair.Q).scale(beta)

    data = FourierBoundaryData.from_fields(g, p_field, q_field)
    sol = solve_annulus_biharmonic(data)
    cut = Cutoff(b)
    inner = BlendedGraph(p_field, LinearCombination((1.0, u_alpha), (-1.0, p_field)), cut, g, -1)
    outer = BlendedGraph(q_field, LinearCombination((1.0, v_beta), (-1.0, q_field)), cut, 1.0, +1)
    w = PiecewiseRadial([(g - b, g, inner), (g, 1.0, sol.field()), (1.0, 1 + b, outer)])
    w.extra_breaks = [g - 0.75 * b, g - 0.25 * b, 1 + 0.25 * b, 1 + 0.75 * b]
    return GluedSurface(params, pair, t, beta, b, sol, u_alpha, v_beta, w, inv)


# ---------------------------------------------------------------------------
# hybrid energetics


def _bump(d, rho):
    """Smooth partition: 1 for d <= rho/2, 0 for d >= rho."""
    t = np.clip((d - 0.5 * rho) / (0.5 * rho), 0.0, 1.0)

    def psi(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)

    a, c = psi(1 - t), psi(t)
    return a / (a + c)


def body_measures(pair: PreparedPair, n_param: int = 1024, n_r: int = 96, n_theta: int = 256):
    """Area and volume of the inverted first surface where |zeta_h| <= Rc (unscaled)."""
    src: Placed = pair.f1.source
    c = pair.P.trace / 4.0
    rho, Rc = pair.rho1, pair.Rc
    X, N, wq = src.quadrature(n_param)
    d2 = np.sum(X * X, axis=1)
    far = 1.0 - _bump(np.sqrt(d2), rho)
    keep = far > 0
    X, N, wq, d2, far = X[keep], N[keep], wq[keep], d2[keep], far[keep]
    xn = np.einsum("ij,ij->i", X, N)
    dens_v = -xn / d2 - c * (N[:, 2] - 2 * xn * X[:, 2] / d2)
    A_far = np.sum(wq * far / d2 ** 2)
    V_far = np.sum(wq * far * dens_v / d2 ** 2) / 3.0

    local = LocalGraph(src, np.zeros(3), np.eye(3), rho)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    e = np.stack([np.cos(th), np.sin(th)], -1)
    r = np.full(n_theta, 1.0 / Rc)
    for _ in range(100):
        u, _, _ = local(r[:, None] * e)
        r_new = (1 + np.sqrt(1 - 4 * Rc * Rc * u * u)) / (2 * Rc)
        if np.max(np.abs(r_new - r)) < 1e-15 * rho:
            r = r_new
            break
        r = r_new
    x, wx = roots_legendre(n_r)
    R = r[:, None] + (rho - r[:, None]) * (x[None, :] + 1) / 2
    W = (rho - r[:, None]) / 2 * wx[None, :] * R * (2 * np.pi / n_theta)
    Z = R[..., None] * e[:, None, :]
    u, Du, _ = local(Z)
    s = np.sum(Z * Z, -1) + u * u
    chi = _bump(np.sqrt(s), rho)
    flux = u - np.sum(Z * Du, -1)  # (x . n) dA / dz
    A_near = np.sum(W * chi * np.sqrt(1 + np.sum(Du * Du, -1)) / s ** 2)
    V_near = np.sum(W * chi * (-flux / s - c * (1 - 2 * flux * u / s)) / s ** 2) / 3.0
    return float(A_far + A_near), float(V_far + V_near)


@dataclass
class ExcessReport:
    dW: float
    dIso: float
    dArea: float  # f-units, relative to area(f2)/beta^2
    dVolume: float
    predicted: float
    iso_f2: float
    area_f2: float
    volume_f2: float
    parts: dict = field(default_factory=dict)


def iso_change(area2, vol2, dA_scaled, dV_scaled):
    """iso(A2 + dA, V2 + dV) - iso(A2, V2), computed without cancellation."""
    iso2 = area2 / vol2 ** (2.0 / 3.0)
    return iso2 * np.expm1(np.log1p(dA_scaled / area2) - (2.0 / 3.0) * np.log1p(dV_scaled / vol2))


def energy_iso_excess(glued: GluedSurface, f2_measures: dict | None = None, orders=(64, 256), body=None) -> ExcessReport:
    """Willmore excess W(f) - (W1 + W2 - 4 pi) and iso(f) - iso(f2) of a glued surface.

    Every piece that differs between the glued surface and the inputs is a
    graph over an annulus (or the compact inverted body), so the differences
    are computed directly by quadrature instead of subtracting mesh totals.
    """
    a, g, b, beta = glued.alpha, glued.params.gamma, glued.band, glued.beta
    pair = glued.pair
    n_r, n_t = orders
    brk = list(glued.w.extra_breaks)

    ew = graph_energetics(glued.w, g - b, 1 + b, n_r, n_t, breakpoints=brk, check=False)
    eu_tail = graph_energetics(glued.u_alpha, g - b, np.inf, n_r, n_t, check=False)
    ev = graph_energetics(glued.v_beta, 0.0, 1 + b, n_r, n_t, breakpoints=[1.0], check=False)
    eu_in = graph_energetics(glued.u_alpha, a * pair.Rc, g - b, n_r, n_t, check=False, log_radial=True)
    dW = ew.willmore - eu_tail.willmore - ev.willmore

    if body is None:
        body = body_measures(pair)
    A_body, V_body = body
    dA = a * a * (A_body - np.pi * pair.Rc ** 2) + eu_in.area_excess + ew.area_excess - ev.area_excess
    dV = a ** 3 * V_body + eu_in.volume + ew.volume - ev.volume
    if f2_measures is None:
        f2_measures = pair.f2.source.measures()
    A2, V2 = f2_measures["area"], f2_measures["volume"]
    d_iso = iso_change(A2, V2, beta ** 2 * dA, beta ** 3 * dV)
    return ExcessReport(
        dW=float(dW),
        dIso=float(d_iso),
        dArea=float(dA),
        dVolume=float(dV),
        predicted=glued.predicted_coefficient() * a * a,
        iso_f2=float(A2 / V2 ** (2 / 3)),
        area_f2=float(A2),
        volume_f2=float(V2),
        parts={
            "W_bridge_zone": ew.willmore,
            "W_inverted_tail": eu_tail.willmore,
            "W_f2_disk": ev.willmore,
            "A_body": A_body,
            "V_body": V_body,
        },
    )


# ---------------------------------------------------------------------------
# mesh assembly


def _excise(mesh: TriangleMesh, radius: float):
    """Drop every face touching a vertex within ``radius`` of the origin.

    Returns (vertices, faces, loop): the remaining mesh, compacted, and its new
    boundary loop in the order of the remaining faces' boundary half-edges.
    """
    V, F = mesh.vertices, mesh.faces
    inside = np.linalg.norm(V, axis=1) < radius
    kept = F[~inside[F].any(axis=1)]
    used = np.unique(kept)
    remap = -np.ones(len(V), dtype=np.int64)
    remap[used] = np.arange(len(used))
    kept = remap[kept]
    he = np.concatenate([kept[:, [0, 1]], kept[:, [1, 2]], kept[:, [2, 0]]])
    n = len(used)
    keys = set((he[:, 0] * n + he[:, 1]).tolist())
    nxt = {int(a): int(b) for a, b in he if int(b) * n + int(a) not in keys}
    if not nxt:
        raise StitchMismatch("excision removed nothing; increase the excision radius")
    start = min(nxt)
    loop = [start]
    while True:
        v = nxt[loop[-1]]
        if v == start:
            break
        loop.append(v)
        if len(loop) > len(nxt):
            raise StitchMismatch("boundary of the excised region is not a simple loop")
    if len(loop) != len(nxt):
        raise StitchMismatch("excision left more than one boundary loop")
    return V[used], kept, np.array(loop)


def _ccw(loop: np.ndarray, XY: np.ndarray) -> np.ndarray:
    """Loop reordered counterclockwise (seen from +e3), starting at the smallest angle."""
    p = XY[loop]
    signed = 0.5 * np.sum(p[:, 0] * np.roll(p[:, 1], -1) - np.roll(p[:, 0], -1) * p[:, 1])
    if signed < 0:
        loop = loop[::-1]
    ang = np.mod(np.arctan2(XY[loop, 1], XY[loop, 0]), 2 * np.pi)
    return np.roll(loop, -int(np.argmin(ang)))


def _zipper(inner: np.ndarray, outer: np.ndarray, X3: np.ndarray) -> np.ndarray:
    """Triangle strip between two counterclockwise loops.

    Both loops start near angle 0 and are merged by polar angle; a step that
    would fold a triangle (seen from +e3) takes the other loop instead.
    """
    XY = X3[:, :2]
    def unwrapped(loop):
        ang = np.unwrap(np.arctan2(XY[loop, 1], XY[loop, 0]))
        ang = ang - 2 * np.pi * np.floor(ang[0] / (2 * np.pi))
        return np.append(ang, ang[0] + 2 * np.pi)

    a, b = unwrapped(inner), unwrapped(outer)
    n, m = len(inner), len(outer)

    def up(t):
        p, q, r = XY[t[0]], XY[t[1]], XY[t[2]]
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]) > 0

    i = j = 0
    tris = []
    while i < n or j < m:
        step_in = (inner[i % n], outer[j % m], inner[(i + 1) % n])
        step_out = (inner[i % n], outer[j % m], outer[(j + 1) % m])
        take_in = j == m or (i < n and a[i + 1] <= b[j + 1])
        # fall back to the other choice when the angular rule would fold a triangle
        if take_in and i < n and j < m and not up(step_in) and up(step_out):
            take_in = False
        elif not take_in and i < n and j < m and not up(step_out) and up(step_in):
            take_in = True
        if take_in:
            tris.append(step_in)
            i += 1
        else:
            tris.append(step_out)
            j += 1
    return np.array(tris, dtype=np.int64)


def _ring_radii(r0: float, r1: float, n_theta: int, required) -> np.ndarray:
    """Log-spaced radii with spacing about 2 pi / n_theta, through every required radius."""
    knots = sorted({r0, r1} | {r for r in required if r0 < r < r1})
    step = 2 * np.pi / n_theta
    out = [knots[0]]
    for a, b in zip(knots[:-1], knots[1:]):
        k = max(1, int(np.ceil(np.log(b / a) / step)))
        out.extend(np.exp(np.linspace(np.log(a), np.log(b), k + 1))[1:])
    return np.array(out)


def assemble_mesh(glued: GluedSurface, n_theta: int = 128, excision_rings: int = 4) -> TriangleMesh:
    """Triangulate the glued surface in the coordinates of the bridge annulus.

    Pieces: the inverted first surface (scaled by alpha) minus a neighbourhood
    of infinity, a polar grid carrying the exact graph heights from its inner
    ring out through the bridge to the scaled second surface, and the second
    surface (scaled by 1/beta) minus a disk around the gluing point. Loops and
    grid rings are joined by zipper strips.
    """
    pair, a, beta = glued.pair, glued.alpha, glued.beta
    g, b = glued.params.gamma, glued.band
    c = pair.P.trace / 4.0

    def edge_scale(mesh):
        nb = k_ring(mesh, mesh.meta.get("origin_vertex", 0), 1)
        return np.linalg.norm(mesh.vertices[nb], axis=1).max()

    e1 = min(0.5 * pair.rho1, excision_rings * edge_scale(pair.f1))
    e2 = min(0.8 * pair.rho2, excision_rings * edge_scale(pair.f2))

    # inverted first surface, shifted and scaled; inversion reverses orientation
    V1, F1, loop1 = _excise(pair.f1, e1)
    V1 = V1 / np.sum(V1 * V1, axis=1, keepdims=True)
    V1[:, 2] -= c
    V1 = a * V1
    F1 = F1[:, ::-1]
    # second surface scaled up
    V2, F2, loop2 = _excise(pair.f2, e2)
    V2 = V2 / beta

    # keep the grid's end rings about 1.5 loop spacings clear of the loops so
    # the zipper strips contain no slivers
    def spacing(P, loop):
        return np.linalg.norm(P[loop] - P[np.roll(loop, 1)], axis=1).mean()

    r_in = np.hypot(V1[loop1, 0], V1[loop1, 1]).max() + 1.5 * spacing(V1, loop1)
    r_out = np.hypot(V2[loop2, 0], V2[loop2, 1]).min() - 1.5 * spacing(V2, loop2)
    if not (r_in < g - b and 1 + b < r_out):
        raise BandTooWide(f"excised loops at radii {r_in:.4g}, {r_out:.4g} overlap the bridge zone")
    required = [g - b, g - 0.75 * b, g - 0.25 * b, g, 1.0, 1 + 0.25 * b, 1 + 0.75 * b, 1 + b]
    radii = _ring_radii(r_in, r_out, n_theta, required)
    Z, FG, rings = polar_grid(radii, n_theta, center=False)
    height = PiecewiseRadial([(0.0, g - b, glued.u_alpha), (g - b, 1 + b, glued.w), (1 + b, np.inf, glued.v_beta)])
    VG = np.column_stack([Z, height(Z)[0]])

    o1, oG = 0, len(V1)
    o2 = oG + len(VG)
    X = np.vstack([V1, VG, V2])
    loop1 = _ccw(loop1 + o1, X)
    loop2 = _ccw(loop2 + o2, X)
    z_in = _zipper(loop1, rings[0] + oG, X)
    z_out = _zipper(rings[-1] + oG, loop2, X)
    for strip in (z_in, z_out):
        nrm = np.cross(X[strip[:, 1]] - X[strip[:, 0]], X[strip[:, 2]] - X[strip[:, 0]])
        if np.any(nrm[:, 2] <= 0):
            raise StitchMismatch("zipper strip folds over; boundary loop is not star-shaped")

    ring_of_face = np.min(FG // n_theta, axis=1)
    r_face = np.sqrt(radii[ring_of_face] * radii[ring_of_face + 1])
    grid_labels = np.where(r_face < g, "U", np.where(r_face <= 1.0, "W", "V"))
    faces = np.vstack([F1 + o1, z_in, FG + oG, z_out, F2 + o2])
    labels = np.concatenate(
        [
            np.full(len(F1) + len(z_in), "U"),
            grid_labels,
            np.full(len(z_out) + len(F2), "V"),
        ]
    )
    mesh = build_mesh(X, faces, labels, closed=True)
    mesh.meta.update({"radii": radii, "n_theta": n_theta, "excision": (e1, e2), "units": "bridge"})
    return mesh


def connected_sum(
    f1: TriangleMesh, p1: int, f2: TriangleMesh, p2: int, params: GluingParams, with_mesh: bool = True, n_theta: int = 128
) -> GluedSurface:
    """Glue f1 (inverted at p1, scaled by alpha) to f2 (scaled by 1/beta at p2) through the bridge."""
    pair = prepare_pair(f1, p1, f2, p2, p_norm=params.p_norm)
    glued = build_handles(pair, params)
    if with_mesh:
        glued.mesh = assemble_mesh(glued, n_theta=n_theta)
    return glued


# ---------------------------------------------------------------------------
# asymptotic sweeps


@dataclass
class AsymptoticsReport:
    rows: list  # dicts with alpha, dW_excess, predicted, dIso, ratio
    slope_dW: float
    slope_dW_halfwidth: float
    slope_dIso: float
    slope_dIso_halfwidth: float
    P: SecondFundamentalForm2D
    Q: SecondFundamentalForm2D
    t: float
    gamma: float


def loglog_slope(x, y, confidence: float = 0.95):
    """Least-squares slope of log y against log x with a Student-t confidence half-width."""
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    fit = linregress(x, y)
    half = float(fit.stderr * student_t.ppf(0.5 + confidence / 2, len(x) - 2)) if len(x) > 2 else np.inf
    return float(fit.slope), half


def sweep_alpha(
    f1: TriangleMesh,
    p1: int,
    f2: TriangleMesh,
    p2: int,
    alphas=(0.08, 0.04, 0.02, 0.01),
    t: float | None = None,
    gamma: float = 0.1,
    band_scale: float = 0.15,
    p_norm: float = 0.03,
    orders=(64, 256),
) -> AsymptoticsReport:
    alphas = sorted((float(a) for a in alphas), reverse=True)
    if len(alphas) < 4:
        raise ValidationError("a slope fit needs at least 4 values of alpha")
    pair = prepare_pair(f1, p1, f2, p2, p_norm=p_norm)
    body = body_measures(pair)
    m2 = pair.f2.source.measures()
    rows = []
    for a in alphas:
        glued = build_handles(pair, GluingParams(a, t=t, gamma=gamma, band_scale=band_scale, p_norm=p_norm))
        rep = energy_iso_excess(glued, f2_measures=m2, orders=orders, body=body)
        rows.append(
            {
                "alpha": a,
                "dW_excess": rep.dW,
                "predicted": rep.predicted,
                "dIso": rep.dIso,
                "ratio": rep.dW / rep.predicted,
                "t": glued.t,
            }
        )
    rows.sort(key=lambda r: r["alpha"])
    a = [r["alpha"] for r in rows]
    with np.errstate(divide="ignore", invalid="ignore"):
        sw, hw = loglog_slope(a, [-r["dW_excess"] for r in rows])
        si, hi = loglog_slope(a, [abs(r["dIso"]) for r in rows])
    return AsymptoticsReport(rows, sw, hw, si, hi, pair.P, pair.Q, rows[0]["t"], gamma)


# ---------------------------------------------------------------------------
# the theorem harness


@dataclass
class CertifiedResult:
    glued: GluedSurface
    alpha: float
    s: float
    iso_f2: float
    iso_glued: float  # certified by the hybrid evaluation
    W_reference: float  # W(f1) + W(f2) - 4 pi
    W_glued: float
    W_margin: float  # W_reference - W_glued
    dW_excess: float
    dIso_unperturbed: float
    mesh_measures: Any
    trials: list
    bisection: list
    monotone: bool
    variation: Any

    @property
    def iso_gap(self) -> float:
        return self.iso_glued - self.iso_f2

    def as_row(self) -> dict:
        m = self.mesh_measures
        return {
            "alpha": self.alpha,
            "t": self.glued.t,
            "beta": self.glued.beta,
            "gamma": self.glued.params.gamma,
            "s": self.s,
            "iso_f2": self.iso_f2,
            "iso_glued": self.iso_glued,
            "iso_gap": self.iso_gap,
            "W_reference": self.W_reference,
            "W_glued": self.W_glued,
            "W_margin": self.W_margin,
            "dW_excess": self.dW_excess,
            "mesh_area": m.area,
            "mesh_volume": m.volume,
            "mesh_willmore": m.willmore,
            "mesh_iso": m.iso,
            "euler_char": m.euler_char,
            "genus": m.genus,
        }


def _trial_alphas(alphas, floor):
    out = list(alphas)
    while out[-1] / 2 >= floor:
        out.append(out[-1] / 2)
    return out


def theorem_harness(
    f1: TriangleMesh,
    p1: int,
    f2: TriangleMesh,
    p2: int,
    alphas=(0.08, 0.04, 0.02, 0.01),
    alpha_floor: float = 0.005,
    gamma: float = 0.1,
    m: float = 2.25,
    band_scale: float = 0.15,
    p_norm: float = 0.03,
    support_edges: float = 5.0,
    iso_rtol: float = 1e-12,
    n_theta: int = 128,
) -> CertifiedResult:
    """Glue f1 to a volume-preserving perturbation f2 + s xi of f2 so that iso is unchanged.

    For each trial alpha (decreasing) the Willmore excess of the gluing is
    evaluated; once it is negative, s is bisected in [-alpha^m, alpha^m] on
    iso(f_{s,alpha}) - iso(f2). Success requires the certified Willmore
    margin W(f1) + W(f2) - 4 pi - W(f_{s,alpha}) to stay positive.
    """
    from .variation import build_variation, mean_edge_length, select_variation_point

    pair = prepare_pair(f1, p1, f2, p2, p_norm=p_norm)
    m1, m2 = pair.f1.source.measures(), pair.f2.source.measures()
    # W is scale invariant, so the rescaling of f1 does not matter
    W_ref = m1["willmore"] + m2["willmore"] - 4 * np.pi
    A2, V2 = m2["area"], m2["volume"]
    iso2 = A2 / V2 ** (2.0 / 3.0)

    f2n = pair.f2
    q = f2n.meta["origin_vertex"]
    p = select_variation_point(f2n, forbidden=q)
    spec = build_variation(f2n, p, support_edges * mean_edge_length(f2n), forbidden=q)
    if np.any(np.linalg.norm(f2n.vertices[spec.support], axis=1) < pair.rho2):
        raise SupportTouchesForbidden("variation support reaches the gluing neighbourhood of f2")
    base2 = measure(f2n)

    def perturbation(s):
        moved = measure(spec.apply(s))
        return moved.area - base2.area, moved.volume - base2.volume, moved.willmore - base2.willmore

    body = body_measures(pair)
    trials = []
    for a in _trial_alphas(alphas, alpha_floor):
        params = GluingParams(a, gamma=gamma, band_scale=band_scale, m=m, p_norm=p_norm)
        glued = build_handles(pair, params)
        rep = energy_iso_excess(glued, f2_measures=m2, body=body)
        row = {"alpha": a, "dW_excess": rep.dW, "predicted": rep.predicted, "dIso": rep.dIso}
        trials.append(row)
        if rep.dW >= 0:
            continue
        dA, dV = glued.beta ** 2 * rep.dArea, glued.beta ** 3 * rep.dVolume

        def gap(s):
            pa, pv, _ = perturbation(s)
            return iso_change(A2, V2, dA + pa, dV + pv)

        lim = a ** m
        lo, hi = -lim, lim
        g_lo, g_hi = gap(lo), gap(hi)
        if np.sign(g_lo) == np.sign(g_hi):
            raise BisectionNoBracket(
                f"iso difference has one sign on [-{lim:.3g}, {lim:.3g}]", endpoints=((lo, g_lo), (hi, g_hi))
            )
        samples = [gap(s) for s in np.linspace(lo, hi, 9)]
        diffs = np.diff(samples)
        monotone = bool(np.all(diffs > 0) or np.all(diffs < 0))
        history = [(lo, g_lo), (hi, g_hi)]
        s, g_s = (0.0, gap(0.0))
        for _ in range(200):
            s = 0.5 * (lo + hi)
            g_s = gap(s)
            history.append((s, g_s))
            if abs(g_s) <= iso_rtol * iso2 or hi - lo <= 1e-15 * lim:
                break
            if np.sign(g_s) == np.sign(g_lo):
                lo, g_lo = s, g_s
            else:
                hi = s
        dW2 = perturbation(s)[2]
        margin = -rep.dW - dW2
        row.update({"s": s, "iso_gap": g_s, "W_margin": margin})
        if margin <= 0:
            continue
        moved_pair = replace(pair, f2=spec.apply(s))
        glued.mesh = assemble_mesh(replace(glued, pair=moved_pair), n_theta=n_theta)
        glued.meta.update({"variation_vertex": p, "s": s})
        return CertifiedResult(
            glued=glued,
            alpha=a,
            s=float(s),
            iso_f2=float(iso2),
            iso_glued=float(iso2 + g_s),
            W_reference=float(W_ref),
            W_glued=float(W_ref - margin),
            W_margin=float(margin),
            dW_excess=rep.dW,
            dIso_unperturbed=rep.dIso,
            mesh_measures=measure(glued.mesh),
            trials=trials,
            bisection=history,
            monotone=monotone,
            variation=spec,
        )
    raise NoNegativeExcess(f"no trial alpha down to {alpha_floor} gave a negative Willmore excess", rows=trials)
