"""Closed triangle meshes and their global/pointwise geometry.

Conventions used throughout the package:

* faces are oriented so that the right-hand normal points out of the
  enclosed region; the signed volume of a valid closed mesh is positive;
* mean curvature ``H`` is the *sum* of principal curvatures, positive on a
  sphere with outward normals (``H = 2/r``);
* second fundamental forms are reported with respect to the outward normal
  (the unit sphere has form ``+Id``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import (
    BadIndex,
    DegenerateFace,
    NonManifold,
    NonPositiveVolume,
    OpenBoundary,
    RankDeficientFit,
)

ISO_SPHERE = (36.0 * np.pi) ** (1.0 / 3.0)
PIECE_LABELS = ("U", "W", "V")


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Validated oriented triangle mesh.

    ``labels`` holds one piece label per face ("U", "W", "V" or "" for none).
    ``closed`` is False only for open-by-design meshes (graph patches, inverted
    surfaces). ``source`` optionally carries an exact analytic description of
    the surface the vertices were sampled from (see :mod:`isowill.analytic`).
    """

    vertices: np.ndarray
    faces: np.ndarray
    labels: np.ndarray
    closed: bool = True
    source: Any = None
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs."""
        return _unique_edges(self.faces)

    def euler_characteristic(self) -> int:
        return int(self.n_vertices - len(self.edges()) + self.n_faces)

    def n_components(self) -> int:
        adj = vertex_adjacency(self)
        return int(connected_components(adj, directed=False)[0])

    def genus(self) -> int:
        chi = self.euler_characteristic()
        return (2 * self.n_components() - chi) // 2

    def diameter(self) -> float:
        ext = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return float(np.linalg.norm(ext))

    def with_vertices(self, vertices, source=None, keep_source=False) -> "TriangleMesh":
        vertices = _frozen(np.asarray(vertices, dtype=float))
        src = self.source if keep_source else source
        return replace(self, vertices=vertices, source=src)

    def transformed(self, rotation=None, translation=None, scale: float = 1.0) -> "TriangleMesh":
        """Return ``scale * R x + t`` applied to every vertex.

        Orientation is preserved for proper rotations and positive scales.
        An analytic source, if present, is transformed alongside.
        """
        R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        t = np.zeros(3) if translation is None else np.asarray(translation, dtype=float)
        v = scale * self.vertices @ R.T + t
        src = None
        if self.source is not None:
            src = self.source.transformed(R, t, scale)
        return self.with_vertices(v, source=src)

    def scaled(self, factor: float) -> "TriangleMesh":
        return self.transformed(scale=factor)

    def flipped(self) -> "TriangleMesh":
        faces = _frozen(self.faces[:, ::-1].copy())
        return replace(self, faces=faces)

    def with_labels(self, labels) -> "TriangleMesh":
        return replace(self, labels=_frozen(np.asarray(labels, dtype="<U1")))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _unique_edges(faces: np.ndarray) -> np.ndarray:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def build_mesh(vertices, faces, labels=None, *, closed: bool = True, source=None) -> TriangleMesh:
    """Validate raw arrays and return a :class:`TriangleMesh`.

    Raises BadIndex, DegenerateFace, NonManifold or OpenBoundary naming the
    offending simplex. With ``closed=False`` boundary edges are accepted but
    every interior edge must still be shared by two oppositely oriented faces.
    """
    V = np.asarray(vertices, dtype=float)
    F = np.asarray(faces)
    if V.ndim != 2 or V.shape[1] != 3:
        raise BadIndex(f"vertices must have shape (n, 3), got {V.shape}")
    if F.ndim != 2 or F.shape[1] != 3:
        raise BadIndex(f"faces must have shape (m, 3), got {F.shape}")
    if not np.issubdtype(F.dtype, np.integer):
        if F.size and not np.all(F == np.round(F)):
            raise BadIndex("face indices must be integers")
    F = F.astype(np.int64)
    n = len(V)
    if F.size:
        bad = np.nonzero((F < 0).any(axis=1) | (F >= n).any(axis=1))[0]
        if len(bad):
            raise BadIndex(f"face {bad[0]} {F[bad[0]].tolist()} has index out of range", int(bad[0]))
    rep = (F[:, 0] == F[:, 1]) | (F[:, 1] == F[:, 2]) | (F[:, 0] == F[:, 2])
    areas = 0.5 * np.linalg.norm(
        np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]]), axis=1
    ) if F.size else np.zeros(0)
    degenerate = np.nonzero(rep | ~(areas > 0.0))[0]
    if len(degenerate):
        f = int(degenerate[0])
        raise DegenerateFace(f"face {f} {F[f].tolist()} has zero area", f)
    used = np.zeros(n, dtype=bool)
    used[F.ravel()] = True
    if not used.all():
        iso = int(np.nonzero(~used)[0][0])
        raise BadIndex(f"vertex {iso} is isolated", iso)

    # directed half-edges: each must occur once; twins must be opposite
    he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    key = he[:, 0] * n + he[:, 1]
    uniq, counts = np.unique(key, return_counts=True)
    if (counts > 1).any():
        k = int(uniq[np.argmax(counts > 1)])
        raise NonManifold(
            f"directed edge ({k // n}, {k % n}) used twice: inconsistent orientation or non-manifold",
            (k // n, k % n),
        )
    twin = he[:, 1] * n + he[:, 0]
    has_twin = np.isin(twin, uniq)
    if closed and not has_twin.all():
        i = int(np.nonzero(~has_twin)[0][0])
        raise OpenBoundary(f"edge ({he[i, 0]}, {he[i, 1]}) is a boundary edge", tuple(he[i].tolist()))
    # vertex links must be single fans (no pinched vertices)
    _check_vertex_links(F, n, closed)

    if labels is None:
        labels = np.full(len(F), "", dtype="<U1")
    labels = np.asarray(labels, dtype="<U1")
    if labels.shape != (len(F),):
        raise BadIndex("labels must have one entry per face")
    return TriangleMesh(_frozen(V.copy()), _frozen(F), _frozen(labels.copy()), closed, source)


def _check_vertex_links(F: np.ndarray, n: int, closed: bool) -> None:
    # the link of each vertex is a set of directed edges (b -> c) for faces (v, b, c);
    # on a manifold those chain into a single cycle (closed) or single path (open)
    rows = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
    b = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
    c = np.concatenate([F[:, 2], F[:, 0], F[:, 1]])
    order = np.argsort(rows, kind="stable")
    rows, b, c = rows[order], b[order], c[order]
    starts = np.searchsorted(rows, np.arange(n + 1))
    for v in range(n):
        lo, hi = starts[v], starts[v + 1]
        if hi - lo == 0:
            continue
        nxt = dict(zip(b[lo:hi].tolist(), c[lo:hi].tolist()))
        prev_targets = set(c[lo:hi].tolist())
        heads = [x for x in nxt if x not in prev_targets]
        if not heads:
            start = next(iter(nxt))
        elif len(heads) == 1:
            start = heads[0]
        else:
            raise NonManifold(f"vertex {v} has a pinched (multi-fan) neighbourhood", v)
        seen, cur = 0, start
        while cur in nxt and seen <= hi - lo:
            cur = nxt[cur]
            seen += 1
            if cur == start:
                break
        if seen != hi - lo:
            raise NonManifold(f"vertex {v} has a pinched (multi-fan) neighbourhood", v)


# ---------------------------------------------------------------------------
# basic per-face / per-vertex geometry


def face_normals(mesh: TriangleMesh, unit: bool = True) -> np.ndarray:
    V, F = mesh.vertices, mesh.faces
    n = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
    if unit:
        n = n / np.linalg.norm(n, axis=1, keepdims=True)
    return n


def face_areas(mesh: TriangleMesh) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_normals(mesh, unit=False), axis=1)


def vertex_adjacency(mesh: TriangleMesh) -> sparse.csr_matrix:
    F = mesh.faces
    i = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
    j = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
    n = mesh.n_vertices
    A = sparse.coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n)).tocsr()
    A = ((A + A.T) > 0).astype(np.int8)
    return A.tocsr()


def boundary_vertices(mesh: TriangleMesh) -> np.ndarray:
    """Boolean mask of vertices incident to a boundary edge."""
    F = mesh.faces
    n = mesh.n_vertices
    he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    key = he[:, 0] * n + he[:, 1]
    twin = he[:, 1] * n + he[:, 0]
    open_he = he[~np.isin(twin, key)]
    mask = np.zeros(n, dtype=bool)
    mask[open_he.ravel()] = True
    return mask


def vertex_normals(mesh: TriangleMesh) -> np.ndarray:
    """Angle-weighted unit vertex normals."""
    V, F = mesh.vertices, mesh.faces
    fn = face_normals(mesh)
    N = np.zeros_like(V)
    for k in range(3):
        a = V[F[:, (k + 1) % 3]] - V[F[:, k]]
        b = V[F[:, (k + 2) % 3]] - V[F[:, k]]
        cosang = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.add.at(N, F[:, k], fn * ang[:, None])
    return N / np.linalg.norm(N, axis=1, keepdims=True)


def _corner_cotangents(V: np.ndarray, F: np.ndarray) -> np.ndarray:
    """cot of the angle at each corner, shape (m, 3)."""
    cot = np.empty(F.shape)
    for k in range(3):
        a = V[F[:, (k + 1) % 3]] - V[F[:, k]]
        b = V[F[:, (k + 2) % 3]] - V[F[:, k]]
        cot[:, k] = np.einsum("ij,ij->i", a, b) / np.linalg.norm(np.cross(a, b), axis=1)
    return cot


def area_gradient(mesh: TriangleMesh) -> np.ndarray:
    """Exact gradient of total area with respect to each vertex position."""
    V, F = mesh.vertices, mesh.faces
    fn = face_normals(mesh)
    G = np.zeros_like(V)
    for k in range(3):
        # d(area)/dx_k = 1/2 n x (x_{k+2} - x_{k+1})
        opp = V[F[:, (k + 2) % 3]] - V[F[:, (k + 1) % 3]]
        np.add.at(G, F[:, k], 0.5 * np.cross(fn, opp))
    return G


def volume_gradient(mesh: TriangleMesh) -> np.ndarray:
    """Exact gradient of signed enclosed volume with respect to each vertex."""
    V, F = mesh.vertices, mesh.faces
    G = np.zeros_like(V)
    for k in range(3):
        np.add.at(G, F[:, k], np.cross(V[F[:, (k + 1) % 3]], V[F[:, (k + 2) % 3]]) / 6.0)
    return G


def mixed_areas(mesh: TriangleMesh) -> np.ndarray:
    """Voronoi areas clamped on obtuse triangles (mixed areas)."""
    V, F = mesh.vertices, mesh.faces
    cot = _corner_cotangents(V, F)
    area = face_areas(mesh)
    A = np.zeros(mesh.n_vertices)
    obtuse = cot < 0
    any_obtuse = obtuse.any(axis=1)
    for k in range(3):
        i, j, l = F[:, k], F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        e_ij = np.sum((V[j] - V[i]) ** 2, axis=1)
        e_il = np.sum((V[l] - V[i]) ** 2, axis=1)
        vor = (e_ij * cot[:, (k + 2) % 3] + e_il * cot[:, (k + 1) % 3]) / 8.0
        val = np.where(any_obtuse, np.where(obtuse[:, k], area / 2.0, area / 4.0), vor)
        np.add.at(A, i, val)
    return A


def vertex_mean_curvature(mesh: TriangleMesh) -> np.ndarray:
    """Scalar mean curvature (sum of principal curvatures) per vertex.

    Cotangent mean-curvature vector divided by the mixed area, signed by the
    angle-weighted normal. Boundary vertices of open meshes get NaN.
    """
    HN = area_gradient(mesh)
    A = mixed_areas(mesh)
    N = vertex_normals(mesh)
    H = np.einsum("ij,ij->i", HN, N) / A
    if not mesh.closed:
        H[boundary_vertices(mesh)] = np.nan
    return H


# ---------------------------------------------------------------------------
# global measures


@dataclass(frozen=True)
class SurfaceMeasures:
    area: float
    volume: float
    willmore: float
    iso: Optional[float]
    euler_char: int
    genus: int

    def as_row(self) -> dict:
        return {
            "area": self.area,
            "volume": self.volume,
            "willmore": self.willmore,
            "iso": self.iso,
            "euler_char": self.euler_char,
            "genus": self.genus,
        }


def signed_volume(mesh: TriangleMesh) -> float:
    V, F = mesh.vertices, mesh.faces
    return float(np.einsum("ij,ij->i", V[F[:, 0]], np.cross(V[F[:, 1]], V[F[:, 2]])).sum() / 6.0)


def willmore_energy(mesh: TriangleMesh) -> float:
    H = vertex_mean_curvature(mesh)
    A = mixed_areas(mesh)
    ok = np.isfinite(H)
    return float(0.25 * np.sum(H[ok] ** 2 * A[ok]))


def measure(mesh: TriangleMesh, strict: bool = False) -> SurfaceMeasures:
    """Area, volume, Willmore energy, isoperimetric ratio and topology.

    When the signed volume is not positive ``iso`` is reported as None, or
    NonPositiveVolume is raised if ``strict``.
    """
    area = float(face_areas(mesh).sum())
    vol = signed_volume(mesh)
    if vol > 0:
        iso = area / vol ** (2.0 / 3.0)
    else:
        if strict:
            raise NonPositiveVolume(f"signed volume {vol:.6g} <= 0 (inward orientation?)")
        iso = None
    chi = mesh.euler_characteristic()
    return SurfaceMeasures(area, vol, willmore_energy(mesh), iso, chi, mesh.genus())


# ---------------------------------------------------------------------------
# second fundamental forms


@dataclass(frozen=True)
class SecondFundamentalForm2D:
    a11: float
    a12: float
    a22: float

    @classmethod
    def from_matrix(cls, M) -> "SecondFundamentalForm2D":
        M = np.asarray(M, dtype=float)
        return cls(float(M[0, 0]), float(0.5 * (M[0, 1] + M[1, 0])), float(M[1, 1]))

    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    def trace_free(self) -> "SecondFundamentalForm2D":
        h = 0.5 * (self.a11 - self.a22)
        return SecondFundamentalForm2D(h, self.a12, -h)

    def pair(self, other: "SecondFundamentalForm2D") -> float:
        """Frobenius pairing <A, B>."""
        return self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22

    def norm2(self) -> float:
        return self.pair(self)

    def rotated(self, theta: float) -> "SecondFundamentalForm2D":
        """Form of the surface after rotating it by ``theta`` about e3."""
        c, s = np.cos(theta), np.sin(theta)
        R = np.array([[c, -s], [s, c]])
        return SecondFundamentalForm2D.from_matrix(R @ self.matrix() @ R.T)

    def __mul__(self, k: float) -> "SecondFundamentalForm2D":
        return SecondFundamentalForm2D(k * self.a11, k * self.a12, k * self.a22)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def k_ring(mesh: TriangleMesh, vertex: int, k: int) -> np.ndarray:
    """Vertices within ``k`` edge hops of ``vertex`` (including it)."""
    adj = vertex_adjacency(mesh)
    ring = {int(vertex)}
    frontier = {int(vertex)}
    for _ in range(k):
        nxt = set()
        for v in frontier:
            nxt.update(adj.indices[adj.indptr[v]:adj.indptr[v + 1]].tolist())
        frontier = nxt - ring
        ring |= nxt
    return np.array(sorted(ring))


def tangent_frame(normal) -> np.ndarray:
    """Right-handed orthonormal frame with rows (e1, e2, normal)."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - helper.dot(n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return np.vstack([e1, e2, n])


def _quadric_fit(P: np.ndarray) -> np.ndarray:
    x, y, h = P[:, 0], P[:, 1], P[:, 2]
    A = np.column_stack([np.ones_like(x), x, y, 0.5 * x * x, x * y, 0.5 * y * y])
    sv = np.linalg.svd(A, compute_uv=False)
    if len(P) < 6 or sv[-1] <= 1e-10 * sv[0]:
        raise RankDeficientFit(f"quadric fit over {len(P)} points is rank deficient")
    coef, *_ = np.linalg.lstsq(A, h, rcond=None)
    return coef


def second_fundamental_form_at(mesh: TriangleMesh, vertex: int):
    """Least-squares quadric fit over the 2-ring in the vertex tangent frame.

    Returns ``(form, frame)`` where ``frame`` has rows (e1, e2, n_out) and the
    form is expressed in the (e1, e2) basis with respect to the outward normal.
    """
    ring = k_ring(mesh, vertex, 2)
    X = mesh.vertices[ring] - mesh.vertices[vertex]
    frame = tangent_frame(vertex_normals(mesh)[vertex])
    for _ in range(30):
        coef = _quadric_fit(X @ frame.T)
        grad = coef[1:3]
        if np.hypot(*grad) < 1e-14:
            break
        # re-level the frame so the fitted tangent plane is horizontal
        n_new = frame[2] - grad[0] * frame[0] - grad[1] * frame[1]
        frame = tangent_frame(n_new)
    coef = _quadric_fit(X @ frame.T)
    hess = np.array([[coef[3], coef[4]], [coef[4], coef[5]]])
    # height is measured along the outward normal; a sphere bends away (-Id)
    return SecondFundamentalForm2D.from_matrix(-hess), frame


def is_round_sphere(mesh: TriangleMesh, tol: float = 0.05) -> bool:
    """True iff genus is 0 and vertex H has relative standard deviation < tol."""
    if mesh.genus() != 0:
        return False
    H = vertex_mean_curvature(mesh)
    H = H[np.isfinite(H)]
    mean = abs(float(np.mean(H)))
    if mean == 0.0:
        return False
    return float(np.std(H)) / mean < tol
