"""Wavefront OBJ meshes, CSV reports and key=value run configs."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import IoError, NonTriangleFace, ParseError, ValidationError
from .mesh import PIECE_LABELS, TriangleMesh, build_mesh

# ---------------------------------------------------------------------------
# OBJ


def write_obj(mesh: TriangleMesh, path) -> Path:
    """ASCII OBJ with 17 significant digits; piece labels become ``g`` groups."""
    path = Path(path)
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    current = ""
    for face, label in zip(mesh.faces + 1, mesh.labels):
        if label != current:
            lines.append(f"g {label}" if label else "g default")
            current = label
        lines.append(f"f {face[0]} {face[1]} {face[2]}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def _vertex_index(token: str, n_vertices: int, lineno: int) -> int:
    head = token.split("/")[0]
    try:
        k = int(head)
    except ValueError:
        raise ParseError(f"bad vertex reference {token!r}", lineno) from None
    if k == 0:
        raise ParseError("vertex index 0 is not valid in OBJ", lineno)
    return k - 1 if k > 0 else n_vertices + k


def read_obj(path, closed: bool | None = None) -> TriangleMesh:
    """Read a triangle OBJ.

    ``closed=None`` accepts open meshes but validates as closed when there is
    no boundary edge.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    verts, faces, labels = [], [], []
    label = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "v":
            if len(rest) < 3:
                raise ParseError("vertex needs three coordinates", lineno)
            try:
                verts.append([float(t) for t in rest[:3]])
            except ValueError:
                raise ParseError(f"bad coordinate in {line!r}", lineno) from None
        elif key == "f":
            if len(rest) != 3:
                raise NonTriangleFace(f"face with {len(rest)} vertices", lineno)
            faces.append([_vertex_index(t, len(verts), lineno) for t in rest])
            labels.append(label)
        elif key == "g":
            name = rest[0] if rest else ""
            label = name if name in PIECE_LABELS else ""
        elif key in ("vn", "vt", "o", "s", "usemtl", "mtllib", "l", "vp"):
            continue
        else:
            raise ParseError(f"unknown record {key!r}", lineno)
    if not faces:
        raise ParseError("no faces", None)
    V = np.array(verts, dtype=float)
    F = np.array(faces, dtype=np.int64)
    if closed is None:
        he = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        fwd = set(map(tuple, he.tolist()))
        closed = all((b, a) in fwd for a, b in fwd)
    return build_mesh(V, F, labels, closed=closed)


# ---------------------------------------------------------------------------
# CSV reports

SCHEMAS = {
    "measures": ["name", "area", "volume", "willmore", "iso", "euler_char", "genus"],
    "sweep": ["alpha", "dW_excess", "predicted", "dIso"],
    "harness": [
        "alpha",
        "t",
        "beta",
        "gamma",
        "s",
        "iso_f2",
        "iso_glued",
        "iso_gap",
        "W_reference",
        "W_glued",
        "W_margin",
        "dW_excess",
        "mesh_area",
        "mesh_volume",
        "mesh_willmore",
        "mesh_iso",
        "euler_char",
        "genus",
    ],
    "constants": ["iso_sphere", "c1", "iso_Tc1", "iso_clifford", "eight_pi", "two_pi_sq"],
    "excess": ["alpha", "t", "beta", "gamma", "dW_excess", "predicted", "dIso", "dArea", "dVolume"],
    "variation": ["vertex", "radius", "h", "volume_residual", "dArea", "dVol", "dIso", "dW_bound", "dArea_fd", "fd_rel_error"],
    "trials": ["alpha", "dW_excess", "predicted", "dIso", "s", "iso_gap", "W_margin"],
}


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if not math.isfinite(v) else f"{v:.17e}"
    return str(value)


def write_report(rows, schema: str, path, summary=()) -> Path:
    """Header then one line per row in the schema's column order.

    ``summary`` rows are appended after the data; their first cell names the
    quantity (e.g. ``slope_dW_excess``) and the rest hold numbers.
    """
    if schema not in SCHEMAS:
        raise ValidationError(f"unknown report schema {schema!r}")
    cols = SCHEMAS[schema]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([_cell(row.get(c)) for c in cols])
            for srow in summary:
                w.writerow([_cell(x) for x in srow])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# config


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use underscores."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        out[key.replace("-", "_")] = value
    return out


def read_config(path) -> dict:
    path = Path(path)
    try:
        return parse_config(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
