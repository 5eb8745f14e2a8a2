import csv

import numpy as np
import pytest

from isowill import cli, glue
from isowill.errors import IoError, NoNegativeExcess, NonTriangleFace, ParseError, ValidationError
from isowill.formats import SCHEMAS, parse_config, read_obj, write_obj, write_report
from isowill.mesh import build_mesh, measure
from isowill.surfaces import solution_interval_constants

TET_V = np.array([[0.1, 0, 0], [1, 0, 1 / 3], [0, 1, 0], [0, 0, 1]], float)
TET_F = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_tetrahedron_round_trip(tmp_path):
    m = build_mesh(TET_V, TET_F)
    back = read_obj(write_obj(m, tmp_path / "tet.obj"))
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.faces, m.faces)
    assert back.closed


def test_quad_face_rejected_with_line(tmp_path):
    p = tmp_path / "quad.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    with pytest.raises(NonTriangleFace) as err:
        read_obj(p)
    assert "5" in str(err.value)


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0 zero\n")
    with pytest.raises(ParseError):
        read_obj(p)
    with pytest.raises(IoError):
        read_obj(tmp_path / "missing.obj")


def test_obj_extras_are_tolerated(tmp_path):
    p = tmp_path / "extras.obj"
    lines = [f"v {x} {y} {z}" for x, y, z in TET_V] + ["vn 0 0 1", "o thing"]
    lines += [f"f {a + 1}/1/1 {b + 1}//1 {c - 4}" for a, b, c in TET_F]
    p.write_text("\n".join(lines) + "\n")
    m = read_obj(p)
    assert measure(m).volume > 0


def test_glued_labels_round_trip(tmp_path, harness_torus):
    mesh = harness_torus.glued.mesh
    back = read_obj(write_obj(mesh, tmp_path / "glued.obj"))
    assert sorted(back.labels) == sorted(mesh.labels)
    assert np.array_equal(back.vertices, mesh.vertices)


def test_report_schemas(tmp_path):
    assert SCHEMAS["measures"] == ["name", "area", "volume", "willmore", "iso", "euler_char", "genus"]
    assert SCHEMAS["sweep"] == ["alpha", "dW_excess", "predicted", "dIso"]
    path = write_report(
        [{"alpha": 0.02, "dW_excess": -1.0, "predicted": -2.0, "dIso": 1e-9}],
        "sweep",
        tmp_path / "s.csv",
        summary=[("slope_dW_excess", 2.0, 0.01)],
    )
    rows = read_rows(path)
    assert rows[0] == SCHEMAS["sweep"]
    assert rows[1][0] == "2.00000000000000004e-02"
    assert rows[2][0] == "slope_dW_excess"
    with pytest.raises(ValidationError):
        write_report([], "nope", tmp_path / "x.csv")


def test_config_parsing():
    cfg = parse_config("# run\nalpha = 0.04\nband-scale=0.2  # note\n\n")
    assert cfg == {"alpha": "0.04", "band_scale": "0.2"}
    with pytest.raises(ParseError):
        parse_config("alpha 0.04\n")


# ---------------------------------------------------------------------------
# command line


def test_cli_constants(tmp_path):
    assert cli.main(["constants", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "constants.csv")
    ref = solution_interval_constants().as_row()
    assert rows[0] == SCHEMAS["constants"]
    for key, val in zip(rows[0], rows[1]):
        assert float(val) == ref[key]


def test_cli_measure_clifford(tmp_path):
    code = cli.main(["measure", "--gen", "torus", "--R", "1", "--r", "0.70710678", "--out", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "measures.csv")
    W = float(rows[1][rows[0].index("willmore")])
    assert abs(W - 2 * np.pi ** 2) < 0.01 * 2 * np.pi ** 2


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main([]) == 64
    assert cli.main(["frobnicate"]) == 64
    assert "usage" in capsys.readouterr().err
    assert cli.main(["measure", "--gen", "torus", "--r", "2", "--R", "1", "--out", str(tmp_path)]) == 2
    assert cli.main(["measure", "--in", str(tmp_path / "none.obj"), "--out", str(tmp_path)]) == 2
    assert cli.main(["measure", "--bogus-flag"]) == 2


def test_cli_numerical_failure_writes_trials(tmp_path, monkeypatch):
    def failing(*args, **kwargs):
        raise NoNegativeExcess("floor reached", rows=[{"alpha": 0.08, "dW_excess": 1e-5}])

    monkeypatch.setattr(glue, "theorem_harness", failing)
    assert cli.main(["theorem", "--out", str(tmp_path)]) == 3
    rows = read_rows(tmp_path / "trials.csv")
    assert rows[0] == SCHEMAS["trials"] and len(rows) == 2


def test_flags_beat_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gen = icosphere\nsubdiv = 2\nname = from_config\n")
    assert cli.main(["measure", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert read_rows(tmp_path / "a" / "measures.csv")[1][0] == "from_config"
    assert cli.main(["measure", "--config", str(cfg), "--name", "flag", "--out", str(tmp_path / "b")]) == 0
    assert read_rows(tmp_path / "b" / "measures.csv")[1][0] == "flag"
    cfg.write_text("colour = blue\n")
    assert cli.main(["measure", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_deterministic(tmp_path):
    args = ["measure", "--gen", "ellipsoid", "--a", "1", "--b", "1.2", "--c", "0.8", "--subdiv", "3"]
    cli.main(args + ["--out", str(tmp_path / "1")])
    cli.main(args + ["--out", str(tmp_path / "2")])
    assert (tmp_path / "1" / "measures.csv").read_bytes() == (tmp_path / "2" / "measures.csv").read_bytes()


def test_cli_theorem_headline(tmp_path):
    assert cli.main(["theorem", "--f1", "torus:c=0.4", "--f2", "torus:c=0.6", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "harness.csv")
    row = dict(zip(rows[0], rows[1]))
    assert float(row["W_margin"]) > 0
    assert abs(float(row["iso_gap"])) <= 1e-3 * float(row["iso_f2"])
    assert int(row["genus"]) == 2
    assert (tmp_path / "glued.obj").exists()
