import io
import json
import os
import subprocess
import sys

import pytest

from thinlens import cli, output
from thinlens.cli import EXIT_CERTIFICATE, EXIT_DEGENERATE, EXIT_OK, EXIT_SCHEMA, main, run
from thinlens.scenario import build_lens

TWO_MASSES = {"schema": 1, "source": [0.1, 0.05],
              "model": {"type": "point_masses", "masses": [{"sigma": 0.5, "z": [1, 0]},
                                                           {"sigma": 0.5, "z": [-1, 0]}]}}


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def read(out):
    return json.loads((out / "results.json").read_text())


def test_solve_writes_results_and_svg(tmp_path):
    out = tmp_path / "o"
    assert run("solve", write(tmp_path, TWO_MASSES), str(out)) == EXIT_OK
    doc = read(out)
    assert doc["command"] == "solve"
    assert len(doc["images"]["images"]) in (3, 5)
    assert (out / "scene.svg").read_text().startswith("<svg")


def test_svg_off(tmp_path):
    out = tmp_path / "o"
    assert run("solve", write(tmp_path, TWO_MASSES), str(out), svg=False) == EXIT_OK
    assert not (out / "scene.svg").exists()


def test_output_is_byte_identical_across_runs(tmp_path):
    s = write(tmp_path, TWO_MASSES)
    for cmd in ("solve", "certify"):
        run(cmd, s, str(tmp_path / "a"))
        run(cmd, s, str(tmp_path / "b"))
        for name in ("results.json", "scene.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_survey_threads_do_not_change_output(tmp_path):
    doc = {**TWO_MASSES, "survey": {"window": [-1, 1, -1, 1], "resolution": 6, "grid": 16}}
    s = write(tmp_path, doc)
    run("survey", s, str(tmp_path / "a"), threads=1)
    run("survey", s, str(tmp_path / "b"), threads=4)
    for name in ("results.json", "counts.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = (tmp_path / "a" / "counts.csv").read_text().splitlines()
    assert len(rows) == 6 and all(len(r.split(",")) == 6 for r in rows)


def test_load_results_round_trip(tmp_path):
    out = tmp_path / "o"
    run("solve", write(tmp_path, TWO_MASSES), str(out))
    doc = output.load_results(str(out / "results.json"), build_lens)
    assert doc["images"]["source"] == [0.1, 0.05]


def test_load_results_rejects_tampered_positions(tmp_path):
    out = tmp_path / "o"
    run("solve", write(tmp_path, TWO_MASSES), str(out))
    doc = read(out)
    doc["images"]["images"][0]["z"][0] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(output.dumps(doc))
    with pytest.raises(ValueError):
        output.load_results(str(bad), build_lens)


def test_json_floats_round_trip_exactly():
    vals = [0.1, 1 / 3, 1e-300, -2.5e17, float("inf"), float("nan")]
    back = output.loads(output.dumps({"x": vals}))["x"]
    assert back[:5] == vals[:5] and back[5] != back[5]


def test_schema_error_exit_code(tmp_path):
    err = io.StringIO()
    s = write(tmp_path, {"schema": 1, "model": {"type": "chang_refsdal", "mass": 1, "bogus": 1}})
    assert run("solve", s, str(tmp_path / "o"), stderr=err) == EXIT_SCHEMA
    doc = json.loads(err.getvalue())
    assert doc["error"] == "ScenarioError" and doc["exit"] == EXIT_SCHEMA
    assert read(tmp_path / "o") == doc


def test_missing_file_exit_code(tmp_path):
    assert run("solve", str(tmp_path / "none.json"), str(tmp_path / "o"),
               stderr=io.StringIO()) == EXIT_SCHEMA


def test_degenerate_exit_code_carries_ring(tmp_path):
    doc = {"schema": 1, "source": [0, 0],
           "model": {"type": "point_masses", "masses": [{"sigma": 1.0, "z": [0, 0]}]}}
    assert run("solve", write(tmp_path, doc), str(tmp_path / "o"),
               stderr=io.StringIO()) == EXIT_DEGENERATE
    res = read(tmp_path / "o")
    assert res["kind"] == "ring"
    assert res["payload"]["ring"]["semi_axes"] == [1.0, 1.0]


def test_certificate_failure_exit_code(tmp_path, monkeypatch):
    real = cli.certify

    def broken(*a, **k):
        cert = real(*a, **k)
        return type(cert)(**{**cert.__dict__, "identity_ok": False})

    monkeypatch.setattr(cli, "certify", broken)
    s = write(tmp_path, TWO_MASSES)
    assert run("certify", s, str(tmp_path / "o"), stderr=io.StringIO()) == EXIT_CERTIFICATE
    assert read(tmp_path / "o")["certificate"]["identity_ok"] is False
    # solve reports the failed certificate but still succeeds
    assert run("solve", s, str(tmp_path / "p"), stderr=io.StringIO()) == EXIT_OK


def test_ring_and_critical_commands(tmp_path):
    ell = {"schema": 1, "model": {"type": "uniform_ellipse", "a": 2, "b": 1, "density": 2},
           "critical": {"window": [-4, 4, -4, 4], "resolution": 128}}
    s = write(tmp_path, ell)
    assert run("ring", s, str(tmp_path / "r")) == EXIT_OK
    ring = read(tmp_path / "r")["ring"]
    assert ring["residual_max"] < 1e-9 and ring["confocal_defect"] < 1e-8
    assert run("critical", s, str(tmp_path / "c")) == EXIT_OK
    assert read(tmp_path / "c")["critical_curves"]


def test_quadrature_command(tmp_path):
    doc = {"schema": 1, "source": [0.3, 0.1],
           "model": {"type": "quadrature_domain", "numerator": [[0, 0], [1, 0], [0.2, 0]]}}
    assert run("quadrature", write(tmp_path, doc), str(tmp_path / "q")) == EXIT_OK
    res = read(tmp_path / "q")
    assert "quadrature" in res and "images" in res


def test_seed_override_and_validation(tmp_path, capsys):
    s = write(tmp_path, TWO_MASSES)
    assert main(["solve", "--scenario", s, "--out", str(tmp_path / "o"), "--seed", "7",
                 "--svg", "off"]) == EXIT_OK
    assert read(tmp_path / "o")["scenario"]["solver"]["seed"] == 7
    assert main(["solve", "--scenario", s, "--seed", "-1"]) == EXIT_SCHEMA
    assert "u64" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    s = write(tmp_path, TWO_MASSES)
    r = subprocess.run([sys.executable, "-m", "thinlens", "solve", "--scenario", s,
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert os.path.exists(tmp_path / "o" / "results.json")
