import csv
import json
import subprocess
import sys

import pytest

from lorenz_psi.cli import EXIT_COMPUTE, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE, main, parse_complex
from lorenz_psi.table1 import TABLE1


def run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path)])


def manifest(tmp_path):
    return json.loads((tmp_path / "manifest.json").read_text())


def test_parse_complex_forms():
    assert parse_complex("1,-2") == 1 - 2j
    assert parse_complex("0.5+2i") == 0.5 + 2j
    assert parse_complex("-i") == -1j
    assert parse_complex([3, 4]) == 3 + 4j


def test_verify_table1_passes(tmp_path, capsys):
    assert run(tmp_path, "verify-table1") == EXIT_OK
    report = json.loads((tmp_path / "table1_report.json").read_text())
    assert report["mismatches"] == []
    assert set(report["families"]) == {"plus", "minus"}
    assert "MISMATCH" not in capsys.readouterr().out
    m = manifest(tmp_path)
    assert m["exit_code"] == 0 and m["outputs"] == ["table1_report.json"]
    assert "lorenz_psi" in json.dumps(m["versions"])


def test_perturbed_fixture_is_a_mismatch(tmp_path, capsys):
    data = {name: {f"{u},{d}": list(v) for (u, d), v in cells.items()} for name, cells in TABLE1.items()}
    data["Q_1"]["0,0"] = ["0", "-25990/108"]
    fixture = tmp_path / "bad.json"
    fixture.write_text(json.dumps(data))
    assert run(tmp_path, "verify-table1", "--family", "plus", "--fixture", str(fixture)) == EXIT_MISMATCH
    out = capsys.readouterr().out
    assert "Q_1   MISMATCH" in out
    assert json.loads((tmp_path / "table1_report.json").read_text())["mismatches"] == ["plus:Q_1"]


@pytest.mark.parametrize("fmt,suffix", [("json", "json"), ("latex", "tex"), ("csv", "csv")])
def test_gen_coeffs_formats(tmp_path, fmt, suffix):
    assert run(tmp_path, "gen-coeffs", "--format", fmt, "--max-m", "2") == EXIT_OK
    path = tmp_path / f"coeffs_plus_m2.{suffix}"
    text = path.read_text()
    if fmt == "json":
        assert json.loads(text)["max_m"] == 2
    elif fmt == "csv":
        rows = list(csv.DictReader(text.splitlines()))
        assert {"m": "-1", "component": "R", "re": "17/9"}.items() <= next(
            r for r in rows if r["m"] == "-1" and r["component"] == "R").items()
    else:
        assert r"\frac{1385}{54}" in text


def test_gen_coeffs_minimal_and_invalid(tmp_path):
    assert run(tmp_path, "gen-coeffs", "--max-m", "-2") == EXIT_OK
    assert run(tmp_path, "gen-coeffs", "--max-m", "-3") == EXIT_USAGE


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        run(tmp_path, "no-such-command")
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as e:
        run(tmp_path, "bounds", "--max-m", "ten")
    assert e.value.code == EXIT_USAGE
    assert run(tmp_path, "bounds", "--max-m", "5") == EXIT_USAGE
    assert run(tmp_path, "find-orbit", "AA") == EXIT_USAGE


def test_evaluating_at_the_singularity_is_a_compute_failure(tmp_path):
    code = run(tmp_path, "eval", "--d", "numeric:0,0", "--t0", "0,0.3", "--b", "0,1", "--t", "0,0.3",
               "--max-m", "10")
    assert code == EXIT_COMPUTE
    assert manifest(tmp_path)["exit_code"] == EXIT_COMPUTE


def test_job_file_with_flag_override(tmp_path):
    job = tmp_path / "job.toml"
    job.write_text('format = "latex"\nmax-m = 1\n')
    assert run(tmp_path, "gen-coeffs", "--job", str(job), "--max-m", "2") == EXIT_OK
    assert (tmp_path / "coeffs_plus_m2.tex").exists()
    assert not (tmp_path / "coeffs_plus_m1.tex").exists()
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 3\n")
    with pytest.raises(SystemExit) as e:
        run(tmp_path, "gen-coeffs", "--job", str(bad))
    assert e.value.code == EXIT_USAGE


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "bounds", "--max-m", "20") == EXIT_OK
    for name in ("bounds_sweep.csv", "convergence.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_bounds_and_radius_outputs(tmp_path):
    assert run(tmp_path, "radius", "--max-m", "20", "--c", "0,6.283185307179586") == EXIT_OK
    data = json.loads((tmp_path / "radius.json").read_text())
    assert json.dumps(data)  # well-formed
    assert "r" in json.dumps(data)


def test_integrate_closed_loop(tmp_path):
    code = run(tmp_path, "integrate", "--x0", "1;1;20",
               "--waypoints", "0,0;0.3,0;0.3,0.05;0,0.05;0,0")
    assert code == EXIT_OK
    data = json.loads((tmp_path / "integrate.json").read_text())
    assert data["return_error"] < 1e-10
    assert (tmp_path / "trace.csv").exists()


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lorenz_psi.cli", "gen-coeffs", "--max-m", "0",
                           "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "manifest.json").exists()
