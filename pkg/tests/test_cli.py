import json
import subprocess
import sys

import pytest

from einmax import reference_values as ref
from einmax.cli import EXIT_MISMATCH, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, FAULTS, dumps, main


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_verify_appendix_clean(capsys):
    code, out, _ = run(["verify-appendix"], capsys)
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[-1] == "15 matrices, 2 tables, 5 T-vectors, 1 rank check: all MATCH"
    assert not any(line.startswith("MISMATCH") for line in lines)


@pytest.mark.parametrize("fault", FAULTS)
def test_verify_appendix_detects_each_fault(fault, capsys):
    code, out, err = run(["verify-appendix", "--inject-fault", fault], capsys)
    assert code == EXIT_MISMATCH
    assert "MISMATCH" in out
    assert err.startswith("first mismatch:")


def test_verify_report_file(tmp_path, capsys):
    code, _, _ = run(["verify-appendix", "--out", tmp_path], capsys)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["ok"] is True and report["first_mismatch"] is None
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["exit_status"] == 0
    assert set(manifest["outputs"]) == {"verify.json"}


def test_symbol_reference_t_vector(capsys):
    code, out, _ = run(["symbol", "--reference", 1], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "T = c_pi(" + ", ".join(ref.T_VECTORS[1]) + ")"
    body = json.loads(out[out.index("{"):])
    assert [e["re"] for e in body["t_vector"]["exact"]] == list(ref.T_VECTORS[1])
    assert all(e["im"] == "0" for e in body["t_vector"]["exact"])
    assert body["units"] == "c_pi"


def test_symbol_from_config_file(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.json", ref.reference_config(2).to_json())
    code, out, _ = run(["--quiet", "symbol", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == EXIT_OK and out == ""
    body = json.loads((tmp_path / "o" / "symbol.json").read_text())
    assert body["input"] == {"config": str(cfg)}
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config_sha256"] is not None


def test_symbol_zero_polarizations(tmp_path, capsys):
    obj = ref.reference_config(1).to_json()
    obj["pols"][0] = ["0", "0", "0", "0"]
    cfg = write(tmp_path / "cfg.json", obj)
    code, out, _ = run(["symbol", "--config", cfg], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0] == "T = c_pi(0, 0, 0, 0, 0)"


def test_symbol_gauge_violation_names_the_wave(tmp_path, capsys):
    obj = ref.reference_config(1).to_json()
    obj["pols"][1] = ["1", "0", "0", "0"]
    cfg = write(tmp_path / "cfg.json", obj)
    code, _, err = run(["symbol", "--config", cfg], capsys)
    assert code == EXIT_USAGE
    assert "wave 2" in err


def test_bad_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"zetas": [1, 2,,]}')
    code, _, err = run(["symbol", "--config", bad], capsys)
    assert code == EXIT_USAGE
    assert "bad.json:1:" in err


def test_usage_errors(tmp_path, capsys):
    assert run(["frobnicate"], capsys)[0] == EXIT_USAGE
    assert run(["symbol", "--reference", 9], capsys)[0] == EXIT_USAGE
    assert run(["symbol", "--config", tmp_path / "missing.json"], capsys)[0] == EXIT_USAGE
    cfg = write(tmp_path / "s.json", {"colour": "blue"})
    assert run(["search", "--config", cfg], capsys)[0] == EXIT_USAGE
    assert run(["simulate", "--n", 16, "--cfl", 0.9, "--no-ratio"], capsys)[0] == EXIT_USAGE


def test_search_default(tmp_path, capsys):
    code, _, _ = run(["search", "--seed", 4, "--out", tmp_path], capsys)
    assert code == EXIT_OK
    body = json.loads((tmp_path / "search.json").read_text())
    det = body["result"]["determinant"]
    assert det["exact"] != {"re": "0", "im": "0"}
    assert body["result"]["seed"] == 4


def test_search_exhaustion_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", {"identical_pol_sets": True, "max_iter": 2})
    code, _, err = run(["search", "--config", cfg], capsys)
    assert code == EXIT_NUMERIC
    assert "best candidate" in err


def test_simulate_outputs_and_ratio(tmp_path, capsys):
    out = tmp_path / "sim"
    code, _, _ = run(["simulate", "--n", 24, "--out", out, "--quiet"], capsys)
    assert code == EXIT_OK
    names = {p.name for p in out.iterdir()}
    assert names == {"slice.csv", "g1_abs.pgm", "h2_00.pgm", "diagnostics.json", "manifest.json"}
    report = json.loads((out / "diagnostics.json").read_text())
    assert 3.96 <= report["quadratic_response_ratio"] <= 4.04
    assert report["diagnostics"]["h2_00_max_over_peak"] <= 1e-12
    assert (out / "g1_abs.pgm").read_bytes().startswith(b"P5\n24 24\n255\n")


def test_observe_earliest_rows(tmp_path, capsys):
    cfg = write(tmp_path / "o.json", {"observers": [[1.0, 0.0, 0.0], [0.0, 0.0, -0.5]], "resolution": [13, 24]})
    code, _, _ = run(["observe", "--config", cfg, "--out", tmp_path / "o"], capsys)
    assert code == EXIT_OK
    rows = (tmp_path / "o" / "earliest.csv").read_text().splitlines()
    assert len(rows) == 3 and all(r.endswith(",1") for r in rows[1:])
    body = json.loads((tmp_path / "o" / "observe.json").read_text())
    times = sorted(e["point"][0] for e in body["earliest"])
    assert times[0] == pytest.approx(0.5, abs=0.5 * body["cell_radians"])
    assert times[1] == pytest.approx(1.0, abs=body["cell_radians"])


def read_all(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


@pytest.mark.parametrize("argv", [
    ["symbol", "--reference", 3],
    ["search", "--seed", 9],
    ["simulate", "--n", 20],
    ["observe"],
])
def test_reruns_are_byte_identical(argv, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", a, "--quiet"], capsys)[0] == EXIT_OK
    assert run(argv + ["--out", b, "--quiet"], capsys)[0] == EXIT_OK
    fa, fb = read_all(a), read_all(b)
    fa.pop("manifest.json")
    fb.pop("manifest.json")
    assert fa == fb
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]


def test_global_flags_before_or_after_subcommand(tmp_path, capsys):
    assert run(["--quiet", "--out", tmp_path / "x", "symbol"], capsys)[0] == EXIT_OK
    assert run(["symbol", "--quiet", "--out", tmp_path / "y"], capsys)[0] == EXIT_OK
    assert (tmp_path / "x" / "symbol.json").read_bytes() == (tmp_path / "y" / "symbol.json").read_bytes()


def test_dumps_is_canonical():
    assert dumps({"b": 0.1, "a": [1, 2.5]}) == dumps({"a": [1, 2.5], "b": 0.1})
    assert "0.10000000000000001" in dumps({"x": 0.1})


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "einmax.cli", "verify-appendix", "--quiet"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "einmax.cli", "--version"], capture_output=True, text=True)
    assert proc.stdout.strip().startswith("einmax ")
