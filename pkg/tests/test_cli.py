"""CLI behavior: exit codes, artifact formats, byte determinism."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

VALID_SPEC = {
    "families": [{"probs": [0.25, 0.75], "ratios": [0.5, 0.5]}],
    "schedule": {"type": "constant", "family": 0},
    "gap_policy": "no_gaps",
    "depth_cap": 64,
}


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "hsmf.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(VALID_SPEC))
    return path


def test_version_and_usage_exit_codes():
    assert run_cli("--version").returncode == 0
    assert run_cli().returncode == 2          # missing subcommand
    assert run_cli("dims").returncode == 2    # missing --spec


def test_validate_ok(spec_file):
    proc = run_cli("validate", "--spec", str(spec_file))
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["valid"] is True


def test_validate_invariant_failure(tmp_path):
    bad = dict(VALID_SPEC, families=[{"probs": [0.5, 0.6], "ratios": [0.5, 0.5]}])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    proc = run_cli("validate", "--spec", str(path))
    assert proc.returncode == 1
    report = json.loads(proc.stdout)
    assert report[0]["code"] == "NonProbabilityVector"


def test_validate_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    proc = run_cli("validate", "--spec", str(path))
    assert proc.returncode == 2


def test_validate_unknown_key_is_parse_error(tmp_path):
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(dict(VALID_SPEC, surprise=1)))
    proc = run_cli("validate", "--spec", str(path))
    assert proc.returncode == 2


def test_missing_spec_file_exits_2(tmp_path):
    proc = run_cli("dims", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path))
    assert proc.returncode == 2


def test_dims_outputs_and_determinism(spec_file, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    args = ["dims", "--spec", str(spec_file), "--q-min", "-2", "--q-max", "2",
            "--q-step", "0.5", "--k-max", "64", "--seed", "0"]
    assert run_cli(*args, "--out", str(out1)).returncode == 0
    assert run_cli(*args, "--out", str(out2)).returncode == 0
    for name in ("separators.csv", "diagnostics.json"):
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        assert b1 == b2, f"{name} not byte-identical"
    header = (out1 / "separators.csv").read_text().splitlines()
    assert header[0].startswith("# hsmf 0.1.0 config=")
    assert header[1] == "q,b,B,Lambda,Theta,Delta,osc,converged"


def test_dims_uniform_rows(tmp_path):
    spec = dict(VALID_SPEC, families=[{"probs": [0.5, 0.5], "ratios": [0.5, 0.5]}])
    path = tmp_path / "uniform.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "out"
    proc = run_cli("dims", "--spec", str(path), "--q-min", "-2", "--q-max", "2",
                   "--q-step", "1", "--out", str(out))
    assert proc.returncode == 0
    lines = (out / "separators.csv").read_text().splitlines()[2:]
    for line in lines:
        parts = line.split(",")
        q, b = float(parts[0]), float(parts[1])
        assert b == pytest.approx(1 - q, abs=1e-12)


def test_overwrite_requires_force(spec_file, tmp_path):
    out = tmp_path / "out"
    args = ["dims", "--spec", str(spec_file), "--out", str(out)]
    assert run_cli(*args).returncode == 0
    assert run_cli(*args).returncode == 2  # refuses to overwrite
    assert run_cli(*args, "--force").returncode == 0


def test_spectrum_outputs(spec_file, tmp_path):
    out = tmp_path / "spec_out"
    proc = run_cli(
        "spectrum", "--spec", str(spec_file), "--q-min", "-6", "--q-max", "6",
        "--q-step", "0.5", "--k-max", "64", "--r-octaves", "12", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    for name in ("legendre.csv", "coarse.csv", "tilted.json"):
        assert (out / name).exists()
    tilted = json.loads((out / "tilted.json").read_text())
    assert {c["q"] for c in tilted["checks"]} == {0.0, 1.0, 2.0}
    # empty coarse bins keep an empty f_hat field, never a numeric sentinel
    rows = (out / "coarse.csv").read_text().splitlines()[2:]
    empties = [r for r in rows if r.split(",")[2] == ""]
    assert empties, "expected some empty bins"
    for r in empties:
        assert r.split(",")[3] == "0"


def test_moments_output(spec_file, tmp_path):
    out = tmp_path / "m"
    proc = run_cli("moments", "--spec", str(spec_file), "--r-octaves", "8", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    lines = (out / "moments.csv").read_text().splitlines()
    assert lines[1] == "kind,q,r,value,flag"
    kinds = {line.split(",")[0] for line in lines[2:]}
    assert kinds == {
        "partition_moment", "covering_count", "packing_count",
        "covering_moment", "packing_moment",
    }
    flagged = [l for l in lines[2:] if l.endswith(",heuristic")]
    assert flagged and all(float(l.split(",")[1]) < 0 for l in flagged)


def test_sample_output_deterministic(spec_file, tmp_path):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    args = ["sample", "--spec", str(spec_file), "--q", "2", "--t", "0",
            "--depth", "10", "--count", "5", "--seed", "7"]
    assert run_cli(*args, "--out", str(out1)).returncode == 0
    assert run_cli(*args, "--out", str(out2)).returncode == 0
    assert (out1 / "samples.json").read_bytes() == (out2 / "samples.json").read_bytes()
    payload = json.loads((out1 / "samples.json").read_text())
    assert len(payload["samples"]) == 5
    assert all(len(s["path"]) == 10 for s in payload["samples"])


def test_dims_json_format(spec_file, tmp_path):
    out = tmp_path / "j"
    proc = run_cli("dims", "--spec", str(spec_file), "--q-min", "-1", "--q-max", "1",
                   "--q-step", "1", "--format", "json", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((out / "separators.json").read_text())
    assert payload["columns"][0] == "q"
    assert len(payload["rows"]) == 3


def test_verify_missing_fixture_dir_exits_2(tmp_path):
    proc = run_cli("verify", "--out", str(tmp_path / "v"), "--fixtures",
                   str(tmp_path / "missing"))
    assert proc.returncode == 2


def test_shipped_specs_validate():
    specs_dir = Path(__file__).parent.parent / "specs"
    files = sorted(specs_dir.glob("*.json"))
    assert len(files) == 6
    for f in files:
        proc = run_cli("validate", "--spec", str(f))
        assert proc.returncode == 0, (f.name, proc.stdout, proc.stderr)


def test_verify_invalid_fixture_exits_1(tmp_path):
    fdir = tmp_path / "fixtures"
    fdir.mkdir()
    bad = dict(VALID_SPEC, families=[{"probs": [0.5, 0.6], "ratios": [0.5, 0.5]}])
    (fdir / "bad.json").write_text(json.dumps(bad))
    proc = run_cli("verify", "--out", str(tmp_path / "v"), "--fixtures", str(fdir))
    assert proc.returncode == 1
    assert "NonProbabilityVector" in proc.stdout
