"""Stage-file persistence and the command-line surface."""

import json
import math
import os
import shutil
import subprocess
import sys

import pytest

from limper.cli import main
from limper.construct_b import ConstructBConfig, run_construction_b
from limper.errors import LimperError
from limper.recipes import from_values
from limper.stagefile import (
    StageFile,
    compute_digest,
    digest_ok,
    load_payload,
    load_stage,
    save_stage,
)

CAPPED_B_CFG = (
    "# fast capped demonstration run\n"
    "construction = b\n"
    "eps = 1.0\n"
    "mode = capped\n"
    "m0_cap = 64\n"
    "m_cap = 8\n"
    "samples_per_band = 3\n"
    "sweep_points = 41\n"
    "K = 1\n"
)

FREE_SPECTRUM_CSV = "band_index,alpha,beta\n0,-2.0,2.0\n"
TWO_STEP_SPECTRUM_CSV = (
    "band_index,alpha,beta\n"
    "0,-0.8284271247461902,0.0\n"
    "1,4.0,4.82842712474619\n"
)


def capped_records():
    cfg = ConstructBConfig(
        K=1, mode="capped", m0_cap=64, m_cap=8, samples_per_band=3, sweep_points=41
    )
    return run_construction_b(from_values([0.0]), 1.0, config=cfg)


@pytest.fixture(scope="module")
def b_run(tmp_path_factory):
    """Stage files from one capped construction run via the CLI."""
    tmp = tmp_path_factory.mktemp("b-run")
    cfg = tmp / "b.cfg"
    cfg.write_text(CAPPED_B_CFG)
    outdir = tmp / "out"
    code = main(
        ["construct", "--construction", "b", "--config", str(cfg), "--outdir", str(outdir)]
    )
    assert code == 0
    return cfg, outdir


def test_stage_file_roundtrip_is_bit_exact(tmp_path):
    records, report = capped_records()
    stage = StageFile(
        construction="B",
        stage=1,
        record=records[1],
        params={"eps": 1.0, "v0": from_values([0.0]).to_jsonable()},
        config_echo={"mode": "capped"},
        summary=report,
    )
    first = tmp_path / "stage-1.json"
    save_stage(stage, first)
    loaded = load_stage(first)
    assert loaded == stage
    second = tmp_path / "again.json"
    save_stage(loaded, second)
    assert first.read_bytes() == second.read_bytes()


def test_digest_detects_tampering(tmp_path):
    records, report = capped_records()
    stage = StageFile("B", 1, records[1], {}, {}, report)
    path = tmp_path / "stage-1.json"
    save_stage(stage, path)
    payload = load_payload(path)
    assert digest_ok(payload)
    payload["record"]["e_k"] += 1e-9
    assert not digest_ok(payload)
    path.write_text(json.dumps(payload))
    with pytest.raises(LimperError):
        load_stage(path)


def test_unknown_schema_version_is_rejected(tmp_path):
    records, _report = capped_records()
    payload = StageFile("B", 0, records[0], {}, {}).to_jsonable()
    payload["schema"] = 99
    payload["digest"] = compute_digest(payload)
    path = tmp_path / "stage-0.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(LimperError, match="schema"):
        load_stage(path)


def test_stage_file_field_validation():
    records, _report = capped_records()
    with pytest.raises(ValueError):
        StageFile("C", 0, records[0], {}, {})
    with pytest.raises(TypeError):
        StageFile("A", 0, records[0], {}, {})


def test_spectrum_inline_free(capsys):
    assert main(["spectrum", "--potential", "0"]) == 0
    assert capsys.readouterr().out == FREE_SPECTRUM_CSV


def test_spectrum_inline_two_step(capsys):
    assert main(["spectrum", "--potential", "4,0"]) == 0
    assert capsys.readouterr().out == TWO_STEP_SPECTRUM_CSV


def test_spectrum_window_clips_bands(capsys):
    assert main(["spectrum", "--potential", "0", "--window=-1,1"]) == 0
    assert capsys.readouterr().out == "band_index,alpha,beta\n0,-1.0,1.0\n"


def test_spectrum_writes_csv_file(tmp_path, capsys):
    out = tmp_path / "bands.csv"
    assert main(["spectrum", "--potential", "4,0", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == TWO_STEP_SPECTRUM_CSV


def test_spectrum_missing_file_is_usage_error(capsys):
    assert main(["spectrum", "--potential", "nosuch.json"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_sweep_free_grid(capsys):
    assert main(["lyapunov-sweep", "--potential", "0", "--grid=-3,3,7"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "E,L,in_spectrum"
    # acosh(|E|/2) off the band, exactly zero on it
    assert lines[1] == "-3.0,0.9624236501192067,0"
    assert lines[-1] == "3.0,0.9624236501192067,0"
    for line in lines[2:-1]:
        _e, lyap, inside = line.split(",")
        assert lyap == "0.0" and inside == "1"


def test_sweep_finite_length_approximates_rate(capsys):
    code = main(
        ["lyapunov-sweep", "--potential", "0", "--grid", "2.5,3,2", "--length", "800"]
    )
    assert code == 0
    lines = capsys.readouterr().out.splitlines()[1:]
    assert len(lines) == 2
    for line in lines:
        e, lyap, inside = line.split(",")
        assert inside == "0"
        assert float(lyap) == pytest.approx(math.acosh(float(e) / 2.0), abs=1e-3)


def test_sweep_usage_errors(capsys):
    assert main(["lyapunov-sweep", "--potential", "0", "--grid=-3,3,0"]) == 2
    assert main(["lyapunov-sweep", "--potential", "0", "--grid", "1,2"]) == 2
    assert (
        main(["lyapunov-sweep", "--potential", "0", "--stage", "x.json", "--grid", "0,1,2"])
        == 2
    )
    assert main(["lyapunov-sweep", "--grid", "0,1,2"]) == 2
    assert (
        main(["lyapunov-sweep", "--potential", "0", "--grid", "0,1,2", "--length", "x"])
        == 2
    )
    assert capsys.readouterr().err.count("error:") == 5


def test_construct_writes_stage_files_and_summary(b_run):
    _cfg, outdir = b_run
    assert sorted(p.name for p in outdir.iterdir()) == [
        "stage-0.json",
        "stage-1.json",
        "summary.json",
    ]
    summary = json.loads((outdir / "summary.json").read_text())
    assert summary["construction"] == "B"
    assert summary["stages"] == 1
    assert summary["all_ok"] is True
    assert summary["dip_min"] <= summary["dip_bound"]
    assert summary["final_l0"] >= summary["final_l0_floor"]

    first = load_stage(outdir / "stage-0.json")
    last = load_stage(outdir / "stage-1.json")
    assert (first.construction, first.stage) == ("B", 0)
    assert (last.construction, last.stage) == ("B", 1)
    assert first.summary is None
    # the final stage embeds the discontinuity report
    assert last.summary is not None and last.summary.all_ok
    assert last.record.m0 == 64 and last.record.p_k == 192
    assert last.config_echo["mode"] == "capped"
    assert float(last.params["eps"]) == 1.0


def test_construct_resume_is_bit_identical(b_run, tmp_path):
    cfg, outdir = b_run
    resumed = tmp_path / "resumed"
    resumed.mkdir()
    shutil.copy(outdir / "stage-0.json", resumed / "stage-0.json")
    code = main(
        [
            "construct",
            "--construction",
            "b",
            "--config",
            str(cfg),
            "--resume",
            str(resumed / "stage-0.json"),
            "--outdir",
            str(resumed),
        ]
    )
    assert code == 0
    assert (resumed / "stage-1.json").read_bytes() == (
        outdir / "stage-1.json"
    ).read_bytes()


def test_verify_passes_on_saved_stage(b_run, capsys):
    _cfg, outdir = b_run
    assert main(["verify", str(outdir / "stage-1.json")]) == 0
    out = capsys.readouterr().out
    for name in (
        "digest",
        "period-consistency",
        "zero-energy-growth",
        "infimum-bracket",
        "prefix-preservation",
        "shift-budget",
        "report-consistency",
    ):
        assert f"{name}: PASS" in out
    assert out.rstrip().endswith("verify: PASS")


def test_verify_flags_tampered_stage(b_run, tmp_path, capsys):
    _cfg, outdir = b_run
    doc = json.loads((outdir / "stage-1.json").read_text())
    doc["record"]["e_k"] += 1e-9
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc, indent=1))
    assert main(["verify", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "digest: FAIL" in out
    assert out.rstrip().endswith("verify: FAIL")


def test_verify_missing_file_is_usage_error(capsys):
    assert main(["verify", "nosuch.json"]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_construct_a_stage_zero_and_verify(tmp_path, capsys):
    outdir = tmp_path / "a0"
    code = main(
        ["construct", "--construction", "a", "--stages", "0", "--outdir", str(outdir)]
    )
    assert code == 0
    assert main(["verify", str(outdir / "stage-0.json")]) == 0
    out = capsys.readouterr().out
    for name in (
        "digest",
        "period-consistency",
        "interval-density",
        "interval-band-witness",
        "growth-telescoping",
    ):
        assert f"{name}: PASS" in out
    assert out.rstrip().endswith("verify: PASS")


def test_construct_a_capped_abort_reports_diagnostics(tmp_path, capsys):
    cfg = tmp_path / "a.cfg"
    cfg.write_text("mode = capped\nm0_cap = 4\nm_cap = 2\nsamples_per_band = 5\nK = 1\n")
    outdir = tmp_path / "a1"
    code = main(
        ["construct", "--construction", "a", "--config", str(cfg), "--outdir", str(outdir)]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert "construction failed: stage 1" in err
    assert "no band above the width floor" in err
    # diagnostics are dumped as JSON for post-mortems
    assert '"m0": 4' in err
    # nothing is persisted for a failed run
    assert sorted(outdir.iterdir()) == []


def test_module_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "limper.cli", "spectrum", "--potential", "0"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == FREE_SPECTRUM_CSV


def test_thread_count_never_changes_output_bytes():
    cmd = [
        sys.executable,
        "-m",
        "limper.cli",
        "lyapunov-sweep",
        "--potential",
        "0.5,-0.5,0.25",
        "--grid=-3,3,101",
    ]
    runs = {}
    for threads in ("1", "4"):
        env = dict(os.environ, LIMPER_THREADS=threads)
        proc = subprocess.run(cmd, capture_output=True, env=env)
        assert proc.returncode == 0
        runs[threads] = proc.stdout
    assert runs["1"] == runs["4"]
