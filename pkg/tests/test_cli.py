import json

import pytest
from click.testing import CliRunner

from kladia.cli import main
from kladia.weo_ingest import ALL_BLOCS, DEBT_SERIES, GDP_SERIES

HASH = "ab" * 32


@pytest.fixture
def runner():
    return CliRunner()


def write_snapshot(path, vintage_id, debt="150", gdp="2000"):
    lines = ["bloc,series,value,vintage"]
    for bloc in ALL_BLOCS:
        lines.append(f"{bloc.value},{DEBT_SERIES},{debt},{vintage_id}")
        lines.append(f"{bloc.value},{GDP_SERIES},{gdp},{vintage_id}")
    path.write_text("\n".join(lines) + "\n")


def write_baseline(path, bdi_ref="100.000000000"):
    path.write_text(json.dumps({
        "bdi_ref": bdi_ref,
        "vintage_id": "2025-October",
        "publication_date": "2025-10-15",
        "dataset_hash": HASH,
    }))


def write_submission(path, operator, debt="150", gdp="2000",
                     bdi="150.000000000", x="1.500000000", g="0.333333333"):
    path.write_text(json.dumps({
        "operator_id": operator,
        "debt_ratios": {b.value: debt for b in ALL_BLOCS},
        "nominal_gdps": {b.value: gdp for b in ALL_BLOCS},
        "bdi": bdi,
        "x_norm": x,
        "g": g,
        "vintage_id": "2026-October",
        "dataset_hash": HASH,
    }))


# --- index -------------------------------------------------------------------

def test_index_at_baseline_is_neutral(runner, tmp_path):
    snap = tmp_path / "snap.csv"
    base = tmp_path / "baseline.json"
    write_snapshot(snap, "2026-October", debt="100")
    write_baseline(base)
    result = runner.invoke(main, [
        "index", str(snap), "--baseline-file", str(base),
        "--vintage", "2026-October", "--publication-date", "2026-10-14",
    ])
    assert result.exit_code == 0, result.output
    assert "g\t0.000000000" in result.output
    assert "x_norm\t1.000000000" in result.output


def test_index_fifty_percent_excess(runner, tmp_path):
    # BDI 150 over reference 100: X=1.5, x=0.5, g = 0.5/1.5 = 1/3
    snap = tmp_path / "snap.csv"
    base = tmp_path / "baseline.json"
    write_snapshot(snap, "2026-October", debt="150")
    write_baseline(base)
    result = runner.invoke(main, [
        "index", str(snap), "--baseline-file", str(base),
        "--vintage", "2026-October", "--publication-date", "2026-10-14",
        "--fmt", "canonical",
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    assert payload["bdi"] == "150.000000000"
    assert payload["g"] == "0.333333333"
    assert sum(int(w.replace(".", "")) for w in payload["weights"].values()) \
        == 10 ** 9


def test_index_malformed_snapshot_exit_2(runner, tmp_path):
    snap = tmp_path / "snap.csv"
    base = tmp_path / "baseline.json"
    snap.write_text("not,a,snapshot\n1,2,3\n")
    write_baseline(base)
    result = runner.invoke(main, [
        "index", str(snap), "--baseline-file", str(base),
        "--vintage", "2026-October", "--publication-date", "2026-10-14",
    ])
    assert result.exit_code == 2


def test_index_missing_bloc_without_prior_exit_2(runner, tmp_path):
    snap = tmp_path / "snap.csv"
    base = tmp_path / "baseline.json"
    lines = ["bloc,series,value,vintage"]
    for bloc in list(ALL_BLOCS)[:-1]:  # drop KR
        lines.append(f"{bloc.value},{DEBT_SERIES},100,2026-October")
        lines.append(f"{bloc.value},{GDP_SERIES},2000,2026-October")
    snap.write_text("\n".join(lines) + "\n")
    write_baseline(base)
    result = runner.invoke(main, [
        "index", str(snap), "--baseline-file", str(base),
        "--vintage", "2026-October", "--publication-date", "2026-10-14",
    ])
    assert result.exit_code == 2


# --- cycle / verify ----------------------------------------------------------

def run_cycle(runner, tmp_path, tag="a"):
    state_dir = tmp_path / f"state-{tag}"
    subs = tmp_path / f"subs-{tag}"
    subs.mkdir()
    base = tmp_path / f"baseline-{tag}.json"
    write_baseline(base)
    for op in ("op-1", "op-2", "op-3"):
        write_submission(subs / f"{op}.json", op)
    result = runner.invoke(main, [
        "cycle", "--state-dir", str(state_dir), "--submissions-dir", str(subs),
        "--baseline-file", str(base), "--year", "2026",
    ])
    return result, state_dir, base


def test_cycle_produces_artifacts(runner, tmp_path):
    result, state_dir, _ = run_cycle(runner, tmp_path)
    assert result.exit_code == 0, result.output
    assert "g=0.333333333" in result.output
    assert (state_dir / "ledger.json").exists()
    assert (state_dir / "cycle-2026.json").exists()
    assert (state_dir / "report-2026.kldr").exists()
    assert (state_dir / "report-2026.commit").exists()
    cycle = json.loads((state_dir / "cycle-2026.json").read_text())
    assert cycle["status"] == "Executed"


def test_cycle_replay_is_bit_identical(runner, tmp_path):
    r1, dir1, _ = run_cycle(runner, tmp_path, "a")
    r2, dir2, _ = run_cycle(runner, tmp_path, "b")
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (dir1 / "report-2026.kldr").read_bytes() == \
        (dir2 / "report-2026.kldr").read_bytes()
    assert (dir1 / "report-2026.commit").read_text() == \
        (dir2 / "report-2026.commit").read_text()
    assert r1.output == r2.output  # includes the ledger state hash


def test_verify_clean_report_exit_0(runner, tmp_path):
    result, state_dir, base = run_cycle(runner, tmp_path)
    assert result.exit_code == 0
    result = runner.invoke(main, [
        "verify", str(state_dir / "report-2026.kldr"),
        str(state_dir / "report-2026.commit"),
        "--event-log", str(state_dir / "ledger.json"),
        "--baseline-file", str(base),
    ])
    assert result.exit_code == 0, result.output
    assert "verified: clean" in result.output


def test_verify_tampered_report_exit_1(runner, tmp_path):
    result, state_dir, base = run_cycle(runner, tmp_path)
    assert result.exit_code == 0
    report_file = state_dir / "report-2026.kldr"
    data = report_file.read_bytes().replace(b"0.333333333", b"0.222222222", 1)
    report_file.write_bytes(data)
    result = runner.invoke(main, [
        "verify", str(report_file), str(state_dir / "report-2026.commit"),
        "--baseline-file", str(base),
    ])
    assert result.exit_code == 1
    assert "HashMismatch" in result.output or "RecomputeMismatch" in result.output


def test_verify_missing_event_log_exit_2(runner, tmp_path):
    result, state_dir, base = run_cycle(runner, tmp_path)
    assert result.exit_code == 0
    result = runner.invoke(main, [
        "verify", str(state_dir / "report-2026.kldr"),
        str(state_dir / "report-2026.commit"),
        "--event-log", str(state_dir / "no-such-ledger.json"),
        "--baseline-file", str(base),
    ])
    assert result.exit_code == 2
    assert "reconciliation skipped" in result.output


def test_cycle_respects_lock(runner, tmp_path):
    state_dir = tmp_path / "locked"
    state_dir.mkdir()
    (state_dir / ".lock").write_text("held")
    subs = tmp_path / "subs"
    subs.mkdir()
    write_submission(subs / "op-1.json", "op-1")
    base = tmp_path / "baseline.json"
    write_baseline(base)
    result = runner.invoke(main, [
        "cycle", "--state-dir", str(state_dir), "--submissions-dir", str(subs),
        "--baseline-file", str(base), "--year", "2026",
    ])
    assert result.exit_code == 1
    assert "locked" in result.output


# --- state -------------------------------------------------------------------

def test_state_prints_snapshot_and_hash(runner, tmp_path):
    result, state_dir, _ = run_cycle(runner, tmp_path)
    assert result.exit_code == 0
    result = runner.invoke(main, ["state", "--state-dir", str(state_dir)])
    assert result.exit_code == 0, result.output
    assert "state_hash\t" in result.output
    snapshot = json.loads(result.output.rsplit("state_hash", 1)[0])
    assert "circulating" in snapshot


# --- simulate ----------------------------------------------------------------

def test_simulate_prints_table(runner):
    result = runner.invoke(main, ["simulate", "--seed", "7", "--years", "1"])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().split("\n")
    assert lines[0].startswith("month,year,g,")
    assert len(lines) == 13


def test_simulate_out_file_deterministic(runner, tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        result = runner.invoke(main, [
            "simulate", "--seed", "11", "--years", "2",
            "--dispute-year", "2", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
    assert out1.read_text() == out2.read_text()


# --- govern ------------------------------------------------------------------

def test_govern_accepts_bounded_change(runner):
    result = runner.invoke(main, ["govern", "--changes", '{"alpha_i": "0.03"}'])
    assert result.exit_code == 0
    assert "acceptable" in result.output


def test_govern_rejects_constitutional_parameter(runner):
    result = runner.invoke(main, ["govern", "--changes", '{"lambda": "2.0"}'])
    assert result.exit_code == 1
    assert "rejected" in result.output


def test_govern_rejects_out_of_bounds(runner):
    result = runner.invoke(main, ["govern", "--changes", '{"alpha_i": "0.06"}'])
    assert result.exit_code == 1


def test_govern_bad_json_exit_2(runner):
    result = runner.invoke(main, ["govern", "--changes", "{not json"])
    assert result.exit_code == 2
