"""Operator command surface.

One verb per lifecycle stage: index, cycle, simulate, report, verify,
govern, state. Exit codes: 0 success, 1 verification/policy failure,
2 input error. The state directory is taken from --state-dir or the
KLADIA_STATE_DIR environment variable.
"""

from __future__ import annotations

import json
import sys
from datetime import date, datetime, timezone
from pathlib import Path

import click

from . import fixedpoint as fp
from . import governance as gov
from . import ledger as ledger_mod
from . import oracle_protocol as oracle
from . import reporting
from . import simulator as sim
from .clock import VirtualClock
from .debt_index import BaselineRef, derive_index_state
from .errors import KladiaError
from .policy import PolicyParams
from .weo_ingest import (
    Bloc,
    WeoVintage,
    apply_missing_data_rule,
    parse_weo_snapshot,
)

EXIT_OK = 0
EXIT_POLICY = 1
EXIT_INPUT = 2


def _load_baseline(path: Path) -> BaselineRef:
    data = json.loads(path.read_text())
    ref = BaselineRef(
        bdi_ref=fp.from_str(data["bdi_ref"]),
        genesis_vintage=WeoVintage(
            data["vintage_id"],
            date.fromisoformat(data["publication_date"]),
            data["dataset_hash"],
        ),
    )
    ref.freeze()
    return ref


@click.group()
def main():
    """KLD debt-indexed policy engine."""


@main.command("index")
@click.argument("snapshot_file", type=click.Path(exists=True, path_type=Path))
@click.option("--baseline-file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--vintage", required=True, help="e.g. 2026-October")
@click.option("--publication-date", required=True, help="ISO date")
@click.option("--lam", default="1.0", show_default=True,
              help="policy factor sensitivity")
@click.option("--last-confirmed", type=click.Path(exists=True, path_type=Path),
              help="JSON of last confirmed bloc values for carry-forward")
@click.option("--fmt", "--format", "fmt", default="table",
              type=click.Choice(["table", "canonical"]), show_default=True)
def cmd_index(snapshot_file, baseline_file, vintage, publication_date, lam,
              last_confirmed, fmt):
    """Compute weights, BDI, X and g from a snapshot file."""
    try:
        raw = snapshot_file.read_bytes()
        parsed = parse_weo_snapshot(raw, vintage, date.fromisoformat(publication_date))
        observations = parsed.observations
        if parsed.missing():
            if last_confirmed is None:
                raise KladiaError(
                    f"missing blocs {[b.value for b in parsed.missing()]} "
                    "and no --last-confirmed file"
                )
            prior_data = json.loads(last_confirmed.read_text())
            from .weo_ingest import BlocObservation, ObservationStatus
            prior = [
                BlocObservation(
                    Bloc(code),
                    fp.from_str(v["debt_ratio"]),
                    fp.from_str(v["nominal_gdp"]),
                    parsed.vintage,
                    ObservationStatus.OBSERVED,
                )
                for code, v in prior_data.items()
            ]
            observations = apply_missing_data_rule(observations, prior)
        baseline = _load_baseline(baseline_file)
        state = derive_index_state(
            date.fromisoformat(publication_date).year, observations, baseline,
            fp.from_str(lam),
        )
    except (KladiaError, ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)

    payload = {
        "dataset_hash": parsed.vintage.dataset_hash,
        "weights": {b.value: fp.to_str(w) for b, w in state.weights.items()},
        "bdi": fp.to_str(state.bdi),
        "bdi_ref": fp.to_str(baseline.bdi_ref),
        "x_norm": fp.to_str(state.x_norm),
        "x_excess": fp.to_str(state.x_excess),
        "g": fp.to_str(state.g),
    }
    if fmt == "canonical":
        click.echo(json.dumps(payload, sort_keys=True, separators=(",", ":")))
    else:
        for key, value in payload.items():
            if isinstance(value, dict):
                for k2, v2 in value.items():
                    click.echo(f"{key}.{k2}\t{v2}")
            else:
                click.echo(f"{key}\t{value}")


@main.command("cycle")
@click.option("--state-dir", type=click.Path(path_type=Path), required=True,
              envvar="KLADIA_STATE_DIR")
@click.option("--submissions-dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--baseline-file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--year", type=int, required=True)
@click.option("--lam", default="1.0", show_default=True)
@click.option("--approvals", default="", help="comma-separated executor signers")
@click.option("--start", default="2026-01-01T00:00:00",
              help="virtual clock start (UTC)")
def cmd_cycle(state_dir, submissions_dir, baseline_file, year, lam, approvals,
              start):
    """Run one annual cycle: intake -> median -> window -> execute."""
    try:
        state_dir.mkdir(parents=True, exist_ok=True)
        lock = state_dir / ".lock"
        if lock.exists():
            raise KladiaError(f"state dir is locked: {lock}")
        lock.write_text(str(datetime.now(timezone.utc)))
        try:
            _run_cycle(state_dir, submissions_dir, baseline_file, year, lam,
                       approvals, start)
        finally:
            lock.unlink()
    except KladiaError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_POLICY)
    except (ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)


def _run_cycle(state_dir: Path, submissions_dir: Path, baseline_file: Path,
               year: int, lam: str, approvals: str, start: str) -> None:
    baseline = _load_baseline(baseline_file)
    lam_fp = fp.from_str(lam)
    clock = VirtualClock(datetime.fromisoformat(start).replace(tzinfo=timezone.utc))

    ledger_file = state_dir / "ledger.json"
    if ledger_file.exists():
        state = ledger_mod.from_json_dict(json.loads(ledger_file.read_text()))
    else:
        state = ledger_mod.genesis()
    params = PolicyParams()

    record = oracle.CycleRecord(cycle_year=year, prior_confirmed_g=0)
    operator_ids = []
    for sub_file in sorted(submissions_dir.glob("*.json")):
        data = json.loads(sub_file.read_text())
        operator_ids.append(data["operator_id"])
    for sub_file in sorted(submissions_dir.glob("*.json")):
        data = json.loads(sub_file.read_text())
        payload = oracle.SubmissionPayload(
            debt_ratios={Bloc(k): fp.from_str(v)
                         for k, v in data["debt_ratios"].items()},
            nominal_gdps={Bloc(k): fp.from_str(v)
                          for k, v in data["nominal_gdps"].items()},
            bdi=fp.from_str(data["bdi"]),
            x_norm=fp.from_str(data["x_norm"]),
            g=fp.from_str(data["g"]),
            vintage_id=data["vintage_id"],
            dataset_hash=data["dataset_hash"],
        )
        submission = oracle.OracleSubmission.sign(
            data["operator_id"], payload, clock.now()
        )
        record = oracle.submit(record, submission, operator_ids, baseline, lam_fp)

    oracle.aggregate_median(record, baseline, lam_fp)
    oracle.open_window(record, clock.now())
    clock.advance_hours(73)
    record = oracle.resolve(record, clock.now(), None, baseline, lam_fp)

    executor_signers = tuple(f"exec-{i}" for i in range(1, 9))
    approval_list = (
        tuple(a.strip() for a in approvals.split(",") if a.strip())
        or executor_signers[:5]
    )
    event_start = len(state.event_log)
    record, state, params = oracle.execute(
        record, state, params, approval_list, executor_signers, clock.now()
    )

    report = reporting.build_report(
        record, state.event_log[event_start:], [], baseline
    )
    report["lambda"] = lam
    commitment = reporting.commit(report, ledger_anchor=len(state.event_log))

    ledger_file.write_text(json.dumps(ledger_mod.to_json_dict(state)))
    (state_dir / f"cycle-{year}.json").write_text(
        json.dumps(record.canonical(), sort_keys=True)
    )
    (state_dir / f"report-{year}.kldr").write_bytes(reporting.serialize(report))
    (state_dir / f"report-{year}.commit").write_text(
        json.dumps({"content_hash": commitment.content_hash,
                    "reference_link": commitment.reference_link,
                    "ledger_anchor": commitment.ledger_anchor})
    )
    click.echo(f"cycle {year}: {record.window.status.value}, "
               f"g={fp.to_str(record.confirmed_g)}, "
               f"state_hash={state.state_hash()}")


@main.command("simulate")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--years", type=int, default=5, show_default=True)
@click.option("--dispute-year", "dispute_years", type=int, multiple=True)
@click.option("--out", type=click.Path(path_type=Path))
def cmd_simulate(seed, years, dispute_years, out):
    """Run a deterministic scenario and print/emit the trace."""
    try:
        scenario = sim.Scenario(seed=seed, years=years,
                                dispute_years=tuple(dispute_years))
        trace = sim.run(scenario)
    except KladiaError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    table = trace.to_table()
    if out:
        out.write_text(table)
        click.echo(f"trace written to {out} ({len(trace.rows)} rows, "
                   f"hash {trace.trace_hash()})")
    else:
        click.echo(table, nl=False)


@main.command("report")
@click.option("--state-dir", type=click.Path(exists=True, path_type=Path),
              required=True, envvar="KLADIA_STATE_DIR")
@click.option("--year", type=int, required=True)
def cmd_report(state_dir, year):
    """Print a committed cycle report."""
    path = state_dir / f"report-{year}.kldr"
    if not path.exists():
        click.echo(f"error: no report for year {year}", err=True)
        sys.exit(EXIT_INPUT)
    click.echo(path.read_text())


@main.command("verify")
@click.argument("report_file", type=click.Path(exists=True, path_type=Path))
@click.argument("commit_file", type=click.Path(exists=True, path_type=Path))
@click.option("--event-log", type=click.Path(path_type=Path),
              help="ledger state JSON for supply reconciliation")
@click.option("--baseline-file", type=click.Path(exists=True, path_type=Path))
@click.option("--lam", default="1.0", show_default=True)
def cmd_verify(report_file, commit_file, event_log, baseline_file, lam):
    """Verify a report against its commitment (exit 0 iff clean)."""
    try:
        commit_data = json.loads(commit_file.read_text())
        commitment = reporting.ReportCommitment(
            commit_data["content_hash"],
            commit_data.get("reference_link", ""),
            commit_data.get("ledger_anchor", 0),
        )
        baseline = _load_baseline(baseline_file) if baseline_file else None
        events = None
        skipped_reconciliation = False
        if event_log is not None:
            if event_log.exists():
                data = json.loads(event_log.read_text())
                anchor = commitment.ledger_anchor
                events = data["event_log"][:anchor] if anchor else data["event_log"]
            else:
                skipped_reconciliation = True
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)

    ok, problems = reporting.verify(
        report_file.read_bytes(), commitment, baseline,
        fp.from_str(lam) if baseline else None, events,
    )
    if skipped_reconciliation:
        click.echo("warning: event log missing; reconciliation skipped", err=True)
        sys.exit(EXIT_INPUT)
    if ok:
        click.echo("verified: clean")
        sys.exit(EXIT_OK)
    click.echo(f"verification failed: {', '.join(problems)}")
    sys.exit(EXIT_POLICY)


@main.command("govern")
@click.option("--changes", required=True,
              help='JSON object of parameter -> decimal string')
def cmd_govern(changes):
    """Check a parameter-change set against immutables and bounds."""
    try:
        change_map = {
            k: fp.from_str(v) for k, v in json.loads(changes).items()
        }
    except (ValueError, json.JSONDecodeError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    registry = gov.GovernanceRegistry()
    snapshot = gov.VotingPowerView({"checker": 10 ** 12}, 0)
    try:
        proposal = gov.propose(
            registry, "checker", 10 ** 12, change_map, snapshot,
            datetime.now(timezone.utc),
        )
    except KladiaError as exc:
        click.echo(f"rejected: {type(exc).__name__}: {exc}")
        sys.exit(EXIT_POLICY)
    click.echo(f"acceptable: {proposal.id} would enter voting")
    sys.exit(EXIT_OK)


@main.command("state")
@click.option("--state-dir", type=click.Path(exists=True, path_type=Path),
              required=True, envvar="KLADIA_STATE_DIR")
def cmd_state(state_dir):
    """Print the current ledger snapshot and its commitment hash."""
    ledger_file = state_dir / "ledger.json"
    if not ledger_file.exists():
        click.echo("error: no ledger state", err=True)
        sys.exit(EXIT_INPUT)
    try:
        state = ledger_mod.from_json_dict(json.loads(ledger_file.read_text()))
    except (KladiaError, ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    click.echo(json.dumps(state.snapshot(), sort_keys=True, indent=2))
    click.echo(f"state_hash\t{state.state_hash()}")


if __name__ == "__main__":
    main()
