"""WEO snapshot ingestion for the KC7 blocs.

Reads the frozen comma-delimited extract of the macro dataset (columns
``bloc,series,value,vintage``), selects the two canonical series per
bloc, hashes the raw bytes, applies the carry-forward rule for missing
series, and resolves the deterministic annual snapshot date.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from enum import Enum
from typing import Optional, Sequence

from . import fixedpoint as fp
from .canonical import sha256_hex
from .errors import DuplicateBloc, MalformedFile, NegativeValue, NoPriorValue

DEBT_SERIES = "GGXWDG_NGDP"   # general government gross debt, % of GDP
GDP_SERIES = "NGDPD"          # nominal GDP, USD


class Bloc(Enum):
    """The fixed KC7 bloc set. Closed; never extended at runtime."""

    US = "US"
    EA20 = "EA20"
    JP = "JP"
    UK = "UK"
    CA = "CA"
    AU = "AU"
    KR = "KR"


ALL_BLOCS: tuple[Bloc, ...] = tuple(Bloc)

_VINTAGE_RE = re.compile(
    r"^(?P<year>\d{4})-(?P<month>January|February|March|April|May|June|July|"
    r"August|September|October|November|December)$"
)


@dataclass(frozen=True)
class WeoVintage:
    vintage_id: str           # "<year>-<Month>", e.g. "2024-October"
    publication_date: date
    dataset_hash: str         # sha256 of the raw snapshot bytes, lowercase hex

    def __post_init__(self):
        if not _VINTAGE_RE.match(self.vintage_id):
            raise MalformedFile(f"bad vintage id: {self.vintage_id!r}")


class ObservationStatus(Enum):
    OBSERVED = "Observed"
    CARRIED_FORWARD = "CarriedForward"


@dataclass(frozen=True)
class BlocObservation:
    bloc: Bloc
    debt_ratio: int    # scaled decimal, percent of GDP
    nominal_gdp: int   # scaled decimal, USD
    source_vintage: WeoVintage
    status: ObservationStatus

    def __post_init__(self):
        if self.debt_ratio < 0:
            raise NegativeValue(f"{self.bloc.value}: debt_ratio < 0")
        if self.nominal_gdp <= 0:
            raise NegativeValue(f"{self.bloc.value}: nominal_gdp <= 0")


@dataclass(frozen=True)
class MissingSeries:
    """Placeholder for a bloc absent from the snapshot file."""

    bloc: Bloc


@dataclass(frozen=True)
class ParsedSnapshot:
    observations: list[BlocObservation | MissingSeries]
    vintage: WeoVintage

    def missing(self) -> list[Bloc]:
        return [o.bloc for o in self.observations if isinstance(o, MissingSeries)]


class SnapshotRule(Enum):
    OCTOBER_PLUS_10 = "OctoberPlus10"
    DECEMBER_FALLBACK = "DecemberFallback"


@dataclass(frozen=True)
class SnapshotDecision:
    chosen_vintage_id: str
    snapshot_timestamp: datetime
    rule_branch: SnapshotRule
    fallback_note: Optional[str] = None


def parse_weo_snapshot(
    raw: bytes, vintage_id: str, publication_date: date
) -> ParsedSnapshot:
    """Parse a frozen snapshot extract into one observation per KC7 bloc.

    Blocs missing from the file come back as MissingSeries markers for the
    caller to resolve via apply_missing_data_rule.
    """
    dataset_hash = sha256_hex(raw)
    vintage = WeoVintage(vintage_id, publication_date, dataset_hash)

    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedFile("snapshot is not valid UTF-8") from exc

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedFile("empty snapshot file")
    if [h.strip() for h in header] != ["bloc", "series", "value", "vintage"]:
        raise MalformedFile(f"unexpected header: {header}")

    seen: dict[tuple[Bloc, str], int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise MalformedFile(f"line {lineno}: expected 4 columns, got {len(row)}")
        bloc_code, series, value, row_vintage = (c.strip() for c in row)
        try:
            bloc = Bloc(bloc_code)
        except ValueError as exc:
            raise MalformedFile(f"line {lineno}: unknown bloc {bloc_code!r}") from exc
        if series not in (DEBT_SERIES, GDP_SERIES):
            continue  # extract may carry extra series; only the canonical two count
        if row_vintage != vintage_id:
            raise MalformedFile(
                f"line {lineno}: vintage {row_vintage!r} != {vintage_id!r}"
            )
        if (bloc, series) in seen:
            raise DuplicateBloc(f"duplicate {series} row for {bloc.value}")
        try:
            seen[(bloc, series)] = fp.from_str(value)
        except ValueError as exc:
            raise MalformedFile(f"line {lineno}: bad value {value!r}") from exc

    observations: list[BlocObservation | MissingSeries] = []
    for bloc in ALL_BLOCS:
        debt = seen.get((bloc, DEBT_SERIES))
        gdp = seen.get((bloc, GDP_SERIES))
        if debt is None and gdp is None:
            observations.append(MissingSeries(bloc))
            continue
        if debt is None or gdp is None:
            raise MalformedFile(
                f"{bloc.value}: incomplete series pair (need both "
                f"{DEBT_SERIES} and {GDP_SERIES})"
            )
        observations.append(
            BlocObservation(bloc, debt, gdp, vintage, ObservationStatus.OBSERVED)
        )
    return ParsedSnapshot(observations, vintage)


def apply_missing_data_rule(
    current: Sequence[BlocObservation | MissingSeries],
    last_confirmed: Sequence[BlocObservation],
) -> list[BlocObservation]:
    """Replace MissingSeries markers with the last confirmed value per bloc.

    Substituted entries carry status CarriedForward; callers disclose them
    in the cycle report.
    """
    prior = {o.bloc: o for o in last_confirmed}
    resolved: list[BlocObservation] = []
    for obs in current:
        if isinstance(obs, MissingSeries):
            fallback = prior.get(obs.bloc)
            if fallback is None:
                raise NoPriorValue(
                    f"{obs.bloc.value} missing and no confirmed prior value"
                )
            resolved.append(
                BlocObservation(
                    fallback.bloc,
                    fallback.debt_ratio,
                    fallback.nominal_gdp,
                    fallback.source_vintage,
                    ObservationStatus.CARRIED_FORWARD,
                )
            )
        else:
            resolved.append(obs)
    return resolved


def _is_business_day(day: date, holidays: frozenset[date]) -> bool:
    return day.weekday() < 5 and day not in holidays


def next_business_day(day: date, holidays: frozenset[date] = frozenset()) -> date:
    while not _is_business_day(day, holidays):
        day += timedelta(days=1)
    return day


def resolve_snapshot_date(
    october_publication: Optional[date],
    today: date,
    latest_vintage_id: str,
    holidays: frozenset[date] = frozenset(),
) -> SnapshotDecision:
    """Apply the deterministic annual snapshot rule.

    October release published by December 1 -> snapshot at 12:00 UTC ten
    calendar days after publication. Otherwise fall back to the latest
    vintage available as of December 1, snapshot December 10 at 12:00 UTC
    shifted to the next business day when needed.
    """
    noon = time(12, 0, tzinfo=timezone.utc)
    december_first = date(today.year, 12, 1)
    if october_publication is not None and october_publication <= december_first:
        ts = datetime.combine(october_publication + timedelta(days=10), noon)
        return SnapshotDecision(latest_vintage_id, ts, SnapshotRule.OCTOBER_PLUS_10)
    snap_day = next_business_day(date(today.year, 12, 10), holidays)
    note = "October dataset not published by December 1; using latest available vintage"
    return SnapshotDecision(
        latest_vintage_id,
        datetime.combine(snap_day, noon),
        SnapshotRule.DECEMBER_FALLBACK,
        fallback_note=note,
    )
