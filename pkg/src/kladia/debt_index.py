"""Bloc Debt Index computation and the bounded policy factor.

Weights are GDP shares recomputed per vintage; the index is the weighted
average of bloc debt ratios; normalization is against the frozen genesis
baseline; the policy factor saturates in [0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import fixedpoint as fp
from .errors import (
    BaselineFrozen,
    BaselineNotFrozen,
    BlocSetMismatch,
    IncompleteBlocSet,
    NonPositiveLambda,
)
from .weo_ingest import ALL_BLOCS, Bloc, BlocObservation, WeoVintage


@dataclass
class BaselineRef:
    """Immutable genesis baseline. Freeze once, then reject every mutation."""

    bdi_ref: int                 # scaled decimal, > 0
    genesis_vintage: WeoVintage
    frozen: bool = False

    def freeze(self) -> None:
        if self.bdi_ref <= 0:
            raise ValueError("bdi_ref must be positive")
        object.__setattr__(self, "frozen", True)

    def __setattr__(self, name, value):
        if getattr(self, "frozen", False) and name in ("bdi_ref", "genesis_vintage"):
            raise BaselineFrozen(f"baseline is frozen; cannot set {name}")
        object.__setattr__(self, name, value)


@dataclass(frozen=True)
class DebtIndexState:
    cycle_year: int
    weights: dict[Bloc, int]
    bdi: int
    x_norm: int
    x_excess: int
    g: int
    lam: int


class Band:
    LOW = "LowDebt"
    MODERATE = "ModerateDebt"
    HIGH = "HighDebt"


@dataclass(frozen=True)
class RegimeBand:
    """Informational thresholds on g; no policy function consumes the band."""

    low_max: int = fp.from_str("0.05")
    high_min: int = fp.from_str("0.7")

    def __post_init__(self):
        if not (0 <= self.low_max < self.high_min < fp.ONE):
            raise ValueError("need 0 <= low_max < high_min < 1")


def compute_weights(observations: Sequence[BlocObservation]) -> dict[Bloc, int]:
    """GDP-share weights, half-even at 9 digits, residual on the largest bloc.

    The rounding residual is assigned to the largest-GDP bloc (ties broken
    by bloc code order) so the weights sum to exactly 1.
    """
    by_bloc = {o.bloc: o for o in observations}
    if set(by_bloc) != set(ALL_BLOCS) or len(observations) != len(ALL_BLOCS):
        raise IncompleteBlocSet(
            f"need exactly the KC7 set, got {[o.bloc.value for o in observations]}"
        )
    total_gdp = sum(o.nominal_gdp for o in observations)
    weights = {
        b: fp.div_half_even(by_bloc[b].nominal_gdp * fp.SCALE, total_gdp)
        for b in ALL_BLOCS
    }
    residual = fp.ONE - sum(weights.values())
    if residual:
        largest = max(ALL_BLOCS, key=lambda b: (by_bloc[b].nominal_gdp, -ALL_BLOCS.index(b)))
        weights[largest] += residual
    return weights


def compute_bdi(
    observations: Sequence[BlocObservation], weights: Mapping[Bloc, int]
) -> int:
    """Weighted average of debt ratios: sum of weights[b] * debt_ratio[b]."""
    by_bloc = {o.bloc: o for o in observations}
    if set(by_bloc) != set(weights):
        raise BlocSetMismatch("observations and weights cover different blocs")
    acc = 0
    for bloc in sorted(weights, key=lambda b: b.value):
        acc += fp.mul(weights[bloc], by_bloc[bloc].debt_ratio)
    return acc


def normalize(bdi: int, baseline: BaselineRef) -> tuple[int, int]:
    """Ratio to baseline and the nonnegative excess over 1."""
    if not baseline.frozen:
        raise BaselineNotFrozen("baseline must be frozen before use")
    x_norm = fp.div(bdi, baseline.bdi_ref)
    x_excess = max(0, x_norm - fp.ONE)
    return x_norm, x_excess


def policy_factor(x_excess: int, lam: int) -> int:
    """Saturating map x / (1 + lam*x), strictly increasing, in [0, 1)."""
    if lam <= 0:
        raise NonPositiveLambda("lambda must be positive")
    if x_excess < 0:
        raise ValueError("x_excess must be nonnegative")
    if x_excess == 0:
        return 0
    denom = fp.ONE + fp.mul(lam, x_excess)
    g = fp.div(x_excess, denom)
    # rounding can nudge the quotient to exactly 1 for huge x; keep g < 1
    return min(g, fp.ONE - 1)


def classify_band(g: int, bands: RegimeBand = RegimeBand()) -> str:
    if not (0 <= g < fp.ONE):
        raise ValueError("g must be in [0, 1)")
    if g <= bands.low_max:
        return Band.LOW
    if g >= bands.high_min:
        return Band.HIGH
    return Band.MODERATE


def derive_index_state(
    cycle_year: int,
    observations: Sequence[BlocObservation],
    baseline: BaselineRef,
    lam: int,
) -> DebtIndexState:
    """Full pipeline for one cycle: weights -> BDI -> X, x -> g."""
    weights = compute_weights(observations)
    bdi = compute_bdi(observations, weights)
    x_norm, x_excess = normalize(bdi, baseline)
    g = policy_factor(x_excess, lam)
    return DebtIndexState(cycle_year, weights, bdi, x_norm, x_excess, g, lam)
