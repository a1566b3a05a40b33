"""Policy functions mapping the debt factor g into the four supply levers.

All four are continuous and linear in g, clamped at their published
bounds: gross issuance budget, fee-burn fraction, monthly escrow release
cap, and staking emission rate. Token-unit outputs round down.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import fixedpoint as fp


@dataclass(frozen=True)
class PolicyParams:
    """Governable coefficients plus per-cycle budget anchors.

    Fractions are scaled decimals; e_base/e_min are token base units per
    month, i_base token base units per year, r_base a per-month fraction
    of the staking reserve.
    """

    alpha_i: int = fp.from_str("0.5")
    beta_b: int = fp.from_str("0.5")
    alpha_e: int = fp.from_str("0.5")
    gamma: int = fp.from_str("0.5")
    b_base: int = fp.from_str("0.25")
    b_max: int = fp.from_str("0.9")
    e_base: int = 0
    e_min: int = 0
    i_base: int = 0
    r_base: int = fp.from_str("0.001")
    staking_multiplier: int = fp.ONE  # opaque governable multiplier on r_base

    def __post_init__(self):
        if not (0 <= self.alpha_i <= fp.ONE):
            raise ValueError("alpha_i must be in [0, 1]")
        if not (0 <= self.alpha_e <= fp.ONE):
            raise ValueError("alpha_e must be in [0, 1]")
        if self.beta_b < 0 or self.gamma < 0:
            raise ValueError("beta_b and gamma must be nonnegative")
        if not (0 <= self.b_base <= self.b_max <= fp.ONE):
            raise ValueError("need 0 <= b_base <= b_max <= 1")
        if not (0 <= self.e_min <= self.e_base or self.e_base == 0):
            raise ValueError("need e_min <= e_base")
        if self.i_base < 0 or self.r_base < 0:
            raise ValueError("budgets and rates must be nonnegative")

    def effective_r_base(self) -> int:
        return fp.mul(self.r_base, self.staking_multiplier)

    def with_changes(self, **kwargs) -> "PolicyParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class PolicyFactors:
    """The four bound outputs for one annual cycle, at a fixed g."""

    phi_i: int            # 1 - alpha_i * g
    burn_fraction: int
    escrow_cap: int       # token base units per month
    staking_rate: int
    issuance_budget: int  # token base units for the year
    g_used: int


def _check_g(g: int) -> None:
    if not (0 <= g < fp.ONE):
        raise ValueError("g must be in [0, 1)")


def issuance_factor(params: PolicyParams, g: int) -> int:
    _check_g(g)
    return max(0, fp.ONE - fp.mul(params.alpha_i, g))


def issuance_budget(params: PolicyParams, g: int, locked_unburned: int) -> int:
    """Annual gross release budget, shrinking linearly in g.

    Capped by the locked, unburned balance: releases can never exceed what
    is actually locked.
    """
    if locked_unburned < 0:
        raise ValueError("locked_unburned must be nonnegative")
    budget = fp.scale_amount_down(params.i_base, issuance_factor(params, g))
    return min(budget, locked_unburned)


def burn_fraction(params: PolicyParams, g: int) -> int:
    """min(b_max, b_base + beta_b * g); nondecreasing in g."""
    _check_g(g)
    return min(params.b_max, params.b_base + fp.mul(params.beta_b, g))


def fee_burn_amount(params: PolicyParams, g: int, fees: int) -> int:
    """Burned share of this period's protocol fees, rounded down."""
    if fees < 0:
        raise ValueError("fees must be nonnegative")
    return fp.scale_amount_down(fees, burn_fraction(params, g))


def escrow_cap(params: PolicyParams, g: int) -> int:
    """max(e_min, e_base * (1 - alpha_e * g)); never below the floor."""
    _check_g(g)
    factor = max(0, fp.ONE - fp.mul(params.alpha_e, g))
    return max(params.e_min, fp.scale_amount_down(params.e_base, factor))


def staking_rate(params: PolicyParams, g: int) -> int:
    """max(0, (1 - gamma * g) * r_base); gamma = 0 leaves the rate flat."""
    _check_g(g)
    factor = fp.ONE - fp.mul(params.gamma, g)
    if factor <= 0:
        return 0
    return fp.mul(factor, params.effective_r_base())


def derive_cycle_factors(
    params: PolicyParams, g: int, locked_unburned: int
) -> PolicyFactors:
    """Bundle the four levers for one annual cycle at a constant g."""
    return PolicyFactors(
        phi_i=issuance_factor(params, g),
        burn_fraction=burn_fraction(params, g),
        escrow_cap=escrow_cap(params, g),
        staking_rate=staking_rate(params, g),
        issuance_budget=issuance_budget(params, g, locked_unburned),
        g_used=g,
    )
