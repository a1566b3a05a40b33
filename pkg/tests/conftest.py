from datetime import date

import pytest

from kladia import fixedpoint as fp
from kladia.debt_index import BaselineRef
from kladia.weo_ingest import (
    ALL_BLOCS,
    Bloc,
    BlocObservation,
    ObservationStatus,
    WeoVintage,
)

DEBT_LEVELS = {
    Bloc.US: "120", Bloc.EA20: "90", Bloc.JP: "250", Bloc.UK: "100",
    Bloc.CA: "105", Bloc.AU: "45", Bloc.KR: "55",
}
GDP_LEVELS = {
    Bloc.US: "27000", Bloc.EA20: "15000", Bloc.JP: "4200", Bloc.UK: "3300",
    Bloc.CA: "2100", Bloc.AU: "1700", Bloc.KR: "1800",
}


@pytest.fixture
def vintage():
    return WeoVintage("2025-October", date(2025, 10, 15), "ab" * 32)


@pytest.fixture
def observations(vintage):
    return make_observations(vintage)


def make_observations(vintage, debt=None, gdp=None):
    debt = debt or DEBT_LEVELS
    gdp = gdp or GDP_LEVELS
    return [
        BlocObservation(
            b, fp.from_str(debt[b]), fp.from_str(gdp[b]), vintage,
            ObservationStatus.OBSERVED,
        )
        for b in ALL_BLOCS
    ]


@pytest.fixture
def baseline(vintage, observations):
    from kladia.debt_index import compute_bdi, compute_weights

    weights = compute_weights(observations)
    ref = BaselineRef(
        bdi_ref=compute_bdi(observations, weights), genesis_vintage=vintage
    )
    ref.freeze()
    return ref
