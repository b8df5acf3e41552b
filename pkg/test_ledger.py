import math

import pytest

from config import RunConfig
from database import database_url, make_session
from diagnostics import TrajectoryRecord, summarize
from ledger import list_runs, load_records, save_run


@pytest.fixture
def session(tmp_path):
    s = make_session(f"sqlite:///{tmp_path / 'ledger.db'}")
    yield s
    s.close()


def make_records():
    return [
        TrajectoryRecord(step=0, t=0.0, energy=1.25, energy_drift=0.0, spectral_drift=0.0,
                         casimir_values=[2.0], membership_residual=0.0),
        TrajectoryRecord(step=1, t=0.01, energy=1.2500000001, energy_drift=1e-10, spectral_drift=3e-16,
                         casimir_values=[2.0000000000000004], solver_iters_total=4,
                         membership_residual=1e-17),
    ]


def test_save_and_load(session):
    records = make_records()
    cfg = RunConfig(method="yoshida4")
    run = save_run(session, cfg, summarize(records, [4]), records, "out.csv")
    assert run.id is not None
    assert run.config["method"] == "yoshida4"
    assert run.max_abs_energy_drift == 1e-10

    (listed,) = list_runs(session)
    assert listed.id == run.id and listed.status == "ok"
    assert load_records(session, run.id) == records


def test_flagged_rows_come_back_as_nan(session):
    flagged = TrajectoryRecord(step=2, t=0.02, energy=1.0, energy_drift=0.0, spectral_drift=math.nan,
                               casimir_values=[2.0], flagged=True)
    records = make_records() + [flagged]
    run = save_run(session, RunConfig(), None, records, None, status="nonconvergence", method="gawlik")
    assert run.method == "gawlik" and run.steps is None
    back = load_records(session, run.id)
    assert back[:2] == records[:2]
    assert back[2].flagged and math.isnan(back[2].spectral_drift)


def test_runs_are_listed_in_order(session):
    for method in ("midpoint", "sdirk2", "suzuki4"):
        save_run(session, RunConfig(method=method), None, [], None)
    assert [r.method for r in list_runs(session)] == ["midpoint", "sdirk2", "suzuki4"]


def test_unknown_run(session):
    with pytest.raises(KeyError):
        load_records(session, 99)


def test_database_url(monkeypatch):
    monkeypatch.delenv("ISORK_DATABASE_URL", raising=False)
    monkeypatch.delenv("DATABASE_URL", raising=False)
    assert database_url() == "sqlite:///./isork_runs.db"
    monkeypatch.setenv("DATABASE_URL", "postgres://u:p@db/isork")
    assert database_url() == "postgresql://u:p@db/isork"
    monkeypatch.setenv("ISORK_DATABASE_URL", "sqlite:///elsewhere.db")
    assert database_url() == "sqlite:///elsewhere.db"


def test_nan_energy_survives_the_round_trip(session):
    blown = TrajectoryRecord(step=3, t=0.03, energy=math.nan, energy_drift=math.nan, spectral_drift=0.5,
                             casimir_values=[math.nan, 2.0], solver_iters_total=7)
    run = save_run(session, RunConfig(), None, make_records() + [blown], None, status="nonconvergence")
    back = load_records(session, run.id)[-1]
    assert math.isnan(back.energy) and math.isnan(back.energy_drift)
    assert back.spectral_drift == 0.5 and not back.flagged
    assert math.isnan(back.casimir_values[0]) and back.casimir_values[1] == 2.0
    assert back.solver_iters_total == 7
