"""Optional SQL ledger of runs and their per-step records."""
import datetime
import logging
import math
from typing import Any, List, Optional, Sequence

from sqlalchemy.orm import Session

import models
from config import RunConfig
from diagnostics import RunSummary, TrajectoryRecord

logger = logging.getLogger(__name__)

FLOAT_FIELDS = ("t", "energy", "energy_drift", "spectral_drift", "membership_residual")


def _nullable(value: Any) -> Any:
    # NaN does not survive every backend; NULL stands in for it
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _nan_if_null(value: Optional[float]) -> float:
    return math.nan if value is None else value


def save_run(session: Session, config: RunConfig, summary: Optional[RunSummary],
             records: Sequence[TrajectoryRecord], csv_path: Optional[str], status: str = "ok",
             method: Optional[str] = None) -> models.Run:
    run = models.Run(
        system=config.system,
        method=method or config.method,
        config=config.dict(),
        status=status,
        csv_path=str(csv_path) if csv_path else None,
        created=datetime.datetime.now().isoformat(),
        steps=summary.steps if summary else None,
        max_spectral_drift=_nullable(summary.max_spectral_drift) if summary else None,
        max_abs_energy_drift=_nullable(summary.max_abs_energy_drift) if summary else None,
        total_solver_iters=summary.total_solver_iters if summary else None,
    )
    for r in records:
        row = r.dict()
        for field in FLOAT_FIELDS:
            row[field] = _nullable(row[field])
        row["casimir_values"] = [_nullable(v) for v in r.casimir_values]
        run.records.append(models.RecordRow(**row))
    session.add(run)
    session.commit()
    session.refresh(run)
    logger.info("stored run %d (%s/%s, %d records)", run.id, run.system, run.method, len(records))
    return run


def list_runs(session: Session) -> List[models.Run]:
    return session.query(models.Run).order_by(models.Run.id).all()


def load_records(session: Session, run_id: int) -> List[TrajectoryRecord]:
    run = session.query(models.Run).filter(models.Run.id == run_id).first()
    if run is None:
        raise KeyError(f"no run with id {run_id}")
    return [_record(row) for row in run.records]


def _record(row: models.RecordRow) -> TrajectoryRecord:
    floats = {field: _nan_if_null(getattr(row, field)) for field in FLOAT_FIELDS}
    return TrajectoryRecord(step=row.step, casimir_values=[_nan_if_null(v) for v in row.casimir_values or []],
                            solver_iters_total=row.solver_iters_total, flagged=bool(row.flagged), **floats)
