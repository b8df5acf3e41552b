from sqlalchemy import Column, Integer, String, Float, Boolean, ForeignKey, JSON
from sqlalchemy.orm import relationship
from database import Base

class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    system = Column(String, index=True)
    method = Column(String)
    config = Column(JSON) # RunConfig.dict()
    status = Column(String) # 'ok', 'nonconvergence'
    csv_path = Column(String)
    created = Column(String)

    # Summary metrics, copied out of RunSummary for quick listing
    steps = Column(Integer)
    max_spectral_drift = Column(Float)
    max_abs_energy_drift = Column(Float)
    total_solver_iters = Column(Integer)

    records = relationship("RecordRow", back_populates="run", order_by="RecordRow.step",
                           cascade="all, delete-orphan")

class RecordRow(Base):
    __tablename__ = "records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), index=True)
    step = Column(Integer)
    t = Column(Float)
    energy = Column(Float)
    energy_drift = Column(Float)
    spectral_drift = Column(Float)
    casimir_values = Column(JSON) # List of floats
    solver_iters_total = Column(Integer)
    membership_residual = Column(Float)
    flagged = Column(Boolean, default=False)

    run = relationship("Run", back_populates="records")
