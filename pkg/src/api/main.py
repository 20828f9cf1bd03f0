"""
API module for the bdris-wideband project.
This module provides a FastAPI-based REST API over the stored experiment runs.
"""

import datetime
import logging
import math
from typing import List, Optional
from fastapi import FastAPI, Depends, HTTPException, BackgroundTasks
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict
from sqlalchemy import func
from sqlalchemy.orm import Session

from src.cli.config import ExperimentConfig
from src.cli.runner import evaluate_realization, run, store_run
from src.db.models import get_session, init_db, Experiment, ResultRecord
from src.settings import CODE_VERSION, get_log_level

# Set up logging
logging.basicConfig(level=get_log_level())
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="BD-RIS Wideband API",
    description="API for running and browsing BD-RIS OFDM capacity experiments",
    version=CODE_VERSION
)

# Add CORS middleware so browser dashboards can read results
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # For development; restrict in production
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.on_event("startup")
def create_tables():
    init_db()


# Dependency to get database session
def get_db():
    db = get_session()
    try:
        yield db
    finally:
        db.close()

# Pydantic models for API requests/responses
class ExperimentResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: int
    name: str
    sweep_axis: str
    config_hash: str
    master_seed: str
    code_version: str
    status: str
    error: Optional[str] = None
    created_at: datetime.datetime
    completed_at: Optional[datetime.datetime] = None

class ResultResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    sweep_value: float
    scheme: str
    mean_capacity: Optional[float] = None
    std_error: Optional[float] = None
    num_realizations: int
    num_failed: int
    runtime_s: Optional[float] = None

class StatsResponse(BaseModel):
    total_experiments: int
    completed_experiments: int
    total_results: int
    best_mean_capacity: Optional[float] = None
    last_update: datetime.datetime

class OptimizeRequest(BaseModel):
    config: ExperimentConfig = ExperimentConfig()
    sweep_value: Optional[float] = None
    realization_index: int = 0

class SchemeResult(BaseModel):
    scheme: str
    capacity: Optional[float] = None
    symmetry_residual: Optional[float] = None
    unitarity_residual: Optional[float] = None
    runtime_s: float
    error: Optional[str] = None

class OptimizeResponse(BaseModel):
    seed: Optional[int] = None
    sweep_value: float
    results: List[SchemeResult]


def _get_experiment(db, experiment_id):
    experiment = db.query(Experiment).filter(Experiment.id == experiment_id).first()
    if experiment is None:
        raise HTTPException(status_code=404, detail="Experiment not found")
    return experiment

# API Routes
@app.get("/", response_model=dict)
def read_root():
    """Root endpoint with API information."""
    return {
        "name": "BD-RIS Wideband API",
        "version": CODE_VERSION,
        "description": "API for running and browsing BD-RIS OFDM capacity experiments",
    }

@app.get("/stats", response_model=StatsResponse)
def get_stats(db: Session = Depends(get_db)):
    """Get statistics about the results store."""
    total_experiments = db.query(Experiment).count()
    completed = db.query(Experiment).filter(Experiment.status == "completed").count()
    total_results = db.query(ResultRecord).count()
    best = db.query(func.max(ResultRecord.mean_capacity)).scalar()

    return StatsResponse(
        total_experiments=total_experiments,
        completed_experiments=completed,
        total_results=total_results,
        best_mean_capacity=best,
        last_update=datetime.datetime.utcnow()
    )

@app.get("/experiments", response_model=List[ExperimentResponse])
def get_experiments(
    skip: int = 0,
    limit: int = 100,
    status: Optional[str] = None,
    db: Session = Depends(get_db)
):
    """Get stored experiments, newest first."""
    query = db.query(Experiment)
    if status:
        query = query.filter(Experiment.status == status)
    return query.order_by(Experiment.id.desc()).offset(skip).limit(limit).all()

@app.get("/experiments/{experiment_id}", response_model=ExperimentResponse)
def get_experiment(experiment_id: int, db: Session = Depends(get_db)):
    """Get details for a specific experiment."""
    return _get_experiment(db, experiment_id)

@app.get("/experiments/{experiment_id}/results", response_model=List[ResultResponse])
def get_experiment_results(experiment_id: int, scheme: Optional[str] = None, db: Session = Depends(get_db)):
    """Get the result rows of an experiment."""
    _get_experiment(db, experiment_id)
    query = db.query(ResultRecord).filter(ResultRecord.experiment_id == experiment_id)
    if scheme:
        query = query.filter(ResultRecord.scheme == scheme)
    return query.order_by(ResultRecord.id).all()

@app.delete("/experiments/{experiment_id}", response_model=dict)
def delete_experiment(experiment_id: int, db: Session = Depends(get_db)):
    """Delete an experiment and its results."""
    experiment = _get_experiment(db, experiment_id)
    db.delete(experiment)
    db.commit()
    return {"status": "success", "message": "Experiment deleted successfully"}

@app.post("/experiments", response_model=ExperimentResponse)
def create_experiment(config: ExperimentConfig, background_tasks: BackgroundTasks, db: Session = Depends(get_db)):
    """Register an experiment and run it in the background."""
    experiment = Experiment(
        name=config.name,
        sweep_axis=config.sweep_axis,
        config_json=config.model_dump_json(),
        config_hash=config.config_hash(),
        master_seed=str(config.scenario.master_seed),
        code_version=CODE_VERSION,
        status="running",
    )
    db.add(experiment)
    db.commit()
    db.refresh(experiment)
    engine = db.get_bind()
    experiment_id = experiment.id

    def run_task():
        session = get_session(engine)
        try:
            stored = session.query(Experiment).filter(Experiment.id == experiment_id).first()
            try:
                rows, _ = run(config, workers=1, write=False)
                store_run(config, rows, session=session, experiment=stored)
            except Exception as e:
                logger.error(f"Experiment {experiment_id} failed: {e}")
                session.rollback()
                stored.status = "failed"
                stored.error = str(e)
                session.commit()
        finally:
            session.close()

    background_tasks.add_task(run_task)
    return experiment

@app.post("/optimize", response_model=OptimizeResponse)
def optimize_realization(request: OptimizeRequest):
    """Evaluate every scheme of the config on a single realization."""
    config = request.config
    value = request.sweep_value if request.sweep_value is not None else config.sweep_values[0]
    try:
        point_config = ExperimentConfig.model_validate({**config.model_dump(), "sweep_values": [value]})
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))

    outcome = evaluate_realization((point_config, value, request.realization_index))
    results = []
    for scheme in point_config.schemes:
        residuals = outcome.residuals.get(scheme, (None, None))
        capacity = outcome.capacities.get(scheme)
        results.append(SchemeResult(
            scheme=scheme,
            capacity=capacity if capacity is None or math.isfinite(capacity) else None,
            symmetry_residual=residuals[0],
            unitarity_residual=residuals[1],
            runtime_s=outcome.runtimes.get(scheme, 0.0),
            error=outcome.errors.get(scheme),
        ))
    return OptimizeResponse(seed=outcome.seed, sweep_value=value, results=results)

# Run with: uvicorn src.api.main:app --reload
if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
