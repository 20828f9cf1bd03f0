"""
Database module for the bdris-wideband project.
This module handles SQLite database connections and the ORM models of stored experiment runs.
"""

import os
import datetime
from sqlalchemy import create_engine, Column, Integer, String, Text, Float, DateTime, ForeignKey
from sqlalchemy.orm import declarative_base, sessionmaker, relationship

from src.settings import get_db_path

# Create base class for SQLAlchemy models
Base = declarative_base()

# Define database models
class Experiment(Base):
    """Model representing one experiment run (a sweep over bandwidth or kappa)."""
    __tablename__ = 'experiments'

    id = Column(Integer, primary_key=True)
    name = Column(String(255), nullable=False)
    sweep_axis = Column(String(50), nullable=False)
    config_json = Column(Text, nullable=False)
    config_hash = Column(String(64), nullable=False, index=True)
    master_seed = Column(String(20), nullable=False)  # u64 does not fit a signed SQLite integer
    code_version = Column(String(50), nullable=False)
    status = Column(String(20), default='pending')  # pending, running, completed, failed
    error = Column(Text, nullable=True)
    created_at = Column(DateTime, default=datetime.datetime.utcnow)
    completed_at = Column(DateTime, nullable=True)

    results = relationship("ResultRecord", back_populates="experiment", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<Experiment(id={self.id}, name='{self.name}', status='{self.status}')>"


class ResultRecord(Base):
    """Model representing the averaged capacity of one scheme at one sweep point."""
    __tablename__ = 'results'

    id = Column(Integer, primary_key=True)
    experiment_id = Column(Integer, ForeignKey('experiments.id'), nullable=False)
    sweep_value = Column(Float, nullable=False)
    scheme = Column(String(50), nullable=False)
    mean_capacity = Column(Float, nullable=True)  # bit/s, NULL when every realization failed
    std_error = Column(Float, nullable=True)
    num_realizations = Column(Integer, nullable=False)
    num_failed = Column(Integer, default=0)
    runtime_s = Column(Float, nullable=True)

    experiment = relationship("Experiment", back_populates="results")

    def __repr__(self):
        return f"<ResultRecord(sweep_value={self.sweep_value}, scheme='{self.scheme}', mean_capacity={self.mean_capacity})>"


# Database connection setup
def get_engine(db_path=None):
    """Create SQLAlchemy engine for database connection."""
    if db_path is None:
        db_path = get_db_path()

    # Ensure directory exists
    os.makedirs(os.path.dirname(os.path.abspath(db_path)), exist_ok=True)

    connection_string = f"sqlite:///{db_path}"
    return create_engine(connection_string, connect_args={"check_same_thread": False})


def get_session(engine=None):
    """Create a new SQLAlchemy session."""
    if engine is None:
        engine = get_engine()
    Session = sessionmaker(bind=engine)
    return Session()


def init_db(engine=None):
    """Initialize the database by creating all tables."""
    if engine is None:
        engine = get_engine()
    Base.metadata.create_all(engine)
    return engine
