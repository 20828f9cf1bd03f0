"""
Database initialization module.
"""
import argparse
import logging

from src.db.models import init_db, get_engine, Base
from src.settings import get_log_level

logger = logging.getLogger(__name__)


def initialize_database(reset=False, engine=None):
    """Initialize the results store and create the tables."""
    if engine is None:
        engine = get_engine()

    if reset:
        # Drop all existing tables
        logger.info("Dropping all existing tables...")
        Base.metadata.drop_all(engine)
        logger.info("Database reset complete.")

    # Create tables
    init_db(engine)
    logger.info(f"Database initialized at {engine.url.database}")
    return engine


if __name__ == "__main__":
    # Set up logging
    logging.basicConfig(level=get_log_level())

    parser = argparse.ArgumentParser(description="Initialize the results database")
    parser.add_argument("--reset", action="store_true", help="Reset the database by dropping all tables before initialization")
    args = parser.parse_args()

    initialize_database(reset=args.reset)
