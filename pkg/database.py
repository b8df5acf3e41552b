import os
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.ext.declarative import declarative_base

DEFAULT_URL = "sqlite:///./isork_runs.db"

Base = declarative_base()


def database_url():
    # Postgres in shared setups, local SQLite otherwise
    url = os.getenv("ISORK_DATABASE_URL") or os.getenv("DATABASE_URL")
    if not url:
        return DEFAULT_URL
    # Some hosts still hand out postgres:// instead of postgresql://
    if url.startswith("postgres://"):
        url = url.replace("postgres://", "postgresql://", 1)
    return url


def make_engine(url=None):
    import models  # noqa: F401  registers the tables on Base

    url = url or database_url()
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    engine = create_engine(url, connect_args=connect_args)
    Base.metadata.create_all(bind=engine)
    return engine


def make_session(url=None):
    return sessionmaker(autocommit=False, autoflush=False, bind=make_engine(url))()
