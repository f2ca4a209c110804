# vfarm/database.py
from functools import lru_cache

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from vfarm.config import PATHS

Base = declarative_base()


@lru_cache(maxsize=8)
def get_engine(db_url: str | None = None) -> Engine:
    """Engine du cache des tables optiques ; un par URL et par processus."""
    if db_url is None:
        PATHS['cache_db'].parent.mkdir(parents=True, exist_ok=True)
        db_url = f"sqlite:///{PATHS['cache_db']}"
    engine = create_engine(db_url, connect_args={'check_same_thread': False})
    Base.metadata.create_all(bind=engine)
    return engine


def get_session(db_url: str | None = None) -> Session:
    return sessionmaker(autocommit=False, autoflush=False, bind=get_engine(db_url))()

