"""
Database connection for the run registry using SQLAlchemy.
Any SQLAlchemy URL works; sqlite:///runs.db is the usual local choice.
"""

import threading

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from models import Base

# ============================================
# ENGINE CACHE
# ============================================

_engines = {}
_session_factories = {}
_lock = threading.Lock()


def normalize_url(url):
    # Some hosts hand out postgres:// but SQLAlchemy needs postgresql://
    if url.startswith('postgres://'):
        return url.replace('postgres://', 'postgresql://', 1)
    return url


def get_engine(url):
    """One engine per registry URL, created on first use."""
    url = normalize_url(url)
    with _lock:
        engine = _engines.get(url)
        if engine is None:
            kwargs = {'pool_pre_ping': True, 'echo': False}
            if url.startswith('sqlite'):
                kwargs['connect_args'] = {'check_same_thread': False}
            engine = create_engine(url, **kwargs)
            _engines[url] = engine
            _session_factories[url] = sessionmaker(bind=engine, autocommit=False, autoflush=False)
        return engine


# ============================================
# CREATE ALL TABLES
# ============================================

def init_db(url):
    """Create the registry tables if they do not exist yet."""
    Base.metadata.create_all(bind=get_engine(url))


# ============================================
# SESSION MANAGEMENT HELPER
# ============================================

def get_session(url):
    """
    Get a new database session for the registry at `url`.
    Always use with try/finally to ensure session.close() is called.

    Example usage:
        session = get_session(url)
        try:
            runs = session.query(ExperimentRun).all()
        finally:
            session.close()
    """
    get_engine(url)
    return _session_factories[normalize_url(url)]()


def dispose_engines():
    """Close every pooled connection (tests and shutdown)."""
    with _lock:
        for engine in _engines.values():
            engine.dispose()
        _engines.clear()
        _session_factories.clear()
