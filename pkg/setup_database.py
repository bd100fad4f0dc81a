#!/usr/bin/env python3
"""
Database setup script for the walkview run registry.
Creates the registry tables and verifies them.

Usage:
    python setup_database.py sqlite:///runs.db
"""

import sys

from sqlalchemy import inspect

from db_connection import get_engine
from models import Base

EXPECTED_TABLES = ['experiment_runs', 'seed_runs']


def create_all_tables(url):
    """Create all database tables defined in models.py"""
    print("\n" + "=" * 60)
    print("🗄️  Creating registry tables...")
    print("=" * 60 + "\n")

    engine = get_engine(url)
    Base.metadata.create_all(engine)

    table_names = inspect(engine).get_table_names()
    print(f"✅ {len(table_names)} tables present:\n")
    for table_name in sorted(table_names):
        print(f"   ✓ {table_name}")
    return len(table_names)


def verify_tables(url):
    """Verify all expected tables exist"""
    print("🔍 Verifying tables...\n")

    table_names = inspect(get_engine(url)).get_table_names()
    missing_tables = [t for t in EXPECTED_TABLES if t not in table_names]
    for table in EXPECTED_TABLES:
        print(f"   {'❌' if table in missing_tables else '✅'} {table}")

    if missing_tables:
        print(f"\n⚠️  WARNING: {len(missing_tables)} tables are missing: {', '.join(missing_tables)}")
        return False
    print(f"\n✅ All {len(EXPECTED_TABLES)} expected tables exist!")
    return True


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("Usage: python setup_database.py <registry-url>")
        return 1
    create_all_tables(argv[0])
    return 0 if verify_tables(argv[0]) else 1


if __name__ == "__main__":
    sys.exit(main())
