"""
Report archive for the Diagonal Ideals Lab
Supports both SQLite (local dev) and PostgreSQL (production)
"""
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.settings import DATABASE_URL as _DATABASE_URL, DB_PATH

logger = logging.getLogger(__name__)

# PostgreSQL via DATABASE_URL, SQLite otherwise
DATABASE_URL = _DATABASE_URL
USE_POSTGRES = DATABASE_URL.startswith('postgres')

if USE_POSTGRES:
    import psycopg2
    from psycopg2.extras import RealDictCursor
    # psycopg2 needs postgresql:// rather than Render's postgres://
    if DATABASE_URL.startswith('postgres://'):
        DATABASE_URL = DATABASE_URL.replace('postgres://', 'postgresql://', 1)
else:
    import sqlite3

DATABASE_PATH = Path(DB_PATH)

POSTGRES_SCHEMA = """
CREATE TABLE IF NOT EXISTS reports (
    id SERIAL PRIMARY KEY,
    command TEXT NOT NULL,
    exit_code INTEGER NOT NULL,
    seed BIGINT,
    version TEXT,
    payload TEXT NOT NULL,
    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);

CREATE TABLE IF NOT EXISTS suite_runs (
    id SERIAL PRIMARY KEY,
    passed BOOLEAN NOT NULL,
    failed_checks INTEGER DEFAULT 0,
    total_seconds REAL,
    seed BIGINT,
    results TEXT NOT NULL,
    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
);

CREATE INDEX IF NOT EXISTS idx_reports_command ON reports(command);
CREATE INDEX IF NOT EXISTS idx_reports_created ON reports(created_at);
"""

SQLITE_SCHEMA = """
CREATE TABLE IF NOT EXISTS reports (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    command TEXT NOT NULL,
    exit_code INTEGER NOT NULL,
    seed INTEGER,
    version TEXT,
    payload TEXT NOT NULL,
    created_at DATETIME DEFAULT CURRENT_TIMESTAMP
);

CREATE TABLE IF NOT EXISTS suite_runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    passed BOOLEAN NOT NULL,
    failed_checks INTEGER DEFAULT 0,
    total_seconds REAL,
    seed INTEGER,
    results TEXT NOT NULL,
    created_at DATETIME DEFAULT CURRENT_TIMESTAMP
);

CREATE INDEX IF NOT EXISTS idx_reports_command ON reports(command);
CREATE INDEX IF NOT EXISTS idx_reports_created ON reports(created_at);
"""


@contextmanager
def get_connection():
    """Get database connection (works with both SQLite and PostgreSQL)"""
    if USE_POSTGRES:
        conn = psycopg2.connect(DATABASE_URL)
        try:
            yield conn
        finally:
            conn.close()
    else:
        DATABASE_PATH.parent.mkdir(parents=True, exist_ok=True)
        conn = sqlite3.connect(str(DATABASE_PATH))
        conn.row_factory = sqlite3.Row
        try:
            yield conn
        finally:
            conn.close()


def get_cursor(conn):
    """Get appropriate cursor for the database type"""
    if USE_POSTGRES:
        return conn.cursor(cursor_factory=RealDictCursor)
    return conn.cursor()


def _get_placeholder():
    """Get the correct placeholder for the database type"""
    return "%s" if USE_POSTGRES else "?"


def init_db():
    """Initialize database with schema"""
    with get_connection() as conn:
        cursor = conn.cursor()
        if USE_POSTGRES:
            cursor.execute(POSTGRES_SCHEMA)
        else:
            conn.executescript(SQLITE_SCHEMA)
        conn.commit()

    db_type = "PostgreSQL" if USE_POSTGRES else f"SQLite at {DATABASE_PATH}"
    logger.info("Report archive initialized (%s)", db_type)


def _insert(conn, query: str, params: tuple) -> int:
    """Run an INSERT and return the new row id"""
    cursor = conn.cursor()
    if USE_POSTGRES:
        cursor.execute(query + " RETURNING id", params)
        return cursor.fetchone()[0]
    cursor.execute(query, params)
    return cursor.lastrowid


def insert_report(report) -> int:
    """Archive a cli Report; the payload is its canonical JSON"""
    ph = _get_placeholder()
    with get_connection() as conn:
        report_id = _insert(conn, f"""
            INSERT INTO reports (command, exit_code, seed, version, payload)
            VALUES ({ph}, {ph}, {ph}, {ph}, {ph})
        """, (report.command, report.exit_code, report.seed, report.version, report.dumps()))
        conn.commit()
    return report_id


def _rows_to_dicts(rows) -> List[Dict[str, Any]]:
    """Convert database rows to list of dicts"""
    return [dict(row) for row in rows]


def _decode(row: Dict[str, Any], column: str) -> Dict[str, Any]:
    row = dict(row)
    row[column] = json.loads(row[column])
    if row.get('created_at') is not None:
        row['created_at'] = str(row['created_at'])
    return row


def get_reports(limit: int = 50, offset: int = 0, command: Optional[str] = None) -> List[Dict[str, Any]]:
    """Archived reports, newest first, optionally for one command"""
    ph = _get_placeholder()
    with get_connection() as conn:
        cursor = get_cursor(conn)
        query = "SELECT * FROM reports WHERE 1=1"
        params = []
        if command:
            query += f" AND command = {ph}"
            params.append(command)
        query += f" ORDER BY id DESC LIMIT {ph} OFFSET {ph}"
        params.extend([limit, offset])
        cursor.execute(query, params)
        return [_decode(row, 'payload') for row in _rows_to_dicts(cursor.fetchall())]


def get_report(report_id: int) -> Optional[Dict[str, Any]]:
    """One archived report, or None"""
    ph = _get_placeholder()
    with get_connection() as conn:
        cursor = get_cursor(conn)
        cursor.execute(f"SELECT * FROM reports WHERE id = {ph}", (report_id,))
        row = cursor.fetchone()
    return _decode(row, 'payload') if row else None


def record_suite_run(results: Dict[str, Dict[str, Any]], seed: Optional[int] = None) -> int:
    """Archive one run of the verification suite"""
    ph = _get_placeholder()
    failed = sum(1 for item in results.values() if not item['passed'])
    total = sum(item.get('seconds', 0.0) for item in results.values())
    with get_connection() as conn:
        run_id = _insert(conn, f"""
            INSERT INTO suite_runs (passed, failed_checks, total_seconds, seed, results)
            VALUES ({ph}, {ph}, {ph}, {ph}, {ph})
        """, (failed == 0, failed, total, seed,
              json.dumps(results, sort_keys=True, ensure_ascii=False)))
        conn.commit()
    return run_id


def get_suite_runs(limit: int = 20) -> List[Dict[str, Any]]:
    """Most recent verification suite runs"""
    ph = _get_placeholder()
    with get_connection() as conn:
        cursor = get_cursor(conn)
        cursor.execute(f"SELECT * FROM suite_runs ORDER BY id DESC LIMIT {ph}", (limit,))
        rows = [_decode(row, 'results') for row in _rows_to_dicts(cursor.fetchall())]
    for row in rows:
        row['passed'] = bool(row['passed'])
    return rows


def get_stats() -> Dict[str, Any]:
    """Get overall archive statistics"""
    with get_connection() as conn:
        cursor = conn.cursor()
        stats = {}

        cursor.execute("SELECT COUNT(*) FROM reports")
        stats['total_reports'] = cursor.fetchone()[0]

        cursor.execute("""
            SELECT command, COUNT(*) as count
            FROM reports
            GROUP BY command
            ORDER BY command
        """)
        stats['by_command'] = {row[0]: row[1] for row in cursor.fetchall()}

        cursor.execute("SELECT COUNT(*) FROM reports WHERE exit_code <> 0")
        stats['failed_reports'] = cursor.fetchone()[0]

        cursor.execute("SELECT COUNT(*) FROM suite_runs")
        stats['suite_runs'] = cursor.fetchone()[0]

        cursor.execute("SELECT passed, created_at FROM suite_runs ORDER BY id DESC LIMIT 1")
        row = cursor.fetchone()
        stats['last_suite_run'] = None if row is None else {
            'passed': bool(row[0]), 'created_at': str(row[1]),
        }
        return stats


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    init_db()
    print("Database schema created successfully")
