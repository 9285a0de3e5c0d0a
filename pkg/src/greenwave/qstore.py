"""Q-table files.

One SQLite file holds one table: hyperparameters and the exploration RNG
state in ``meta``, every updated (state, action) pair in ``entries``.
Untouched pairs are not stored; they are regenerated from the table seed.
"""

from __future__ import annotations

import json
import logging
import sqlite3
from pathlib import Path

from greenwave.qlearning import QTable

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS schema_version (
    version INTEGER PRIMARY KEY
);

CREATE TABLE IF NOT EXISTS meta (
    id INTEGER PRIMARY KEY CHECK (id = 1),
    name TEXT NOT NULL,
    action_count INTEGER NOT NULL,
    seed INTEGER NOT NULL,
    discount REAL NOT NULL,
    temperature REAL NOT NULL,
    threshold REAL NOT NULL,
    min_visits INTEGER NOT NULL,
    rng_state TEXT NOT NULL
);

CREATE TABLE IF NOT EXISTS entries (
    state INTEGER NOT NULL,
    action INTEGER NOT NULL,
    q REAL NOT NULL,
    visits INTEGER NOT NULL,
    last_delta REAL,
    PRIMARY KEY (state, action)
);
"""


class SchemaVersionError(RuntimeError):
    """The file was written with a different Q-table schema version."""


class QTableStore:
    def __init__(self, db_path: Path):
        self.db_path = db_path
        self.conn = sqlite3.connect(str(db_path))
        self.conn.row_factory = sqlite3.Row
        try:
            self.conn.execute("PRAGMA journal_mode=WAL")
            self._init_schema()
        except (sqlite3.DatabaseError, SchemaVersionError):
            self.conn.close()
            raise

    def __enter__(self) -> QTableStore:
        return self

    def __exit__(self, exc_type: type | None, exc_val: BaseException | None, exc_tb: object) -> None:
        self.close()

    def _init_schema(self) -> None:
        self.conn.executescript(SCHEMA_SQL)
        row = self.conn.execute("SELECT version FROM schema_version").fetchone()
        if row is None:
            self.conn.execute("INSERT INTO schema_version (version) VALUES (?)", (SCHEMA_VERSION,))
            self.conn.commit()
            return
        if row["version"] != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"Unsupported q-table schema version {row['version']}; expected {SCHEMA_VERSION}."
            )

    def close(self) -> None:
        self.conn.close()

    def save(self, table: QTable) -> None:
        with self.conn:
            self.conn.execute("DELETE FROM entries")
            self.conn.execute(
                """INSERT OR REPLACE INTO meta
                   (id, name, action_count, seed, discount, temperature, threshold, min_visits, rng_state)
                   VALUES (1, ?, ?, ?, ?, ?, ?, ?, ?)""",
                (
                    table.name,
                    table.action_count,
                    table.seed,
                    table.discount,
                    table.temperature,
                    table.threshold,
                    table.min_visits,
                    json.dumps(table.rng.bit_generator.state),
                ),
            )
            self.conn.executemany(
                "INSERT INTO entries (state, action, q, visits, last_delta) VALUES (?, ?, ?, ?, ?)",
                list(table.entries()),
            )

    def load(self) -> QTable:
        meta = self.conn.execute("SELECT * FROM meta WHERE id = 1").fetchone()
        if meta is None:
            raise ValueError(f"{self.db_path} holds no q-table")
        table = QTable(
            name=meta["name"],
            action_count=meta["action_count"],
            seed=meta["seed"],
            discount=meta["discount"],
            temperature=meta["temperature"],
            threshold=meta["threshold"],
            min_visits=meta["min_visits"],
        )
        table.rng.bit_generator.state = json.loads(meta["rng_state"])
        for row in self.conn.execute("SELECT state, action, q, visits, last_delta FROM entries ORDER BY state, action"):
            table.restore_entry(row["state"], row["action"], row["q"], row["visits"], row["last_delta"])
        return table


def persist(table: QTable, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with QTableStore(path) as store:
        store.save(table)
    logger.info("Saved q-table %s (%d states) to %s", table.name, table.state_count, path)
    return path


def restore(path: Path) -> QTable:
    if not path.exists():
        raise FileNotFoundError(f"Q-table file not found: {path}")
    with QTableStore(path) as store:
        table = store.load()
    logger.info("Loaded q-table %s from %s", table.name, path)
    return table
