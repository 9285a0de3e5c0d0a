# src/greenwave/storage.py
from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

REPORT_COLUMNS = (
    "scenario",
    "strategy",
    "demand_level",
    "incident",
    "replication",
    "seed",
    "freeway_travel_time",
    "arterial_travel_time",
    "average_stops",
    "emissions",
    "offramp_queue",
    "approach_queue",
    "freeway_samples",
    "arterial_samples",
    "flagged",
)

CONVERGENCE_COLUMNS = (
    "episode",
    "start_hour",
    "tsc_mean_reward",
    "dso_mean_reward",
    "tsc_updates",
    "dso_updates",
    "max_delta",
    "mean_delta",
    "incidents",
    "converged",
)


class TraceError(ValueError):
    """A trace or plan file that is not valid JSON Lines."""


def _sanitize_slug(slug: str) -> str:
    """Make a string safe for use as a filename."""
    slug = re.sub(r"[^\w\-]", "-", slug)
    slug = re.sub(r"-{2,}", "-", slug)
    slug = slug.strip("-")[:120]
    return slug or "unnamed"


def _atomic_write(path: Path, content: str) -> None:
    """Write content to a file atomically via tmp + rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        os.fchmod(fd, 0o644)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def _cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[column]) for column in columns])
    return buffer.getvalue()


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    _atomic_write(path, render_csv(columns, rows))
    return path


def write_jsonl(path: Path, records: Iterable[dict]) -> Path:
    content = "".join(json.dumps(record, sort_keys=True) + "\n" for record in records)
    _atomic_write(path, content)
    return path


def read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        raise FileNotFoundError(f"Trace file not found: {path}")
    records = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"{path}:{number}: invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict) or "event" not in record:
            raise TraceError(f"{path}:{number}: expected an object with an 'event' field")
        records.append(record)
    return records


class TraceLog:
    """In-memory event list written out as JSON Lines at the end of a run."""

    def __init__(self) -> None:
        self.records: list[dict] = []

    def emit(self, event: str, **fields: object) -> None:
        self.records.append({"event": event, **fields})

    def extend(self, records: Iterable[dict]) -> None:
        self.records.extend(records)

    def write(self, path: Path) -> Path:
        return write_jsonl(path, self.records)


class OutputStore:
    """Default locations for reports, logs and q-tables under the data directory."""

    def __init__(self, data_dir: Path):
        self.data_dir = data_dir

    @property
    def reports_dir(self) -> Path:
        return self.data_dir / "reports"

    @property
    def qtables_dir(self) -> Path:
        return self.data_dir / "qtables"

    def report_path(self, scenario: str, demand_level: str, incident: str) -> Path:
        return self.reports_dir / f"{_sanitize_slug(f'{scenario}-{demand_level}-{incident}')}.csv"

    def convergence_path(self, scenario: str) -> Path:
        return self.reports_dir / f"{_sanitize_slug(scenario)}-convergence.csv"

    def qtable_dir(self, scenario: str) -> Path:
        return self.qtables_dir / _sanitize_slug(scenario)
