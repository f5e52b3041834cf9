"""Input readers and column-schema validation for experiment output files.

Files are the CSV / JSON-lines tables written by the zetalab CLI;
'#'-prefixed lines are provenance comments.  Column requirements are
checked up front and mismatches raise SchemaMismatch naming every
missing column; there is no column guessing.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path


class SchemaMismatch(Exception):
    """Input file lacks required columns for the requested figure."""

    def __init__(self, path, missing):
        self.path = str(path)
        self.missing = tuple(sorted(missing))
        super().__init__(f"{self.path}: missing required columns: "
                         + ", ".join(self.missing))


#: Required columns per figure kind.
REQUIRED_COLUMNS = {
    "tail-curve": ("alpha", "K", "n", "p_hat", "ci_low", "ci_high"),
    "alpha-sweep": ("alpha", "K", "n", "p_hat", "ci_low", "ci_high"),
    "k-stability": ("k", "alpha", "K", "n", "p_hat", "ci_low", "ci_high"),
    "discrepancy-hist": ("discrepancy",),
    "pnt-deviation": ("j", "P", "Q", "deviation"),
}


def read_rows(path) -> list[dict]:
    """Rows of one CSV or JSON-lines file, comments skipped."""
    path = Path(path)
    text = path.read_text()
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    if not lines:
        return []
    if path.suffix == ".jsonl" or lines[0].lstrip().startswith("{"):
        return [json.loads(line) for line in lines]
    reader = csv.DictReader(lines)
    return list(reader)


def load_table(path, kind: str) -> list[dict]:
    """Read and schema-validate one input file for a figure kind."""
    rows = read_rows(path)
    required = REQUIRED_COLUMNS[kind]
    present = set(rows[0]) if rows else set()
    missing = [column for column in required if column not in present]
    if missing:
        raise SchemaMismatch(path, missing)
    return rows


def column(rows: list[dict], name: str, cast=float) -> list:
    return [cast(row[name]) for row in rows]
