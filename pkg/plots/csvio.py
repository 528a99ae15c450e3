"""Read the simulator's versioned CSV tables without importing the simulator.

The rendering side deliberately talks to the qkelly package only through its
published file formats: ``# qkelly-csv v1 <table>`` delimited files plus the
``meta.json`` sidecar.  Anything else is out of bounds, so this module
re-implements just enough parsing to load those files and complain usefully
when handed something foreign.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_TAG = "qkelly-csv"
FORMAT_VERSION = 1


class RenderError(Exception):
    """Raised for any input problem the user can act on."""


@dataclass(frozen=True)
class Table:
    path: Path
    kind: str  # table name from the version line, e.g. "aggregates"
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def column(self, name: str) -> np.ndarray:
        """Return one column as float64, NaN for empty cells.

        Missing columns are a hard error that names the column, so a stale
        or hand-edited file fails loudly instead of rendering garbage.
        """
        if name not in self.columns:
            raise RenderError(
                f"{self.path}: missing column '{name}' "
                f"(have: {', '.join(self.columns)})"
            )
        i = self.columns.index(name)
        out = np.empty(len(self.rows), dtype=np.float64)
        for r, row in enumerate(self.rows):
            cell = row[i]
            out[r] = math.nan if cell == "" else float(cell)
        return out

    def text_column(self, name: str) -> list[str]:
        if name not in self.columns:
            raise RenderError(
                f"{self.path}: missing column '{name}' "
                f"(have: {', '.join(self.columns)})"
            )
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def prefixed(self, prefix: str) -> np.ndarray:
        """Stack all ``<prefix>NNN`` columns into an (n_rows, n_bins) array."""
        names = [c for c in self.columns if c.startswith(prefix)]
        if not names:
            raise RenderError(
                f"{self.path}: no '{prefix}*' columns; "
                "expected histogram columns from the simulator's aggregates table"
            )
        names.sort()  # zero-padded suffixes sort numerically
        return np.column_stack([self.column(c) for c in names])


def read_table(path: Path) -> Table:
    """Load a versioned CSV file, refusing anything we did not write the reader for."""
    if not path.exists():
        raise RenderError(f"{path}: file not found")
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        parts = first.split()
        # expected: "# qkelly-csv v1 <table>"
        if len(parts) != 4 or parts[0] != "#" or parts[1] != FORMAT_TAG:
            raise RenderError(f"{path}: missing '# {FORMAT_TAG} v<N> <table>' version line")
        if not parts[2].startswith("v") or not parts[2][1:].isdigit():
            raise RenderError(f"{path}: malformed version '{parts[2]}'")
        version = int(parts[2][1:])
        if version != FORMAT_VERSION:
            raise RenderError(
                f"{path}: unsupported format version v{version} "
                f"(this renderer reads v{FORMAT_VERSION})"
            )
        kind = parts[3]
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"{path}: header row missing") from None
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise RenderError(
                    f"{path}: row {len(rows) + 2} has {len(row)} cells, "
                    f"header has {len(header)}"
                )
            rows.append(tuple(row))
    return Table(path=path, kind=kind, columns=tuple(header), rows=tuple(rows))


def read_meta(bundle: Path) -> dict:
    """Load the bundle's meta.json; absence is tolerated (returns {})."""
    path = bundle / "meta.json"
    if not path.exists():
        return {}
    try:
        with open(path) as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as exc:
        raise RenderError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(meta, dict):
        raise RenderError(f"{path}: expected a JSON object at top level")
    return meta
