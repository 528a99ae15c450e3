"""Dataset serialization: versioned CSV tables, JSON mirrors, meta.json.

Every CSV starts with a version line ``# qkelly-csv v1 <table>`` so a
consumer can refuse files from an incompatible writer, followed by a
normal header row.  Floats are written with 17 significant digits,
which round-trips IEEE doubles exactly; integers are written bare.

Readers for the same format live here too so tests (and any library
consumer) never re-implement the parsing rules.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import Aggregates, ExactDistribution, SampleBatch
from .errors import DomainError

SCHEMA_VERSION = 1
_MAGIC_PREFIX = "# qkelly-csv v"


def fmt_value(x) -> str:
    """One CSV cell: bare integers, 17-significant-digit floats."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        raise DomainError(f"no CSV encoding for booleans: {x!r}")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def parse_value(cell: str) -> float:
    return float(cell)


def magic_line(table: str) -> str:
    return f"{_MAGIC_PREFIX}{SCHEMA_VERSION} {table}"


def write_table(path: str | Path, table: str, columns: Sequence[str],
                rows: Iterable[Sequence]) -> Path:
    """Write one versioned CSV table; returns the path written."""
    path = Path(path)
    lines = [magic_line(table), ",".join(columns)]
    ncol = len(columns)
    for row in rows:
        if len(row) != ncol:
            raise DomainError(
                f"{table}: row has {len(row)} cells, header has {ncol}")
        lines.append(",".join(fmt_value(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path: str | Path) -> tuple[str, list[str], list[list[str]]]:
    """Parse a versioned CSV; returns (table, columns, raw rows).

    Raises DomainError on a missing/incompatible version line, so a
    stale or foreign file cannot be silently consumed.
    """
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_MAGIC_PREFIX):
        raise DomainError(f"{path}: missing '{_MAGIC_PREFIX}<n> <table>' version line")
    rest = lines[0][len(_MAGIC_PREFIX):].split(" ", 1)
    if len(rest) != 2 or not rest[0].isdigit():
        raise DomainError(f"{path}: malformed version line {lines[0]!r}")
    version, table = int(rest[0]), rest[1]
    if version != SCHEMA_VERSION:
        raise DomainError(
            f"{path}: schema version {version} unsupported (writer speaks "
            f"v{SCHEMA_VERSION})")
    if len(lines) < 2:
        raise DomainError(f"{path}: missing header row")
    columns = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return table, columns, rows


TRAJECTORY_COLUMNS = (
    "sample_id", "t", "winner", "log2_g_bar", "gamma_bar",
    "E_bar", "ergotropy_bar", "mu", "r",
)


def trajectory_rows(batch: SampleBatch, limit: int | None = None):
    """Row generator for trajectories.csv: first ``limit`` sample ids.

    Rows are grouped by sample id (ascending) with rounds in order, so
    a consumer can stream one trajectory at a time.
    """
    n = batch.n_samples if limit is None else min(limit, batch.n_samples)
    for i in range(n):
        sid = int(batch.sample_ids[i])
        for t in range(batch.t_max):
            yield (
                sid, t + 1, int(batch.winners[t, i]),
                batch.log2_gbar[t, i], batch.gamma[t, i],
                batch.energy[t, i], batch.ergotropy[t, i],
                batch.mu[t, i], batch.r[t, i],
            )


def write_trajectories(path: str | Path, batch: SampleBatch,
                       limit: int | None = None) -> Path:
    return write_table(path, "trajectories", TRAJECTORY_COLUMNS,
                       trajectory_rows(batch, limit))


def _bin_names(prefix: str, bins: int) -> list[str]:
    width = max(3, len(str(bins - 1)))
    return [f"{prefix}{i:0{width}d}" for i in range(bins)]


def aggregate_columns(bins: int) -> list[str]:
    return (["t", "mean_r", "std_r", "mean_mu", "std_mu", "mean_gamma",
             "mean_field_r"]
            + _bin_names("bin_", bins)          # r histogram
            + _bin_names("mu_bin_", bins)
            + _bin_names("gamma_bin_", bins))


def write_aggregates(path: str | Path, agg: Aggregates,
                     mean_field_r: np.ndarray | None = None) -> Path:
    """aggregates.csv: one row per round, histograms as bin columns.

    ``mean_field_r`` is the deterministic tracking curve aligned with
    ``agg.t``; omitted (input without ergotropy) it serializes as NaN.
    """
    bins = agg.hist_r.shape[1]
    t_max = len(agg.t)
    if mean_field_r is None:
        mean_field_r = np.full(t_max, math.nan)
    if len(mean_field_r) != t_max:
        raise DomainError(
            f"mean_field_r has {len(mean_field_r)} entries, expected {t_max}")

    def rows():
        for i in range(t_max):
            yield ([int(agg.t[i]), agg.mean_r[i], agg.std_r[i],
                    agg.mean_mu[i], agg.std_mu[i], agg.mean_gamma[i],
                    mean_field_r[i]]
                   + [int(c) for c in agg.hist_r[i]]
                   + [int(c) for c in agg.hist_mu[i]]
                   + [int(c) for c in agg.hist_gamma[i]])

    return write_table(path, "aggregates", aggregate_columns(bins), rows())


EXACT_COLUMNS = ("t", "n_trajectories", "prob_total", "e_gamma", "e_gamma2",
                 "e_r", "e_mu")


def write_exact(path: str | Path, dist: ExactDistribution) -> Path:
    def rows():
        for mom, level in zip(dist.moments, dist.levels):
            yield (mom.t, len(level.prob), mom.prob_total, mom.e_gamma,
                   mom.e_gamma2, mom.e_r, mom.e_mu)

    return write_table(path, "exact", EXACT_COLUMNS, rows())


SWEEP_COLUMNS = ("family", "e0", "m2", "zeta_abs", "t", "mean_r", "std_r",
                 "mean_mu", "std_mu")


def write_sweep(path: str | Path, rows: Iterable[Sequence]) -> Path:
    """sweep.csv: asymptotic means per (input family, input ergotropy)."""
    return write_table(path, "sweep", SWEEP_COLUMNS, rows)


def write_meta(path: str | Path, payload: dict) -> Path:
    """meta.json: deterministic serialization (sorted keys, no timestamps)."""
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def write_json_table(path: str | Path, table: str, columns: Sequence[str],
                     rows: Iterable[Sequence]) -> Path:
    """JSON mirror of a CSV table: column-name keyed row objects."""
    path = Path(path)
    body = {
        "schema": f"qkelly-csv v{SCHEMA_VERSION}",
        "table": table,
        "columns": list(columns),
        "rows": [[None if (isinstance(x, float) and math.isnan(x)) else
                  (x if isinstance(x, (str, int)) or x is None else float(x))
                  for x in row] for row in rows],
    }
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return path


def aggregate_json_rows(agg: Aggregates,
                        mean_field_r: np.ndarray | None = None):
    bins = agg.hist_r.shape[1]
    t_max = len(agg.t)
    if mean_field_r is None:
        mean_field_r = np.full(t_max, math.nan)
    for i in range(t_max):
        yield ([int(agg.t[i]), float(agg.mean_r[i]), float(agg.std_r[i]),
                float(agg.mean_mu[i]), float(agg.std_mu[i]),
                float(agg.mean_gamma[i]), float(mean_field_r[i])]
               + [int(c) for c in agg.hist_r[i]]
               + [int(c) for c in agg.hist_mu[i]]
               + [int(c) for c in agg.hist_gamma[i]])
