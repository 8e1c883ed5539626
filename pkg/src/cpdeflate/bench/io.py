"""Result rows and the CSV / JSON writers.

One :class:`ResultRow` per (cell, statistic); per-trial and per-iteration
statistics carry the extra ``trial`` / ``iteration`` labels.  Failed
trials become rows with an ``error:`` status so trial counts never drop
silently.  CSV output is RFC-4180 (header row, minimal quoting); the JSON
file mirrors the rows as an array of objects.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass

CSV_COLUMNS = (
    "experiment",
    "shape",
    "rank",
    "snr_db",
    "algorithm",
    "trial",
    "iteration",
    "statistic",
    "value",
    "trials",
    "status",
)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    statistic: str
    value: float
    trials: int
    shape: str = ""
    rank: str = ""
    snr_db: str = ""
    algorithm: str = ""
    trial: str = ""
    iteration: str = ""
    status: str = "ok"


def shape_label(shape) -> str:
    return "x".join(str(s) for s in shape)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            d = asdict(row)
            writer.writerow([_cell(d[c]) for c in CSV_COLUMNS])


def write_json(rows, path) -> None:
    with open(path, "w") as fh:
        json.dump([asdict(r) for r in rows], fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_outputs(rows, resolved_config_text: str, outdir) -> dict:
    """Write results.csv / results.json / resolved-config.txt under outdir."""
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "csv": os.path.join(outdir, "results.csv"),
        "json": os.path.join(outdir, "results.json"),
        "config": os.path.join(outdir, "resolved-config.txt"),
    }
    write_csv(rows, paths["csv"])
    write_json(rows, paths["json"])
    with open(paths["config"], "w") as fh:
        fh.write(resolved_config_text)
    return paths
