"""CSV/JSON result files, run manifests and plot-data tables."""

from __future__ import annotations

import csv
import io
import json
import platform
from collections import defaultdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from .experiments import OK, ResultRow

CSV_HEADER = ResultRow.fields()
FORMATS = ("csv", "json")
_INT_FIELDS = {"epochs"}
_STR_FIELDS = {"scenario", "baseline", "status"}


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([getattr(r, name) for name in CSV_HEADER])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([{name: getattr(r, name) for name in CSV_HEADER} for r in rows], indent=1)


def _coerce(record: dict) -> ResultRow:
    missing = set(CSV_HEADER) - set(record)
    if missing:
        raise ValueError(f"result record lacks {sorted(missing)}")
    kwargs = {}
    for name in CSV_HEADER:
        value = record[name]
        if name in _STR_FIELDS:
            kwargs[name] = str(value)
        elif name in _INT_FIELDS:
            kwargs[name] = int(value)
        else:
            kwargs[name] = float(value)
    return ResultRow(**kwargs)


def parse_results(text: str, fmt: str = "csv") -> list[ResultRow]:
    """Inverse of :func:`rows_to_csv` / :func:`rows_to_json`."""
    if fmt == "json":
        return [_coerce(rec) for rec in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [_coerce(rec) for rec in reader]


def read_results(path) -> list[ResultRow]:
    path = Path(path)
    fmt = "json" if path.suffix == ".json" else "csv"
    return parse_results(path.read_text(), fmt)


def plot_table(rows: Sequence[ResultRow]) -> tuple[list[str], list[list[float]]]:
    """Wide table: sweep value ``x`` plus one mean-secrecy column per series.

    A series is the baseline for region sweeps and the preset for CRB
    sweeps; missing points are ``nan``.
    """
    groups: dict = defaultdict(list)
    for r in rows:
        if r.status != OK:
            continue
        series = r.baseline
        prefix = r.scenario.split("-seed")[0]
        if prefix not in ("region", "single"):
            series = prefix
        groups[(series, r.sweep_value)].append(r.s_min_bits)
    names = sorted({s for s, _ in groups})
    xs = sorted({x for _, x in groups})
    table = [[x] + [float(np.mean(groups[(s, x)])) if (s, x) in groups else float("nan")
                    for s in names] for x in xs]
    return ["x"] + names, table


def manifest(config=None, seed: Optional[int] = None, **extra) -> dict:
    from .. import __version__

    out = {
        "config": config.to_dict() if config is not None else None,
        "seed": seed,
        "versions": {
            "fa_iscsc": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    out.update(extra)
    return out


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_results(rows: Sequence[ResultRow], fmt: str, path, *, config=None,
                 seed: Optional[int] = None, stem: str = "results", **extra) -> dict[str, Path]:
    """Write the result rows, a run manifest and a plot-data table.

    Parameters
    ----------
    rows : sequence of ResultRow
        Must be non-empty.
    fmt : {"csv", "json"}
        Format of the rows file.
    path : path-like
        Output directory.
    config, seed, extra
        Echoed into ``<stem>.manifest.json``.

    Returns
    -------
    dict
        ``{"results": ..., "manifest": ..., "plot": ...}`` file paths.
    """
    if not rows:
        raise ValueError("nothing to emit: no result rows")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(path)
    body = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    files = {"results": _write(out / f"{stem}.{fmt}", body)}
    meta = manifest(config, seed, rows=len(rows), format=fmt, **extra)
    files["manifest"] = _write(out / f"{stem}.manifest.json", json.dumps(meta, indent=1))
    header, table = plot_table(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(table)
    files["plot"] = _write(out / f"{stem}.plot.csv", buf.getvalue())
    return files
