"""Result rows and their CSV / JSON encodings."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

FIXED_TAIL = ("est", "sd", "cv", "se", "theoretical", "n", "n_errors", "seed")
TIMING = "wall_time_seconds"
NA = "NA"


@dataclass
class ResultRow:
    experiment: str
    params: dict
    est: float
    sd: float
    cv: float | None
    se: float
    theoretical: float | None
    n: int
    seed: int
    n_errors: int = 0
    wall_time_seconds: float | None = None
    extra: dict = field(default_factory=dict)


def _fmt(x: float | None) -> str:
    if x is None:
        return NA
    return f"{x:.16e}"


def _parse(text: str) -> float | None:
    return None if text in (NA, "") else float(text)


def header(rows: Sequence[ResultRow]) -> list[str]:
    names: list[str] = []
    for row in rows:
        for k in row.params:
            if k not in names:
                names.append(k)
    cols = ["experiment", *names, *FIXED_TAIL]
    if any(r.wall_time_seconds is not None for r in rows):
        cols.append(TIMING)
    return cols


def to_csv(rows: Sequence[ResultRow]) -> str:
    cols = header(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        rec = {"experiment": r.experiment, "est": _fmt(r.est), "sd": _fmt(r.sd), "cv": _fmt(r.cv),
               "se": _fmt(r.se), "theoretical": _fmt(r.theoretical), "n": str(r.n),
               "n_errors": str(r.n_errors), "seed": str(r.seed)}
        rec.update({k: _fmt(v) for k, v in r.params.items()})
        if TIMING in cols:
            rec[TIMING] = _fmt(r.wall_time_seconds)
        writer.writerow([rec.get(c, NA) for c in cols])
    return buf.getvalue()


def from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    fixed = {"experiment", *FIXED_TAIL, TIMING}
    rows = []
    for rec in reader:
        params = {k: _parse(v) for k, v in rec.items() if k not in fixed}
        rows.append(ResultRow(
            experiment=rec["experiment"], params=params, est=float(rec["est"]), sd=float(rec["sd"]),
            cv=_parse(rec["cv"]), se=float(rec["se"]), theoretical=_parse(rec["theoretical"]),
            n=int(rec["n"]), seed=int(rec["seed"]), n_errors=int(rec["n_errors"]),
            wall_time_seconds=_parse(rec[TIMING]) if TIMING in rec else None,
        ))
    return rows


def _json_row(r: ResultRow) -> dict:
    out = {"experiment": r.experiment, "params": dict(r.params), "est": r.est, "sd": r.sd,
           "cv": r.cv, "se": r.se, "theoretical": r.theoretical, "n": r.n,
           "n_errors": r.n_errors, "seed": r.seed}
    if r.wall_time_seconds is not None:
        out[TIMING] = r.wall_time_seconds
    return out


def to_json(rows: Sequence[ResultRow]) -> str:
    return json.dumps([_json_row(r) for r in rows], indent=2) + "\n"


def from_json(text: str) -> list[ResultRow]:
    return [
        ResultRow(experiment=d["experiment"], params=d["params"], est=d["est"], sd=d["sd"], cv=d["cv"],
                  se=d["se"], theoretical=d["theoretical"], n=d["n"], seed=d["seed"],
                  n_errors=d.get("n_errors", 0), wall_time_seconds=d.get(TIMING))
        for d in json.loads(text)
    ]


def write_rows(rows: Sequence[ResultRow], path, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    text = to_json(rows) if fmt == "json" else to_csv(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def read_rows(path) -> list[ResultRow]:
    path = Path(path)
    text = path.read_text()
    return from_json(text) if path.suffix.lower() == ".json" else from_csv(text)


def finite(x: float | None) -> bool:
    return x is not None and math.isfinite(x)
