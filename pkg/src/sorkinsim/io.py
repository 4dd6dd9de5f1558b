"""Readers and writers for the plain-text exchange formats.

Numbers are written in scientific notation with 17 significant digits so
that values survive a write/read round trip bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .campaign import CampaignResult, SweepTable
from .errors import ConfigError, DomainError
from .sorkin import RATE_KEYS, RateOctet
from .spad import SuperpositionMeasurement

CAMPAIGN_COLUMNS = ("rate_hz", "mean_kappa", "std_kappa", "mean_eps", "mean_delta", "n_undefined")
OCTET_COLUMNS = RATE_KEYS + ("acquisition_time_s",)
SUPERPOSITION_COLUMNS = ("r_both", "r_only1", "r_only2", "r_none")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _read_rows(path, required):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise ConfigError(f"{path}: missing columns {missing}", 1, 1)
    rows = []
    for n, rec in enumerate(reader, start=2):
        try:
            rows.append({k: float(v) for k, v in rec.items() if k is not None})
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: non-numeric value", n, 1) from None
    return rows


# campaign output --------------------------------------------------------------

def write_campaign_csv(result: CampaignResult, path):
    rows = [[getattr(p, c) for c in CAMPAIGN_COLUMNS] for p in result.points]
    _write_rows(path, CAMPAIGN_COLUMNS, rows)


def campaign_json(result: CampaignResult) -> dict:
    return {"columns": list(CAMPAIGN_COLUMNS),
            "rows": [{c: _jsonable(getattr(p, c)) for c in CAMPAIGN_COLUMNS} for p in result.points]}


def write_sweep_csv(table: SweepTable, path):
    names = list(table.columns)
    rows = [[r] + [table.columns[n][i] for n in names] for i, r in enumerate(table.rate_hz)]
    _write_rows(path, ["rate_hz"] + [f"kappa_{n}" for n in names], rows)


def sweep_json(table: SweepTable) -> dict:
    return {
        "rate_hz": [_jsonable(r) for r in table.rate_hz],
        "kappa": {n: [_jsonable(v) for v in col] for n, col in table.columns.items()},
        "crossings_hz": table.crossings,
        "warnings": table.warnings,
    }


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return None if math.isnan(x) else float(x)
    return x


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


# rate octets ------------------------------------------------------------------

def read_rate_octets(path) -> list[tuple[RateOctet, float]]:
    """Octets from a CSV with columns r0, ra, rb, rc, rab, rac, rbc, rabc, acquisition_time_s."""
    out = []
    for n, rec in enumerate(_read_rows(path, OCTET_COLUMNS), start=2):
        try:
            out.append((RateOctet([rec[k] for k in RATE_KEYS]), rec["acquisition_time_s"]))
        except DomainError as exc:
            raise DomainError(f"{path}, line {n}: {exc}") from None
    return out


def write_rate_octets(octets, path, acquisition_time: float = 1.0):
    rows = []
    for item in octets:
        octet, t = item if isinstance(item, tuple) else (item, acquisition_time)
        if not isinstance(octet, RateOctet):
            octet = RateOctet(octet)
        rows.append(list(octet.values) + [t])
    _write_rows(path, OCTET_COLUMNS, rows)


# superposition measurements ---------------------------------------------------

def read_superposition(path) -> list[SuperpositionMeasurement]:
    return [SuperpositionMeasurement(*(rec[c] for c in SUPERPOSITION_COLUMNS))
            for rec in _read_rows(path, SUPERPOSITION_COLUMNS)]


def write_superposition(measurements, path):
    _write_rows(path, SUPERPOSITION_COLUMNS,
                [[getattr(m, c) for c in SUPERPOSITION_COLUMNS] for m in measurements])


# one value per line --------------------------------------------------------------

def read_values(path, strictly_increasing: bool = False) -> np.ndarray:
    values = []
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        for n, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                values.append(float(s))
            except ValueError:
                raise ConfigError(f"{path}: not a number: {s!r}", n, 1) from None
    x = np.array(values, dtype=float)
    if strictly_increasing and x.size > 1 and np.any(np.diff(x) <= 0):
        raise DomainError(f"{path}: timestamps must be strictly increasing")
    return x


def write_values(values, path):
    with open(path, "w") as fh:
        for v in values:
            fh.write(fmt(float(v)) + "\n")
