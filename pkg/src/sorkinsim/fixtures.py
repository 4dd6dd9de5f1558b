"""Reference constants shipped with the package (``data/reference.yaml``)."""
from __future__ import annotations

import functools
from importlib import resources

import yaml

from .optics import SplitterSpec, two_path_visibility
from .spad import DeadtimeModel


@functools.lru_cache(maxsize=None)
def load_reference() -> dict:
    text = resources.files("sorkinsim").joinpath("data/reference.yaml").read_text()
    return yaml.safe_load(text)


def grating(column: str = "experiment") -> SplitterSpec:
    """Splitter efficiencies (fractions) for orders -1, 0, +1."""
    rows = {r["order"]: r[f"{column}_pct"] / 100.0 for r in load_reference()["grating"]["orders"]}
    return SplitterSpec(rows[-1], rows[0], rows[1])


def path_efficiencies(column: str = "experiment") -> dict[str, float]:
    """Efficiency of the splitter order feeding each arm A, B, C."""
    spec = grating(column)
    by_order = dict(zip((-1, 0, 1), spec.efficiencies))
    return {path: by_order[o] for path, o in load_reference()["path_orders"].items()}


def path_amplitudes(column: str = "experiment") -> tuple[float, float, float]:
    """Returning field amplitude of each arm (two passes through the splitter)."""
    eff = path_efficiencies(column)
    return tuple(eff[p] for p in "ABC")


def visibility_table(column: str = "experiment") -> dict[str, float]:
    """Two-arm theoretical visibilities (fractions) from the splitter efficiencies."""
    eff = path_efficiencies(column)
    return {a + b: two_path_visibility(eff[a], eff[b]) for a, b in ("AB", "AC", "BC")}


def reference_visibilities() -> dict[str, dict[str, float]]:
    return {r["paths"]: {"theory": r["theory_pct"], "experiment": r["experiment_pct"]}
            for r in load_reference()["visibility"]["rows"]}


def rate_dependent_detector(dark_rate: float = 0.0) -> DeadtimeModel:
    law = load_reference()["deadtime"]["rate_law"]
    return DeadtimeModel.linear_in_rate(law["tau0_ns"] * 1e-9, law["slope_fs"] * 1e-15, dark_rate)
