"""Experiment configuration files (YAML).

Structure errors (bad syntax, unknown keys, wrong types) raise ``ConfigError``
with the line and column of the offending node. Physically invalid values
surface as ``DomainError`` when the file is turned into library objects.
"""
from __future__ import annotations

import enum
from pathlib import Path
from typing import Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from . import fixtures
from .campaign import CampaignConfig
from .errors import ConfigError, DomainError
from .sources import SourceKind, SourceModel
from .spad import DeadtimeKind, DeadtimeModel


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SourceSection(_Strict):
    kind: SourceKind = SourceKind.COHERENT
    pulse_period_s: float | None = None
    g2_zero: float = 0.0


class DetectorSection(_Strict):
    kind: DeadtimeKind = DeadtimeKind.CONSTANT
    tau0_s: float = 45e-9
    slope_s_per_hz: float = 0.0
    dark_rate_hz: float = 0.0
    efficiency: float = 1.0

    def build(self) -> DeadtimeModel:
        return DeadtimeModel(self.kind, self.tau0_s, self.slope_s_per_hz, self.dark_rate_hz, self.efficiency)


class InterferometerSection(_Strict):
    path_amplitudes: tuple[float, float, float] | None = None
    fixture: Literal["grating_experiment", "grating_theory"] | None = None
    transmission: float = 1.0

    def amplitudes(self) -> tuple[float, float, float]:
        if self.fixture is not None and self.path_amplitudes is not None:
            raise DomainError("give either path_amplitudes or fixture, not both")
        if self.fixture is not None:
            return fixtures.path_amplitudes(self.fixture.split("_")[1])
        return self.path_amplitudes or (1.0, 1.0, 1.0)


class LogGrid(_Strict):
    start: float
    stop: float
    points: int
    spacing: Literal["log", "linear"] = "log"

    def values(self) -> list[float]:
        if self.points < 1 or self.start <= 0 and self.spacing == "log":
            raise DomainError("grid needs points >= 1 and a positive start for log spacing")
        if self.spacing == "log":
            return np.logspace(np.log10(self.start), np.log10(self.stop), self.points).tolist()
        return np.linspace(self.start, self.stop, self.points).tolist()


class Mode(str, enum.Enum):
    MONTE_CARLO = "monte_carlo"
    CORRECTED_SWEEP = "corrected_sweep"
    RATE_DEPENDENT_SWEEP = "rate_dependent_sweep"


class CampaignSection(_Strict):
    mode: Mode = Mode.MONTE_CARLO
    runs: int = 10_000
    acquisition_time_s: float = 1.0
    rate_grid: Union[list[float], LogGrid]
    seed: int = 0
    assumed_taus_s: list[float] | None = None
    workers: int = 1

    def grid(self) -> list[float]:
        return self.rate_grid.values() if isinstance(self.rate_grid, LogGrid) else list(self.rate_grid)


class OutputSection(_Strict):
    dir: str = "."
    stem: str = "campaign"
    formats: list[Literal["csv", "json"]] = ["csv"]


class ExperimentConfig(_Strict):
    source: SourceSection = SourceSection()
    detector_true: DetectorSection = DetectorSection()
    detector_assumed: DetectorSection | None = None
    interferometer: InterferometerSection = InterferometerSection()
    campaign: CampaignSection
    output: OutputSection = OutputSection()

    def source_model(self, rate: float = 0.0) -> SourceModel:
        s = self.source
        if s.kind is SourceKind.COHERENT:
            if s.pulse_period_s is not None:
                raise DomainError("a coherent source has no pulse period")
            return SourceModel(s.kind, mean_rate=rate, g2_zero=s.g2_zero)
        return SourceModel(s.kind, mean_rate=rate, pulse_period=s.pulse_period_s, g2_zero=s.g2_zero)

    def campaign_config(self, seed: int | None = None) -> CampaignConfig:
        c = self.campaign
        return CampaignConfig(
            source=self.source_model(),
            true_detector=self.detector_true.build(),
            assumed_detector=self.detector_assumed.build() if self.detector_assumed else None,
            rate_grid=c.grid(),
            path_amplitudes=self.interferometer.amplitudes(),
            acquisition_time=c.acquisition_time_s,
            runs=c.runs,
            rng_seed=c.seed if seed is None else seed,
            transmission=self.interferometer.transmission,
        )

    def dump(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def _locate(node, loc, at_key: bool = False):
    """Walk a composed YAML node along a pydantic error location.

    With ``at_key`` the last step stops on the mapping key instead of its value.
    """
    for n, key in enumerate(loc):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    node = k if at_key and n == len(loc) - 1 else v
                    break
            else:
                return node
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return node
    return node


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}",
                          mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", 1, 1)
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(p for p in err["loc"] if not (isinstance(p, str) and p[:1].isupper() or p in ("list[float]",)))
        node = _locate(root, loc, at_key=err["type"] == "extra_forbidden")
        field = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"{field}: {err['msg']}", node.start_mark.line + 1, node.start_mark.column + 1) from None


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
