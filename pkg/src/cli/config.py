"""
Experiment configuration module for the bdris-wideband project.
This module validates experiment files and holds the built-in figure presets.
"""

import hashlib
import logging
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.scenario.generator import ScenarioConfig

logger = logging.getLogger(__name__)

SCHEMES = ("algorithm1", "diagonal", "strongest_tap", "random")
FIGURES = ("1", "2", "3", "custom")

# fields that do not change any computed value
_NON_RESULT_FIELDS = {"output_path", "workers", "diagnostics_path"}


class ExperimentConfig(BaseModel):
    """One sweep of Monte-Carlo capacity evaluations."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    scenario: ScenarioConfig = ScenarioConfig()
    sweep_axis: Literal["bandwidth_hz", "rician_kappa"] = "bandwidth_hz"
    sweep_values: List[float] = Field(default_factory=lambda: [10e6, 20e6, 30e6, 40e6, 50e6], min_length=1)
    bandwidth_hz: float = Field(30e6, gt=0)
    subcarrier_spacing_hz: float = Field(150e3, gt=0)
    psd_w_per_hz: float = Field(1e-6, gt=0)
    noise_psd_dbm_per_hz: float = -174.0
    num_realizations: int = Field(100, ge=1)
    schemes: List[Literal["algorithm1", "diagonal", "strongest_tap", "random"]] = Field(
        default_factory=lambda: list(SCHEMES), min_length=1
    )
    iterations: int = Field(100, ge=1)
    energy_tol: float = Field(1e-6, gt=0, lt=1)
    strongest_tap_selection: Literal["tap", "principal", "total"] = "tap"
    output_path: str = "results/custom.csv"
    diagnostics_path: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("schemes")
    @classmethod
    def _unique_schemes(cls, schemes):
        if len(set(schemes)) != len(schemes):
            raise ValueError("schemes must not repeat")
        return schemes

    @model_validator(mode="after")
    def _check_sweep(self):
        for value in self.sweep_values:
            if self.sweep_axis == "rician_kappa" and value < 0:
                raise ValueError(f"rician_kappa sweep values must be >= 0, got {value}")
            if self.sweep_axis == "bandwidth_hz":
                if value <= 0:
                    raise ValueError(f"bandwidth sweep values must be positive, got {value}")
                if round(value / self.subcarrier_spacing_hz) < 2:
                    raise ValueError(f"bandwidth {value} Hz gives fewer than 2 subcarriers")
                if self.scenario.carrier_freq_hz / value <= 10:
                    raise ValueError(f"bandwidth {value} Hz is too large for the carrier frequency")
        return self

    def bandwidth_at(self, value):
        return float(value) if self.sweep_axis == "bandwidth_hz" else self.bandwidth_hz

    def scenario_at(self, value) -> ScenarioConfig:
        if self.sweep_axis != "rician_kappa":
            return self.scenario
        return ScenarioConfig.model_validate({**self.scenario.model_dump(), "rician_kappa": value})

    def num_subcarriers(self, bandwidth):
        """S = round(B / subcarrier spacing)."""
        return int(round(bandwidth / self.subcarrier_spacing_hz))

    def noise_power(self, bandwidth):
        """N0 in W: thermal noise density times B."""
        return 10 ** ((self.noise_psd_dbm_per_hz - 30) / 10) * bandwidth

    def subcarrier_power(self, bandwidth):
        """q = psd B / S, so that q S = psd B."""
        return self.psd_w_per_hz * bandwidth / self.num_subcarriers(bandwidth)

    def config_hash(self):
        """SHA-256 of the fields that determine the results."""
        payload = self.model_dump_json(exclude=_NON_RESULT_FIELDS)
        return hashlib.sha256(payload.encode()).hexdigest()


def figure_preset(figure) -> ExperimentConfig:
    """Built-in experiments: 1 bandwidth sweep, 2 kappa sweep at 30 MHz, 3 bandwidth sweep with a static channel."""
    figure = str(figure)
    if figure == "1":
        return ExperimentConfig(name="figure1", output_path="results/figure1.csv")
    if figure == "2":
        return ExperimentConfig(
            name="figure2",
            sweep_axis="rician_kappa",
            sweep_values=[0.0, 1.0, 10.0, 100.0],
            bandwidth_hz=30e6,
            output_path="results/figure2.csv",
        )
    if figure == "3":
        return ExperimentConfig(
            name="figure3",
            scenario=ScenarioConfig(num_static_paths=6, static_gain_offset_db=-40.0),
            output_path="results/figure3.csv",
        )
    raise ValueError(f"no preset for figure {figure!r}, expected one of 1, 2, 3")


def load_config(filename) -> ExperimentConfig:
    """Parse and validate a JSON experiment file."""
    with open(filename) as f:
        return ExperimentConfig.model_validate_json(f.read())
