"""Experiment plans: flat ``section.key = value`` text files.

Every plan is layered on top of the bundled defaults, so a plan file only
needs the keys it changes.
"""

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import ValidationError
from ..hom import BsSplit, SourceParams
from ..ndc import NdcConfig
from ..optics import DetectorParams, MemoryParams

EXPERIMENTS = ("ndc", "hom", "size", "sweep", "fit-noise")


class PlanError(ValidationError):
    pass


def parse_plan(text, source="<plan>"):
    """Parse plan text into an ordered ``{key: raw string}`` dict."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PlanError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or "." not in key:
            raise PlanError(f"{source}:{lineno}: key {key!r} must look like 'section.name'")
        values[key] = value
    return values


def default_values():
    text = resources.files("dispfock.runner").joinpath("data/experiment_defaults.plan").read_text()
    return parse_plan(text, "experiment_defaults.plan")


def load_plan_file(path):
    path = Path(path)
    if not path.is_file():
        raise PlanError(f"plan file not found: {path}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise PlanError(f"cannot read plan file {path}: {exc}") from exc
    return parse_plan(text, str(path))


@dataclass
class ExperimentPlan:
    """Resolved plan: raw values plus typed accessors."""

    experiment: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise PlanError(f"unknown experiment {self.experiment!r}")
        unknown = set(self.values) - set(default_values()) - {"ndc.theta_deg"}
        if unknown:
            raise PlanError(f"unknown plan keys: {', '.join(sorted(unknown))}")
        if self.shots <= 0:
            raise PlanError("run.shots must be positive")
        if self.resamples < 100:
            raise PlanError("run.resamples must be at least 100")
        if self.jobs < 1:
            raise PlanError("run.jobs must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise PlanError("run.seed must be an unsigned 64-bit integer")

    @classmethod
    def build(cls, experiment, plan_path=None, overrides=None):
        values = default_values()
        if plan_path is not None:
            values.update(load_plan_file(plan_path))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = str(value)
        return cls(experiment, values)

    def get(self, key, kind=float, default=None):
        if key not in self.values:
            if default is not None:
                return default
            raise PlanError(f"missing plan key {key}")
        raw = self.values[key]
        try:
            if kind is bool:
                lowered = raw.lower()
                if lowered not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(raw)
                return lowered in ("true", "1", "yes")
            if kind is int:
                return int(float(raw)) if "e" in raw.lower() else int(raw)
            if kind is list:
                return [float(v) for v in raw.split(",") if v.strip()]
            value = kind(raw)
        except ValueError:
            raise PlanError(f"plan key {key}: cannot parse {raw!r} as {kind.__name__}") from None
        if kind is float and not math.isfinite(value):
            raise PlanError(f"plan key {key}: value must be finite")
        return value

    @property
    def seed(self):
        return self.get("run.seed", int)

    @property
    def shots(self):
        return self.get("run.shots", float)

    @property
    def resamples(self):
        return self.get("run.resamples", int)

    @property
    def jobs(self):
        return self.get("run.jobs", int)

    def memory(self):
        return MemoryParams(
            eta_abs=self.get("memory.eta_abs"),
            eta_s=self.get("memory.eta_s"),
            tau_s=self.get("memory.tau_s"),
        )

    def detector(self):
        return DetectorParams(
            eta_det=self.get("detector.eta_det"),
            window_ns=self.get("detector.window_ns"),
            dark_prob=self.get("detector.dark_prob"),
        )

    def ndc_config(self, theta_deg=None):
        if theta_deg is None:
            theta_deg = self.get("ndc.theta_deg", default=22.5)
        return NdcConfig(
            theta_prep=math.radians(theta_deg),
            alpha=math.sqrt(self.get("ndc.alpha_sq")),
            mem=self.memory(),
            det=self.detector(),
            csp_noise=self.get("ndc.csp_noise"),
            mode_match_R=self.get("ndc.mode_match_R"),
            bs_transmittance=self.get("ndc.bs_transmittance"),
            noise_exponent=self.get("ndc.noise_exponent"),
            noise_ref_alpha_sq=self.get("ndc.noise_ref_alpha_sq"),
            o_noise_bias=self.get("ndc.o_noise_bias"),
            core_cutoff=self.get("ndc.core_cutoff", int),
        )

    def source(self):
        return SourceParams(
            eta_h=self.get("source.eta_h"),
            p_pair=self.get("source.p_pair"),
            mu_sq=self.get("source.mu_sq"),
        )

    def splitter(self):
        t = self.get("hom.bs_t")
        return BsSplit(t, 1.0 - t)

    def describe(self):
        """``key = value`` lines of the fully resolved plan, sorted by key."""
        return [f"{k} = {self.values[k]}" for k in sorted(self.values)]
