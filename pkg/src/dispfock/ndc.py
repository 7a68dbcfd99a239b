"""Nondisturbance-condition (NDC) experiments.

A single photon is prepared in a polarisation superposition, displaced on
its H mode, optionally hit by the blind operation O (a 0 deg half-wave
plate), stored in and retrieved from the memory, displaced back, shuffled by
a 22.5 deg half-wave plate and read out on two threshold detectors. The
disturbance parameter is the change of ``<M3>`` caused by inserting O.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import fock, optics
from .conventions import BLIND_ANGLE, M3_SIGN, SHUFFLE_ANGLE
from .errors import DegenerateOutcomeError, ValidationError
from .optics import BinLabel, DetectorParams, MemoryParams

PHI1 = 0.0
PHI2 = math.pi / 4
PHI12 = math.pi / 8


@dataclass(frozen=True)
class NdcConfig:
    """One run of the pipeline.

    ``csp_noise`` is the spurious click probability per window (summed over
    both detectors) at ``|alpha|^2 == noise_ref_alpha_sq``; it scales as
    ``(|alpha|^2 / noise_ref_alpha_sq) ** noise_exponent``. Without O the
    spurious clicks are split evenly between D2 and D3; with O they are split
    ``(1 + o_noise_bias) / 2`` to D2.
    """

    theta_prep: float = PHI12
    alpha: complex = math.sqrt(83.0)
    apply_O: bool = False
    mem: MemoryParams = field(default_factory=MemoryParams)
    det: DetectorParams = field(default_factory=DetectorParams)
    csp_noise: float = 0.0
    mode_match_R: float = 1.0
    bs_transmittance: float = 1.0
    noise_exponent: float = 1.0
    noise_ref_alpha_sq: float = 83.0
    o_noise_bias: float = 0.0
    core_cutoff: int = fock.DEFAULT_CORE_CUTOFF

    def __post_init__(self):
        if not 0.0 <= self.csp_noise < 1.0:
            raise ValidationError(f"csp_noise={self.csp_noise!r} outside [0, 1)")
        if not 0.0 < self.mode_match_R <= 1.0:
            raise ValidationError(f"mode_match_R={self.mode_match_R!r} outside (0, 1]")
        if not -1.0 <= self.o_noise_bias <= 1.0:
            raise ValidationError("o_noise_bias outside [-1, 1]")
        if self.noise_ref_alpha_sq <= 0:
            raise ValidationError("noise_ref_alpha_sq must be positive")
        if self.core_cutoff < 1:
            raise ValidationError("core_cutoff must be at least 1")
        self.spurious_probability()

    @property
    def alpha_sq(self):
        return abs(self.alpha) ** 2

    def spurious_probability(self):
        if self.csp_noise == 0.0 or self.alpha_sq == 0.0:
            return 0.0
        q = self.csp_noise * (self.alpha_sq / self.noise_ref_alpha_sq) ** self.noise_exponent
        if not 0.0 <= q < 1.0:
            raise ValidationError(f"spurious click probability {q:.4g} at |alpha|^2="
                                  f"{self.alpha_sq:.4g} is not a probability")
        return q

    @classmethod
    def ideal(cls, theta_prep=PHI12, alpha_sq=83.0, **kwargs):
        kwargs.setdefault("mem", MemoryParams.ideal())
        kwargs.setdefault("det", DetectorParams.ideal())
        return cls(theta_prep=theta_prep, alpha=math.sqrt(alpha_sq), **kwargs)


@dataclass(frozen=True)
class M3Probabilities:
    """Conditional outcome probabilities plus the raw click tallies."""

    p_plus: float
    p_minus: float
    clicks: optics.ClickProbs


@dataclass(frozen=True)
class DisturbanceResult:
    d: float
    sigma_d: float
    m3_with_O: float
    m3_without_O: float


@dataclass(frozen=True)
class ViolationSummary:
    v1: float
    v2: float
    sigma_v1: float
    sigma_v2: float
    significance1: float
    significance2: float


def prepare_micro_micro(theta, cutoff=fock.DEFAULT_CORE_CUTOFF):
    """``cos(2 theta)|1,0> + sin(2 theta)|0,1>`` with zero displacement."""
    return fock.DisplacedCoreState.from_fock_amplitudes(
        {(1, 0): math.cos(2 * theta), (0, 1): math.sin(2 * theta)}, cutoff=cutoff
    )


def retrieved_state(cfg):
    """State after retrieval and back-displacement, before the shuffle plate."""
    state = prepare_micro_micro(cfg.theta_prep, cfg.core_cutoff)
    csp = optics.csp_amplitude_for(cfg.alpha, cfg.bs_transmittance)
    state = optics.displace_signal(state, csp, cfg.bs_transmittance)
    delivered = state.delta[0]
    if cfg.apply_O:
        state = fock.passive_transform(optics.hwp_matrix(BLIND_ANGLE), state)
    echo = optics.memory_pass(state, cfg.mem)[BinLabel.ECHO]
    return optics.back_displace(echo, math.sqrt(cfg.mode_match_R) * delivered, cfg.mem)


def run_pipeline(cfg):
    """Outcome probabilities of ``M3`` conditioned on exactly one click."""
    state = fock.passive_transform(optics.hwp_matrix(SHUFFLE_ANGLE), retrieved_state(cfg))
    q = cfg.spurious_probability()
    bias = cfg.o_noise_bias if cfg.apply_O else 0.0
    spurious = (q * (1 + bias) / 2, q * (1 - bias) / 2)
    clicks = optics.click_probabilities(state, cfg.det, spurious)
    single = clicks.d2_only + clicks.d3_only
    if single <= 0.0:
        raise DegenerateOutcomeError("no single-detector clicks are possible for this configuration")
    p_d2 = clicks.d2_only / single
    p_plus, p_minus = (p_d2, 1.0 - p_d2) if M3_SIGN > 0 else (1.0 - p_d2, p_d2)
    return M3Probabilities(p_plus, p_minus, clicks)


def expectation_m3(probs):
    """``P(M3=+1) - P(M3=-1)`` from an (p_plus, p_minus) pair or result."""
    if isinstance(probs, M3Probabilities):
        return probs.p_plus - probs.p_minus
    p_plus, p_minus = probs
    return float(p_plus) - float(p_minus)


def disturbance(cfg):
    """``d = <M3>`` without O minus ``<M3>`` with O (exact probabilities)."""
    without = expectation_m3(run_pipeline(replace(cfg, apply_O=False)))
    with_o = expectation_m3(run_pipeline(replace(cfg, apply_O=True)))
    return DisturbanceResult(without - with_o, 0.0, with_o, without)


def analytic_disturbance(theta):
    """Noise-free disturbance ``2 sin(4 theta)``."""
    return 2.0 * math.sin(4.0 * theta)


def _ratio(v, sigma):
    if sigma == 0.0:
        return 0.0 if v == 0.0 else math.copysign(math.inf, v)
    return v / sigma


def violation_summary(d12, d1, d2):
    """``|d12| - |d1|`` and ``|d12| - |d2|`` with propagated errors.

    A zero error on a nonzero violation yields an infinite significance.
    """
    v1 = abs(d12.d) - abs(d1.d)
    v2 = abs(d12.d) - abs(d2.d)
    s1 = math.hypot(d12.sigma_d, d1.sigma_d)
    s2 = math.hypot(d12.sigma_d, d2.sigma_d)
    return ViolationSummary(v1, v2, s1, s2, _ratio(v1, s1), _ratio(v2, s2))


def excitation_count(alpha_sq, mode_match_R, mem, branch="displacement"):
    """Expected number of excitations absorbed by the memory.

    ``branch="displacement"`` counts the displacement alone (``R |alpha|^2``);
    ``"macro"`` is the ``D(alpha)|1>`` branch with one extra photon.
    """
    size = mode_match_R * alpha_sq
    if branch == "displacement":
        mean = size
    elif branch == "macro":
        mean = size + 1.0
    else:
        raise ValidationError(f"unknown branch {branch!r}")
    return mem.eta_abs * mean


def disturbance_grid(thetas, base_cfg):
    """Disturbance at each preparation angle (radians)."""
    return np.array([disturbance(replace(base_cfg, theta_prep=t)).d for t in thetas])
