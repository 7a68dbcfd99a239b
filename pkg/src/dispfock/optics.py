"""Optical elements, the AFC memory channel and detectors.

The memory is treated as a linear bosonic channel: a pulse entering it is
split into a directly transmitted temporal bin (amplitude ``sqrt(eta_t)``),
an echo bin re-emitted after ``tau_s`` (amplitude ``sqrt(eta_s)``) and a lost
remainder. No atomic dynamics are simulated.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import fock
from .conventions import H, V
from .errors import ValidationError


def _unit(name, value, closed_low=True):
    if not (0.0 <= value <= 1.0) or (not closed_low and value == 0.0):
        raise ValidationError(f"{name}={value!r} outside [0, 1]")


@dataclass(frozen=True)
class MemoryParams:
    """AFC memory channel.

    ``eta_abs`` / ``eta_s`` act on the H mode (crystal L). ``eta_abs_r`` /
    ``eta_s_r`` optionally give different values for V (crystal R); None
    means identical crystals.
    """

    eta_abs: float = 0.922
    eta_s: float = 0.183
    tau_s: float = 50.0
    eta_abs_r: float | None = None
    eta_s_r: float | None = None

    def __post_init__(self):
        for name in ("eta_abs", "eta_s", "eta_abs_r", "eta_s_r"):
            value = getattr(self, name)
            if value is not None:
                _unit(name, value)
        for abs_, s in ((self.eta_abs, self.eta_s), (self.eta_abs_r, self.eta_s_r)):
            a = self.eta_abs if abs_ is None else abs_
            e = self.eta_s if s is None else s
            if e > a:
                raise ValidationError(f"echo efficiency {e} exceeds absorption {a}")
            if (1.0 - a) + e > 1.0 + 1e-15:
                raise ValidationError("eta_t + eta_s exceeds 1")
        if self.tau_s < 0:
            raise ValidationError("tau_s must be non-negative")

    @property
    def eta_t(self):
        return 1.0 - self.eta_abs

    def per_mode(self):
        """``((eta_t, eta_s) for H, (eta_t, eta_s) for V)``."""
        abs_r = self.eta_abs if self.eta_abs_r is None else self.eta_abs_r
        s_r = self.eta_s if self.eta_s_r is None else self.eta_s_r
        return (self.eta_t, self.eta_s), (1.0 - abs_r, s_r)

    @classmethod
    def ideal(cls):
        return cls(eta_abs=1.0, eta_s=1.0)


class BinLabel(str, Enum):
    TRANSMITTED = "transmitted"
    ECHO = "echo"
    LOST = "lost"


@dataclass(frozen=True)
class TemporalBin:
    label: BinLabel
    scale: float


def temporal_bins(mem):
    """Amplitude scale of each bin for one memory pass (H-mode values)."""
    t, s = mem.eta_t, mem.eta_s
    return (
        TemporalBin(BinLabel.TRANSMITTED, math.sqrt(t)),
        TemporalBin(BinLabel.ECHO, math.sqrt(s)),
        TemporalBin(BinLabel.LOST, math.sqrt(max(0.0, 1.0 - t - s))),
    )


@dataclass(frozen=True)
class DetectorParams:
    eta_det: float = 0.256
    window_ns: float = 3.0
    dark_prob: float = 0.0

    def __post_init__(self):
        _unit("eta_det", self.eta_det)
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValidationError(f"dark_prob={self.dark_prob!r} outside [0, 1)")
        if not self.window_ns > 0:
            raise ValidationError("window_ns must be positive")

    @classmethod
    def ideal(cls):
        return cls(eta_det=1.0)


@dataclass(frozen=True)
class CoarseWindow:
    center: float
    halfwidth: float

    def __post_init__(self):
        if self.halfwidth < 0:
            raise ValidationError("halfwidth must be non-negative")

    @classmethod
    def around(cls, alpha):
        """The ``|alpha|^2 +- |alpha|`` window."""
        return cls(abs(alpha) ** 2, abs(alpha))

    def bounds(self):
        """Inclusive integer bounds, rounded outward."""
        lo = max(0, math.floor(self.center - self.halfwidth))
        hi = math.ceil(self.center + self.halfwidth)
        return lo, hi


def hwp_matrix(theta):
    """Half-wave plate with fast axis at ``theta`` radians."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def csp_amplitude_for(alpha, bs_transmittance):
    """Coherent amplitude needed at the tap port to displace the signal by ``alpha``."""
    if bs_transmittance >= 1.0:
        return complex(alpha)
    return complex(alpha) / math.sqrt(1.0 - bs_transmittance)


def displace_signal(state, csp_alpha, bs_transmittance=1.0):
    """Displacement of the H mode on an asymmetric beam splitter.

    The signal is attenuated by ``bs_transmittance`` (both polarisations) and
    ``sqrt(1 - T) * csp_alpha`` is added to the H displacement. ``T == 1`` is
    the ideal limit where ``csp_alpha`` is taken as the displacement itself.
    """
    if not 0.9 < bs_transmittance <= 1.0:
        raise ValidationError(f"bs_transmittance={bs_transmittance!r} outside (0.9, 1]")
    if bs_transmittance == 1.0:
        return fock.displace(state, csp_alpha, H)
    state = fock.attenuate(bs_transmittance, state)
    return fock.displace(state, math.sqrt(1.0 - bs_transmittance) * complex(csp_alpha), H)


def memory_pass(state, mem):
    """Split a state into the memory's temporal bins.

    Returns a dict keyed by :class:`BinLabel`. Each value is the marginal
    state of that bin; the echo bin stands in for the retrieved atomic state.
    """
    (t_h, s_h), (t_v, s_v) = mem.per_mode()

    def scaled(eta_h, eta_v):
        return fock.pure_loss(eta_v, fock.pure_loss(eta_h, state, H), V)

    return {
        BinLabel.TRANSMITTED: scaled(t_h, t_v),
        BinLabel.ECHO: scaled(s_h, s_v),
        BinLabel.LOST: scaled(max(0.0, 1 - t_h - s_h), max(0.0, 1 - t_v - s_v)),
    }


def back_displace(state, alpha, mem):
    """Second pass of the phase-flipped stored CSP: ``D(-sqrt(eta_s) alpha)`` on H."""
    return fock.displace(state, -math.sqrt(mem.eta_s) * complex(alpha), H)


@dataclass(frozen=True)
class ClickProbs:
    """Joint click outcomes of D2 (H port) and D3 (V port)."""

    d2_only: float
    d3_only: float
    both: float
    none: float

    def total(self):
        return self.d2_only + self.d3_only + self.both + self.none


def click_probabilities(state, det, spurious=(0.0, 0.0)):
    """Click statistics of threshold detectors on H (D2) and V (D3).

    ``spurious`` adds independent extra click probabilities per detector
    (on top of ``det.dark_prob``).
    """
    lossy = fock.attenuate(det.eta_det, state)
    quiet = [
        (1.0 - det.dark_prob) * (1.0 - spurious[0]),
        (1.0 - det.dark_prob) * (1.0 - spurious[1]),
    ]
    p0_h = min(1.0, max(0.0, fock.vacuum_probability(lossy, H))) * quiet[0]
    p0_v = min(1.0, max(0.0, fock.vacuum_probability(lossy, V))) * quiet[1]
    p00 = min(1.0, max(0.0, fock.vacuum_probability(lossy))) * quiet[0] * quiet[1]
    d2_only = max(0.0, p0_v - p00)
    d3_only = max(0.0, p0_h - p00)
    both = max(0.0, 1.0 - d2_only - d3_only - p00)
    return ClickProbs(d2_only, d3_only, both, p00)


def coarse_window_prob(dist, window):
    """Probability that the photon number lies inside ``window``."""
    lo, hi = window.bounds()
    if hi > dist.n_max and dist.tail_mass > 0:
        warnings.warn(
            f"window upper bound {hi} exceeds cutoff {dist.n_max}; "
            f"tail mass {dist.tail_mass:.3g} not counted",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(dist.probs[lo:hi + 1].sum())


def visibility_of_cancellation(alpha, mem, phase_error, amplitude_mismatch=0.0):
    """Fringe visibility between the retrieved displacement and the
    back-displacement with the signal blocked.

    ``amplitude_mismatch`` is the relative amplitude error of the second
    pathway; ``phase_error`` in radians.
    """
    a1 = math.sqrt(mem.eta_s) * abs(alpha)
    a2 = a1 * (1.0 + amplitude_mismatch)
    if a1 == 0.0:
        raise ValidationError("visibility undefined for a zero displacement")
    i_max = a1 ** 2 + a2 ** 2 + 2 * a1 * a2 * math.cos(phase_error)
    i_min = a1 ** 2 + a2 ** 2 - 2 * a1 * a2 * math.cos(phase_error)
    return (i_max - i_min) / (i_max + i_min)
