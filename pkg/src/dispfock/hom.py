"""Hong-Ou-Mandel indistinguishability between the heralded photon and the CSP.

Coincidence model
-----------------
For photon-number occupations ``(i, j)`` at the two beam-splitter inputs
with intensity transmission ``t`` and reflection ``r``, the coincidence
probability for fully distinguishable photons is

    C_dist = P11 (t^2 + r^2) + 2 t r (P20 + P02)

and the dip visibility ``1 - C_par / C_dist`` evaluates to

    V = P11 / (P20 + P02 + (r^2 + t^2) / (2 r t) P11).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FitError, ValidationError


@dataclass(frozen=True)
class SourceParams:
    """Heralded source and coherent-pulse settings.

    ``mu_sq`` is the mean photon number of the coherent pulse.
    """

    eta_h: float = 0.065
    p_pair: float = 3e-5
    mu_sq: float = 0.01

    def __post_init__(self):
        for name in ("eta_h", "p_pair", "mu_sq"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name}={value!r} outside [0, 1]")


@dataclass(frozen=True)
class BsSplit:
    t: float
    r: float

    def __post_init__(self):
        if abs(self.t + self.r - 1.0) > 1e-12:
            raise ValidationError("t + r must equal 1")
        if not (0.0 < self.t < 1.0 and 0.0 < self.r < 1.0):
            raise ValidationError("t and r must lie in (0, 1)")

    @classmethod
    def from_ratio(cls, t_part, r_part):
        """``BsSplit.from_ratio(54, 46)`` for a 54:46 splitter."""
        total = t_part + r_part
        return cls(t_part / total, r_part / total)

    @property
    def prefactor(self):
        return (self.r ** 2 + self.t ** 2) / (2 * self.r * self.t)


@dataclass(frozen=True)
class PhotonPairProbs:
    """Probabilities of (1,1), (2,0) and (0,2) photons at the BS inputs
    (heralded port first). Higher occupations are dropped, so these do not
    sum to one."""

    p11: float
    p20: float
    p02: float

    def __post_init__(self):
        for name in ("p11", "p20", "p02"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} outside [0, 1]")


def double_pair_thermal(src):
    """Two heralded-arm photons: a second pair (``2 p``) with both signals delivered."""
    return 2.0 * src.p_pair * src.eta_h ** 2


def double_pair_single_delivery(src):
    """Alternative multi-pair term ``2 p eta_h``."""
    return 2.0 * src.p_pair * src.eta_h


def input_pair_probs(src, multipair=double_pair_thermal):
    """Input occupation probabilities for the HOM test.

    The heralded port carries one photon with probability ``eta_h`` and two
    with probability ``multipair(src)``; the coherent port is Poissonian with
    mean ``mu_sq``.
    """
    s2 = multipair(src)
    s1 = src.eta_h
    s0 = max(0.0, 1.0 - s1 - s2)
    mu = src.mu_sq
    c0 = math.exp(-mu)
    c1 = mu * c0
    c2 = mu ** 2 / 2 * c0
    return PhotonPairProbs(p11=s1 * c1, p20=s2 * c0, p02=s0 * c2)


def expected_visibility(probs, bs):
    if probs.p11 <= 0.0:
        raise ValidationError("visibility undefined without (1,1) events")
    return probs.p11 / (probs.p20 + probs.p02 + bs.prefactor * probs.p11)


def distinguishable_coincidence(probs, bs):
    """Coincidence probability per window for orthogonal polarisations."""
    return probs.p11 * (bs.t ** 2 + bs.r ** 2) + 2 * bs.t * bs.r * (probs.p20 + probs.p02)


def dip_model(theta, visibility, baseline=1.0, offset=0.0):
    """``baseline * (1 - V cos^2(2 (theta - offset)))``; angles in radians."""
    theta = np.asarray(theta, dtype=float)
    return baseline * (1.0 - visibility * np.cos(2.0 * (theta - offset)) ** 2)


def dip_curve(src, bs, theta, visibility=None, offset=0.0):
    """Coincidence probability per heralded window versus HWP angle.

    The HWP at ``offset`` makes the photons parallel. ``visibility``
    defaults to :func:`expected_visibility`.
    """
    probs = input_pair_probs(src)
    if visibility is None:
        visibility = expected_visibility(probs, bs)
    return dip_model(theta, visibility, distinguishable_coincidence(probs, bs), offset)


@dataclass(frozen=True)
class VisibilityFit:
    visibility: float
    sigma: float
    baseline: float
    offset: float


def fit_visibility(theta, rate, sigma=None):
    """Weighted least-squares fit of :func:`dip_model`.

    The model is linear in ``(1, cos 4 theta, sin 4 theta)``, so the fit is
    a single weighted linear solve. ``sigma`` defaults to uniform weights.
    """
    theta = np.asarray(theta, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if theta.shape != rate.shape or theta.ndim != 1:
        raise ValidationError("theta and rate must be equal-length vectors")
    if theta.size < 5:
        raise FitError(f"need at least 5 points, got {theta.size}")
    if sigma is None:
        sigma = np.ones_like(rate)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
        raise ValidationError("sigma must be positive and finite")
    design = np.column_stack([np.ones_like(theta), np.cos(4 * theta), np.sin(4 * theta)])
    w = 1.0 / sigma
    wd = design * w[:, None]
    if np.linalg.matrix_rank(wd) < 3:
        raise FitError("angle grid is rank deficient for the dip model")
    coef, *_ = np.linalg.lstsq(wd, rate * w, rcond=None)
    cov = np.linalg.inv(wd.T @ wd)
    a0, b, c = coef
    # rate = a0 - k cos(4 (theta - offset)), k >= 0
    k = math.hypot(b, c)
    if a0 + k <= 0:
        raise FitError("fitted baseline is not positive")
    vis = 2.0 * k / (a0 + k)
    if k > 0:
        dv = np.array([
            -2.0 * k / (a0 + k) ** 2,
            2.0 * a0 / (a0 + k) ** 2 * (b / k),
            2.0 * a0 / (a0 + k) ** 2 * (c / k),
        ])
        offset = 0.25 * math.atan2(-c, -b)
    else:
        scale = 2.0 / a0
        dv = np.array([0.0, scale / math.sqrt(2), scale / math.sqrt(2)])
        offset = 0.0
    sigma_v = float(math.sqrt(max(0.0, dv @ cov @ dv)))
    return VisibilityFit(vis, sigma_v, a0 + k, offset)


def mode_match_ratio(v_measured, v_expected):
    """``R = V_m / V_e``, clamped to 1 with a warning."""
    if v_expected <= 0:
        raise ValidationError("expected visibility must be positive")
    ratio = v_measured / v_expected
    if ratio > 1.0:
        warnings.warn(f"mode-match ratio {ratio:.4f} > 1 clamped to 1", RuntimeWarning, stacklevel=2)
        ratio = 1.0
    return ratio


def corrected_displacement_size(alpha_sq, mode_match_R):
    if not 0.0 < mode_match_R <= 1.0:
        raise ValidationError("mode_match_R must lie in (0, 1]")
    return mode_match_R * alpha_sq


def temporal_likeness(t, f, g):
    """Overlap ``1 - (1/2) sum |f_hat - g_hat| dt`` of unit-area profiles.

    ``t`` must be a uniform grid shared by both profiles.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if not (t.shape == f.shape == g.shape) or t.ndim != 1 or t.size < 2:
        raise ValidationError("profiles must share a 1-D grid of at least 2 points")
    if np.any(f < 0) or np.any(g < 0):
        raise ValidationError("profiles must be non-negative")
    steps = np.diff(t)
    dt = steps.mean()
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ValidationError("time grid must be uniform and increasing")
    fa, ga = f.sum() * dt, g.sum() * dt
    if fa <= 0 or ga <= 0:
        raise ValidationError("profile has zero integral")
    value = 1.0 - 0.5 * np.sum(np.abs(f / fa - g / ga)) * dt
    return float(min(1.0, max(0.0, value)))


def load_profile(path):
    """Read a two-column ``time_ns amplitude`` text file."""
    data = np.loadtxt(path, comments="#", ndmin=2, delimiter=None)
    if data.shape[1] != 2:
        raise ValidationError(f"{path}: expected two columns, got {data.shape[1]}")
    return data[:, 0], data[:, 1]
