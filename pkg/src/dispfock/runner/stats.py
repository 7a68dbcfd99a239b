"""Shot statistics: Poisson count sampling and resampled error bars."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class CountRecord:
    n_plus: int
    n_minus: int

    def __post_init__(self):
        if self.n_plus < 0 or self.n_minus < 0:
            raise ValidationError("counts must be non-negative")

    @property
    def total(self):
        return self.n_plus + self.n_minus


def rng_from(seed):
    """``numpy`` Generator from an int, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_counts(probs, shots, seed):
    """Independent Poisson counts with means ``shots * p`` for ``(p_plus, p_minus)``."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (2,) or np.any(p < 0):
        raise ValidationError("probs must be two non-negative numbers")
    if shots <= 0:
        raise ValidationError("shots must be positive")
    n = rng_from(seed).poisson(shots * p)
    return CountRecord(int(n[0]), int(n[1]))


def expectation(n_plus, n_minus):
    return (n_plus - n_minus) / (n_plus + n_minus)


def analytic_sigma(record):
    """First-order Poisson propagation ``2 sqrt(n+ n- / N^3)``."""
    total = record.total
    if total == 0:
        raise ValidationError("zero total counts")
    return 2.0 * math.sqrt(record.n_plus * record.n_minus / total ** 3)


def estimate_with_error(record, resamples=1000, seed=None):
    """``<M3>`` estimate and its standard deviation from Poisson resampling.

    Each resample redraws both counts from Poisson distributions centred on
    the observed values; resamples with no counts at all are discarded.
    """
    if record.total == 0:
        raise ValidationError("zero total counts")
    if resamples < 2:
        raise ValidationError("need at least 2 resamples")
    rng = rng_from(seed)
    plus = rng.poisson(record.n_plus, resamples)
    minus = rng.poisson(record.n_minus, resamples)
    keep = (plus + minus) > 0
    values = (plus[keep] - minus[keep]) / (plus[keep] + minus[keep])
    sigma = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return expectation(record.n_plus, record.n_minus), sigma


def significance(violation, sigma):
    """``violation / sigma``; a zero ``sigma`` is flagged and gives +-inf (or 0)."""
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    if sigma == 0.0:
        if violation == 0.0:
            return 0.0
        warnings.warn("zero standard deviation: significance is infinite", RuntimeWarning, stacklevel=2)
        return math.copysign(math.inf, violation)
    return violation / sigma
