"""Monte Carlo versions of the NDC experiments."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .. import ndc
from .stats import estimate_with_error, sample_counts

PREPARATIONS = (("phi1", ndc.PHI1), ("phi2", ndc.PHI2), ("phi12", ndc.PHI12))


@dataclass(frozen=True)
class SimulatedDisturbance:
    exact: ndc.DisturbanceResult
    measured: ndc.DisturbanceResult
    counts_without_O: tuple
    counts_with_O: tuple


def simulate_disturbance(cfg, shots, seed, resamples=1000):
    """Sample coincidence counts for both O settings and estimate ``d``.

    ``seed`` is an int or :class:`numpy.random.SeedSequence`; four child
    streams (counts and resampling, with and without O) are spawned from it.
    """
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_count0, s_count1, s_res0, s_res1 = seq.spawn(4)
    exact = ndc.disturbance(cfg)
    out = []
    for apply_o, s_count, s_res in ((False, s_count0, s_res0), (True, s_count1, s_res1)):
        probs = ndc.run_pipeline(replace(cfg, apply_O=apply_o))
        record = sample_counts((probs.p_plus, probs.p_minus), shots, s_count)
        m, sigma = estimate_with_error(record, resamples, s_res)
        out.append((record, m, sigma))
    (rec0, m0, s0), (rec1, m1, s1) = out
    measured = ndc.DisturbanceResult(m0 - m1, math.hypot(s0, s1), m1, m0)
    return SimulatedDisturbance(
        exact, measured, (rec0.n_plus, rec0.n_minus), (rec1.n_plus, rec1.n_minus)
    )


def simulate_ndc_set(base_cfg, shots, seed, resamples=1000):
    """Control and main experiments; returns ``({label: SimulatedDisturbance}, ViolationSummary)``."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(len(PREPARATIONS))
    results = {}
    for (label, theta), child in zip(PREPARATIONS, children):
        results[label] = simulate_disturbance(replace(base_cfg, theta_prep=theta), shots, child, resamples)
    summary = ndc.violation_summary(
        results["phi12"].measured, results["phi1"].measured, results["phi2"].measured
    )
    return results, summary
