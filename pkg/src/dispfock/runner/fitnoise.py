"""Least-squares fit of the CSP noise knobs to measured disturbances."""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .. import ndc
from ..errors import FitError, ValidationError

KNOBS = ("csp_noise", "o_noise_bias")


@dataclass(frozen=True)
class NoiseFit:
    knobs: dict
    model: dict
    residuals: dict
    cost: float


def model_disturbances(base_cfg, **knobs):
    cfg = replace(base_cfg, **knobs)
    return {
        label: ndc.disturbance(replace(cfg, theta_prep=theta)).d
        for label, theta in (("d12", ndc.PHI12), ("d1", ndc.PHI1), ("d2", ndc.PHI2))
    }


def fit_noise(targets, base_cfg, knobs=KNOBS, x0=None):
    """Fit ``knobs`` of ``base_cfg`` so that modelled ``d12, d1, d2`` match ``targets``.

    Residuals are reported as they come out; nothing forces an exact match.
    """
    for k in knobs:
        if k not in KNOBS:
            raise ValidationError(f"unknown noise knob {k!r}")
    if not all(math.isfinite(targets[k]) for k in ("d12", "d1", "d2")):
        raise ValidationError("targets must be finite")
    scale = (base_cfg.alpha_sq / base_cfg.noise_ref_alpha_sq) ** base_cfg.noise_exponent
    upper_noise = 0.999 / scale if scale > 0 else 0.999
    bounds_all = {"csp_noise": (0.0, min(0.999, upper_noise)), "o_noise_bias": (-1.0, 1.0)}
    lo = np.array([bounds_all[k][0] for k in knobs])
    hi = np.array([bounds_all[k][1] for k in knobs])
    if x0 is None:
        x0 = [0.02 if k == "csp_noise" else 0.0 for k in knobs]
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    keys = ("d12", "d1", "d2")
    goal = np.array([targets[k] for k in keys])

    def resid(x):
        model = model_disturbances(base_cfg, **dict(zip(knobs, x)))
        return np.array([model[k] for k in keys]) - goal

    res = least_squares(resid, x0, bounds=(lo, hi), xtol=1e-14, ftol=1e-14, gtol=1e-14,
                        x_scale="jac")
    if not res.success:
        raise FitError(f"noise fit did not converge: {res.message}")
    fitted = dict(zip(knobs, (float(v) for v in res.x)))
    model = model_disturbances(base_cfg, **fitted)
    return NoiseFit(
        knobs=fitted,
        model=model,
        residuals={k: model[k] - targets[k] for k in keys},
        cost=float(res.cost),
    )
