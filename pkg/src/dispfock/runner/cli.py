"""Command-line entry point: ``dispfock {ndc,hom,size,sweep,fit-noise}``.

Exit status is 0 on success, 1 for validation errors (bad flags, plans or
paths) and 2 for numerical failures.
"""

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .. import hom, ndc, size
from ..errors import NumericalError, ValidationError
from . import report
from .fitnoise import fit_noise
from .plan import ExperimentPlan
from .simulate import PREPARATIONS, simulate_disturbance, simulate_ndc_set
from .stats import rng_from

log = logging.getLogger("dispfock")

IDEAL_OVERRIDES = {
    "memory.eta_abs": 1.0,
    "memory.eta_s": 1.0,
    "detector.eta_det": 1.0,
    "detector.dark_prob": 0.0,
    "ndc.csp_noise": 0.0,
    "ndc.mode_match_R": 1.0,
    "ndc.bs_transmittance": 1.0,
    "ndc.o_noise_bias": 0.0,
}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--plan", help="plan file (section.key = value); defaults are the experimental values")
    common.add_argument("--out", help="directory for CSV/figure output")
    common.add_argument("--seed", type=int, help="64-bit master seed")
    common.add_argument("--theta-deg", type=float, help="preparation HWP angle in degrees")
    common.add_argument("--alpha-sq", type=float, help="displacement size |alpha|^2")
    common.add_argument("--ideal", action="store_true", help="lossless, noise-free chain")
    common.add_argument("--preset", choices=["paper"], default="paper", help="parameter preset")
    common.add_argument("--resamples", type=int, help="resamples for error bars")
    common.add_argument("--jobs", type=int, help="worker processes for sweeps")
    common.add_argument("--jsonl", action="store_true", help="also write JSON-lines records")

    parser = _Parser(prog="dispfock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("ndc", "control and main NDC experiments with Monte Carlo error bars"),
        ("hom", "HOM visibility: expected value, synthetic dip and fit"),
        ("size", "effective size and disconnectivity"),
        ("sweep", "disturbance over a theta or |alpha|^2 grid"),
        ("fit-noise", "fit the CSP noise knobs to target disturbances"),
    ):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _plan_from_args(args):
    overrides = {
        "run.seed": args.seed,
        "run.resamples": args.resamples,
        "run.jobs": args.jobs,
        "ndc.theta_deg": args.theta_deg,
    }
    if args.alpha_sq is not None:
        overrides["ndc.alpha_sq"] = args.alpha_sq
        overrides["size.alpha_sq"] = args.alpha_sq
    if args.ideal:
        overrides.update(IDEAL_OVERRIDES)
    return ExperimentPlan.build(args.command, args.plan, overrides)


def _outputs(args, plan, table, rows, figure=None, extra_tables=()):
    if not args.out:
        return
    out = report.ensure_dir(args.out)
    stem = args.command.replace("-", "_")
    report.write_csv(out / f"{stem}.csv", table, rows, plan, plan.seed)
    for name, extra_rows in extra_tables:
        report.write_csv(out / f"{name}.csv", name, extra_rows, plan, plan.seed)
    if args.jsonl:
        report.write_jsonl(out / f"{stem}.jsonl", table, rows)
    if figure is not None:
        figure(out / f"{stem}.png")
    log.info("wrote results to %s", out)


# --------------------------------------------------------------------------

def cmd_ndc(args, plan):
    theta = plan.get("ndc.theta_deg") if "ndc.theta_deg" in plan.values else None
    base = plan.ndc_config()
    rows = []
    if theta is not None:
        cfg = replace(base, theta_prep=math.radians(theta))
        sim = simulate_disturbance(cfg, plan.shots, plan.seed, plan.resamples)
        print(f"d={sim.exact.d:.6f}")
        print(f"d_measured={sim.measured.d:.6f} +- {sim.measured.sigma_d:.6f}")
        rows.append(_ndc_row("custom", theta, cfg, sim))
        _outputs(args, plan, "ndc", rows, lambda p: report.plot_ndc(p, rows))
        return 0
    sims, summary = simulate_ndc_set(base, plan.shots, plan.seed, plan.resamples)
    for label, theta_rad in PREPARATIONS:
        sim = sims[label]
        rows.append(_ndc_row(label, math.degrees(theta_rad), base, sim))
        print(f"{label}: d={sim.exact.d:.6f} d_measured={sim.measured.d:.6f} "
              f"+- {sim.measured.sigma_d:.6f}")
    print(f"v1=|d12|-|d1|={summary.v1:.5f} +- {summary.sigma_v1:.5f} ({summary.significance1:.1f} sigma)")
    print(f"v2=|d12|-|d2|={summary.v2:.5f} +- {summary.sigma_v2:.5f} ({summary.significance2:.1f} sigma)")
    violation = [
        {"quantity": "v1", "value": summary.v1, "sigma": summary.sigma_v1,
         "significance": summary.significance1},
        {"quantity": "v2", "value": summary.v2, "sigma": summary.sigma_v2,
         "significance": summary.significance2},
    ]
    _outputs(args, plan, "ndc", rows, lambda p: report.plot_ndc(p, rows),
             extra_tables=[("violation", violation)])
    return 0


def _ndc_row(label, theta_deg, cfg, sim):
    return {
        "label": label,
        "theta_deg": float(theta_deg),
        "alpha_sq": cfg.alpha_sq,
        "m3_without_O": sim.measured.m3_without_O,
        "m3_with_O": sim.measured.m3_with_O,
        "d_exact": sim.exact.d,
        "d_measured": sim.measured.d,
        "sigma_d": sim.measured.sigma_d,
        "n_plus": sim.counts_without_O[0],
        "n_minus": sim.counts_without_O[1],
        "n_plus_O": sim.counts_with_O[0],
        "n_minus_O": sim.counts_with_O[1],
    }


def cmd_hom(args, plan):
    src, bs = plan.source(), plan.splitter()
    v_e = hom.expected_visibility(hom.input_pair_probs(src), bs)
    v_m = plan.get("hom.v_measured")
    print(f"V_e={v_e:.6f}")
    angles = np.arange(
        plan.get("hom.angle_start_deg"),
        plan.get("hom.angle_stop_deg") + 0.5 * plan.get("hom.angle_step_deg"),
        plan.get("hom.angle_step_deg"),
    )
    offset = math.radians(plan.get("hom.offset_deg"))
    heralds = plan.get("hom.heralds_per_angle")
    expected = heralds * hom.dip_curve(src, bs, np.radians(angles), visibility=v_m, offset=offset)
    counts = rng_from(plan.seed).poisson(expected).astype(float)
    sigma = np.sqrt(np.maximum(counts, 1.0))
    fit = hom.fit_visibility(np.radians(angles), counts, sigma)
    ratio = hom.mode_match_ratio(fit.visibility, v_e)
    print(f"V_fit={fit.visibility:.6f} +- {fit.sigma:.6f}")
    print(f"R={ratio:.6f}")
    rows = [
        {"angle_deg": float(a), "rate": float(c), "sigma": float(s), "model": float(e)}
        for a, c, s, e in zip(angles, counts, sigma, expected)
    ]
    summary = [
        {"quantity": "V_e", "value": v_e, "sigma": 0.0},
        {"quantity": "V_fit", "value": fit.visibility, "sigma": fit.sigma},
        {"quantity": "R", "value": ratio, "sigma": fit.sigma / v_e},
    ]
    fine = np.linspace(angles[0], angles[-1], 361)
    curve = (fine, hom.dip_model(np.radians(fine), fit.visibility, fit.baseline, fit.offset))
    _outputs(args, plan, "hom", rows, lambda p: report.plot_hom(p, rows, curve),
             extra_tables=[("hom_summary", summary)])
    return 0


def cmd_size(args, plan):
    p_g = plan.get("size.p_g")
    noise = plan.get("size.noise", str)
    eta_abs = plan.get("memory.eta_abs")
    corrected = hom.corrected_displacement_size(plan.get("size.alpha_sq"), plan.get("size.mode_match_R"))
    grid = sorted(set(plan.get("size.grid", list)) | {corrected})
    rows = []
    for alpha_sq in grid:
        r = size.size_report(alpha_sq, p_g, eta_abs, noise)
        rows.append({
            "alpha_sq": alpha_sq, "P_g": p_g, "noise": noise,
            "tolerable_noise": r.tolerable_noise, "N": r.n_eff,
            "disconnectivity": r.disconnectivity,
            "pg_window_cohfock": r.pg_window_cohfock, "pg_optimal_pm": r.pg_optimal_pm,
            "reference_N": r.reference_n, "discrepancy": r.discrepancy,
        })
        marker = " (corrected experimental size)" if alpha_sq == corrected else ""
        print(f"|alpha|^2={alpha_sq:.4f}: N={r.n_eff:.4f} D={r.disconnectivity:.4f} "
              f"P_g(window)={r.pg_window_cohfock:.4f} P_g(optimal,+-)={r.pg_optimal_pm:.4f}{marker}")
    excitations = ndc.excitation_count(plan.get("ndc.alpha_sq"), 1.0, plan.memory())
    print(f"stored excitations={math.floor(excitations)} ({excitations:.2f})")
    _outputs(args, plan, "size", rows, lambda p: report.plot_size(p, rows))
    return 0


def _sweep_point(task):
    cfg, shots, seed, resamples = task
    sim = simulate_disturbance(cfg, shots, seed, resamples)
    return sim.measured.d, sim.measured.sigma_d, sim.exact.d


def sweep_grid(plan):
    start, stop, step = (plan.get(f"sweep.{k}") for k in ("start", "stop", "step"))
    if step <= 0 or stop < start:
        raise ValidationError("sweep needs step > 0 and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return start + step * np.arange(count)


def run_sweep(plan):
    """Evaluate the sweep; returns rows in grid order."""
    param = plan.get("sweep.param", str)
    if param not in ("theta_deg", "alpha_sq"):
        raise ValidationError(f"sweep.param must be theta_deg or alpha_sq, got {param!r}")
    grid = sweep_grid(plan)
    base = plan.ndc_config()
    seeds = np.random.SeedSequence(plan.seed).spawn(len(grid))
    tasks = []
    for x, child in zip(grid, seeds):
        if param == "theta_deg":
            cfg = replace(base, theta_prep=math.radians(x))
        else:
            cfg = replace(base, alpha=math.sqrt(x))
        tasks.append((cfg, plan.shots, child, plan.resamples))
    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    return [
        {"x": float(x), "y": y, "sigma": s, "y_exact": e}
        for x, (y, s, e) in zip(grid, results)
    ]


def cmd_sweep(args, plan):
    rows = run_sweep(plan)
    param = plan.get("sweep.param", str)
    for r in rows:
        print(f"{param}={r['x']:.4f} d={r['y_exact']:.6f} d_measured={r['y']:.6f} +- {r['sigma']:.6f}")
    xlabel = "preparation angle (deg)" if param == "theta_deg" else r"$|\alpha|^2$"
    _outputs(args, plan, "sweep", rows, lambda p: report.plot_xy(p, rows, xlabel, "disturbance d"))
    return 0


def cmd_fit_noise(args, plan):
    targets = {k: plan.get(f"fit.{k}") for k in ("d12", "d1", "d2")}
    result = fit_noise(targets, plan.ndc_config())
    for k, v in result.knobs.items():
        print(f"{k}={v:.6g}")
    for k in ("d12", "d1", "d2"):
        print(f"{k}: target={targets[k]:.5f} model={result.model[k]:.5f} residual={result.residuals[k]:+.5f}")
    rows = [
        {"quantity": k, "target": targets[k], "model": result.model[k], "residual": result.residuals[k]}
        for k in ("d12", "d1", "d2")
    ]
    knobs = [{"knob": k, "value": v} for k, v in result.knobs.items()]
    _outputs(args, plan, "fit_noise", rows, extra_tables=[("fit_knobs", knobs)])
    return 0


COMMANDS = {
    "ndc": cmd_ndc,
    "hom": cmd_hom,
    "size": cmd_size,
    "sweep": cmd_sweep,
    "fit-noise": cmd_fit_noise,
}


def main(argv=None):
    level = os.environ.get("DISPFOCK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        plan = _plan_from_args(args)
        if args.out:
            report.ensure_dir(args.out)
        return COMMANDS[args.command](args, plan)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
