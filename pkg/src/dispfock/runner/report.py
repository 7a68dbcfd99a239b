"""Result files: versioned CSV tables, JSON-lines records and figures.

CSV layout::

    # dispfock-csv v1 <table>
    # seed = <seed>
    # plan: <key> = <value>       (one line per resolved plan key)
    col_a,col_b,...
    ...

Column schemas are frozen per table in :data:`SCHEMAS`.
"""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import ValidationError  # noqa: E402

FORMAT_TAG = "dispfock-csv v1"

SCHEMAS = {
    "ndc": ("label", "theta_deg", "alpha_sq", "m3_without_O", "m3_with_O",
            "d_exact", "d_measured", "sigma_d", "n_plus", "n_minus", "n_plus_O", "n_minus_O"),
    "violation": ("quantity", "value", "sigma", "significance"),
    "hom": ("angle_deg", "rate", "sigma", "model"),
    "hom_summary": ("quantity", "value", "sigma"),
    "size": ("alpha_sq", "P_g", "noise", "tolerable_noise", "N", "disconnectivity",
             "pg_window_cohfock", "pg_optimal_pm", "reference_N", "discrepancy"),
    "sweep": ("x", "y", "sigma", "y_exact"),
    "fit_noise": ("quantity", "target", "model", "residual"),
    "fit_knobs": ("knob", "value"),
}

_RC = {
    "figure.figsize": (6.0, 4.0),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "savefig.dpi": 120,
    "svg.hashsalt": "dispfock",
}


def ensure_dir(path):
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ValidationError(f"cannot create output directory {path}: {exc}") from exc
    probe = path / ".write_test"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ValidationError(f"output directory {path} is not writable: {exc}") from exc
    return path


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, table, rows, plan=None, seed=None):
    """Write ``rows`` (dicts keyed by the table's schema) with a header block."""
    columns = SCHEMAS[table]
    with open(path, "w", newline="") as fh:
        fh.write(f"# {FORMAT_TAG} {table}\n")
        if seed is not None:
            fh.write(f"# seed = {seed}\n")
        for line in (plan.describe() if plan is not None else ()):
            fh.write(f"# plan: {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return Path(path)


def read_csv(path):
    """Return ``(table, rows)``; comment lines are skipped."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith(f"# {FORMAT_TAG} "):
            raise ValidationError(f"{path}: not a {FORMAT_TAG} file")
        table = first.split()[-1]
        lines = [ln for ln in fh if not ln.startswith("#")]
    return table, list(csv.DictReader(lines))


def write_jsonl(path, table, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps({"table": table, **row}, sort_keys=True) + "\n")
    return Path(path)


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def plot_ndc(path, rows):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        labels = [r["label"] for r in rows]
        ax.bar(labels, [r["d_measured"] for r in rows], yerr=[r["sigma_d"] for r in rows],
               color=["#4c72b0", "#55a868", "#c44e52"][: len(rows)], capsize=4)
        ax.scatter(labels, [r["d_exact"] for r in rows], color="k", marker="_", s=400,
                   zorder=3, label="model")
        ax.axhline(0.0, color="0.3", lw=0.8)
        ax.set_ylabel("disturbance d")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_hom(path, rows, fit_curve):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.errorbar([r["angle_deg"] for r in rows], [r["rate"] for r in rows],
                    yerr=[r["sigma"] for r in rows], fmt="o", color="#c44e52", ms=4, capsize=2)
        ax.plot(*fit_curve, color="#4c72b0")
        ax.set_xlabel("HWP angle (deg)")
        ax.set_ylabel("coincidences")
        return _save(fig, path)


def plot_xy(path, rows, xlabel, ylabel):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        x = [r["x"] for r in rows]
        ax.errorbar(x, [r["y"] for r in rows], yerr=[r["sigma"] for r in rows],
                    fmt="o", ms=3, color="#c44e52", capsize=2, label="simulated")
        ax.plot(x, [r["y_exact"] for r in rows], color="#4c72b0", label="model")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_size(path, rows):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot([r["alpha_sq"] for r in rows], [r["N"] for r in rows], "o-", color="#4c72b0")
        ax.set_xlabel(r"$|\alpha|^2$")
        ax.set_ylabel("effective size N")
        return _save(fig, path)
