#!/usr/bin/env python3
"""Render decay figures from an nsdecay report bundle.

    python3 plots/render.py <report.json> -o <outdir>

The report names a series CSV living next to it and carries the manifest and
any fit verdicts. This package reads only those files; it never imports the
simulation code and never recomputes physics. If a number appears in a
figure, it came out of the CSV or the JSON.

Outputs are deterministic: Agg backend, pinned dpi and layout, PNG metadata
stripped, so rerunning on the same inputs reproduces every byte. Each figure
additionally exports the exact arrays it drew (curves and reference guides)
as a CSV, so any rate comparison shown can be re-fit from the figure's own
data without touching the original series.

Reference-slope guides are taken from the verdicts when present (the fitted
theoretical rate per column); otherwise from the spectrum exponent sigma in
the manifest, at the norm level: -(sigma + 3/2)/2 for amplitudes and
-(sigma + 5/2)/2 for gradients. Negative-norm curves get a flat guide: the
claim for them is boundedness, not decay.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SCHEMA_VERSION = 1
DPI = 120
FIGSIZE = (6.0, 4.2)

EXIT_OK = 0
EXIT_INPUT = 2

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


class InputError(Exception):
    """Report bundle or series CSV is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: named curves from the series, optional guides and markers."""

    name: str
    columns: tuple
    ylabel: str
    guides: tuple = ()        # (slope, label) pairs, drawn as dashed power laws
    t_box: float | None = None
    logy_only: bool = False   # split figures live on a lin-log axis


def read_table(path: str) -> tuple[list, dict]:
    """Schema-versioned CSV -> (columns, column -> float array)."""
    try:
        fh = open(path)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    with fh:
        first = fh.readline().strip()
        if first != f"# schema_version={SCHEMA_VERSION}":
            raise InputError(f"{path}: unsupported or missing schema line {first!r}")
        columns = fh.readline().strip().split(",")
        rows = []
        for lineno, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(columns):
                raise InputError(f"{path}:{lineno}: expected {len(columns)} fields")
            rows.append([float(v) for v in parts])
    data = np.array(rows) if rows else np.zeros((0, len(columns)))
    return columns, {c: data[:, i] for i, c in enumerate(columns)}


def write_table(path: str, columns: list, table: dict) -> None:
    n = len(table[columns[0]])
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(columns)]
    for i in range(n):
        lines.append(",".join(format(float(table[c][i]), ".17g") for c in columns))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_report(path: str) -> tuple[dict, list, dict]:
    """Read report.json and the series CSV it names; returns (report, columns, data)."""
    try:
        with open(path) as fh:
            report = json.load(fh)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if report.get("kind") != "report":
        raise InputError(f"{path}: not a report bundle (kind={report.get('kind')!r})")
    if report.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"{path}: schema_version {report.get('schema_version')!r} unsupported")
    series = report.get("series_csv")
    if not series:
        raise InputError(f"{path}: report names no series CSV")
    series_path = os.path.join(os.path.dirname(os.path.abspath(path)), series)
    columns, data = read_table(series_path)
    if "t" not in data:
        raise InputError(f"{series_path}: no 't' column")
    return report, columns, data


def _sigma(report: dict) -> float | None:
    manifest = report.get("manifest") or {}
    if report.get("source_kind") == "oracle":
        profile = manifest.get("profile") or {}
        return profile.get("sigma")
    init = manifest.get("init") or {}
    return init.get("sigma")


def _verdict_slope(report: dict, column: str) -> float | None:
    fits = ((report.get("verdicts") or {}).get("fits") or {})
    entry = fits.get(column) or {}
    return entry.get("theoretical")


def _guides_for(report: dict, columns: list, stem: str) -> tuple:
    """One guide per distinct slope: verdicts first, else sigma-based norm rate."""
    slopes = []
    for col in columns:
        s = _verdict_slope(report, col)
        if s is not None and s not in slopes:
            slopes.append(s)
    if not slopes:
        sigma = _sigma(report)
        if sigma is not None:
            offset = {"l2": 1.5, "grad": 2.5, "grad2": 3.5}[stem]
            slopes = [-(sigma + offset) / 2.0]
    return tuple((s, f"slope {s:g}") for s in slopes)


def default_figures(report: dict, columns: list) -> list:
    """Figure plan derived from whichever column groups the series carries."""
    t_box = (report.get("manifest") or {}).get("t_box")
    groups = {
        "amplitude": [c for c in columns if c.startswith("l2_") and c != "l2_udot"],
        "gradients": [c for c in columns if c.startswith("grad_") and not c.startswith("grad2_")],
        "second_gradients": [c for c in columns if c.startswith("grad2_")],
    }
    figures = []
    for (name, cols), stem in zip(groups.items(), ("l2", "grad", "grad2")):
        if cols:
            figures.append(FigureSpec(name=name, columns=tuple(cols), ylabel="norm",
                                      guides=_guides_for(report, cols, stem),
                                      t_box=t_box))
    neg = [c for c in columns if c.startswith("neg_energy_s")]
    if neg:
        figures.append(FigureSpec(name="negative_norms", columns=tuple(neg),
                                  ylabel="negative-order energy",
                                  guides=((0.0, "bounded"),), t_box=t_box))
    energy = [c for c in columns if c in ("e1_sq", "e2_sq")]
    if energy:
        figures.append(FigureSpec(name="energy", columns=tuple(energy),
                                  ylabel="weighted energy", t_box=t_box))
    split = [c for c in columns if c in ("split_low", "split_high")]
    if split:
        figures.append(FigureSpec(name="splitting", columns=tuple(split),
                                  ylabel="split gradient energy", t_box=t_box,
                                  logy_only=True))
    return figures


def render_figure(spec: FigureSpec, data: dict, outdir: str) -> dict:
    """Draw one figure; write <name>.png and <name>.csv; return an index entry.

    Log axes only admit positive values, so identically-zero curves (a pure
    shear profile zeroes whole components) are dropped per figure and listed
    in the index entry rather than silently blanking every row.
    """
    t_all = data["t"]
    base = np.ones(len(t_all), dtype=bool) if spec.logy_only else t_all > 0
    usable, dropped = [], []
    for col in spec.columns:
        if np.count_nonzero(base & (data[col] > 0)) >= 2:
            usable.append(col)
        else:
            dropped.append(col)
    if not usable:
        raise InputError(f"figure {spec.name!r}: no curve has 2 positive samples")
    mask = base.copy()
    for col in usable:
        mask &= data[col] > 0
    t = t_all[mask]
    if len(t) < 2:
        raise InputError(f"figure {spec.name!r}: fewer than 2 usable samples")

    export_cols = ["t"]
    export = {"t": t}
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for col, color in zip(usable, _COLORS):
        y = data[col][mask]
        ax.plot(t, y, color=color, lw=1.4, label=col)
        export_cols.append(col)
        export[col] = y

    # guides anchor on the first drawn curve at the start of the range
    y0 = data[usable[0]][mask]
    for slope, label in spec.guides:
        guide = y0[0] * (t / t[0]) ** slope
        ax.plot(t, guide, color="0.4", lw=1.0, ls="--", label=label)
        gcol = f"guide_{slope:g}"
        export_cols.append(gcol)
        export[gcol] = guide

    if spec.t_box is not None and t[0] < spec.t_box <= t[-1]:
        ax.axvline(spec.t_box, color="0.6", lw=0.8, ls=":")
        ax.text(spec.t_box, ax.get_ylim()[0], " t_box", fontsize=8,
                color="0.4", va="bottom")

    if not spec.logy_only:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(spec.ylabel)
    ax.legend(fontsize=8, frameon=False)
    ax.set_title(spec.name)
    fig.tight_layout()

    png_path = os.path.join(outdir, f"{spec.name}.png")
    fig.savefig(png_path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    csv_path = os.path.join(outdir, f"{spec.name}.csv")
    write_table(csv_path, export_cols, export)
    return {
        "name": spec.name,
        "png": os.path.basename(png_path),
        "data": os.path.basename(csv_path),
        "columns": usable,
        "dropped": dropped,
        "guides": [slope for slope, _ in spec.guides],
        "t_box": spec.t_box,
    }


def render_report(report_path: str, outdir: str) -> dict:
    report, columns, data = load_report(report_path)
    figures = default_figures(report, columns)
    if not figures:
        raise InputError(f"{report_path}: no plottable column groups in {columns}")
    os.makedirs(outdir, exist_ok=True)
    entries = [render_figure(spec, data, outdir) for spec in figures]
    index = {
        "schema_version": SCHEMA_VERSION,
        "kind": "figures",
        "source_kind": report.get("source_kind"),
        "source": os.path.basename(report_path),
        "figures": entries,
    }
    with open(os.path.join(outdir, "index.json"), "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return index


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render decay figures from an nsdecay report bundle.")
    parser.add_argument("report", help="path to report.json")
    parser.add_argument("-o", "--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        index = render_report(args.report, args.out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    names = ", ".join(e["name"] for e in index["figures"])
    print(f"rendered {len(index['figures'])} figures to {args.out}: {names}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
