#!/usr/bin/env python3
"""Render simulator output bundles into PNG figures.

Usage::

    python plots/render.py --preset fig5a --in RESULTS_DIR --out PNG_DIR
    python plots/render.py --preset all   --in RESULTS_DIR --out PNG_DIR

``RESULTS_DIR/<preset>/`` is a bundle written by ``qkelly figures`` (or
``qkelly simulate``): ``aggregates.csv`` plus ``meta.json``, or ``sweep.csv``
for the ergotropy sweep.  One PNG is written per figure panel.

Histogram bundles become per-round heatmaps of the payoff distribution
(color = sample fraction, normalized within each round so late-time
concentration stays visible), overlaid with the empirical mean in red and,
on the r panel, the deterministic mean-field tracking curve as cyan dots.
An inset shows the full histogram at one chosen round.  Sweep bundles become
log-x scatter plots of the asymptotic means against input ergotropy, one
series per input-state family.

Rendering is deterministic: fixed backend, dpi, layout, and stripped PNG
metadata, so re-rendering the same bundle reproduces the same bytes.
Input files are never modified.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless + deterministic; must precede pyplot import

import matplotlib.pyplot as plt
import numpy as np

from csvio import RenderError, Table, read_meta, read_table

DPI = 120
HEAT_CMAP = "viridis"
MEAN_COLOR = "red"
FIELD_COLOR = "cyan"
FAMILY_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                 "tab:purple", "tab:brown")
FAMILY_MARKERS = ("o", "s", "^", "D", "v", "P")

PANEL_LABELS = {
    "r": "payoff ratio r",
    "mu": "ergotropy efficiency mu",
}
PANEL_PREFIX = {"r": "bin_", "mu": "mu_bin_"}
PANEL_MEAN = {"r": "mean_r", "mu": "mean_mu"}


def _style() -> None:
    plt.rcParams.update({
        "figure.dpi": DPI,
        "savefig.dpi": DPI,
        "font.size": 9,
        "axes.titlesize": 10,
        "axes.labelsize": 9,
        "legend.fontsize": 8,
    })


def save_png(fig, path: Path) -> None:
    # "Software" would embed the matplotlib version; strip it so output bytes
    # depend only on the input data.
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)


def render_histogram_panel(table: Table, panel: str, name: str,
                           inset_t: int | None, note: str) -> "plt.Figure":
    """Heatmap of one payoff's per-round distribution with mean overlays."""
    if panel not in PANEL_PREFIX:
        raise RenderError(f"unknown panel '{panel}' (expected one of: r, mu)")
    t = table.column("t")
    if len(t) == 0:
        raise RenderError(f"{table.path}: no data rows")
    counts = table.prefixed(PANEL_PREFIX[panel])  # (rounds, bins)
    mean = table.column(PANEL_MEAN[panel])
    n_bins = counts.shape[1]

    # normalize each round to its own max so the colormap spans [0, 1]
    # everywhere even after the distribution concentrates
    col_max = counts.max(axis=1)
    norm = counts / np.where(col_max > 0.0, col_max, 1.0)[:, None]

    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    ax.imshow(norm.T, origin="lower", aspect="auto", cmap=HEAT_CMAP,
              vmin=0.0, vmax=1.0, interpolation="nearest",
              extent=(t[0] - 0.5, t[-1] + 0.5, 0.0, 1.0))
    ax.plot(t, mean, color=MEAN_COLOR, lw=1.6, label="empirical mean")
    if panel == "r":
        field = table.column("mean_field_r")
        if not np.all(np.isnan(field)):
            ax.plot(t, field, ls="none", marker="o", ms=2.6,
                    color=FIELD_COLOR, label="mean-field")
    ax.set_xlabel("betting round t")
    ax.set_ylabel(PANEL_LABELS[panel])
    ax.set_ylim(0.0, 1.0)
    ax.set_title(f"{name}: {PANEL_LABELS[panel]} per round\n{note}".rstrip())
    ax.legend(loc="upper left", framealpha=0.9)

    # inset: the full histogram at one round (clamped to the horizon, so
    # short development runs still render)
    t_in = t[-1] if inset_t is None else min(float(inset_t), t[-1])
    row = int(np.nonzero(t == t_in)[0][0]) if np.any(t == t_in) else len(t) - 1
    total = counts[row].sum()
    frac = counts[row] / (total if total > 0 else 1.0)
    centers = (np.arange(n_bins) + 0.5) / n_bins
    inset = ax.inset_axes((0.62, 0.08, 0.34, 0.30))
    inset.bar(centers, frac, width=1.0 / n_bins, color="white",
              edgecolor="none", alpha=0.9)
    inset.set_xlim(0.0, 1.0)
    inset.set_title(f"t = {int(t[row])}", fontsize=7, pad=2)
    inset.tick_params(labelsize=6)
    inset.patch.set_alpha(0.25)
    fig.tight_layout()
    return fig


def render_sweep_panel(table: Table, panel: str, name: str,
                       note: str) -> "plt.Figure":
    """Asymptotic mean of one payoff vs input ergotropy, per input family."""
    if panel not in PANEL_MEAN:
        raise RenderError(f"unknown panel '{panel}' (expected one of: r, mu)")
    families = table.text_column("family")
    if not families:
        raise RenderError(f"{table.path}: no data rows")
    e0 = table.column("e0")
    y = table.column(PANEL_MEAN[panel])
    order = list(dict.fromkeys(families))  # first-appearance order

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for i, fam in enumerate(order):
        mask = np.array([f == fam for f in families])
        idx = np.argsort(e0[mask], kind="stable")
        ax.plot(e0[mask][idx], y[mask][idx],
                color=FAMILY_COLORS[i % len(FAMILY_COLORS)],
                marker=FAMILY_MARKERS[i % len(FAMILY_MARKERS)],
                ms=4.5, lw=1.0, label=fam)
    ax.set_xscale("log")
    ax.set_xlabel("input ergotropy (quanta)")
    ax.set_ylabel(f"mean {PANEL_LABELS[panel]} at final round")
    ax.set_title(f"{name}: asymptotic {PANEL_LABELS[panel]}\n{note}".rstrip())
    ax.legend(loc="best", framealpha=0.9)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    return fig


def render_bundle(bundle: Path, outdir: Path) -> list[Path]:
    """Render every panel of one bundle directory; returns files written."""
    name = bundle.name
    meta = read_meta(bundle)
    info = meta.get("preset_info", {})
    note = str(info.get("note", ""))

    sweep = bundle / "sweep.csv"
    agg = bundle / "aggregates.csv"
    if sweep.exists():
        table = read_table(sweep)
        if table.kind != "sweep":
            raise RenderError(f"{sweep}: expected a 'sweep' table, got '{table.kind}'")
        panels = ("mu", "r")
        make = lambda p: render_sweep_panel(table, p, name, note)
    elif agg.exists():
        table = read_table(agg)
        if table.kind != "aggregates":
            raise RenderError(
                f"{agg}: expected an 'aggregates' table, got '{table.kind}'")
        panels = tuple(info.get("panels", ("r",)))
        inset_t = info.get("inset_t")
        make = lambda p: render_histogram_panel(table, p, name, inset_t, note)
    else:
        raise RenderError(
            f"{bundle}: no aggregates.csv or sweep.csv "
            "(is this a bundle written by 'qkelly figures'?)")

    written = []
    outdir.mkdir(parents=True, exist_ok=True)
    for panel in panels:
        fig = make(panel)
        path = outdir / f"{name}_{panel}.png"
        save_png(fig, path)
        written.append(path)
    return written


def discover_bundles(indir: Path) -> list[Path]:
    found = [d for d in sorted(indir.iterdir())
             if d.is_dir() and ((d / "aggregates.csv").exists()
                                or (d / "sweep.csv").exists())]
    if not found:
        raise RenderError(f"{indir}: no bundle subdirectories found")
    return found


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render.py",
        description="Render simulator CSV bundles into PNG figures.")
    parser.add_argument("--preset", required=True,
                        help="bundle name under the input directory, or 'all'")
    parser.add_argument("--in", dest="indir", required=True, metavar="DIR",
                        help="directory holding the bundle subdirectories")
    parser.add_argument("--out", dest="outdir", required=True, metavar="DIR",
                        help="directory to write PNG files into")
    args = parser.parse_args(argv)

    _style()
    indir = Path(args.indir)
    outdir = Path(args.outdir)
    try:
        if not indir.is_dir():
            raise RenderError(f"{indir}: not a directory")
        if args.preset == "all":
            bundles = discover_bundles(indir)
        else:
            bundle = indir / args.preset
            if not bundle.is_dir():
                have = ", ".join(d.name for d in discover_bundles(indir))
                raise RenderError(
                    f"{bundle}: no such bundle (found: {have})")
            bundles = [bundle]
        written = []
        for bundle in bundles:
            written.extend(render_bundle(bundle, outdir))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
