"""Command-line front end.

Commands: validate | simulate | exact | moments | optimize | figures.
Exit codes: 0 success, 1 configuration/usage problem, 2 runtime
invariant violation.  All randomness is seeded and all serialization
deterministic, so identical invocations produce byte-identical files.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    growth_rate,
    kelly_optimize,
    mean_field_r_curve,
    moment_report,
    quantum_doubling_rate,
)
from .betting import InputProfile, validate
from .engine import enumerate_exact, sample_trajectories
from .errors import (
    ChannelViolation,
    ConfigError,
    DomainError,
    EnumerationSizeError,
    InvariantViolation,
    UncertaintyViolation,
)
from .output import (
    EXACT_COLUMNS,
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    aggregate_columns,
    aggregate_json_rows,
    trajectory_rows,
    write_aggregates,
    write_exact,
    write_json_table,
    write_meta,
    write_sweep,
    write_trajectories,
)
from .presets import FIG6, HIST_PRESETS, N_SAMPLES, PRESET_NAMES, SEED
from .runconfig import RunSpec, read_run_file, resolve_run, spec_meta


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2
    for invariant violations, so force usage problems onto exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return format(x, ".12g")


def _common_flags() -> argparse.ArgumentParser:
    par = argparse.ArgumentParser(add_help=False)
    par.add_argument("--config", metavar="PATH", help="YAML or JSON run file")
    par.add_argument("--preset", metavar="NAME",
                     help="experiment preset supplying baseline parameters")
    par.add_argument("--seed", type=int, metavar="U64", help="base RNG seed")
    par.add_argument("--samples", type=int, metavar="N",
                     help="number of Monte Carlo trajectories")
    par.add_argument("--steps", type=int, metavar="T", help="rounds per trajectory")
    par.add_argument("--out", metavar="DIR", help="output directory")
    par.add_argument("--format", choices=("csv", "json"),
                     help="dataset format (default csv)")
    par.add_argument("--workers", type=int, metavar="N",
                     help="parallel sampling chunks (output is identical for any value)")
    par.add_argument("--traj-samples", type=int, dest="traj_samples", metavar="N",
                     help="cap on per-trajectory rows written (default 256)")
    return par


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkelly", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qkelly {__version__}")
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    q = sub.add_parser("validate", parents=[common],
                       help="check a configuration and report its regime")
    q.set_defaults(func=cmd_validate)

    q = sub.add_parser("simulate", parents=[common],
                       help="sample trajectories and write the dataset bundle")
    q.set_defaults(func=cmd_simulate)

    q = sub.add_parser("exact", parents=[common],
                       help="enumerate every trajectory up to a short horizon")
    q.add_argument("--t", type=int, metavar="T",
                   help="enumeration horizon (default: run.t_enum)")
    q.set_defaults(func=cmd_exact)

    q = sub.add_parser("moments", parents=[common],
                       help="closed-form moment table with enumeration audit")
    q.add_argument("--t", type=int, metavar="T",
                   help="largest round in the table (default 12)")
    q.set_defaults(func=cmd_moments)

    q = sub.add_parser("optimize", parents=[common],
                       help="growth-optimal bet split and the config's gap to it")
    q.set_defaults(func=cmd_optimize)

    q = sub.add_parser("figures", parents=[common],
                       help="emit the dataset bundle(s) behind a named figure preset")
    q.set_defaults(func=cmd_figures)
    return parser


def _resolve(args) -> RunSpec:
    file_data = read_run_file(args.config) if args.config else None
    overrides = dict(
        seed=args.seed, n_samples=args.samples, t_max=args.steps,
        format=args.format, out=args.out,
        trajectory_samples=args.traj_samples, workers=args.workers,
    )
    return resolve_run(file_data, preset=args.preset, overrides=overrides)


def cmd_validate(args) -> int:
    spec = _resolve(args)
    cfg = spec.config
    fairness = validate(cfg)
    rep = quantum_doubling_rate(cfg)
    profile = InputProfile.from_params(cfg.input)
    payload = {
        "fairness": fairness.value,
        "regime": rep.regime,
        "G": rep.g_rate,
        "E0": profile.e0,
        "ergotropy0": profile.erg0,
        "r0": profile.r0,
        "inv_g2": rep.inv_g2,
        "inv_g4": rep.inv_g4,
        "horses": [
            {"j": j + 1, "p": cfg.p[j], "k": cfg.k[j], "eta": cfg.eta[j],
             "g2": rep.map_slopes[j], "alpha": rep.map_intercepts[j]}
            for j in range(cfg.J)
        ],
    }
    if spec.output.formats == ("json",) or args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0
    print(f"fairness:   {fairness.value}")
    print(f"regime:     {rep.regime}")
    print(f"G:          {_num(rep.g_rate)}")
    print(f"E0:         {_num(profile.e0)}")
    print(f"ergotropy0: {_num(profile.erg0)}")
    print(f"r0:         {_num(profile.r0)}")
    print(f"E[1/g^2]:   {_num(rep.inv_g2)}    E[1/g^4]: {_num(rep.inv_g4)}")
    print("horse   p          k          eta        g^2        alpha")
    for h in payload["horses"]:
        print(f"{h['j']:>5}   {h['p']:<8.6g}   {h['k']:<8.6g}   {h['eta']:<8.6g}"
              f"   {h['g2']:<8.6g}   {h['alpha']:<8.6g}")
    return 0


def _preset_info(spec: RunSpec) -> dict | None:
    if spec.preset is None:
        return None
    pr = HIST_PRESETS[spec.preset]
    return {"name": pr.name, "inset_t": pr.inset_t,
            "panels": list(pr.panels), "note": pr.note}


def _write_bundle(spec: RunSpec, outdir: Path) -> list[str]:
    """Simulate one configured game and write its dataset files."""
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = spec.config
    batch = sample_trajectories(cfg, workers=spec.workers)
    agg = batch.aggregates(spec.output.gamma_hist_max,
                           bins=spec.output.histogram_bins)
    try:
        mf = mean_field_r_curve(cfg, cfg.t_max)
    except DomainError:
        mf = None

    written: list[str] = []
    limit = spec.output.trajectory_samples
    if "csv" in spec.output.formats:
        write_trajectories(outdir / "trajectories.csv", batch, limit)
        write_aggregates(outdir / "aggregates.csv", agg, mf)
        written += ["trajectories.csv", "aggregates.csv"]
    if "json" in spec.output.formats:
        write_json_table(outdir / "trajectories.json", "trajectories",
                         TRAJECTORY_COLUMNS, trajectory_rows(batch, limit))
        write_json_table(outdir / "aggregates.json", "aggregates",
                         aggregate_columns(spec.output.histogram_bins),
                         aggregate_json_rows(agg, mf))
        written += ["trajectories.json", "aggregates.json"]

    meta = spec_meta(spec)
    meta["version"] = __version__
    meta["gamma_hist_max"] = agg.gamma_hist_max
    meta["files"] = written
    info = _preset_info(spec)
    if info is not None:
        meta["preset_info"] = info
    write_meta(outdir / "meta.json", meta)
    written.append("meta.json")
    return written


def cmd_simulate(args) -> int:
    spec = _resolve(args)
    if spec.output.directory is None:
        print("error: no output directory (use --out or output.directory)",
              file=sys.stderr)
        return 1
    outdir = Path(spec.output.directory)
    files = _write_bundle(spec, outdir)
    cfg = spec.config
    print(f"wrote {cfg.n_samples} samples x {cfg.t_max} rounds -> "
          f"{outdir} ({', '.join(files)})")
    return 0


def cmd_exact(args) -> int:
    spec = _resolve(args)
    cfg = spec.config
    horizon = args.t if args.t is not None else spec.t_enum
    dist = enumerate_exact(cfg, horizon)
    if spec.output.directory is not None:
        outdir = Path(spec.output.directory)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in spec.output.formats:
            write_exact(outdir / "exact.csv", dist)
            written.append("exact.csv")
        if "json" in spec.output.formats:
            write_json_table(
                outdir / "exact.json", "exact", EXACT_COLUMNS,
                [(m.t, len(lv.prob), m.prob_total, m.e_gamma, m.e_gamma2,
                  m.e_r, m.e_mu)
                 for m, lv in zip(dist.moments, dist.levels)])
            written.append("exact.json")
        meta = spec_meta(spec)
        meta["version"] = __version__
        meta["files"] = written
        write_meta(outdir / "meta.json", meta)
        print(f"enumerated {cfg.J}^{horizon} trajectories -> {outdir}")
        return 0
    print("t   trajectories   E[gamma]        E[gamma^2]      E[r]            E[mu]")
    for mom, level in zip(dist.moments, dist.levels):
        print(f"{mom.t:<3} {len(level.prob):<14} {_num(mom.e_gamma):<15} "
              f"{_num(mom.e_gamma2):<15} {_num(mom.e_r):<15} {_num(mom.e_mu)}")
    return 0


def cmd_moments(args) -> int:
    spec = _resolve(args)
    cfg = spec.config
    horizon = args.t if args.t is not None else 12
    if horizon < 1:
        print(f"error: --t must be >= 1, got {horizon}", file=sys.stderr)
        return 1
    rep = moment_report(cfg, range(1, horizon + 1), t_enum=spec.t_enum)

    def cell(x, missing: str) -> str:
        return missing if x is None else _num(x)

    if args.format == "json":
        payload = {
            "blocks": dataclasses.asdict(rep.blocks),
            "rows": [dataclasses.asdict(row) for row in rep.rows],
            "gamma_limit": None if math.isinf(rep.gamma_limit) else rep.gamma_limit,
            "gamma_diverges": math.isinf(rep.gamma_limit),
            "second_limit_printed": rep.second_limit_printed,
            "mean_field_limit": rep.mean_field_limit,
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0

    b = rep.blocks
    print(f"E[1/g^2] = {_num(b.inv_g2)}   E[1/g^4] = {_num(b.inv_g4)}   "
          f"E[alpha/g^2] = {_num(b.alpha_g2)}   E[alpha^2/g^4] = {_num(b.alpha2_g4)}")
    print("t     E[gamma]         E[gamma^2] printed   E[gamma^2] exact     mean_field_r")
    for row in rep.rows:
        mark = " *" if row.second_discrepant else ""
        print(f"{row.t:<5} {_num(row.gamma_mean):<16} {_num(row.second_printed):<20} "
              f"{cell(row.second_oracle, 'skipped') + mark:<20} "
              f"{cell(row.mean_field_r, 'undefined')}")
    if any(row.second_discrepant for row in rep.rows):
        print("(* printed closed form disagrees with exact enumeration; "
              "the enumeration is authoritative)")
    gamma_tail = ("diverges" if math.isinf(rep.gamma_limit)
                  else _num(rep.gamma_limit))
    print(f"asymptotics: E[gamma] -> {gamma_tail}; "
          f"printed E[gamma^2] -> {cell(rep.second_limit_printed, 'undefined')}; "
          f"mean-field r -> {cell(rep.mean_field_limit, 'undefined')}")
    return 0


def cmd_optimize(args) -> int:
    spec = _resolve(args)
    cfg = spec.config
    res = kelly_optimize(cfg.p, cfg.k)
    g_cur = growth_rate(cfg.p, cfg.k, cfg.eta)
    gap = res.g - g_cur
    if args.format == "json":
        payload = {
            "eta_star": list(res.eta),
            "eta_star_squared": [x * x for x in res.eta],
            "G_star": res.g,
            "eta": list(cfg.eta),
            "G": g_cur,
            "gap": gap,
        }
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0
    print("optimal split: eta*_j = sqrt(p_j), independent of the odds")
    print(f"eta*:     ({', '.join(_num(x) for x in res.eta)})")
    print(f"eta*^2:   ({', '.join(_num(x * x) for x in res.eta)})")
    print(f"G*:       {_num(res.g)}")
    print(f"config G: {_num(g_cur)}   (eta = ({', '.join(_num(x) for x in cfg.eta)}))")
    print(f"gap:      {_num(gap)}")
    return 0


def _figure_overrides(args) -> dict:
    return dict(seed=args.seed, n_samples=args.samples, t_max=args.steps,
                format=args.format, trajectory_samples=args.traj_samples,
                workers=args.workers)


def _run_sweep(args, outdir: Path) -> None:
    n_samples = args.samples if args.samples is not None else N_SAMPLES
    seed = args.seed if args.seed is not None else SEED
    t_max = args.steps if args.steps is not None else FIG6.t_max
    workers = args.workers if args.workers is not None else 1
    rows = []
    for fam in FIG6.families:
        for e0 in FIG6.e0_values:
            cfg = FIG6.config(fam, e0, n_samples=n_samples, seed=seed)
            if t_max != cfg.t_max:
                cfg = dataclasses.replace(cfg, t_max=t_max)
            batch = sample_trajectories(cfg, workers=workers)
            n = float(batch.n_samples)
            mean_r = math.fsum(batch.r[-1]) / n
            mean_mu = math.fsum(batch.mu[-1]) / n
            std_r = math.sqrt(math.fsum((batch.r[-1] - mean_r) ** 2) / n)
            std_mu = math.sqrt(math.fsum((batch.mu[-1] - mean_mu) ** 2) / n)
            rows.append((fam.label, e0, cfg.input.m2, cfg.input.zeta_abs,
                         t_max, mean_r, std_r, mean_mu, std_mu))
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    formats = (args.format,) if args.format else ("csv",)
    if "csv" in formats:
        write_sweep(outdir / "sweep.csv", rows)
        written.append("sweep.csv")
    if "json" in formats:
        write_json_table(outdir / "sweep.json", "sweep", SWEEP_COLUMNS, rows)
        written.append("sweep.json")
    meta = {
        "preset_info": {"name": FIG6.name, "note": FIG6.note,
                        "families": [f.label for f in FIG6.families],
                        "e0_values": list(FIG6.e0_values)},
        "game": {"p": list(FIG6.p), "k": list(FIG6.k), "eta": list(FIG6.eta)},
        "run": {"t_max": t_max, "n_samples": n_samples, "seed": seed},
        "version": __version__,
        "files": written,
    }
    write_meta(outdir / "meta.json", meta)


def cmd_figures(args) -> int:
    if args.out is None:
        print("error: figures requires --out DIR", file=sys.stderr)
        return 1
    if args.preset is None:
        print("error: figures requires --preset NAME "
              f"(one of {', '.join(PRESET_NAMES)}, or 'all')", file=sys.stderr)
        return 1
    if args.preset == "all":
        names = PRESET_NAMES
    elif args.preset in PRESET_NAMES:
        names = (args.preset,)
    else:
        print(f"error: unknown preset {args.preset!r}; "
              f"choose from {', '.join(PRESET_NAMES)} or 'all'", file=sys.stderr)
        return 1

    base = Path(args.out)
    for name in names:
        outdir = base / name
        if name == FIG6.name:
            _run_sweep(args, outdir)
        else:
            overrides = _figure_overrides(args)
            overrides["out"] = str(outdir)
            spec = resolve_run(None, preset=name, overrides=overrides)
            _write_bundle(spec, outdir)
        print(f"{name}: wrote dataset -> {outdir}")
    print("render with: python plots/render.py --preset NAME "
          f"--in {base} --out {base / 'png'}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"error: {violation}", file=sys.stderr)
        return 1
    except (InvariantViolation, UncertaintyViolation, ChannelViolation) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except (DomainError, EnumerationSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
