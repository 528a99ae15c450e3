"""Run configuration: files, presets, CLI overrides, and their merge.

A run file is YAML or JSON with up to four sections::

    game:
      J: 2                       # optional, cross-checked against p
      p: [0.7, 0.3]
      k2: [3, 3]                 # odds squares; or k: [1.732..., 1.732...]
      eta2: [0.7, 0.3]           # bet squares; or eta: [...]; omitted -> Kelly
      fairness_required: super_fair   # optional: fair | super_fair
    input_state:
      m2: 50.0                   # or mean: [mx, mp]; not both
      n: 0.0
      zeta_abs: 0.0
      zeta_phase: 0.0
    run:
      t_max: 100
      n_samples: 10000
      seed: 42
      t_enum: 12
    output:
      directory: out/fig5a
      formats: [csv]             # subset of {csv, json}
      histogram_bins: 100
      trajectory_samples: 256    # cap on per-trajectory rows written
      gamma_hist_max: 8.0        # optional fixed top edge, else power of 2

Squared quantities (k2, eta2) are the native inputs — odds and splits
are usually stated as squares — and the square roots are taken here at
double precision, so ``k2: 3`` is exactly sqrt(3) rather than a decimal
transcription of it.

Precedence, lowest to highest: preset < file < explicit CLI flags.
Validation collects every violation (unknown keys, type errors, game
constraint failures) into a single ConfigError instead of stopping at
the first.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .betting import Fairness, GameConfig, validate
from .errors import ConfigError, DomainError
from .gaussian import StateParams
from .presets import HIST_PRESETS, PRESET_NAMES, SWEEP_PRESETS

_TOP_KEYS = {"game", "input_state", "run", "output"}
_GAME_KEYS = {"J", "p", "k", "k2", "eta", "eta2", "fairness_required"}
_INPUT_KEYS = {"m2", "mean", "n", "zeta_abs", "zeta_phase"}
_RUN_KEYS = {"t_max", "n_samples", "seed", "t_enum"}
_OUTPUT_KEYS = {"directory", "formats", "histogram_bins",
                "trajectory_samples", "gamma_hist_max"}

DEFAULT_HISTOGRAM_BINS = 100
DEFAULT_TRAJECTORY_SAMPLES = 256


@dataclass(frozen=True)
class OutputOptions:
    directory: str | None = None
    formats: tuple[str, ...] = ("csv",)
    histogram_bins: int = DEFAULT_HISTOGRAM_BINS
    trajectory_samples: int = DEFAULT_TRAJECTORY_SAMPLES
    gamma_hist_max: float | None = None


@dataclass(frozen=True)
class RunSpec:
    """A fully resolved run: what to simulate and how to write it."""

    config: GameConfig
    output: OutputOptions = OutputOptions()
    t_enum: int = 12
    preset: str | None = None
    workers: int = 1


def read_run_file(path: str | Path) -> dict:
    """Parse a YAML or JSON run file into a plain mapping."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(
            [f"{path}: top level must be a mapping, got {type(data).__name__}"])
    return dict(data)


def _take_num(src: Mapping, key: str, path: str, bad: list[str],
              *, integer: bool = False) -> Any:
    if key not in src:
        return None
    label = f"{path}.{key}" if path else key
    v = src[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        bad.append(f"{label}: expected a number, got {v!r}")
        return None
    if integer:
        if isinstance(v, float) and not v.is_integer():
            bad.append(f"{label}: expected an integer, got {v!r}")
            return None
        return int(v)
    if not math.isfinite(float(v)):
        bad.append(f"{label}: must be finite, got {v!r}")
        return None
    return float(v)


def _take_seq(src: Mapping, key: str, path: str, bad: list[str]) -> tuple[float, ...] | None:
    if key not in src:
        return None
    label = f"{path}.{key}" if path else key
    v = src[key]
    if not isinstance(v, (list, tuple)) or not v:
        bad.append(f"{label}: expected a non-empty list of numbers, got {v!r}")
        return None
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(float(x)):
            bad.append(f"{label}[{i}]: expected a finite number, got {x!r}")
            return None
        out.append(float(x))
    return tuple(out)


def _take_section(data: Mapping, key: str, allowed: set[str], bad: list[str]) -> dict:
    src = data.get(key, {})
    if src is None:
        return {}
    if not isinstance(src, Mapping):
        bad.append(f"{key}: expected a mapping, got {src!r}")
        return {}
    for sub in src:
        if sub not in allowed:
            bad.append(f"{key}.{sub}: unknown key")
    return dict(src)


def _sqrt_each(values: tuple[float, ...], label: str, bad: list[str]) -> tuple[float, ...] | None:
    if any(x < 0.0 for x in values):
        bad.append(f"{label}: entries must be >= 0 to take square roots")
        return None
    return tuple(math.sqrt(x) for x in values)


def resolve_run(file_data: Mapping | None = None,
                preset: str | None = None,
                overrides: Mapping[str, Any] | None = None) -> RunSpec:
    """Merge preset, file and CLI overrides into a validated RunSpec.

    ``preset`` is a hist-preset name supplying baseline game fields;
    ``overrides`` maps CLI flag values {seed, n_samples, t_max, t_enum,
    format, out, trajectory_samples, workers} over everything else.
    Raises ConfigError carrying every violation found.
    """
    bad: list[str] = []
    file_data = dict(file_data or {})
    overrides = dict(overrides or {})

    for key in file_data:
        if key not in _TOP_KEYS:
            bad.append(f"{key}: unknown key")

    preset_name = preset
    if preset_name is not None and preset_name not in HIST_PRESETS:
        if preset_name in SWEEP_PRESETS:
            bad.append(f"preset: {preset_name!r} is the sweep preset; it defines a "
                       "family grid, not a single game (use the figures command)")
        else:
            bad.append(f"preset: unknown name {preset_name!r}; "
                       f"choose from {', '.join(PRESET_NAMES)}")
        preset_name = None

    fields: dict[str, Any] = {}
    if preset_name is not None:
        base = HIST_PRESETS[preset_name].config
        fields = dict(p=base.p, k=base.k, eta=base.eta, input=base.input,
                      t_max=base.t_max, n_samples=base.n_samples, seed=base.seed)

    game = _take_section(file_data, "game", _GAME_KEYS, bad)
    p = _take_seq(game, "p", "game", bad)
    if p is not None:
        fields["p"] = p
    if "k" in game and "k2" in game:
        bad.append("game: give k or k2, not both")
    if "eta" in game and "eta2" in game:
        bad.append("game: give eta or eta2, not both")
    v = _take_seq(game, "k", "game", bad)
    if v is not None:
        fields["k"] = v
    v = _take_seq(game, "k2", "game", bad)
    if v is not None:
        roots = _sqrt_each(v, "game.k2", bad)
        if roots is not None:
            fields["k"] = roots
    v = _take_seq(game, "eta", "game", bad)
    if v is not None:
        fields["eta"] = v
    v = _take_seq(game, "eta2", "game", bad)
    if v is not None:
        roots = _sqrt_each(v, "game.eta2", bad)
        if roots is not None:
            fields["eta"] = roots
    j_declared = _take_num(game, "J", "game", bad, integer=True)

    fairness_required = None
    if "fairness_required" in game:
        v = game["fairness_required"]
        names = {"fair": Fairness.FAIR, "super_fair": Fairness.SUPER_FAIR,
                 "super-fair": Fairness.SUPER_FAIR}
        if not isinstance(v, str) or v.lower() not in names:
            bad.append(f"game.fairness_required: expected 'fair' or 'super_fair', got {v!r}")
        else:
            fairness_required = names[v.lower()]

    inp = _take_section(file_data, "input_state", _INPUT_KEYS, bad)
    if inp:
        inp_bad: list[str] = []
        if "m2" in inp and "mean" in inp:
            inp_bad.append("input_state: give m2 or mean, not both")
        mean: tuple[float, float] | None = None
        m2 = _take_num(inp, "m2", "input_state", inp_bad)
        if m2 is not None:
            if m2 < 0.0:
                inp_bad.append(f"input_state.m2: must be >= 0, got {m2!r}")
            else:
                mean = (math.sqrt(m2), 0.0)
        v = _take_seq(inp, "mean", "input_state", inp_bad)
        if v is not None:
            if len(v) != 2:
                inp_bad.append(f"input_state.mean: expected exactly two entries, got {len(v)}")
            else:
                mean = (v[0], v[1])
        n = _take_num(inp, "n", "input_state", inp_bad)
        za = _take_num(inp, "zeta_abs", "input_state", inp_bad)
        zp = _take_num(inp, "zeta_phase", "input_state", inp_bad)
        if not inp_bad:
            try:
                fields["input"] = StateParams(
                    n=0.0 if n is None else n,
                    zeta_abs=0.0 if za is None else za,
                    zeta_phase=0.0 if zp is None else zp,
                    mean=(0.0, 0.0) if mean is None else mean,
                )
            except DomainError as exc:
                inp_bad.append(f"input_state: {exc}")
        bad.extend(inp_bad)

    run = _take_section(file_data, "run", _RUN_KEYS, bad)
    for key in ("t_max", "n_samples", "seed"):
        v = _take_num(run, key, "run", bad, integer=True)
        if v is not None:
            fields[key] = v
    t_enum = 12
    v = _take_num(run, "t_enum", "run", bad, integer=True)
    if v is not None:
        t_enum = v

    out_src = _take_section(file_data, "output", _OUTPUT_KEYS, bad)
    output = OutputOptions()
    if "directory" in out_src:
        v = out_src["directory"]
        if not isinstance(v, str) or not v:
            bad.append(f"output.directory: expected a non-empty string, got {v!r}")
        else:
            output = replace(output, directory=v)
    if "formats" in out_src:
        v = out_src["formats"]
        if isinstance(v, str):
            v = [v]
        if not isinstance(v, (list, tuple)) or not v or any(
                x not in ("csv", "json") for x in v):
            bad.append(f"output.formats: expected a subset of ['csv', 'json'], got "
                       f"{out_src['formats']!r}")
        else:
            output = replace(output, formats=tuple(dict.fromkeys(v)))
    v = _take_num(out_src, "histogram_bins", "output", bad, integer=True)
    if v is not None:
        if v < 2:
            bad.append(f"output.histogram_bins: must be >= 2, got {v}")
        else:
            output = replace(output, histogram_bins=v)
    v = _take_num(out_src, "trajectory_samples", "output", bad, integer=True)
    if v is not None:
        if v < 0:
            bad.append(f"output.trajectory_samples: must be >= 0, got {v}")
        else:
            output = replace(output, trajectory_samples=v)
    v = _take_num(out_src, "gamma_hist_max", "output", bad)
    if v is not None:
        if v <= 0.0:
            bad.append(f"output.gamma_hist_max: must be positive, got {v!r}")
        else:
            output = replace(output, gamma_hist_max=v)

    # CLI flags outrank both the file and the preset
    for key in ("t_max", "n_samples", "seed"):
        if overrides.get(key) is not None:
            fields[key] = int(overrides[key])
    if overrides.get("t_enum") is not None:
        t_enum = int(overrides["t_enum"])
    if overrides.get("format") is not None:
        output = replace(output, formats=(str(overrides["format"]),))
    if overrides.get("out") is not None:
        output = replace(output, directory=str(overrides["out"]))
    if overrides.get("trajectory_samples") is not None:
        output = replace(output, trajectory_samples=int(overrides["trajectory_samples"]))
    workers = 1
    if overrides.get("workers") is not None:
        workers = int(overrides["workers"])
        if workers < 1:
            bad.append(f"workers: must be >= 1, got {workers}")
    if not 1 <= t_enum <= 16:
        bad.append(f"run.t_enum: must be in [1, 16], got {t_enum}")

    missing = [key for key in ("p", "k") if key not in fields]
    if missing:
        bad.append("game: no preset selected and required fields missing: "
                   + ", ".join(missing))
    if "input" not in fields and not inp and not missing:
        bad.append("input_state: required when no preset is selected")
    if "p" in fields and "eta" not in fields:
        # Kelly default: bet squares proportional to win probabilities
        fields["eta"] = tuple(math.sqrt(x) for x in fields["p"])
    if j_declared is not None and "p" in fields and j_declared != len(fields["p"]):
        bad.append(f"game.J: declared {j_declared} horses but p has {len(fields['p'])}")
    if bad:
        raise ConfigError(bad)

    cfg = GameConfig(**fields)
    try:
        fairness = validate(cfg)
    except ConfigError as exc:
        raise ConfigError([f"game: {v}" for v in exc.violations]) from None
    if fairness_required is not None and fairness is not fairness_required:
        raise ConfigError([
            f"game.fairness_required: odds are {fairness.value}, "
            f"required {fairness_required.value}"])
    return RunSpec(config=cfg, output=output, t_enum=t_enum,
                   preset=preset_name, workers=workers)


def spec_meta(spec: RunSpec) -> dict:
    """JSON-ready description of a resolved run, for meta.json."""
    cfg = spec.config
    return {
        "preset": spec.preset,
        "game": {
            "J": cfg.J,
            "p": list(cfg.p),
            "k": list(cfg.k),
            "eta": list(cfg.eta),
        },
        "input_state": {
            "n": cfg.input.n,
            "zeta_abs": cfg.input.zeta_abs,
            "zeta_phase": cfg.input.zeta_phase,
            "mean": list(cfg.input.mean),
        },
        "run": {
            "t_max": cfg.t_max,
            "n_samples": cfg.n_samples,
            "seed": cfg.seed,
            "t_enum": spec.t_enum,
        },
        "output": {
            "directory": spec.output.directory,
            "formats": list(spec.output.formats),
            "histogram_bins": spec.output.histogram_bins,
            "trajectory_samples": spec.output.trajectory_samples,
            "gamma_hist_max": spec.output.gamma_hist_max,
        },
        "workers": spec.workers,
    }
