"""Canonical experiment presets.

Each preset pins one ready-made two-horse experiment: game vector,
odds, bet split, input state, horizon, and which payoff panels its
histogram bundle carries.  `fig6` is a sweep over input ergotropy for
four input families at a fixed optimal game.

Every hist preset uses an input of ergotropy exactly 25 (different
states on that iso-ergotropy manifold); a module-level self-check
enforces this, so a drifted constant fails at import instead of
producing silently wrong bundles.

Note fig5d: this nominally sub-optimal preset carries the same bet
split as the optimal fig5a; the parameters are kept verbatim rather
than "fixed" to whatever was plausibly meant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .betting import GameConfig, validate
from .gaussian import StateParams, params_ergotropy

SEED = 42
N_SAMPLES = 10_000

_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)

# pure squeezed, ergotropy 25: cosh(2|zeta|) = 51
_SQUEEZED_25 = StateParams(n=0.0, zeta_abs=math.acosh(51.0) / 2.0)
# pure coherent, ergotropy 25: m^2 = 50
_COHERENT_25 = StateParams(n=0.0, mean=(math.sqrt(50.0), 0.0))
# displaced thermal, ergotropy still 25: thermal part adds energy only
_THERMAL_25 = StateParams(n=10.0, mean=(math.sqrt(50.0), 0.0))


def _eta(*squares: float) -> tuple[float, ...]:
    return tuple(math.sqrt(s) for s in squares)


@dataclass(frozen=True)
class FigurePreset:
    """A histogram-bundle experiment: one game run to a fixed horizon."""

    name: str
    config: GameConfig
    inset_t: int                # round whose histogram the inset shows
    panels: tuple[str, ...]     # payoffs plotted: ("r",) or ("r", "mu")
    note: str


@dataclass(frozen=True)
class SweepFamily:
    """Input family for the ergotropy sweep, parametrized by m^2/E0.

    With n = 0 and target ergotropy e0 the family fixes m^2 =
    fraction * e0 and cosh(2|zeta|) = 1 + 2 e0 - m^2; fraction 0 is
    pure squeezed, fraction 2 pure coherent.
    """

    label: str
    m2_fraction: float

    def params(self, e0: float) -> StateParams:
        m2 = self.m2_fraction * e0
        ch = 1.0 + 2.0 * e0 - m2
        return StateParams(
            n=0.0,
            zeta_abs=math.acosh(ch) / 2.0,
            mean=(math.sqrt(m2), 0.0),
        )


@dataclass(frozen=True)
class SweepPreset:
    """Asymptotic (r, mu) means vs input ergotropy, per input family."""

    name: str
    p: tuple[float, ...]
    k: tuple[float, ...]
    eta: tuple[float, ...]
    e0_values: tuple[float, ...]
    families: tuple[SweepFamily, ...]
    t_max: int
    note: str

    def config(self, family: SweepFamily, e0: float,
               n_samples: int = N_SAMPLES, seed: int = SEED) -> GameConfig:
        return GameConfig(
            p=self.p, k=self.k, eta=self.eta, input=family.params(e0),
            t_max=self.t_max, n_samples=n_samples, seed=seed)


def _hist(name: str, *, p, eta2, input: StateParams, t_max: int,
          panels: tuple[str, ...], k=(_SQRT3, _SQRT3), note: str) -> FigurePreset:
    cfg = GameConfig(p=p, k=k, eta=_eta(*eta2), input=input,
                     t_max=t_max, n_samples=N_SAMPLES, seed=SEED)
    return FigurePreset(name=name, config=cfg, inset_t=t_max,
                        panels=panels, note=note)


HIST_PRESETS: dict[str, FigurePreset] = {pr.name: pr for pr in (
    _hist("fig4a", p=(0.7, 0.3), eta2=(0.7, 0.3), input=_SQUEEZED_25,
          t_max=100, panels=("r", "mu"),
          note="squeezed input, optimal split"),
    _hist("fig4c", p=(0.7, 0.3), eta2=(0.3, 0.7), input=_SQUEEZED_25,
          t_max=150, panels=("r", "mu"),
          note="squeezed input, inverted (sub-optimal) split"),
    _hist("fig5a", p=(0.7, 0.3), eta2=(0.7, 0.3), input=_COHERENT_25,
          t_max=100, panels=("r",),
          note="coherent input, optimal split"),
    _hist("fig5b", p=(0.6, 0.4), eta2=(0.6, 0.4), input=_COHERENT_25,
          t_max=100, panels=("r",),
          note="coherent input, optimal split, closer race"),
    _hist("fig5c", p=(0.7, 0.3), eta2=(0.6, 0.4), input=_COHERENT_25,
          t_max=150, panels=("r",),
          note="coherent input, sub-optimal split"),
    _hist("fig5d", p=(0.7, 0.3), eta2=(0.7, 0.3), input=_COHERENT_25,
          t_max=150, panels=("r",),
          note="coherent input; parameter set duplicates fig5a's split"),
    _hist("fig7", p=(0.7, 0.3), eta2=(0.7, 0.3), input=_THERMAL_25,
          t_max=100, panels=("r",),
          note="displaced thermal input (n=10), optimal split"),
    _hist("fig8", p=(0.7, 0.3), eta2=(0.71, 0.29), input=_COHERENT_25,
          t_max=250, panels=("r",), k=(_SQRT2, _SQRT2),
          note="fair odds, near-optimal split: divergent mean gamma"),
)}

FIG6 = SweepPreset(
    name="fig6",
    p=(0.7, 0.3),
    k=(_SQRT3, _SQRT3),
    eta=_eta(0.7, 0.3),
    # 50 to 50000, logarithmically spaced at half decades
    e0_values=tuple(50.0 * 10.0 ** (i / 2.0) for i in range(7)),
    families=(
        SweepFamily("squeezed", 0.0),
        SweepFamily("coherent", 2.0),
        SweepFamily("m2_075", 0.75),
        SweepFamily("m2_0875", 0.875),
    ),
    t_max=100,
    note="asymptotic mean r and mu vs input ergotropy, four input families",
)

SWEEP_PRESETS: dict[str, SweepPreset] = {FIG6.name: FIG6}

PRESET_NAMES: tuple[str, ...] = (
    "fig4a", "fig4c", "fig5a", "fig5b", "fig5c", "fig5d",
    "fig6", "fig7", "fig8",
)


def get_preset(name: str) -> FigurePreset | SweepPreset:
    if name in HIST_PRESETS:
        return HIST_PRESETS[name]
    if name in SWEEP_PRESETS:
        return SWEEP_PRESETS[name]
    raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


def _self_check() -> None:
    # all hist presets sit on the ergotropy-25 manifold and validate
    for pr in HIST_PRESETS.values():
        erg = params_ergotropy(pr.config.input)
        if abs(erg - 25.0) > 1e-12 * 25.0:
            raise AssertionError(f"{pr.name}: input ergotropy {erg!r} != 25")
        validate(pr.config)
    # sweep families hit their target ergotropy across the whole grid
    for fam in FIG6.families:
        for e0 in FIG6.e0_values:
            erg = params_ergotropy(fam.params(e0))
            if abs(erg - e0) > 1e-12 * e0:
                raise AssertionError(
                    f"fig6/{fam.label}: ergotropy {erg!r} != {e0!r}")
    validate(FIG6.config(FIG6.families[0], FIG6.e0_values[0]))


_self_check()
