"""The horse race: bet splitting, per-horse channels, trajectory payoffs.

Round ``t`` of the game: horse ``j`` wins with probability ``p_j``; the
mode that stores the gambler's capital goes through a loss stage with
transmissivity ``eta_j`` (the fraction of capital wagered elsewhere is
lost) followed by a quantum-limited amplifier of gain ``k_j`` (the
odds).  Both stages are gain channels, so the whole trajectory after
``t`` rounds is again a gain channel ``(gbar_t, alphabar_t)`` with

    gbar_t^2   = prod_l g_{j_l}^2,         g_j = k_j eta_j
    alphabar_t = g_{j_t}^2 alphabar_{t-1} + alpha_{j_t}
    gamma_t    := alphabar_t / gbar_t^2 = sum_l alpha_{j_l} / gbar_l^2

``gamma_t`` (non-decreasing in t) is the accumulated noise-to-gain
ratio; every payoff quantity of the output state depends on the
trajectory only through ``(gbar_t^2, gamma_t)``:

    Gamma  = gamma / (2n+1)
    D      = 1 + 4 Gamma cosh(2|z|) + 4 Gamma^2
    Ebar   = gbar^2 (E0 + gamma)
    nbar   = gbar^2 (2n+1) sqrt(D) / 2 - 1/2
    Wbar   = gbar^2 (W0 - delta),   delta = (2n+1)(sqrt(D) - 1 - 2 Gamma)/2

``delta`` (the per-gain ergotropy shortfall) is evaluated here as
``2 gamma (cosh(2|z|) - 1) / (sqrt(D) + 1 + 2 Gamma)`` -- algebraically
identical, free of cancellation, and exactly zero when there is no
squeezing, which makes the efficiency ``mu = 1 - delta/W0`` exactly 1
for coherent and displaced-thermal inputs.

Figures of merit: ``mu <= 1`` and ``r = Wbar/Ebar <= r0 = W0/E0``.
Running products are kept in log2 space; ``gamma`` is accumulated
directly as its defining sum.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channels import GainChannel
from .errors import ConfigError, DomainError, InvariantViolation
from .gaussian import StateParams, params_energy, params_ergotropy

#: relative slack on simplex-type constraints (sum p = 1, sum eta^2 = 1)
SIMPLEX_TOL = 1e-12
#: tolerance for the mu/r bound checks; a breach beyond this raises
BOUND_TOL = 1e-9


class Fairness(enum.Enum):
    FAIR = "fair"            # sum 1/k^2 = 1
    SUPER_FAIR = "super_fair"  # sum 1/k^2 < 1


@dataclass(frozen=True)
class GameConfig:
    """Everything that defines a game: odds, bets, input state, run size."""

    p: tuple[float, ...]
    k: tuple[float, ...]
    eta: tuple[float, ...]
    input: StateParams
    t_max: int = 100
    n_samples: int = 10000
    seed: int = 42

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "k", tuple(float(x) for x in self.k))
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))

    @property
    def J(self) -> int:
        return len(self.p)


def validate(cfg: GameConfig) -> Fairness:
    """Check every game constraint; raise ConfigError listing all failures.

    Returns the fairness class of the odds: FAIR when sum 1/k_j^2 = 1
    (within tolerance), SUPER_FAIR when below; above is rejected.
    """
    bad: list[str] = []
    J = cfg.J
    if J < 2:
        bad.append(f"p: need at least two horses, got {J}")
    if len(cfg.k) != J:
        bad.append(f"k: expected {J} entries, got {len(cfg.k)}")
    if len(cfg.eta) != J:
        bad.append(f"eta: expected {J} entries, got {len(cfg.eta)}")
    for name, vec in (("p", cfg.p), ("k", cfg.k), ("eta", cfg.eta)):
        if any(not math.isfinite(x) for x in vec):
            bad.append(f"{name}: entries must be finite")
    if all(math.isfinite(x) for x in cfg.p):
        if any(x <= 0.0 for x in cfg.p):
            bad.append("p: probabilities must be strictly positive")
        elif abs(math.fsum(cfg.p) - 1.0) > SIMPLEX_TOL:
            bad.append(f"p: must sum to 1, got {math.fsum(cfg.p)!r}")
    if all(math.isfinite(x) for x in cfg.eta):
        if any(not 0.0 < x < 1.0 for x in cfg.eta):
            bad.append("eta: bet amplitudes must lie strictly inside (0, 1)")
        elif abs(math.fsum(x * x for x in cfg.eta) - 1.0) > SIMPLEX_TOL:
            bad.append(f"eta: squared entries must sum to 1, "
                       f"got {math.fsum(x * x for x in cfg.eta)!r}")
    fairness = Fairness.FAIR
    if all(math.isfinite(x) for x in cfg.k):
        if any(x <= 1.0 for x in cfg.k):
            bad.append("k: every odds amplitude must exceed 1")
        else:
            inv = math.fsum(1.0 / (x * x) for x in cfg.k)
            if inv > 1.0 + SIMPLEX_TOL:
                bad.append(f"k: sum of 1/k^2 is {inv!r} > 1 (sub-fair odds rejected)")
            elif inv < 1.0 - SIMPLEX_TOL:
                fairness = Fairness.SUPER_FAIR
    if not (isinstance(cfg.t_max, int) and cfg.t_max >= 1):
        bad.append(f"t_max: must be an integer >= 1, got {cfg.t_max!r}")
    if not (isinstance(cfg.n_samples, int) and cfg.n_samples >= 1):
        bad.append(f"n_samples: must be an integer >= 1, got {cfg.n_samples!r}")
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2 ** 64):
        bad.append(f"seed: must be an integer in [0, 2^64), got {cfg.seed!r}")
    if bad:
        raise ConfigError(bad)
    return fairness


@dataclass(frozen=True)
class HorseChannel:
    """The gain channel applied when horse ``j`` (1-based) wins."""

    j: int
    g: float
    alpha: float

    def as_gain(self) -> GainChannel:
        return GainChannel(self.g, self.alpha)


def horse_channel(cfg: GameConfig, j: int) -> HorseChannel:
    """Loss(eta_j) followed by amplification(k_j), reduced to one channel.

    g_j = k_j eta_j and alpha_j = (k_j^2 (1 - eta_j^2) + k_j^2 - 1) / 2.
    """
    if not 1 <= j <= cfg.J:
        raise DomainError(f"horse index must be in 1..{cfg.J}, got {j}")
    k, eta = cfg.k[j - 1], cfg.eta[j - 1]
    k2, eta2 = k * k, eta * eta
    return HorseChannel(j=j, g=k * eta, alpha=(k2 * (1.0 - eta2) + k2 - 1.0) / 2.0)


def horse_arrays(cfg: GameConfig):
    """(p, g^2, alpha) as float arrays, horse-index order."""
    hs = [horse_channel(cfg, j) for j in range(1, cfg.J + 1)]
    return (np.array(cfg.p), np.array([h.g * h.g for h in hs]),
            np.array([h.alpha for h in hs]))


@dataclass(frozen=True)
class InputProfile:
    """Input-state scalars the payoff kernel needs (never the 2x2 matrix)."""

    two_n1: float   # 2n + 1
    ch: float       # cosh(2|z|)
    m2: float       # |m|^2
    e0: float
    erg0: float

    @classmethod
    def from_params(cls, params: StateParams) -> "InputProfile":
        return cls(
            two_n1=2.0 * params.n + 1.0,
            ch=params.cosh_2z,
            m2=params.m2,
            e0=params_energy(params),
            erg0=params_ergotropy(params),
        )

    @property
    def r0(self) -> float:
        return self.erg0 / self.e0


def payoff_fields(profile: InputProfile, log2_gbar, gamma):
    """Vectorised payoff quantities after a trajectory.

    Parameters are ``log2_gbar = log2(gbar_t)`` and the accumulated
    ``gamma_t``; scalars or same-shape arrays.  Returns a dict with
    keys energy, photons, ergotropy, shortfall, gamma_scaled, mu, r.
    ``mu`` is NaN when the input carries no ergotropy.
    """
    log2_gbar = np.asarray(log2_gbar, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    gbar2 = np.exp2(2.0 * log2_gbar)
    big_gamma = gamma / profile.two_n1
    root_d = np.sqrt(1.0 + 4.0 * big_gamma * profile.ch + 4.0 * big_gamma * big_gamma)
    shortfall = 2.0 * gamma * (profile.ch - 1.0) / (root_d + 1.0 + 2.0 * big_gamma)
    energy = gbar2 * (profile.e0 + gamma)
    photons = gbar2 * profile.two_n1 * root_d / 2.0 - 0.5
    erg = gbar2 * (profile.erg0 - shortfall)
    if profile.erg0 > 0.0:
        mu = 1.0 - shortfall / profile.erg0
        r = (profile.erg0 - shortfall) / (profile.e0 + gamma)
    else:
        mu = np.full_like(gbar2, math.nan)
        r = np.zeros_like(gbar2)
    return {
        "energy": energy,
        "photons": photons,
        "ergotropy": erg,
        "shortfall": shortfall,
        "gamma_scaled": big_gamma,
        "mu": mu,
        "r": r,
    }


def check_payoff_bounds(profile: InputProfile, mu, r, where: str = "") -> None:
    """Raise InvariantViolation if mu > 1 or r > r0 beyond BOUND_TOL.

    Deliberately not clamped: a real breach means broken algebra or an
    invalid configuration, and must surface.
    """
    r = np.asarray(r, dtype=float)
    r_max = float(r.max(initial=-math.inf))
    if r_max > profile.r0 + BOUND_TOL or float(r.min(initial=math.inf)) < -BOUND_TOL:
        raise InvariantViolation(
            f"payoff ratio r out of [0, r0={profile.r0}]: extreme {r_max} {where}"
        )
    if profile.erg0 > 0.0:
        mu = np.asarray(mu, dtype=float)
        mu_max = float(mu.max(initial=-math.inf))
        if mu_max > 1.0 + BOUND_TOL or float(mu.min(initial=math.inf)) < -BOUND_TOL:
            raise InvariantViolation(f"efficiency mu out of [0, 1]: extreme {mu_max} {where}")


@dataclass(frozen=True)
class PayoffRecord:
    """Payoff of the capital mode after some number of rounds."""

    t: int
    energy: float        # mean energy of the output state
    photons: float       # its effective thermal occupation
    ergotropy: float     # extractable work
    shortfall: float     # per-gain ergotropy lost to noise (0 iff no squeezing)
    gamma_scaled: float  # gamma / (2n+1)
    mu: float | None     # ergotropy efficiency; None when the input has none
    r: float             # ergotropy-to-energy ratio of the output


@dataclass(frozen=True)
class TrajectoryRecord:
    """Immutable running state of one gambling trajectory."""

    cfg: GameConfig
    winners: tuple[int, ...] = ()
    log2_gbar: float = 0.0
    gamma: float = 0.0
    payoffs: tuple[PayoffRecord, ...] = ()

    @property
    def t(self) -> int:
        return len(self.winners)

    @property
    def gbar(self) -> float:
        return 2.0 ** self.log2_gbar

    @property
    def alphabar(self) -> float:
        """May overflow for very long runs; the log form is authoritative."""
        return self.gamma * 2.0 ** (2.0 * self.log2_gbar)


def new_trajectory(cfg: GameConfig) -> TrajectoryRecord:
    validate(cfg)
    return TrajectoryRecord(cfg=cfg)


def step(traj: TrajectoryRecord, winner: int) -> TrajectoryRecord:
    """Advance one round: winner is a 1-based horse index."""
    h = horse_channel(traj.cfg, winner)
    log2_gbar = traj.log2_gbar + math.log2(h.g)
    gamma = traj.gamma + h.alpha * 2.0 ** (-2.0 * log2_gbar)
    rec = TrajectoryRecord(
        cfg=traj.cfg,
        winners=traj.winners + (winner,),
        log2_gbar=log2_gbar,
        gamma=gamma,
    )
    object.__setattr__(rec, "payoffs", traj.payoffs + (payoff(traj.cfg, rec),))
    return rec


def payoff(cfg: GameConfig, traj: TrajectoryRecord) -> PayoffRecord:
    """Payoff quantities at the trajectory's current round."""
    profile = InputProfile.from_params(cfg.input)
    f = payoff_fields(profile, traj.log2_gbar, traj.gamma)
    mu = float(f["mu"])
    return PayoffRecord(
        t=traj.t,
        energy=float(f["energy"]),
        photons=float(f["photons"]),
        ergotropy=float(f["ergotropy"]),
        shortfall=float(f["shortfall"]),
        gamma_scaled=float(f["gamma_scaled"]),
        mu=None if math.isnan(mu) else mu,
        r=float(f["r"]),
    )


def figures_of_merit(cfg: GameConfig, record: PayoffRecord) -> tuple[float, float]:
    """(mu, r) of a payoff record, with the bounds enforced.

    Raises DomainError when the input state has zero ergotropy (mu is
    0/0 there) and InvariantViolation if a bound is broken.
    """
    profile = InputProfile.from_params(cfg.input)
    if record.mu is None or profile.erg0 <= 0.0:
        raise DomainError("efficiency undefined: input state has zero ergotropy")
    check_payoff_bounds(profile, record.mu, record.r, where=f"at t={record.t}")
    return record.mu, record.r


def average_energy_expectation(cfg: GameConfig, t: int) -> float:
    """E[Ebar_t] by the linear recursion E -> (sum p g^2) E + sum p alpha."""
    if t < 0:
        raise DomainError(f"round count must be >= 0, got {t}")
    p, g2, alpha = horse_arrays(cfg)
    slope = float(p @ g2)
    lift = float(p @ alpha)
    e = params_energy(cfg.input)
    for _ in range(t):
        e = slope * e + lift
    return e
