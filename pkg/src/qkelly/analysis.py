"""Closed-form analysis: growth rates, moments of gamma, mean-field curves.

The second moment of gamma ships in two flavours: the literature
closed form (`as_printed`) and the exact enumeration value.  The
printed form drops a cross-term prefactor relative to its own
derivation, so the two agree at t = 1 and part ways from t = 2; both
are reported side by side with a discrepancy flag, and the enumeration
is the authority.  No "corrected" closed form is offered.

Geometric partial sums (1 - x^t)/(1 - x) are evaluated as explicit
power sums, which reproduces the singular limits (x -> 1 gives t, the
equal-rate limit of the divided difference gives the derivative sum)
without branch tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .betting import GameConfig, InputProfile, horse_arrays, validate
from .errors import DomainError
from .engine import DEFAULT_T_ENUM, ENUM_BUDGET, MAX_T_ENUM, enumerate_exact

if TYPE_CHECKING:  # pragma: no cover
    from .engine import SampleBatch

#: |G| below this counts as marginal (neither expanding nor contracting)
MARGINAL_TOL = 1e-12
#: relative gap between printed and exact second moments that trips the flag
DISCREPANCY_TOL = 1e-9


def _geom_sum(x: float, t: int) -> float:
    """sum_{i=0}^{t-1} x^i, exactly rounded."""
    terms, power = [], 1.0
    for _ in range(t):
        terms.append(power)
        power *= x
    return math.fsum(terms)


def _geom_sum_derivative(x: float, t: int) -> float:
    """d/dx of the partial geometric sum: sum_{i=1}^{t-1} i x^(i-1)."""
    terms, power = [], 1.0
    for i in range(1, t):
        terms.append(i * power)
        power *= x
    return math.fsum(terms)


@dataclass(frozen=True)
class GameMoments:
    """Single-round building blocks entering every closed form."""

    inv_g2: float      # E[1/g^2]
    inv_g4: float      # E[1/g^4]
    alpha_g2: float    # E[alpha/g^2]
    alpha2_g4: float   # E[alpha^2/g^4]

    @classmethod
    def from_config(cls, cfg: GameConfig) -> "GameMoments":
        p, g2, alpha = horse_arrays(cfg)
        return cls(
            inv_g2=float(math.fsum(p / g2)),
            inv_g4=float(math.fsum(p / g2 ** 2)),
            alpha_g2=float(math.fsum(p * alpha / g2)),
            alpha2_g4=float(math.fsum(p * alpha ** 2 / g2 ** 2)),
        )


def gamma_mean(cfg: GameConfig, t: int) -> float:
    """E[gamma_t] = E[alpha/g^2] (1 - a^t)/(1 - a), a = E[1/g^2].

    The power-sum evaluation makes the a = 1 case come out as
    t * E[alpha/g^2] without a separate branch.
    """
    if t < 0:
        raise DomainError(f"round count must be >= 0, got {t}")
    m = GameMoments.from_config(cfg)
    return m.alpha_g2 * _geom_sum(m.inv_g2, t)


def gamma_mean_limit(cfg: GameConfig) -> float:
    """lim_t E[gamma_t]; +inf when E[1/g^2] >= 1 (the sum diverges)."""
    m = GameMoments.from_config(cfg)
    if m.inv_g2 >= 1.0 - MARGINAL_TOL:
        return math.inf
    return m.alpha_g2 / (1.0 - m.inv_g2)


@dataclass(frozen=True)
class GammaSecondMoment:
    """E[gamma_t^2]: printed closed form vs exact enumeration."""

    t: int
    as_printed: float
    oracle: float | None      # None when J^t exceeds the enumeration budget
    discrepant: bool | None   # None when there is no oracle to compare with


def _second_moment_printed(m: GameMoments, t: int) -> float:
    a, b = m.inv_g2, m.inv_g4
    s_b = _geom_sum(b, t)
    if abs(a - b) < 1e-12:
        dd = _geom_sum_derivative(a, t)
    else:
        dd = (_geom_sum(a, t) - s_b) / (a - b)
    return m.alpha2_g4 * s_b - dd


def gamma_second_moment(cfg: GameConfig, t: int) -> GammaSecondMoment:
    """Second moment of gamma_t, printed form and enumeration oracle.

    The oracle is computed whenever J^t fits the enumeration budget;
    the flag trips when the two disagree beyond DISCREPANCY_TOL
    (relative).  Expect it to trip for every t >= 2.
    """
    if t < 1:
        raise DomainError(f"round count must be >= 1, got {t}")
    m = GameMoments.from_config(cfg)
    printed = _second_moment_printed(m, t)
    oracle = None
    if t <= MAX_T_ENUM and cfg.J ** t <= ENUM_BUDGET:
        oracle = enumerate_exact(cfg, t).moment(t).e_gamma2
    flag = None
    if oracle is not None:
        flag = abs(printed - oracle) > DISCREPANCY_TOL * max(1.0, abs(oracle))
    return GammaSecondMoment(t=t, as_printed=printed, oracle=oracle, discrepant=flag)


def gamma_second_moment_limit(cfg: GameConfig) -> float | None:
    """Printed asymptotic second moment; None when its preconditions fail.

    Requires E[1/g^2] < 1, E[1/g^4] < 1 and the two distinct.  Inherits
    the printed form's defect, so treat it as a report of the
    literature value, not ground truth.
    """
    m = GameMoments.from_config(cfg)
    a, b = m.inv_g2, m.inv_g4
    if a >= 1.0 - MARGINAL_TOL or b >= 1.0 - MARGINAL_TOL or abs(a - b) < 1e-12:
        return None
    return m.alpha2_g4 / (1.0 - b) - (1.0 / (1.0 - a) - 1.0 / (1.0 - b)) / (a - b)


def growth_rate(p, k, eta) -> float:
    """G = sum_j p_j log2(k_j eta_j): expected log-gain per round."""
    total = []
    for pj, kj, ej in zip(p, k, eta):
        g = kj * ej
        if g <= 0.0:
            return -math.inf
        total.append(pj * math.log2(g))
    return math.fsum(total)


def entropy_bits(p) -> float:
    """Shannon entropy in bits (the standard minus-sign convention)."""
    return -math.fsum(x * math.log2(x) for x in p if x > 0.0)


@dataclass(frozen=True)
class ClassicalDoubling:
    """Classical Kelly bookkeeping for bets b at odds o."""

    w: float         # sum p log2(o b); -inf if some backed horse gets b = 0
    w_star: float    # optimum sum p log2(o) - H(p), reached at b = p
    entropy: float = 0.0


def classical_doubling_rate(b, o, p) -> ClassicalDoubling:
    """Doubling rate of classical proportional betting.

    ``b``: fraction of capital on each horse (simplex); ``o``: payout
    odds (> 0); ``p``: win probabilities (positive simplex).
    """
    if not (len(b) == len(o) == len(p)):
        raise DomainError("b, o, p must have equal length")
    bad = []
    if any(x < 0.0 for x in b) or abs(math.fsum(b) - 1.0) > 1e-12:
        bad.append("b must be a simplex vector")
    if any(x <= 0.0 for x in o):
        bad.append("odds must be positive")
    if any(x <= 0.0 for x in p) or abs(math.fsum(p) - 1.0) > 1e-12:
        bad.append("p must be a strictly positive simplex vector")
    if bad:
        raise DomainError("; ".join(bad))
    if any(pj > 0.0 and bj == 0.0 for pj, bj in zip(p, b)):
        w = -math.inf
    else:
        w = math.fsum(pj * math.log2(oj * bj) for pj, oj, bj in zip(p, o, b))
    h = entropy_bits(p)
    w_star = math.fsum(pj * math.log2(oj) for pj, oj in zip(p, o)) - h
    return ClassicalDoubling(w=w, w_star=w_star, entropy=h)


@dataclass(frozen=True)
class KellyResult:
    eta: tuple[float, ...]   # optimal bet amplitudes, eta_j = sqrt(p_j)
    g: float                 # growth rate at the optimum


def kelly_optimize(p, k) -> KellyResult:
    """Growth-optimal bet split: eta_j^2 = p_j, independent of the odds."""
    if any(x <= 0.0 for x in p) or abs(math.fsum(p) - 1.0) > 1e-12:
        raise DomainError("p must be a strictly positive simplex vector")
    if any(x <= 1.0 for x in k):
        raise DomainError("every odds amplitude must exceed 1")
    eta = tuple(math.sqrt(x) for x in p)
    return KellyResult(eta=eta, g=growth_rate(p, k, eta))


@dataclass(frozen=True)
class RegimeReport:
    """Growth classification of a configured game."""

    g_rate: float                      # G = E[log2 g]
    regime: str                        # expanding | contracting | marginal
    map_slopes: tuple[float, ...]      # g_j^2: slopes of the random affine map
    map_intercepts: tuple[float, ...]  # alpha_j
    inv_g2: float
    inv_g4: float
    energy_slope: float                # sum p g^2 (mean-energy recursion slope)
    energy_lift: float                 # sum p alpha


def quantum_doubling_rate(cfg: GameConfig) -> RegimeReport:
    validate(cfg)
    p, g2, alpha = horse_arrays(cfg)
    g_rate = growth_rate(cfg.p, cfg.k, cfg.eta)
    if g_rate > MARGINAL_TOL:
        regime = "expanding"
    elif g_rate < -MARGINAL_TOL:
        regime = "contracting"
    else:
        regime = "marginal"
    m = GameMoments.from_config(cfg)
    return RegimeReport(
        g_rate=g_rate,
        regime=regime,
        map_slopes=tuple(float(x) for x in g2),
        map_intercepts=tuple(float(x) for x in alpha),
        inv_g2=m.inv_g2,
        inv_g4=m.inv_g4,
        energy_slope=float(p @ g2),
        energy_lift=float(p @ alpha),
    )


def _mean_field_from_gamma(profile: InputProfile, e_gamma: float) -> float:
    big = e_gamma / profile.two_n1
    root_d = math.sqrt(1.0 + 4.0 * big * profile.ch + 4.0 * big * big)
    f = profile.m2 / profile.two_n1
    return 1.0 - root_d / (profile.ch + 2.0 * big + f)


def mean_field_r(cfg: GameConfig, t: int) -> float:
    """Deterministic tracking curve: r evaluated at E[gamma_t].

    Exact for unsqueezed inputs (where r depends on the trajectory
    only through gamma... linearly in neither, but the curve still
    follows the sample mean closely); undefined when the input state
    has no ergotropy.
    """
    profile = InputProfile.from_params(cfg.input)
    if profile.erg0 <= 0.0:
        raise DomainError("mean-field r undefined: input state has zero ergotropy")
    return _mean_field_from_gamma(profile, gamma_mean(cfg, t))


def mean_field_r_limit(cfg: GameConfig) -> float | None:
    """Asymptote of the tracking curve; None when E[gamma] diverges."""
    profile = InputProfile.from_params(cfg.input)
    if profile.erg0 <= 0.0:
        raise DomainError("mean-field r undefined: input state has zero ergotropy")
    limit = gamma_mean_limit(cfg)
    if math.isinf(limit):
        return None
    return _mean_field_from_gamma(profile, limit)


def mean_field_r_curve(cfg: GameConfig, t_max: int) -> np.ndarray:
    """mean_field_r for t = 1..t_max as an array (NaN-free by construction)."""
    profile = InputProfile.from_params(cfg.input)
    if profile.erg0 <= 0.0:
        raise DomainError("mean-field r undefined: input state has zero ergotropy")
    m = GameMoments.from_config(cfg)
    out = np.empty(t_max)
    partial, power = 0.0, 1.0
    for t in range(1, t_max + 1):
        partial += power
        power *= m.inv_g2
        out[t - 1] = _mean_field_from_gamma(profile, m.alpha_g2 * partial)
    return out


@dataclass(frozen=True)
class MomentRow:
    t: int
    gamma_mean: float
    second_printed: float
    second_oracle: float | None    # None marks "skipped" (budget/horizon)
    second_discrepant: bool | None
    mean_field_r: float | None     # None when the input has no ergotropy


@dataclass(frozen=True)
class MomentReport:
    blocks: GameMoments
    rows: tuple[MomentRow, ...]
    gamma_limit: float                  # +inf when E[gamma] diverges
    second_limit_printed: float | None  # None when preconditions fail
    mean_field_limit: float | None      # None when divergent or no ergotropy


def moment_report(cfg: GameConfig, t_values, t_enum: int = DEFAULT_T_ENUM) -> MomentReport:
    """Moment table for the given rounds, single enumeration pass.

    The enumeration oracle covers rounds up to ``t_enum`` (capped by
    the global horizon and budget); beyond that the oracle column is
    None, i.e. skipped.
    """
    t_values = sorted(set(int(t) for t in t_values))
    if not t_values or t_values[0] < 1:
        raise DomainError("round values must be a non-empty set of integers >= 1")
    m = GameMoments.from_config(cfg)
    profile = InputProfile.from_params(cfg.input)

    t_oracle = min(t_enum, MAX_T_ENUM, max(t_values))
    while t_oracle >= 1 and cfg.J ** t_oracle > ENUM_BUDGET:
        t_oracle -= 1
    dist = enumerate_exact(cfg, t_oracle) if t_oracle >= 1 else None

    rows = []
    for t in t_values:
        printed = _second_moment_printed(m, t)
        oracle = None
        if dist is not None and t <= t_oracle:
            oracle = dist.moment(t).e_gamma2
        flag = None
        if oracle is not None:
            flag = abs(printed - oracle) > DISCREPANCY_TOL * max(1.0, abs(oracle))
        mean = m.alpha_g2 * _geom_sum(m.inv_g2, t)
        mf = None
        if profile.erg0 > 0.0:
            mf = _mean_field_from_gamma(profile, mean)
        rows.append(MomentRow(
            t=t, gamma_mean=mean, second_printed=printed,
            second_oracle=oracle, second_discrepant=flag, mean_field_r=mf))

    gamma_limit = gamma_mean_limit(cfg)
    mf_limit = None
    if profile.erg0 > 0.0 and not math.isinf(gamma_limit):
        mf_limit = _mean_field_from_gamma(profile, gamma_limit)
    return MomentReport(
        blocks=m,
        rows=tuple(rows),
        gamma_limit=gamma_limit,
        second_limit_printed=gamma_second_moment_limit(cfg),
        mean_field_limit=mf_limit,
    )


@dataclass(frozen=True)
class LLNReport:
    """Empirical wealth-rate check: mean log2(gbar_t)/t against G."""

    t: int
    n_samples: int
    g_rate: float
    mean_rate: float
    deviation: float      # |mean_rate - g_rate|
    per_step_sd: float    # sd of a single round's log2 g
    expected_se: float    # per_step_sd / sqrt(t * n)


def wealth_lln_check(batch: "SampleBatch") -> LLNReport:
    """Law-of-large-numbers check at the batch's final round.

    The per-trajectory wealth exponent log2(gbar_t)/t concentrates on
    G; the classical capital of the underlying Kelly race maps onto
    the gain gbar_t, so this is also the S_t <-> gbar_t consistency
    check.  Requires t_max >= 50 so the rate has settled.
    """
    if batch.t_max < 50:
        raise DomainError("need t_max >= 50 for a settled rate")
    cfg = batch.cfg
    t = batch.t_max
    g_rate = growth_rate(cfg.p, cfg.k, cfg.eta)
    rates = batch.log2_gbar[-1] / t
    mean_rate = math.fsum(rates) / batch.n_samples
    per_step = [math.log2(kj * ej) - g_rate for kj, ej in zip(cfg.k, cfg.eta)]
    per_step_sd = math.sqrt(math.fsum(
        pj * d * d for pj, d in zip(cfg.p, per_step)))
    return LLNReport(
        t=t,
        n_samples=batch.n_samples,
        g_rate=g_rate,
        mean_rate=mean_rate,
        deviation=abs(mean_rate - g_rate),
        per_step_sd=per_step_sd,
        expected_se=per_step_sd / math.sqrt(t * batch.n_samples),
    )
