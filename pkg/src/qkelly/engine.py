"""Monte Carlo sampling and exact enumeration of gambling trajectories.

Randomness contract
-------------------
Winners are drawn from a counter-based generator so that every
trajectory owns an independent, reproducible stream:

* ``mix(x)`` is the SplitMix64 finaliser (xor-shift 30, multiply
  0xBF58476D1CE4E5B9, xor-shift 27, multiply 0x94D049BB133111EB,
  xor-shift 31) -- a bijection on 64-bit words;
* trajectory ``i`` (0-based) gets the key ``mix(seed XOR i)``;
* its round-``t`` word (t = 1..t_max) is ``mix(key_i + t * PHI64)``
  with ``PHI64 = 0x9E3779B97F4A7C15``, mapped to a uniform in [0, 1)
  by taking the top 53 bits;
* the winner is found by inverse CDF over the cumulative ``p`` in
  horse-index order; a draw landing exactly on an interval boundary
  resolves to the lower index.

The draw for (seed, i, t) never depends on batch size, chunking or
worker count, so any partition of the sample range produces identical
output.  Aggregation uses exactly rounded compensated sums
(``math.fsum``), making merged results independent of merge order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .betting import (
    GameConfig,
    InputProfile,
    check_payoff_bounds,
    horse_arrays,
    payoff_fields,
    validate,
)
from .errors import DomainError, EnumerationSizeError

PHI64 = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

#: largest trajectory count enumerate_exact will attempt
ENUM_BUDGET = 2 ** 24
#: hard cap on the enumeration horizon regardless of J
MAX_T_ENUM = 16
#: default horizon for exact enumeration
DEFAULT_T_ENUM = 12
#: number of histogram bins for quantities supported on [0, 1]
UNIT_BINS = 100


def mix64(words) -> NDArray[np.uint64]:
    """SplitMix64 finaliser, elementwise on uint64 arrays (wraps mod 2^64)."""
    x = np.array(words, dtype=np.uint64, copy=True)
    with np.errstate(over="ignore"):
        x ^= x >> np.uint64(30)
        x *= _M1
        x ^= x >> np.uint64(27)
        x *= _M2
        x ^= x >> np.uint64(31)
    return x


def trajectory_uniforms(seed: int, sample_ids, t: int) -> NDArray[np.float64]:
    """Round-t uniform draw in [0, 1) for each sample id."""
    ids = np.asarray(sample_ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        keys = mix64(np.uint64(seed) ^ ids)
        words = mix64(keys + np.uint64(t) * PHI64)
    return (words >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def _unit_hist(values: NDArray[np.float64], bins: int = UNIT_BINS) -> NDArray[np.int64]:
    """Row-wise histogram of values supported on [0, 1].

    Bins are [i/bins, (i+1)/bins), except the last which also includes
    1.0 exactly -- otherwise a quantity that is identically 1 (mu for
    any unsqueezed input) would escape every bin.
    """
    t, n = values.shape
    idx = np.clip(np.floor(values * bins), 0, bins - 1)
    idx = np.where(np.isnan(values), 0, idx).astype(np.int64)
    offsets = np.arange(t, dtype=np.int64)[:, None] * bins + idx
    return np.bincount(offsets.ravel(), minlength=t * bins).reshape(t, bins)


def _fsum_rows(values: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array([math.fsum(row) for row in values])


@dataclass(frozen=True)
class Aggregates:
    """Per-round statistics over a full sample batch."""

    t: NDArray[np.int64]                  # 1..t_max
    mean_r: NDArray[np.float64]
    std_r: NDArray[np.float64]
    mean_mu: NDArray[np.float64]
    std_mu: NDArray[np.float64]
    mean_gamma: NDArray[np.float64]
    hist_r: NDArray[np.int64]             # (t_max, 100) counts on [0, 1]
    hist_mu: NDArray[np.int64]
    hist_gamma: NDArray[np.int64]
    gamma_hist_max: float                 # gamma bins cover [0, gamma_hist_max]


@dataclass(frozen=True)
class SampleBatch:
    """Monte Carlo trajectories, vectorised across samples.

    Arrays have shape (t_max, n); column ``i`` is the trajectory with
    sample id ``sample_ids[i]``.  Winners are 1-based horse indices.
    ``log2_gbar`` holds log2 of the accumulated gain gbar_t.
    """

    cfg: GameConfig
    sample_ids: NDArray[np.int64]
    winners: NDArray[np.int16]
    log2_gbar: NDArray[np.float64]
    gamma: NDArray[np.float64]
    energy: NDArray[np.float64]
    ergotropy: NDArray[np.float64]
    mu: NDArray[np.float64]
    r: NDArray[np.float64]

    @property
    def t_max(self) -> int:
        return self.winners.shape[0]

    @property
    def n_samples(self) -> int:
        return self.winners.shape[1]

    def aggregates(self, gamma_hist_max: float | None = None,
                   bins: int = UNIT_BINS) -> Aggregates:
        """Exactly rounded per-round statistics (merge-order independent).

        The gamma histogram covers [0, gamma_hist_max]; when not given,
        the upper edge snaps to the next power of two above the largest
        sampled gamma (a deterministic function of the data).
        """
        if bins < 2:
            raise DomainError(f"need at least 2 histogram bins, got {bins}")
        n = float(self.n_samples)
        mean_r = _fsum_rows(self.r) / n
        mean_mu = _fsum_rows(self.mu) / n
        mean_gamma = _fsum_rows(self.gamma) / n
        std_r = np.sqrt(_fsum_rows((self.r - mean_r[:, None]) ** 2) / n)
        std_mu = np.sqrt(_fsum_rows((self.mu - mean_mu[:, None]) ** 2) / n)
        if gamma_hist_max is None:
            top = float(self.gamma.max(initial=0.0))
            gamma_hist_max = 2.0 ** math.ceil(math.log2(max(top, 1.0) * (1.0 + 1e-9)))
        hist_gamma = _unit_hist(
            np.clip(self.gamma / gamma_hist_max, 0.0, 1.0), bins)
        return Aggregates(
            t=np.arange(1, self.t_max + 1, dtype=np.int64),
            mean_r=mean_r,
            std_r=std_r,
            mean_mu=mean_mu,
            std_mu=std_mu,
            mean_gamma=mean_gamma,
            hist_r=_unit_hist(self.r, bins),
            hist_mu=_unit_hist(self.mu, bins),
            hist_gamma=hist_gamma,
            gamma_hist_max=float(gamma_hist_max),
        )

    def merge(self, *others: "SampleBatch") -> "SampleBatch":
        """Combine batches over disjoint sample ids, sorted by id."""
        batches = (self,) + others
        if any(b.cfg != self.cfg for b in batches):
            raise DomainError("cannot merge batches from different configurations")
        ids = np.concatenate([b.sample_ids for b in batches])
        if len(np.unique(ids)) != len(ids):
            raise DomainError("cannot merge batches with overlapping sample ids")
        order = np.argsort(ids, kind="stable")
        pick = lambda name: np.concatenate(
            [getattr(b, name) for b in batches], axis=1)[:, order]
        return SampleBatch(
            cfg=self.cfg,
            sample_ids=ids[order],
            winners=pick("winners"),
            log2_gbar=pick("log2_gbar"),
            gamma=pick("gamma"),
            energy=pick("energy"),
            ergotropy=pick("ergotropy"),
            mu=pick("mu"),
            r=pick("r"),
        )


def _sample_chunk(cfg: GameConfig, cum_p, log2_g, alpha, lo: int, hi: int):
    """Simulate sample ids [lo, hi); returns the per-(t, sample) arrays."""
    ids = np.arange(lo, hi, dtype=np.int64)
    t_max, n = cfg.t_max, hi - lo
    winners = np.empty((t_max, n), dtype=np.int16)
    log2_gbar = np.empty((t_max, n))
    gamma = np.empty((t_max, n))
    running_log2 = np.zeros(n)
    running_gamma = np.zeros(n)
    for t in range(1, t_max + 1):
        u = trajectory_uniforms(cfg.seed, ids, t)
        w = np.searchsorted(cum_p, u, side="left")  # boundary ties -> lower horse
        running_log2 = running_log2 + log2_g[w]
        running_gamma = running_gamma + alpha[w] * np.exp2(-2.0 * running_log2)
        winners[t - 1] = w + 1
        log2_gbar[t - 1] = running_log2
        gamma[t - 1] = running_gamma
    return ids, winners, log2_gbar, gamma


def sample_trajectories(cfg: GameConfig, workers: int = 1) -> SampleBatch:
    """Draw cfg.n_samples independent trajectories of cfg.t_max rounds.

    ``workers`` only splits the sample range into contiguous chunks
    evaluated concurrently; the output is byte-identical for any value.
    """
    validate(cfg)
    if workers < 1:
        raise DomainError(f"worker count must be >= 1, got {workers}")
    p, g2, alpha = horse_arrays(cfg)
    cum_p = np.cumsum(p)
    cum_p[-1] = 1.0  # guard the last edge against cumulative roundoff
    log2_g = 0.5 * np.log2(g2)
    profile = InputProfile.from_params(cfg.input)

    n = cfg.n_samples
    chunk = -(-n // workers)
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    run = lambda b: _sample_chunk(cfg, cum_p, log2_g, alpha, b[0], b[1])
    if len(bounds) == 1:
        parts = [run(bounds[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))

    ids = np.concatenate([pt[0] for pt in parts])
    winners = np.concatenate([pt[1] for pt in parts], axis=1)
    log2_gbar = np.concatenate([pt[2] for pt in parts], axis=1)
    gamma = np.concatenate([pt[3] for pt in parts], axis=1)

    fields = payoff_fields(profile, log2_gbar, gamma)
    check_payoff_bounds(profile, fields["mu"], fields["r"], where="in sampled batch")
    return SampleBatch(
        cfg=cfg,
        sample_ids=ids,
        winners=winners,
        log2_gbar=log2_gbar,
        gamma=gamma,
        energy=fields["energy"],
        ergotropy=fields["ergotropy"],
        mu=fields["mu"],
        r=fields["r"],
    )


@dataclass(frozen=True)
class ExactMoments:
    t: int
    prob_total: float
    e_gamma: float
    e_gamma2: float
    e_r: float
    e_mu: float


@dataclass(frozen=True)
class ExactLevel:
    """All J^t trajectories at round t.

    Entry ``i`` is the trajectory whose winner sequence is ``i`` written
    in base J, most recent round in the least significant digit.
    """

    t: int
    prob: NDArray[np.float64]
    gamma: NDArray[np.float64]
    r: NDArray[np.float64]
    mu: NDArray[np.float64]


@dataclass(frozen=True)
class ExactDistribution:
    cfg: GameConfig
    levels: tuple[ExactLevel, ...]
    moments: tuple[ExactMoments, ...]

    def moment(self, t: int) -> ExactMoments:
        if not 1 <= t <= len(self.moments):
            raise DomainError(f"no exact level for t={t}")
        return self.moments[t - 1]


def enumerate_exact(cfg: GameConfig, t_enum: int = DEFAULT_T_ENUM) -> ExactDistribution:
    """Exact trajectory distribution for every t <= t_enum.

    Expectations are probability-weighted compensated sums over all
    J^t trajectories; memory and time grow as J^t, guarded by
    J^t_enum <= 2^24.
    """
    validate(cfg)
    if t_enum < 1:
        raise DomainError(f"enumeration horizon must be >= 1, got {t_enum}")
    if t_enum > MAX_T_ENUM:
        raise DomainError(f"enumeration horizon capped at {MAX_T_ENUM}, got {t_enum}")
    if cfg.J ** t_enum > ENUM_BUDGET:
        raise EnumerationSizeError(
            f"{cfg.J}^{t_enum} trajectories exceed the budget of {ENUM_BUDGET}"
        )
    p, g2, alpha = horse_arrays(cfg)
    log2_g2 = np.log2(g2)
    profile = InputProfile.from_params(cfg.input)

    levels: list[ExactLevel] = []
    moments: list[ExactMoments] = []
    probs = np.ones(1)
    log2_gbar2 = np.zeros(1)
    gamma = np.zeros(1)
    for t in range(1, t_enum + 1):
        parents = len(gamma)
        probs = (probs[:, None] * p[None, :]).ravel()
        log2_gbar2 = (log2_gbar2[:, None] + log2_g2[None, :]).ravel()
        gamma = np.repeat(gamma, cfg.J) + np.tile(alpha, parents) * np.exp2(-log2_gbar2)
        fields = payoff_fields(profile, log2_gbar2 / 2.0, gamma)
        levels.append(ExactLevel(t=t, prob=probs, gamma=gamma,
                                 r=fields["r"], mu=fields["mu"]))
        moments.append(ExactMoments(
            t=t,
            prob_total=math.fsum(probs),
            e_gamma=math.fsum(probs * gamma),
            e_gamma2=math.fsum(probs * gamma * gamma),
            e_r=math.fsum(probs * fields["r"]),
            e_mu=math.fsum(probs * fields["mu"]) if profile.erg0 > 0 else math.nan,
        ))
    return ExactDistribution(cfg=cfg, levels=tuple(levels), moments=tuple(moments))


@dataclass(frozen=True)
class ConvergenceReport:
    """Late-time behaviour of gamma per trajectory.

    ``decay_rate`` is the least-squares slope of log2(increment) over
    the tail (NaN when fewer than two resolvable increments); a
    trajectory is flagged when the game expands on average (G > 0) but
    its tail increments fail to decay.
    """

    tail_start: int
    mean_log2_rate: float                  # empirical E[log2 g] per round
    max_tail_increment: NDArray[np.float64]
    last_increment: NDArray[np.float64]
    decay_rate: NDArray[np.float64]
    flagged: NDArray[np.bool_]
    fraction_flagged: float


def empirical_convergence_diagnostic(batch: SampleBatch) -> ConvergenceReport:
    """Check that gamma increments die out when the capital grows.

    Looks at rounds t >= t_max/2.  Informational when the game is
    contracting or marginal (nothing is flagged: gamma genuinely
    diverges there).
    """
    if batch.t_max < 20:
        raise DomainError("need t_max >= 20 for a meaningful tail")
    tail_start = batch.t_max // 2
    p = np.array(batch.cfg.p)
    _, g2, _ = horse_arrays(batch.cfg)
    g_rate = float(p @ (0.5 * np.log2(g2)))

    inc = np.diff(batch.gamma, axis=0)[tail_start - 1:]  # increments into t > tail_start
    rounds = np.arange(tail_start + 1, batch.t_max + 1, dtype=float)[:, None]
    positive = inc > 0.0
    counts = positive.sum(axis=0)
    with np.errstate(divide="ignore"):
        y = np.where(positive, np.log2(np.where(positive, inc, 1.0)), 0.0)
    w = positive.astype(float)
    wsum = np.maximum(counts, 1)
    t_mean = (w * rounds).sum(axis=0) / wsum
    y_mean = y.sum(axis=0) / wsum
    t_cent = (rounds - t_mean) * w
    denom = (t_cent * t_cent).sum(axis=0)
    num = (t_cent * (y - y_mean)).sum(axis=0)
    slope = np.divide(num, denom, out=np.full_like(num, math.nan), where=denom > 0)
    slope[counts < 2] = math.nan

    flagged = (g_rate > 0.0) & (counts >= 2) & (slope >= 0.0)
    return ConvergenceReport(
        tail_start=tail_start,
        mean_log2_rate=g_rate,
        max_tail_increment=inc.max(axis=0),
        last_increment=inc[-1] if len(inc) else np.zeros(batch.n_samples),
        decay_rate=slope,
        flagged=flagged,
        fraction_flagged=float(flagged.mean()),
    )
