"""Closed-form moments, doubling rates, Kelly optimality, mean-field curves."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

import oracles
from qkelly.analysis import (
    GameMoments,
    classical_doubling_rate,
    entropy_bits,
    gamma_mean,
    gamma_mean_limit,
    gamma_second_moment,
    gamma_second_moment_limit,
    growth_rate,
    kelly_optimize,
    mean_field_r,
    mean_field_r_curve,
    mean_field_r_limit,
    moment_report,
    quantum_doubling_rate,
    wealth_lln_check,
)
from qkelly.betting import GameConfig, horse_arrays
from qkelly.engine import sample_trajectories
from qkelly.errors import DomainError
from qkelly.gaussian import StateParams
from qkelly.presets import get_preset

FIG4A = get_preset("fig4a").config
FIG5A = get_preset("fig5a").config

# fair odds + Kelly bets: E[1/g^2] = sum p/(k^2 p) = sum 1/k^2 = 1
FAIR_KELLY = GameConfig(
    p=(0.7, 0.3),
    k=(math.sqrt(2), math.sqrt(2)),
    eta=(math.sqrt(0.7), math.sqrt(0.3)),
    input=StateParams(mean=(math.sqrt(50.0), 0.0)),
)


def test_single_round_blocks():
    m = GameMoments.from_config(FIG4A)
    # g^2 = (2.1, 0.9), alpha = (1.45, 2.05)
    assert m.inv_g2 == pytest.approx(0.7 / 2.1 + 0.3 / 0.9, rel=1e-14)
    assert m.inv_g4 == pytest.approx(0.7 / 2.1 ** 2 + 0.3 / 0.9 ** 2, rel=1e-14)
    assert m.alpha_g2 == pytest.approx(0.7 * 1.45 / 2.1 + 0.3 * 2.05 / 0.9, rel=1e-14)
    assert m.alpha2_g4 == pytest.approx(
        0.7 * (1.45 / 2.1) ** 2 + 0.3 * (2.05 / 0.9) ** 2, rel=1e-14)


def test_gamma_mean_frozen_values():
    assert gamma_mean(FIG4A, 0) == 0.0
    assert gamma_mean(FIG4A, 1) == pytest.approx(7.0 / 6.0, rel=1e-14)
    assert gamma_mean(FIG4A, 2) == pytest.approx(35.0 / 18.0, rel=1e-14)
    assert gamma_mean(FIG4A, 3) == pytest.approx(2.4629629629629632, rel=1e-14)
    assert gamma_mean(FIG4A, 12) == pytest.approx(3.4730242867975947, rel=1e-14)
    with pytest.raises(DomainError):
        gamma_mean(FIG4A, -1)


def test_gamma_mean_matches_enumeration():
    for cfg in (FIG4A, get_preset("fig4c").config, get_preset("fig8").config):
        _, g2, alpha = horse_arrays(cfg)
        for t in range(1, 11):
            ref, _ = oracles.gamma_moments_exact(list(cfg.p), list(g2), list(alpha), t)
            assert gamma_mean(cfg, t) == pytest.approx(ref, rel=1e-10)


def test_gamma_mean_monotone_and_limit():
    vals = [gamma_mean(FIG4A, t) for t in range(0, 60)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    lim = gamma_mean_limit(FIG4A)
    assert lim == pytest.approx(3.5, rel=1e-12)
    assert vals[-1] < lim


def test_gamma_mean_marginal_game_diverges_linearly():
    # E[1/g^2] = 1 exactly: partial sums are t * E[alpha/g^2]
    m = GameMoments.from_config(FAIR_KELLY)
    assert m.inv_g2 == pytest.approx(1.0, abs=1e-15)
    assert gamma_mean_limit(FAIR_KELLY) == math.inf
    assert gamma_mean(FAIR_KELLY, 5) == pytest.approx(5.0 * m.alpha_g2, rel=1e-12)
    assert gamma_mean(FAIR_KELLY, 1) == pytest.approx(m.alpha_g2, rel=1e-12)


def test_second_moment_printed_agrees_only_at_t1():
    sm1 = gamma_second_moment(FIG4A, 1)
    # E[alpha^2/g^4] exactly
    assert sm1.oracle == pytest.approx(1.8902116402116407, rel=1e-10)
    assert sm1.as_printed == pytest.approx(sm1.oracle, rel=1e-9)
    assert sm1.discrepant is False

    sm2 = gamma_second_moment(FIG4A, 2)
    assert sm2.discrepant is True
    _, g2, alpha = horse_arrays(FIG4A)
    _, ref2 = oracles.gamma_moments_exact(list(FIG4A.p), list(g2), list(alpha), 2)
    assert sm2.oracle == pytest.approx(ref2, rel=1e-12)

    sm12 = gamma_second_moment(FIG4A, 12)
    assert sm12.oracle == pytest.approx(18.349097090887575, rel=1e-10)
    assert sm12.discrepant is True


def test_second_moment_oracle_skipped_when_too_big():
    sm = gamma_second_moment(FIG4A, 30)  # 2^30 > budget
    assert sm.oracle is None
    assert sm.discrepant is None
    assert math.isfinite(sm.as_printed)


def test_second_moment_limit_preconditions():
    # fig4a satisfies them; the value inherits the printed defect
    lim = gamma_second_moment_limit(FIG4A)
    assert lim is not None and math.isfinite(lim)
    # marginal game: E[1/g^2] = 1 -> no asymptote
    assert gamma_second_moment_limit(FAIR_KELLY) is None


def test_growth_rate_and_entropy():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = rng.dirichlet(np.ones(3))
        k = 1.0 + rng.uniform(0.1, 2.0, 3)
        eta2 = rng.dirichlet(np.ones(3))
        eta = np.sqrt(eta2)
        assert growth_rate(p, k, eta) == pytest.approx(
            oracles.doubling_rate(p, k, eta), rel=1e-12, abs=1e-12)
    assert growth_rate((0.5, 0.5), (2.0, 2.0), (0.5, 0.0)) == -math.inf
    assert entropy_bits((0.5, 0.5)) == 1.0
    assert entropy_bits((1.0,)) == 0.0
    assert entropy_bits((0.7, 0.3)) == pytest.approx(0.8812908992306927, rel=1e-14)


def test_classical_doubling_even_odds():
    cd = classical_doubling_rate((0.7, 0.3), (2.0, 2.0), (0.7, 0.3))
    # 1 - H(0.7): proportional betting at even odds
    assert cd.w_star == pytest.approx(0.1187091007693073, rel=1e-13)
    assert cd.w == pytest.approx(cd.w_star, rel=1e-13)
    assert cd.entropy == pytest.approx(0.8812908992306927, rel=1e-13)


def test_classical_doubling_proportional_is_optimal():
    rng = np.random.default_rng(77)
    p = (0.5, 0.3, 0.2)
    o = (3.0, 4.0, 5.0)
    best = classical_doubling_rate(p, o, p).w
    for _ in range(100):
        b = tuple(rng.dirichlet(np.ones(3)))
        assert classical_doubling_rate(b, o, p).w <= best + 1e-12


def test_classical_doubling_edge_cases():
    # uniform p, fair uniform odds o = J: W* = 0
    cd = classical_doubling_rate((0.25,) * 4, (4.0,) * 4, (0.25,) * 4)
    assert abs(cd.w_star) < 1e-15
    # unbacked horse with positive probability -> -inf, reported not raised
    cd0 = classical_doubling_rate((0.0, 1.0), (2.0, 2.0), (0.5, 0.5))
    assert cd0.w == -math.inf
    with pytest.raises(DomainError):
        classical_doubling_rate((0.5, 0.6), (2.0, 2.0), (0.5, 0.5))
    with pytest.raises(DomainError):
        classical_doubling_rate((0.5, 0.5), (2.0, -1.0), (0.5, 0.5))


def test_kelly_square_root_rule():
    res = kelly_optimize((0.7, 0.3), (math.sqrt(3), math.sqrt(3)))
    assert res.eta[0] == pytest.approx(math.sqrt(0.7), rel=1e-15)
    assert res.eta[1] == pytest.approx(math.sqrt(0.3), rel=1e-15)
    assert res.g == pytest.approx(0.3518358007452316, rel=1e-12)
    uni = kelly_optimize((0.25,) * 4, (2.0,) * 4)
    assert all(e == pytest.approx(0.5, rel=1e-15) for e in uni.eta)
    with pytest.raises(DomainError):
        kelly_optimize((0.7, 0.3), (1.0, 2.0))


def test_kelly_beats_exhaustive_grid():
    # every eta^2 on the step-0.01 simplex grid, random p vectors
    rng = np.random.default_rng(5)
    k = (math.sqrt(3), math.sqrt(3))
    grid = [g for g in oracles.simplex_grid(2) if all(x > 0 for x in g)]
    for _ in range(20):
        p = tuple(rng.dirichlet((2.0, 2.0)))
        if min(p) < 1e-3:
            continue
        best = kelly_optimize(p, k).g
        for eta2 in grid:
            eta = tuple(math.sqrt(x) for x in eta2)
            assert growth_rate(p, k, eta) <= best + 1e-12


def test_kelly_grid_j3():
    grid = list(oracles.simplex_grid(3))
    assert len(grid) == 5151
    p = (0.5, 0.3, 0.2)
    k = (2.0, 2.0, 2.0)
    best = kelly_optimize(p, k).g
    worse = 0
    for eta2 in grid:
        if any(x == 0.0 for x in eta2):
            continue
        eta = tuple(math.sqrt(x) for x in eta2)
        g = growth_rate(p, k, eta)
        assert g <= best + 1e-12
        worse += g < best
    assert worse > 0


def test_regime_classification():
    rep = quantum_doubling_rate(FIG4A)
    assert rep.regime == "expanding"
    assert rep.g_rate == pytest.approx(0.3518358007452316, rel=1e-12)
    assert rep.map_slopes == pytest.approx((2.1, 0.9), rel=1e-12)
    assert rep.map_intercepts == pytest.approx((1.45, 2.05), rel=1e-12)
    assert rep.energy_slope == pytest.approx(0.7 * 2.1 + 0.3 * 0.9, rel=1e-14)
    assert rep.energy_lift == pytest.approx(0.7 * 1.45 + 0.3 * 2.05, rel=1e-14)

    # k=sqrt(2) on both, eta^2 = (1/2, 1/2): G = 0 exactly -> marginal
    even = GameConfig(p=(0.5, 0.5), k=(math.sqrt(2),) * 2,
                      eta=(math.sqrt(0.5),) * 2, input=FIG4A.input)
    assert quantum_doubling_rate(even).regime == "marginal"

    lop = GameConfig(p=(0.5, 0.5), k=(math.sqrt(2),) * 2,
                     eta=(math.sqrt(0.3), math.sqrt(0.7)), input=FIG4A.input)
    rep = quantum_doubling_rate(lop)
    assert rep.regime == "contracting"
    assert rep.g_rate < 0.0

    fig8 = quantum_doubling_rate(get_preset("fig8").config)
    assert fig8.regime == "expanding"
    assert fig8.g_rate == pytest.approx(0.059180546208412274, rel=1e-10)


def test_mean_field_coherent_identity():
    # no squeezing: the tracking curve is exactly erg0/(erg0 + E[gamma] + 1/2)
    erg0 = 25.0
    for t in (1, 2, 5, 20, 100):
        want = erg0 / (erg0 + gamma_mean(FIG5A, t) + 0.5)
        assert mean_field_r(FIG5A, t) == pytest.approx(want, rel=1e-12)
    assert mean_field_r(FIG5A, 1) == pytest.approx(0.9375, rel=1e-14)


def test_mean_field_limit_and_curve():
    lim = mean_field_r_limit(FIG5A)
    assert lim == pytest.approx(50.0 / 58.0, rel=1e-12)
    curve = mean_field_r_curve(FIG5A, 40)
    assert curve.shape == (40,)
    assert np.all(np.isfinite(curve))
    for t in (1, 7, 40):
        assert curve[t - 1] == pytest.approx(mean_field_r(FIG5A, t), rel=1e-12)
    # curve decreases toward the limit from above for this preset
    assert np.all(np.diff(curve) < 0)
    assert curve[-1] > lim
    # diverging E[gamma]: no limit to report
    assert mean_field_r_limit(FAIR_KELLY) is None


def test_mean_field_requires_ergotropy():
    dead = dataclasses.replace(FIG5A, input=StateParams())
    with pytest.raises(DomainError):
        mean_field_r(dead, 5)
    with pytest.raises(DomainError):
        mean_field_r_limit(dead)
    with pytest.raises(DomainError):
        mean_field_r_curve(dead, 5)


def test_moment_report_table():
    rep = moment_report(FIG4A, [1, 2, 12, 20], t_enum=12)
    assert [row.t for row in rep.rows] == [1, 2, 12, 20]
    by_t = {row.t: row for row in rep.rows}
    assert by_t[1].second_discrepant is False
    assert by_t[2].second_discrepant is True
    assert by_t[12].second_oracle == pytest.approx(18.349097090887575, rel=1e-10)
    # t=20 exceeds the enumeration horizon -> oracle skipped
    assert by_t[20].second_oracle is None
    assert by_t[20].second_discrepant is None
    assert rep.gamma_limit == pytest.approx(3.5, rel=1e-12)
    assert rep.second_limit_printed is not None
    for row in rep.rows:
        assert row.gamma_mean == pytest.approx(gamma_mean(FIG4A, row.t), rel=1e-14)
        assert row.mean_field_r == pytest.approx(mean_field_r(FIG4A, row.t), rel=1e-12)

    small = moment_report(FIG4A, [1, 2, 3], t_enum=2)
    assert small.rows[2].second_oracle is None
    with pytest.raises(DomainError):
        moment_report(FIG4A, [])
    with pytest.raises(DomainError):
        moment_report(FIG4A, [0, 1])


def test_wealth_lln():
    cfg = dataclasses.replace(FIG5A, n_samples=2000, t_max=60)
    rep = wealth_lln_check(sample_trajectories(cfg))
    assert rep.t == 60 and rep.n_samples == 2000
    assert rep.g_rate == pytest.approx(0.3518358007452316, rel=1e-12)
    assert rep.per_step_sd > 0.0
    assert rep.deviation == abs(rep.mean_rate - rep.g_rate)
    assert rep.deviation < 6.0 * rep.expected_se
    with pytest.raises(DomainError):
        wealth_lln_check(sample_trajectories(
            dataclasses.replace(FIG5A, n_samples=10, t_max=20)))
