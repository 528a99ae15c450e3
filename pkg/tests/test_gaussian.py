"""Single-mode Gaussian states: moments, energy, ergotropy, inversion."""

from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from qkelly.errors import DomainError, UncertaintyViolation
from qkelly.gaussian import (
    GaussianState,
    StateParams,
    char_function,
    energy,
    ergotropy,
    ergotropy_summary,
    iso_ergotropy_sample,
    params_energy,
    params_ergotropy,
    params_to_state,
    state_to_params,
    vacuum,
)


def random_params(rng: np.random.Generator) -> StateParams:
    return StateParams(
        n=float(rng.uniform(0.0, 3.0)),
        zeta_abs=float(rng.uniform(0.0, 2.0)),
        zeta_phase=float(rng.uniform(0.0, 2.0 * math.pi)),
        mean=(float(rng.normal(0, 3)), float(rng.normal(0, 3))),
    )


def test_vacuum():
    v = vacuum()
    assert np.array_equal(v.cov, np.eye(2))
    assert energy(v) == 0.5
    assert ergotropy(v) == 0.0
    assert v.purity_det == 1.0


def test_params_to_state_matches_oracle():
    rng = np.random.default_rng(101)
    for _ in range(1000):
        p = random_params(rng)
        st = params_to_state(p)
        want = oracles.cov_from_params(p.n, p.zeta_abs, p.zeta_phase)
        assert np.allclose(st.cov, want, rtol=0, atol=1e-12 * (1 + abs(want).max()))
        assert np.array_equal(st.mean, np.array(p.mean))


def test_energy_ergotropy_closed_form_vs_matrix():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = random_params(rng)
        st = params_to_state(p)
        e_mat = oracles.energy_mv(st.mean, st.cov)
        w_mat = oracles.ergotropy_mv(st.mean, st.cov)
        assert params_energy(p) == pytest.approx(e_mat, rel=1e-10)
        assert params_ergotropy(p) == pytest.approx(w_mat, rel=1e-10, abs=1e-12)
        assert energy(st) == pytest.approx(e_mat, rel=1e-12)
        assert ergotropy(st) == pytest.approx(w_mat, rel=1e-10, abs=1e-12)


def test_locked_energy_is_occupation_plus_half():
    # E - W = n + 1/2 for every parametrised state
    rng = np.random.default_rng(55)
    for _ in range(1000):
        p = random_params(rng)
        locked = params_energy(p) - params_ergotropy(p)
        assert locked == pytest.approx(p.n + 0.5, rel=1e-12)


def test_roundtrip_state_to_params():
    rng = np.random.default_rng(23)
    for _ in range(300):
        p = random_params(rng)
        q = state_to_params(params_to_state(p))
        assert q.n == pytest.approx(p.n, rel=1e-9, abs=1e-9)
        assert q.zeta_abs == pytest.approx(p.zeta_abs, rel=1e-9, abs=1e-9)
        assert q.mean[0] == pytest.approx(p.mean[0], abs=1e-12)
        assert q.mean[1] == pytest.approx(p.mean[1], abs=1e-12)
        # phases live on [0, 2pi); compare on the circle
        d = (q.zeta_phase - p.zeta_phase) % (2.0 * math.pi)
        if p.zeta_abs > 1e-6:  # phase unidentifiable without squeezing
            assert min(d, 2.0 * math.pi - d) < 1e-7


def test_unsqueezed_state_reports_zero_phase():
    p = StateParams(n=1.5, zeta_abs=0.0, zeta_phase=2.7, mean=(1.0, -2.0))
    q = state_to_params(params_to_state(p))
    assert q.zeta_phase == 0.0
    # acosh near its branch point amplifies 1-ulp cov roundoff to ~1e-8
    assert q.zeta_abs == pytest.approx(0.0, abs=1e-7)


def test_char_function_values():
    v = vacuum()
    assert char_function(v, np.zeros(2)) == 1.0 + 0.0j
    st = GaussianState(np.array([1.0, 2.0]), np.diag([2.0, 3.0]))
    z = np.array([0.5, -0.25])
    want = np.exp(-0.25 * (2.0 * 0.25 + 3.0 * 0.0625) + 1j * (0.5 - 0.5))
    assert char_function(st, z) == pytest.approx(want)
    # batched input keeps the leading shape
    zs = np.zeros((4, 3, 2))
    assert char_function(st, zs).shape == (4, 3)
    assert np.allclose(char_function(st, zs), 1.0)


def test_uncertainty_gates():
    with pytest.raises(UncertaintyViolation):
        GaussianState(np.zeros(2), 0.5 * np.eye(2))  # det < 1
    with pytest.raises(UncertaintyViolation):
        GaussianState(np.zeros(2), np.array([[1.0, 0.5], [-0.5, 1.0]]))
    with pytest.raises(UncertaintyViolation):
        GaussianState(np.zeros(2), np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(UncertaintyViolation):
        GaussianState(np.array([np.nan, 0.0]), np.eye(2))


def test_state_arrays_frozen():
    st = vacuum()
    with pytest.raises(ValueError):
        st.cov[0, 0] = 5.0


def test_params_validation():
    with pytest.raises(DomainError):
        StateParams(n=-0.1)
    with pytest.raises(DomainError):
        StateParams(zeta_abs=-1.0)
    with pytest.raises(DomainError):
        StateParams(mean=(math.inf, 0.0))


def test_ergotropy_summary():
    s = ergotropy_summary(StateParams(n=2.0, mean=(3.0, 4.0)))
    assert s.energy == pytest.approx(2.5 + 12.5, rel=1e-12)
    assert s.ergotropy == pytest.approx(12.5, rel=1e-12)
    assert s.locked == pytest.approx(2.5, rel=1e-12)
    assert s.ratio == pytest.approx(12.5 / 15.0, rel=1e-12)


def test_iso_ergotropy_sample():
    target = 25.0
    res = iso_ergotropy_sample(target, m2_values=[0.0, 10.0, 30.0, 49.0, 51.0],
                               n_values=[0.0, 1.0, 5.0, -1.0])
    assert res.target == target
    # every produced state actually sits on the manifold
    for p in res.states:
        assert params_ergotropy(p) == pytest.approx(target, rel=1e-10)
    # m2 = 51 > 2*target and n = -1 are both skipped with a reason
    reasons = {reason for _, _, reason in res.skipped}
    assert any("exceeds" in r for r in reasons)
    assert any("occupation" in r for r in reasons)
    assert len(res.states) + len(res.skipped) == 5 * 4
    with pytest.raises(DomainError):
        iso_ergotropy_sample(-1.0, [0.0], [0.0])
