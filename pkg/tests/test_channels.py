"""Gaussian channel algebra: application, composition, CPTP gates."""

from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from qkelly.channels import (
    GainChannel,
    GaussianChannel,
    additive_noise,
    apply,
    compose,
    compose_gain,
    from_gain_and_photons,
    pure_amp,
    pure_loss,
)
from qkelly.errors import ChannelViolation, DomainError
from qkelly.gaussian import GaussianState, params_to_state, StateParams, vacuum


def random_channel(rng: np.random.Generator) -> GaussianChannel:
    X = rng.normal(0, 1, (2, 2))
    A = rng.normal(0, 1, (2, 2))
    # AA^T is PSD; the ridge keeps 4 det Y >= (det X - 1)^2
    Y = A @ A.T + (abs(np.linalg.det(X) - 1.0) / 2.0 + 0.1) * np.eye(2)
    return GaussianChannel(rng.normal(0, 1, 2), X, Y)


def random_state(rng: np.random.Generator) -> GaussianState:
    return params_to_state(StateParams(
        n=float(rng.uniform(0, 2)),
        zeta_abs=float(rng.uniform(0, 1.5)),
        zeta_phase=float(rng.uniform(0, 2 * math.pi)),
        mean=(float(rng.normal(0, 2)), float(rng.normal(0, 2))),
    ))


def test_apply_matches_moment_oracle():
    rng = np.random.default_rng(31)
    for _ in range(200):
        ch = random_channel(rng)
        st = random_state(rng)
        out = apply(ch, st)
        m, c = oracles.apply_general(ch.lam, ch.X, ch.Y, st.mean, st.cov)
        assert np.allclose(out.mean, m, rtol=0, atol=1e-12 * (1 + abs(m).max()))
        assert np.allclose(out.cov, c, rtol=0, atol=1e-12 * (1 + abs(c).max()))


def test_compose_equals_sequential_apply():
    rng = np.random.default_rng(17)
    for _ in range(100):
        a, b = random_channel(rng), random_channel(rng)
        st = random_state(rng)
        seq = apply(b, apply(a, st))
        one = apply(compose(a, b), st)
        scale = 1.0 + float(np.abs(seq.cov).max())
        assert np.allclose(one.mean, seq.mean, rtol=0, atol=1e-12 * scale)
        assert np.allclose(one.cov, seq.cov, rtol=0, atol=1e-12 * scale)


def test_compose_gain_algebra():
    rng = np.random.default_rng(3)
    for _ in range(200):
        g1, g2 = rng.uniform(0.3, 2.0, 2)
        a1 = abs(g1 * g1 - 1) / 2 + rng.uniform(0, 1)
        a2 = abs(g2 * g2 - 1) / 2 + rng.uniform(0, 1)
        c1, c2 = GainChannel(g1, a1), GainChannel(g2, a2)
        both = compose_gain(c1, c2)
        assert both.g == pytest.approx(g2 * g1, rel=1e-12)
        assert both.alpha == pytest.approx(g2 * g2 * a1 + a2, rel=1e-12)
        # agrees with the matrix composition
        mat = compose(c1.as_channel(), c2.as_channel())
        assert np.allclose(mat.X, both.g * np.eye(2), atol=1e-12)
        assert np.allclose(mat.Y, both.alpha * np.eye(2), atol=1e-12 * (1 + both.alpha))
        # and with applying the two in order
        st = random_state(rng)
        seq = c2.apply(c1.apply(st))
        one = both.apply(st)
        scale = 1.0 + float(np.abs(seq.cov).max())
        assert np.allclose(one.cov, seq.cov, rtol=0, atol=1e-12 * scale)
        assert np.allclose(one.mean, seq.mean, rtol=0, atol=1e-12 * scale)


def test_named_channels():
    loss = pure_loss(0.6)
    assert loss.g == 0.6
    assert loss.alpha == pytest.approx((1 - 0.36) / 2, rel=1e-15)
    assert loss.photon_number == 0.0  # quantum limited

    amp = pure_amp(2.0)
    assert amp.g == 2.0
    assert amp.alpha == pytest.approx(1.5, rel=1e-15)
    assert amp.photon_number == 0.0

    noise = additive_noise(0.7)
    assert noise.g == 1.0 and noise.alpha == 0.7
    assert noise.photon_number == 0.7

    warm = from_gain_and_photons(2.0, 1.0)
    assert warm.alpha == pytest.approx(3.0 * 1.5, rel=1e-15)
    assert warm.photon_number == pytest.approx(1.0, rel=1e-12)
    assert from_gain_and_photons(1.0, 0.25).alpha == 0.25


def test_parameter_gates():
    with pytest.raises(DomainError):
        pure_loss(0.0)
    with pytest.raises(DomainError):
        pure_loss(1.0)
    with pytest.raises(DomainError):
        pure_amp(1.0)
    with pytest.raises(DomainError):
        additive_noise(-0.1)
    with pytest.raises(DomainError):
        from_gain_and_photons(0.5, -1e-3)


def test_cptp_gates():
    # below the quantum limit for amplification
    with pytest.raises(ChannelViolation):
        GainChannel(2.0, 1.0)
    with pytest.raises(ChannelViolation):
        GainChannel(-0.5, 1.0)
    with pytest.raises(ChannelViolation):
        GaussianChannel(np.zeros(2), 2.0 * np.eye(2), 0.1 * np.eye(2))
    with pytest.raises(ChannelViolation):
        GaussianChannel(np.zeros(2), np.eye(2), np.array([[1.0, 0.3], [0.0, 1.0]]))
    with pytest.raises(ChannelViolation):
        GaussianChannel(np.zeros(2), np.eye(2), -np.eye(2))
    # saturating the bound is allowed
    GainChannel(2.0, 1.5)
    GainChannel(0.5, 0.375)


def test_pure_loss_fixes_vacuum():
    out = pure_loss(0.37).apply(vacuum())
    assert np.allclose(out.cov, np.eye(2), atol=1e-15)
    assert np.array_equal(out.mean, np.zeros(2))
