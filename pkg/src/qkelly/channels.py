"""Single-mode Gaussian channels and their composition algebra.

A channel is the triple ``(lambda, X, Y)`` acting on moments as

    m  ->  X^T m + lambda
    sigma  ->  X^T sigma X + 2 Y

and is completely positive iff ``Y`` is symmetric PSD with
``4 det(Y) >= (det(X) - 1)^2``.

The gambling protocol only ever uses the phase-insensitive subfamily
``X = g I``, ``Y = alpha I``, ``lambda = 0`` (gain channels), for which
composition reduces to scalar arithmetic:

    (g1, a1) then (g2, a2)  ==  (g2 g1, g2^2 a1 + a2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ChannelViolation, DomainError
from .gaussian import GaussianState

#: slack for the CPTP inequality checks (boundary channels must pass)
CPTP_TOL = 1e-12


@dataclass(frozen=True)
class GaussianChannel:
    """General one-mode channel triple (lambda, X, Y)."""

    lam: NDArray[np.float64]
    X: NDArray[np.float64]
    Y: NDArray[np.float64]

    def __post_init__(self) -> None:
        lam = np.array(self.lam, dtype=float).reshape(2)
        X = np.array(self.X, dtype=float).reshape(2, 2)
        Y = np.array(self.Y, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ChannelViolation("channel parameters must be finite")
        if abs(Y[0, 1] - Y[1, 0]) > CPTP_TOL * max(1.0, abs(Y[0, 1])):
            raise ChannelViolation("noise matrix Y must be symmetric")
        det_y = float(np.linalg.det(Y))
        if Y[0, 0] < -CPTP_TOL or Y[1, 1] < -CPTP_TOL or det_y < -CPTP_TOL:
            raise ChannelViolation("noise matrix Y must be positive semidefinite")
        det_x = float(np.linalg.det(X))
        if 4.0 * det_y < (det_x - 1.0) ** 2 - CPTP_TOL:
            raise ChannelViolation(
                f"not completely positive: 4 det(Y) = {4.0 * det_y} < "
                f"(det(X) - 1)^2 = {(det_x - 1.0) ** 2}"
            )
        for arr in (lam, X, Y):
            arr.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    def apply(self, state: GaussianState) -> GaussianState:
        return apply(self, state)


def apply(channel: GaussianChannel, state: GaussianState) -> GaussianState:
    """Push a state through a channel at the level of moments."""
    mean = channel.X.T @ state.mean + channel.lam
    cov = channel.X.T @ state.cov @ channel.X + 2.0 * channel.Y
    return GaussianState(mean, cov)


def compose(first: GaussianChannel, then: GaussianChannel) -> GaussianChannel:
    """The single channel equal to ``first`` followed by ``then``."""
    lam = then.X.T @ first.lam + then.lam
    X = first.X @ then.X
    Y = then.X.T @ first.Y @ then.X + then.Y
    return GaussianChannel(lam, X, Y)


@dataclass(frozen=True)
class GainChannel:
    """Phase-insensitive channel: gain ``g >= 0``, added noise ``alpha``.

    Complete positivity requires ``alpha >= |g^2 - 1| / 2``; the bound is
    saturated by pure loss (g < 1) and quantum-limited amplification
    (g > 1).  For g = 1 the channel is classical additive noise and
    ``alpha`` equals the environment occupation directly.
    """

    g: float
    alpha: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g) and self.g >= 0.0):
            raise ChannelViolation(f"gain must be finite and >= 0, got {self.g}")
        floor = abs(self.g * self.g - 1.0) / 2.0
        if not (math.isfinite(self.alpha) and self.alpha >= floor - CPTP_TOL):
            raise ChannelViolation(
                f"added noise {self.alpha} below the quantum limit {floor} for gain {self.g}"
            )

    @property
    def photon_number(self) -> float:
        """Environment occupation N implied by (g, alpha)."""
        d = abs(self.g * self.g - 1.0)
        if d == 0.0:
            return self.alpha
        return max(self.alpha / d - 0.5, 0.0)

    def as_channel(self) -> GaussianChannel:
        return GaussianChannel(np.zeros(2), self.g * np.eye(2), self.alpha * np.eye(2))

    def apply(self, state: GaussianState) -> GaussianState:
        mean = self.g * state.mean
        cov = self.g * self.g * state.cov + 2.0 * self.alpha * np.eye(2)
        return GaussianState(mean, cov)


def from_gain_and_photons(g: float, photons: float) -> GainChannel:
    """Gain channel from (g, N): alpha = |g^2 - 1| (N + 1/2), or N at g = 1."""
    if photons < 0.0:
        raise DomainError(f"environment occupation must be >= 0, got {photons}")
    if g == 1.0:
        return GainChannel(1.0, photons)
    return GainChannel(g, abs(g * g - 1.0) * (photons + 0.5))


def pure_loss(eta: float) -> GainChannel:
    """Beam-splitter loss with transmissivity eta in (0, 1)."""
    if not 0.0 < eta < 1.0:
        raise DomainError(f"transmissivity must lie in (0, 1), got {eta}")
    return GainChannel(eta, (1.0 - eta * eta) / 2.0)


def pure_amp(k: float) -> GainChannel:
    """Quantum-limited amplifier with gain k > 1."""
    if not k > 1.0:
        raise DomainError(f"amplifier gain must exceed 1, got {k}")
    return GainChannel(k, (k * k - 1.0) / 2.0)


def additive_noise(photons: float) -> GainChannel:
    """Classical noise addition at unit gain."""
    if photons < 0.0:
        raise DomainError(f"noise occupation must be >= 0, got {photons}")
    return GainChannel(1.0, photons)


def compose_gain(first: GainChannel, then: GainChannel) -> GainChannel:
    """Scalar composition law for gain channels (``first`` applied first)."""
    return GainChannel(then.g * first.g, then.g * then.g * first.alpha + then.alpha)
