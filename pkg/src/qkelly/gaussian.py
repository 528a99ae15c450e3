"""Single-mode Gaussian states: moments, energy, ergotropy.

Conventions (units with h*nu = 1):

* A state is described by its mean quadrature vector ``m`` (length 2)
  and 2x2 covariance matrix ``sigma``; the vacuum has ``sigma = I``.
* Valid covariances are symmetric, positive definite and satisfy
  ``det(sigma) >= 1`` (purity iff equality).
* The parametric form used throughout is

      sigma = (2n+1) [cosh(2|z|) I + sinh(2|z|) (sin(phi) S1 - cos(phi) S3)]

  with thermal occupation ``n >= 0``, squeezing modulus ``|z| >= 0`` and
  squeezing phase ``phi``, where ``S1 = [[0,1],[1,0]]`` and
  ``S3 = [[1,0],[0,-1]]``.  Its eigenvalues are ``(2n+1) exp(+/-2|z|)``.
* Mean energy and extractable work (ergotropy) of a state:

      E   = tr(sigma)/4 + |m|^2/2
          = ((2n+1) cosh(2|z|) + |m|^2) / 2
      W   = E - sqrt(det(sigma))/2
          = ((2n+1) (cosh(2|z|) - 1) + |m|^2) / 2

  so the locked (non-extractable) part is E - W = n + 1/2.

Note on conditioning: the ``det >= 1 - 1e-9`` gate is evaluated in double
precision and is trustworthy up to cosh(2|z|) of a couple of thousand;
beyond that the determinant of a nearly singular squeezed covariance
cannot be resolved to 1e-9 in doubles.  Code paths that sweep extreme
squeezing work on ``StateParams`` scalars and never build the matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError, UncertaintyViolation

TWO_PI = 2.0 * math.pi

#: absolute tolerance on det(sigma) >= 1
DET_TOL = 1e-9
#: absolute tolerance on symmetry of sigma
SYM_TOL = 1e-9


@dataclass(frozen=True)
class StateParams:
    """Thermal/squeezed/displaced parametrisation of a one-mode state.

    Parameters
    ----------
    n : float
        Thermal occupation number, ``n >= 0``.
    zeta_abs : float
        Squeezing modulus ``|z| >= 0``.
    zeta_phase : float
        Squeezing phase, stored normalised to ``[0, 2*pi)``.
    mean : tuple of float
        Mean quadrature vector ``(m_x, m_p)``.
    """

    n: float = 0.0
    zeta_abs: float = 0.0
    zeta_phase: float = 0.0
    mean: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n) and self.n >= 0.0):
            raise DomainError(f"thermal occupation must be finite and >= 0, got {self.n}")
        if not (math.isfinite(self.zeta_abs) and self.zeta_abs >= 0.0):
            raise DomainError(f"squeezing modulus must be finite and >= 0, got {self.zeta_abs}")
        if not math.isfinite(self.zeta_phase):
            raise DomainError(f"squeezing phase must be finite, got {self.zeta_phase}")
        mx, mp = float(self.mean[0]), float(self.mean[1])
        if not (math.isfinite(mx) and math.isfinite(mp)):
            raise DomainError(f"mean vector must be finite, got {self.mean}")
        object.__setattr__(self, "mean", (mx, mp))
        object.__setattr__(self, "zeta_phase", float(self.zeta_phase) % TWO_PI)

    @property
    def m2(self) -> float:
        """Squared displacement |m|^2."""
        mx, mp = self.mean
        return mx * mx + mp * mp

    @property
    def cosh_2z(self) -> float:
        return math.cosh(2.0 * self.zeta_abs)


@dataclass(frozen=True)
class GaussianState:
    """A one-mode Gaussian state given by its first and second moments.

    Arrays are copied and frozen on construction; the covariance is
    validated as symmetric, positive definite, ``det >= 1 - DET_TOL``.
    """

    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(2)
        cov = np.array(self.cov, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise UncertaintyViolation("state moments must be finite")
        if abs(cov[0, 1] - cov[1, 0]) > SYM_TOL:
            raise UncertaintyViolation(f"covariance not symmetric: {cov[0,1]} vs {cov[1,0]}")
        det = float(np.linalg.det(cov))
        if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0 or det <= 0.0:
            raise UncertaintyViolation("covariance must be positive definite")
        if det < 1.0 - DET_TOL:
            raise UncertaintyViolation(
                f"det(cov) = {det} < 1: violates the uncertainty relation"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def purity_det(self) -> float:
        """det(cov); equals 1 exactly for pure states."""
        return float(np.linalg.det(self.cov))


@dataclass(frozen=True)
class ErgotropySummary:
    """Energy bookkeeping of a state: total, extractable, locked."""

    energy: float
    ergotropy: float
    ratio: float        # ergotropy / energy, in [0, 1]
    locked: float       # energy - ergotropy = n + 1/2

    def __post_init__(self) -> None:
        if self.ergotropy < 0.0 or self.energy <= 0.0:
            raise DomainError("energy must be positive and ergotropy non-negative")


def vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), np.eye(2))


def params_to_state(params: StateParams) -> GaussianState:
    """Build the (mean, covariance) pair for a parametrised state.

    The diagonal entries are assembled from half-angle pieces,
    ``E s^2 + E^-1 c^2`` with ``E = exp(2|z|)``, ``s = sin(phi/2)``,
    ``c = cos(phi/2)``: every term is non-negative, so no cancellation
    occurs even for nearly pure, strongly squeezed states.
    """
    big = math.exp(2.0 * params.zeta_abs)
    small = 1.0 / big
    s = math.sin(params.zeta_phase / 2.0)
    c = math.cos(params.zeta_phase / 2.0)
    s2, c2 = s * s, c * c
    scale = 2.0 * params.n + 1.0
    off = scale * (big - small) / 2.0 * (2.0 * s * c)
    cov = np.array(
        [
            [scale * (big * s2 + small * c2), off],
            [off, scale * (big * c2 + small * s2)],
        ]
    )
    return GaussianState(np.array(params.mean, dtype=float), cov)


def state_to_params(state: GaussianState) -> StateParams:
    """Invert :func:`params_to_state`.

    ``2n+1 = sqrt(det sigma)``; ``cosh(2|z|) = tr(sigma) / (2 sqrt(det))``;
    the phase comes from ``atan2`` of the off-diagonal and half the
    diagonal difference.  A state with no squeezing reports phase 0.
    """
    cov = state.cov
    root_det = math.sqrt(float(np.linalg.det(cov)))
    n = (root_det - 1.0) / 2.0
    if -DET_TOL <= n < 0.0:  # pure up to roundoff
        n = 0.0
    ch = float(np.trace(cov)) / (2.0 * root_det)
    if ch < 1.0:  # roundoff below the cosh range
        ch = 1.0
    zeta_abs = math.acosh(ch) / 2.0
    sh = math.sinh(2.0 * zeta_abs)
    if sh * root_det <= SYM_TOL:
        phase = 0.0
    else:
        phase = math.atan2(float(cov[0, 1]), (float(cov[1, 1]) - float(cov[0, 0])) / 2.0)
    return StateParams(n=n, zeta_abs=zeta_abs, zeta_phase=phase,
                       mean=(float(state.mean[0]), float(state.mean[1])))


def char_function(state: GaussianState, z) -> np.complexfloating | NDArray[np.complex128]:
    """Characteristic function chi(z) = exp(-z.sigma.z/4 + i m.z).

    ``z`` may be a single length-2 vector or an array of shape (..., 2).
    """
    z = np.asarray(z, dtype=float)
    quad = np.einsum("...i,ij,...j->...", z, state.cov, z)
    lin = z @ state.mean
    return np.exp(-0.25 * quad + 1j * lin)


def energy(state: GaussianState) -> float:
    """Mean energy tr(sigma)/4 + |m|^2/2 (h*nu = 1)."""
    return float(np.trace(state.cov)) / 4.0 + float(state.mean @ state.mean) / 2.0


def ergotropy(state: GaussianState) -> float:
    """Extractable work E - sqrt(det sigma)/2; zero iff thermal."""
    return energy(state) - math.sqrt(float(np.linalg.det(state.cov))) / 2.0


def params_energy(params: StateParams) -> float:
    """Closed form ((2n+1) cosh(2|z|) + |m|^2)/2."""
    return ((2.0 * params.n + 1.0) * params.cosh_2z + params.m2) / 2.0


def params_ergotropy(params: StateParams) -> float:
    """Closed form ((2n+1)(cosh(2|z|) - 1) + |m|^2)/2.

    Evaluated via expm1 so weak squeezing does not cancel.
    """
    return ((2.0 * params.n + 1.0) * _cosh_2z_minus_1(params.zeta_abs) + params.m2) / 2.0


def _cosh_2z_minus_1(zeta_abs: float) -> float:
    # cosh(x) - 1 = expm1(x)^2 / (2 exp(x)), stable for small x
    e = math.expm1(2.0 * zeta_abs)
    return e * e / (2.0 * (e + 1.0))


def ergotropy_summary(params: StateParams) -> ErgotropySummary:
    e = params_energy(params)
    w = params_ergotropy(params)
    return ErgotropySummary(energy=e, ergotropy=w, ratio=w / e, locked=e - w)


@dataclass(frozen=True)
class IsoSampleResult:
    """States on a constant-ergotropy manifold plus the unreachable grid points."""

    target: float
    states: tuple[StateParams, ...]
    skipped: tuple[tuple[float, float, str], ...] = field(default=())


def iso_ergotropy_sample(target: float, m2_values, n_values) -> IsoSampleResult:
    """Sample the manifold (2n+1)(cosh(2|z|)-1) + |m|^2 = 2*target.

    For every pair ``(m2, n)`` from the two grids the residual squeezing
    is solved from the manifold equation.  Pairs that would need
    negative squeezing (``m2 > 2*target``) or negative ``n`` are skipped
    and reported with a reason rather than silently dropped.
    """
    if not (math.isfinite(target) and target >= 0.0):
        raise DomainError(f"target ergotropy must be finite and >= 0, got {target}")
    states: list[StateParams] = []
    skipped: list[tuple[float, float, str]] = []
    for m2 in m2_values:
        for n in n_values:
            if n < 0.0:
                skipped.append((float(m2), float(n), "thermal occupation < 0"))
                continue
            if m2 < 0.0:
                skipped.append((float(m2), float(n), "squared displacement < 0"))
                continue
            y = (2.0 * target - m2) / (2.0 * n + 1.0)
            if y < 0.0:
                skipped.append((float(m2), float(n),
                                "displacement alone exceeds the target ergotropy"))
                continue
            zeta_abs = math.acosh(1.0 + y) / 2.0
            states.append(StateParams(n=float(n), zeta_abs=zeta_abs,
                                      zeta_phase=0.0, mean=(math.sqrt(m2), 0.0)))
    return IsoSampleResult(target=float(target), states=tuple(states), skipped=tuple(skipped))
