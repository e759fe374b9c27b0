"""Fixed-delay adaptive control: regressor assembly, the certainty-equivalence
control law, and the normalized-gradient update with its zero-divisor guard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .plant import SignalHistory

ZERO_FLOOR = kernels.ZERO_FLOOR


class ZeroDivisorError(RuntimeError):
    """The divisor estimate reached zero at control time; the update guard
    invariant was violated upstream."""


def regressor_dims(m1: int, m2: int, d: int) -> tuple[int, int]:
    """(dim phi, dim Phi) = (m1+m2+d-1, m1+m2+d)."""
    M = m1 + m2 + d
    return M - 1, M


@dataclass(frozen=True)
class RegressorPair:
    """phi = (y(k)..y(k-m1+1), u(k-1)..u(k-m2-d+1)); Phi appends u(k)."""

    phi: np.ndarray
    Phi: np.ndarray

    def __post_init__(self):
        if self.Phi.shape[0] != self.phi.shape[0] + 1:
            raise ValueError("Phi must extend phi by exactly the current input")


@dataclass(frozen=True)
class ParameterEstimate:
    """Adapted parameter vector; the last element estimates b0 and divides in
    the control law.  gamma is the guard gain, in (0,2) and != 1."""

    theta: np.ndarray
    gamma: float = 0.5

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1 or theta.shape[0] < 1:
            raise ValueError("theta must be a non-empty vector")
        if not (0.0 < self.gamma < 2.0) or self.gamma == 1.0:
            raise ValueError(
                f"adaptation guard gain gamma must lie in (0, 2) and differ from 1, got {self.gamma}"
            )
        theta = theta.copy()
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def nu_index(self) -> int:
        return self.theta.shape[0] - 1

    @property
    def beta0(self) -> float:
        return float(self.theta[-1])

    @classmethod
    def create(cls, m1: int, m2: int, d: int, gamma: float = 0.5, beta0_init: float = 1.0):
        """Fresh estimate: zeros except the divisor element, seeded nonzero so
        the first control computation is well-defined."""
        _, M = regressor_dims(m1, m2, d)
        theta = np.zeros(M)
        theta[-1] = beta0_init
        return cls(theta=theta, gamma=gamma)

    @classmethod
    def zero(cls, M: int, gamma: float = 0.5):
        """All-zero estimate, as prescribed at switching-instant resets."""
        return cls(theta=np.zeros(M), gamma=gamma)


def build_regressor(history: SignalHistory, d: int, u_k: float) -> RegressorPair:
    """Assemble (phi, Phi) for delay d from the signal history and u(k)."""
    m1, m2 = history.m1, history.m2
    nu = m2 + d - 1
    if history._nu < nu:
        raise ValueError(
            f"history input depth {history._nu} cannot supply {nu} past inputs"
        )
    phi = np.concatenate([history.y_window(m1), history.u_window(nu)])
    Phi = np.concatenate([phi, [float(u_k)]])
    return RegressorPair(phi=phi, Phi=Phi)


def control_law(est: ParameterEstimate, phi: np.ndarray, yref_ahead: float) -> float:
    """u(k) = (yref(k+d) - theta[:-1] . phi) / theta[-1]."""
    if abs(est.theta[-1]) < ZERO_FLOOR:
        raise ZeroDivisorError(
            "divisor estimate is zero at control time; guard invariant violated"
        )
    phi = np.asarray(phi, dtype=float)
    if phi.shape[0] != est.nu_index:
        raise ValueError(f"phi has dimension {phi.shape[0]}, expected {est.nu_index}")
    return float(kernels.control_output(est.theta, phi, float(yref_ahead)))


def update(est: ParameterEstimate, Phi_lagged: np.ndarray, y_k: float) -> tuple[ParameterEstimate, float]:
    """Normalized-gradient update from the regressor stored d steps ago.

    eps = y(k) - theta . Phi(k-d); the step gain a is 1 unless that would zero
    the divisor element, in which case a = gamma.  Returns the new estimate
    and eps.
    """
    Phi = np.ascontiguousarray(Phi_lagged, dtype=float)
    if Phi.shape[0] != est.theta.shape[0]:
        raise ValueError(
            f"regressor dimension {Phi.shape[0]} does not match estimate {est.theta.shape[0]}"
        )
    theta_new, eps, _a = kernels.gradient_update(est.theta, Phi, float(y_k), est.gamma)
    if abs(est.theta[-1]) >= ZERO_FLOOR and abs(theta_new[-1]) < ZERO_FLOOR:
        # mathematically unreachable: the gamma branch moves the candidate off zero
        raise ZeroDivisorError("update drove the divisor estimate to zero despite the guard")
    return ParameterEstimate(theta=theta_new, gamma=est.gamma), float(eps)


def tracking_error(y_k: float, yref_k: float) -> float:
    """e = y - yref."""
    return float(y_k) - float(yref_k)
