"""
Baselines Module
Reference controllers for the limit cases: discrete PID, rate-form PI and the pure filter.
"""

import copy
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import ContractViolation
from .generalized import GeneralizedObservation, Target


FILTER_BETA = 1e-6


@dataclass(frozen=True)
class PidGains:
    """Per-joint P, I and D gains; scalars broadcast over joints."""

    p: np.ndarray
    i: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in ("p", "i", "d"):
            value = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(value)):
                raise ContractViolation(f"PID gain {name} must be finite", field=name)
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class PidState:
    integral: np.ndarray
    prev_error: np.ndarray
    output: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "PidState":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))


def pid_step(pid: PidState, error, gains: PidGains, dt: float) -> Tuple[PidState, np.ndarray]:
    """
    Positional PID, a = P e + I int(e) dt + D de/dt.

    The integral includes the current error, the derivative is a backward
    difference against the previous tick's error (zero before the first tick).
    """
    if dt <= 0:
        raise ContractViolation("dt must be positive", field="dt")
    e = np.atleast_1d(np.array(error, dtype=float))
    integral = pid.integral + e * dt
    derivative = (e - pid.prev_error) / dt
    action = gains.p * e + gains.i * integral + gains.d * derivative
    return PidState(integral, e, action), action


def pi_rate_step(pid: PidState, error, error_rate, gains: PidGains,
                 dt: float) -> Tuple[PidState, np.ndarray]:
    """
    Velocity-form PI, a <- a + dt (I e + P de/dt).

    Integrates the action the same way the active inference control step does, so
    it is the discrete counterpart used for the large-beta comparison.
    """
    if dt <= 0:
        raise ContractViolation("dt must be positive", field="dt")
    e = np.atleast_1d(np.array(error, dtype=float))
    e_dot = np.atleast_1d(np.array(error_rate, dtype=float))
    action = pid.output + dt * (gains.i * e + gains.p * e_dot)
    return replace(pid, integral=pid.integral + e * dt, prev_error=e, output=action), action


def matched_pi_gains(kappa_a: float, pi_o, pi_op) -> PidGains:
    """
    PI gains equivalent to the controller in the large-beta limit.

    Args:
        kappa_a: Action learning rate
        pi_o: Position precision (diagonal)
        pi_op: Velocity precision (diagonal)

    Returns:
        PidGains with P = kappa_a diag(pi_op), I = kappa_a diag(pi_o), D = 0
    """
    diagonals = []
    for name, value in (("pi_o", pi_o), ("pi_op", pi_op)):
        m = np.array(value, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or np.any(m - np.diag(np.diag(m))):
            raise ContractViolation(f"{name} must be a diagonal matrix", field=name)
        diagonals.append(np.diag(m))
    d_o, d_op = diagonals
    return PidGains(p=kappa_a * d_op, i=kappa_a * d_o, d=np.zeros_like(d_o))


class PidKind(Enum):
    POSITIONAL = "pid"
    RATE = "pi_rate"


class PidController:
    """
    Episode-facing PID controller.

    Reports its observation as the belief so trajectories share one layout.
    """

    def __init__(self, gains: PidGains, n: int, kind: PidKind = PidKind.POSITIONAL,
                 a_limit: Optional[float] = None, action0=None):
        self.gains = gains
        self.kind = kind
        self.a_limit = a_limit
        state = PidState.zeros(n)
        if action0 is not None:
            state = replace(state, output=np.array(action0, dtype=float))
        self.state = state
        self.mu = np.zeros(n)
        self.mu_p = np.zeros(n)
        self.mu_pp = np.zeros(n)
        self.beta_diag = np.full(n, np.nan)
        self.pi_o_diag = np.full(n, np.nan)
        self.pi_op_diag = np.full(n, np.nan)
        self.last_free_energy = float("nan")

    def tick(self, obs: GeneralizedObservation, target: Target, dt: float,
             tick: Optional[int] = None) -> np.ndarray:
        error = target.mu_d - obs.o
        if self.kind == PidKind.RATE:
            self.state, action = pi_rate_step(self.state, error, -obs.o_p, self.gains, dt)
        else:
            self.state, action = pid_step(self.state, error, self.gains, dt)
        if self.a_limit is not None:
            action = np.clip(action, -self.a_limit, self.a_limit)
            self.state = replace(self.state, output=action)
        self.mu, self.mu_p = obs.o.copy(), obs.o_p.copy()
        return action


def pure_filter_mode(config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Turn an experiment config into the pure-filter diagnostic.

    Beta drops to FILTER_BETA with the floor bypassed, control is disabled and
    all learning is switched off. The input is not modified.
    """
    out = copy.deepcopy(config)
    controller = out.setdefault("controller", {})
    controller["type"] = "aic"
    controller["beta"] = FILTER_BETA
    controller["beta_floor"] = 0.0
    controller.setdefault("gains", {})["kappa_a"] = 0.0
    controller["learning"] = {"learn_pi_o": False, "learn_pi_op": False, "learn_beta": False}
    return out
