"""
Active Inference Controller Module
Estimation, control and hyperparameter learning as one gradient descent on free energy.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import ContractViolation, DivergenceError
from .generalized import (
    ErrorSet,
    GeneralizedBelief,
    GeneralizedObservation,
    PrecisionSet,
    Target,
    TemporalScale,
    compute_errors,
    free_energy,
    grad_belief,
    grad_beta,
    grad_precision_block,
)


logger = logging.getLogger(__name__)

DEFAULT_PRECISION_FLOOR = 0.01


@dataclass(frozen=True)
class GainSet:
    """
    Learning rates of the four gradient flows.

    kappa_a = 0 disables control, kappa_sigma = 0 and kappa_tau = 0 disable
    precision and beta learning.
    """

    kappa_mu: float = 20.0
    kappa_a: float = 600.0
    kappa_sigma: float = 1.0
    kappa_tau: float = 1.0

    def __post_init__(self):
        if not self.kappa_mu > 0:
            raise ContractViolation("kappa_mu must be positive", field="kappa_mu")
        for name in ("kappa_a", "kappa_sigma", "kappa_tau"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ContractViolation(f"{name} must be non-negative", field=name)


@dataclass(frozen=True)
class LearningSwitches:
    learn_pi_o: bool = False
    learn_pi_op: bool = False
    learn_beta: bool = False

    @classmethod
    def all_on(cls) -> "LearningSwitches":
        return cls(True, True, True)

    @property
    def any(self) -> bool:
        return self.learn_pi_o or self.learn_pi_op or self.learn_beta


@dataclass(frozen=True)
class ControllerState:
    belief: GeneralizedBelief
    action: np.ndarray
    precisions: PrecisionSet
    beta: TemporalScale

    def __post_init__(self):
        action = np.atleast_1d(np.array(self.action, dtype=float))
        n = self.belief.n
        if action.shape != (n,) or self.precisions.n != n or self.beta.n != n:
            raise ContractViolation("controller state components disagree in dimension")
        object.__setattr__(self, "action", action)

    @property
    def n(self) -> int:
        return self.belief.n


def _finite_or_raise(what: str, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"{what} became non-finite")


def estimation_step(state: ControllerState, obs: GeneralizedObservation, target: Target,
                    dt: float, gains: GainSet, errors: Optional[ErrorSet] = None) -> ControllerState:
    """
    One explicit Euler step of mu~ <- mu~ + dt (D mu~ - kappa_mu dF/dmu~).

    Args:
        state: Pre-step controller state
        obs: Observation for this tick
        target: Desired state
        dt: Step size in seconds
        gains: Learning rates (kappa_mu is used)
        errors: Pre-computed errors for this tick, recomputed when omitted

    Returns:
        State with only the belief advanced
    """
    if dt <= 0:
        raise ContractViolation("dt must be positive", field="dt")
    if errors is None:
        errors = compute_errors(state.belief, obs, target, state.beta)
    g = grad_belief(errors, state.precisions, state.beta)
    b = state.belief
    k = gains.kappa_mu
    mu = b.mu + dt * (b.mu_p - k * g.d_mu)
    mu_p = b.mu_p + dt * (b.mu_pp - k * g.d_mu_p)
    mu_pp = b.mu_pp + dt * (-k * g.d_mu_pp)
    _finite_or_raise("belief", mu, mu_p, mu_pp)
    return replace(state, belief=GeneralizedBelief(mu, mu_p, mu_pp))


def control_step(state: ControllerState, obs: GeneralizedObservation, dt: float,
                 gains: GainSet, a_limit: Optional[float] = None,
                 errors: Optional[ErrorSet] = None) -> ControllerState:
    """Action update a_dot = -kappa_a (Pi_o eps_o + Pi_o' eps_o'), clamped to +-a_limit."""
    if dt <= 0:
        raise ContractViolation("dt must be positive", field="dt")
    if errors is None:
        eps_o = obs.o - state.belief.mu
        eps_op = obs.o_p - state.belief.mu_p
    else:
        eps_o, eps_op = errors.eps_o, errors.eps_op
    a_dot = -gains.kappa_a * (state.precisions.pi_o @ eps_o + state.precisions.pi_op @ eps_op)
    action = state.action + dt * a_dot
    if a_limit is not None:
        action = np.clip(action, -a_limit, a_limit)
    _finite_or_raise("action", action)
    return replace(state, action=action)


def _descend_precision(pi: np.ndarray, grad: np.ndarray, rate: float, floor: float) -> np.ndarray:
    off_diagonal = pi - np.diag(np.diag(pi))
    if not np.any(off_diagonal):
        # Diagonal representation stays diagonal.
        return np.diag(np.maximum(np.diag(pi) - rate * np.diag(grad), floor))
    updated = pi - rate * grad
    updated = 0.5 * (updated + updated.T)
    eig, vec = np.linalg.eigh(updated)
    return (vec * np.maximum(eig, floor)) @ vec.T


def precision_update(state: ControllerState, errors: ErrorSet, dt: float, floor: float,
                     gains: GainSet, switches: LearningSwitches) -> ControllerState:
    """
    Gradient step on the observation precisions, Pi <- Pi - dt kappa_sigma dF/dPi.

    Only blocks whose switch is on change. Diagonals are floored; dense matrices are
    re-symmetrized and their spectrum floored.
    """
    if floor <= 0:
        raise ContractViolation("precision floor must be positive", field="precision_floor")
    rate = dt * gains.kappa_sigma
    if rate == 0 or not (switches.learn_pi_o or switches.learn_pi_op):
        return state
    p = state.precisions
    pi_o = _descend_precision(
        p.pi_o, grad_precision_block(errors.eps_o, p.pi_o, "pi_o"), rate, floor) if switches.learn_pi_o else p.pi_o
    pi_op = _descend_precision(
        p.pi_op, grad_precision_block(errors.eps_op, p.pi_op, "pi_op"), rate, floor) if switches.learn_pi_op else p.pi_op
    _finite_or_raise("precision", pi_o, pi_op)
    return replace(state, precisions=PrecisionSet(pi_o, pi_op, p.pi_mu, p.pi_mup, n=p.n))


def beta_update(state: ControllerState, errors: ErrorSet, belief: GeneralizedBelief,
                target: Target, dt: float, gains: GainSet) -> ControllerState:
    """beta <- max(beta - dt kappa_tau dF/dbeta, floor) on the diagonal."""
    rate = dt * gains.kappa_tau
    if rate == 0:
        return state
    g = grad_beta(errors, state.precisions, belief, target)
    raw = state.beta.diag - rate * g
    diag = np.maximum(raw, state.beta.floor)
    _finite_or_raise("beta", diag)
    if logger.isEnabledFor(logging.DEBUG) and np.any(raw < state.beta.floor):
        logger.debug("beta clamped at floor %.3g on joints %s",
                     state.beta.floor, np.flatnonzero(raw < state.beta.floor).tolist())
    return replace(state, beta=TemporalScale(diag, state.beta.floor))


def controller_tick(state: ControllerState, obs: GeneralizedObservation, target: Target,
                    dt: float, switches: LearningSwitches, gains: GainSet,
                    a_limit: Optional[float] = None,
                    precision_floor: float = DEFAULT_PRECISION_FLOOR,
                    tick: Optional[int] = None) -> Tuple[ControllerState, np.ndarray]:
    """
    Advance the controller by one tick.

    Every sub-step reads the same pre-tick errors and state.

    Returns:
        (post-tick state, action to apply this tick)
    """
    try:
        errors = compute_errors(state.belief, obs, target, state.beta)
        belief = estimation_step(state, obs, target, dt, gains, errors=errors).belief
        action = control_step(state, obs, dt, gains, a_limit, errors=errors).action
        new = replace(state, belief=belief, action=action)
        if switches.learn_pi_o or switches.learn_pi_op:
            learned = precision_update(state, errors, dt, precision_floor, gains, switches)
            new = replace(new, precisions=learned.precisions)
        if switches.learn_beta:
            learned = beta_update(state, errors, state.belief, target, dt, gains)
            new = replace(new, beta=learned.beta)
    except DivergenceError as e:
        if tick is not None:
            e.at_tick(tick, tick * dt)
        raise
    return new, new.action


class ActiveInferenceController:
    """Stateful wrapper that owns a ControllerState and its settings."""

    def __init__(self, state: ControllerState, gains: Optional[GainSet] = None,
                 switches: Optional[LearningSwitches] = None,
                 a_limit: Optional[float] = None,
                 precision_floor: float = DEFAULT_PRECISION_FLOOR):
        self.state = state
        self.gains = gains or GainSet()
        self.switches = switches or LearningSwitches()
        self.a_limit = a_limit
        self.precision_floor = precision_floor
        self.last_free_energy: float = float("nan")

    @property
    def belief(self) -> GeneralizedBelief:
        return self.state.belief

    @property
    def mu(self) -> np.ndarray:
        return self.state.belief.mu

    @property
    def mu_p(self) -> np.ndarray:
        return self.state.belief.mu_p

    @property
    def mu_pp(self) -> np.ndarray:
        return self.state.belief.mu_pp

    @property
    def beta_diag(self) -> np.ndarray:
        return self.state.beta.diag

    @property
    def pi_o_diag(self) -> np.ndarray:
        return np.diag(self.state.precisions.pi_o)

    @property
    def pi_op_diag(self) -> np.ndarray:
        return np.diag(self.state.precisions.pi_op)

    def tick(self, obs: GeneralizedObservation, target: Target, dt: float,
             tick: Optional[int] = None) -> np.ndarray:
        self.last_free_energy = free_energy(
            compute_errors(self.state.belief, obs, target, self.state.beta), self.state.precisions
        )
        self.state, action = controller_tick(
            self.state, obs, target, dt, self.switches, self.gains,
            a_limit=self.a_limit, precision_floor=self.precision_floor, tick=tick,
        )
        return action
