"""
Generalized Motion Module
Belief, observation and precision types plus the Laplace free energy and its gradients.

All matrices are dense numpy arrays. Scalar experiments use scalar*I precisions.
The temporal scale beta is diagonal and stored as its diagonal vector.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation, DomainError


SYMMETRY_TOL = 1e-12
DEFAULT_BETA_FLOOR = 0.5


def _as_vector(name: str, value) -> np.ndarray:
    arr = np.atleast_1d(np.array(value, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ContractViolation(f"{name} must be a non-empty vector", field=name, shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite entries", field=name)
    return arr


def _as_matrix(name: str, value, n: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(n)
    elif arr.ndim == 1:
        arr = np.diag(arr)
    if arr.shape != (n, n):
        raise ContractViolation(f"{name} must be {n}x{n}", field=name, shape=list(arr.shape))
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} has non-finite entries", field=name)
    if np.max(np.abs(arr - arr.T)) > SYMMETRY_TOL:
        raise ContractViolation(f"{name} is not symmetric", field=name)
    if np.any(np.diag(arr) <= 0.0):
        raise DomainError(f"{name} has a non-positive diagonal entry", field=name)
    smallest = float(np.linalg.eigvalsh(arr)[0])
    if smallest <= 0.0:
        raise DomainError(f"{name} is not positive-definite", field=name, min_eigenvalue=smallest)
    return arr


def _check_length(n: int, **vectors: np.ndarray) -> None:
    for name, vec in vectors.items():
        if vec.shape[0] != n:
            raise ContractViolation(
                f"{name} has length {vec.shape[0]}, expected {n}", field=name
            )


@dataclass(frozen=True)
class GeneralizedBelief:
    """Belief mean with its first two temporal derivatives."""

    mu: np.ndarray
    mu_p: np.ndarray
    mu_pp: np.ndarray

    def __post_init__(self):
        mu = _as_vector("mu", self.mu)
        mu_p = _as_vector("mu_p", self.mu_p)
        mu_pp = _as_vector("mu_pp", self.mu_pp)
        _check_length(mu.shape[0], mu_p=mu_p, mu_pp=mu_pp)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mu_p", mu_p)
        object.__setattr__(self, "mu_pp", mu_pp)

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def at(cls, mu, mu_p=None, mu_pp=None) -> "GeneralizedBelief":
        mu = _as_vector("mu", mu)
        zeros = np.zeros_like(mu)
        return cls(mu, zeros if mu_p is None else mu_p, zeros if mu_pp is None else mu_pp)


@dataclass(frozen=True)
class GeneralizedObservation:
    """Sensed positions and velocities."""

    o: np.ndarray
    o_p: np.ndarray

    def __post_init__(self):
        o = _as_vector("o", self.o)
        o_p = _as_vector("o_p", self.o_p)
        _check_length(o.shape[0], o_p=o_p)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "o_p", o_p)

    @property
    def n(self) -> int:
        return self.o.shape[0]


@dataclass(frozen=True)
class Target:
    mu_d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu_d", _as_vector("mu_d", self.mu_d))

    @property
    def n(self) -> int:
        return self.mu_d.shape[0]


@dataclass(frozen=True)
class PrecisionSet:
    """
    Inverse covariances of the four error terms.

    Each field accepts a scalar (scalar*I), a vector (diagonal) or an n x n matrix.
    The dimension is taken from the observation-precision field.
    """

    pi_o: np.ndarray
    pi_op: np.ndarray
    pi_mu: np.ndarray
    pi_mup: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        n = self.n
        if n <= 0:
            probe = np.array(self.pi_o, dtype=float)
            n = 1 if probe.ndim == 0 else probe.shape[0]
        for name in ("pi_o", "pi_op", "pi_mu", "pi_mup"):
            object.__setattr__(self, name, _as_matrix(name, getattr(self, name), n))
        object.__setattr__(self, "n", n)

    @classmethod
    def from_scalars(cls, pi_o: float, pi_op: float, pi_mu: float, pi_mup: float,
                     n: int) -> "PrecisionSet":
        return cls(pi_o, pi_op, pi_mu, pi_mup, n=n)

    @classmethod
    def identity(cls, n: int) -> "PrecisionSet":
        return cls.from_scalars(1.0, 1.0, 1.0, 1.0, n)

    def blocks(self):
        return (self.pi_o, self.pi_op, self.pi_mu, self.pi_mup)


@dataclass(frozen=True)
class TemporalScale:
    """Diagonal beta = tau^-1, stored as its diagonal with a lower floor."""

    diag: np.ndarray
    floor: float = DEFAULT_BETA_FLOOR

    def __post_init__(self):
        diag = _as_vector("beta", self.diag)
        if self.floor < 0:
            raise ContractViolation("beta floor must be non-negative", field="beta_floor")
        if np.any(diag < self.floor):
            raise ContractViolation(
                f"beta diagonal below floor {self.floor}", field="beta"
            )
        object.__setattr__(self, "diag", diag)

    @classmethod
    def from_scalar(cls, value: float, n: int, floor: float = DEFAULT_BETA_FLOOR) -> "TemporalScale":
        return cls(np.full(n, float(value)), floor)

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True)
class ErrorSet:
    eps_o: np.ndarray
    eps_op: np.ndarray
    eps_mu: np.ndarray
    eps_mup: np.ndarray

    def vectors(self):
        return (self.eps_o, self.eps_op, self.eps_mu, self.eps_mup)


@dataclass(frozen=True)
class BeliefGradient:
    """dF/d(mu, mu', mu'')."""

    d_mu: np.ndarray
    d_mu_p: np.ndarray
    d_mu_pp: np.ndarray


class PrecisionGradient(NamedTuple):
    pi_o: np.ndarray
    pi_op: np.ndarray
    pi_mu: np.ndarray
    pi_mup: np.ndarray


def compute_errors(belief: GeneralizedBelief, obs: GeneralizedObservation,
                   target: Target, beta: TemporalScale) -> ErrorSet:
    """
    Sensory and dynamic prediction errors.

    Args:
        belief: Current generalized belief
        obs: Generalized observation (o, o')
        target: Desired state mu_d
        beta: Temporal scale, applied as a diagonal matrix

    Returns:
        ErrorSet with eps_o = o - mu, eps_op = o' - mu',
        eps_mu = mu' - beta (mu_d - mu), eps_mup = mu'' + beta mu'
    """
    n = belief.n
    if obs.n != n or target.n != n or beta.n != n:
        raise ContractViolation(
            "dimension mismatch between belief, observation, target and beta",
            belief=n, observation=obs.n, target=target.n, beta=beta.n,
        )
    b = beta.diag
    return ErrorSet(
        eps_o=obs.o - belief.mu,
        eps_op=obs.o_p - belief.mu_p,
        eps_mu=belief.mu_p - b * (target.mu_d - belief.mu),
        eps_mup=belief.mu_pp + b * belief.mu_p,
    )


def _log_det(name: str, matrix: np.ndarray) -> float:
    eig = np.linalg.eigvalsh(matrix)
    if eig[0] <= 0.0:
        raise DomainError(f"{name} is not positive-definite", field=name, min_eigenvalue=float(eig[0]))
    return float(np.sum(np.log(eig)))


def _check_error_dims(errors: ErrorSet, n: int) -> None:
    for name, vec in zip(("eps_o", "eps_op", "eps_mu", "eps_mup"), errors.vectors()):
        if vec.shape != (n,):
            raise ContractViolation(f"{name} has shape {vec.shape}, expected ({n},)", field=name)


def free_energy(errors: ErrorSet, precisions: PrecisionSet) -> float:
    """
    Laplace-encoded free energy with the additive constant set to zero.

    F = 1/2 sum_i (eps_i' Pi_i eps_i - ln det Pi_i)
    """
    _check_error_dims(errors, precisions.n)
    total = 0.0
    names = ("pi_o", "pi_op", "pi_mu", "pi_mup")
    for name, eps, pi in zip(names, errors.vectors(), precisions.blocks()):
        total += 0.5 * float(eps @ pi @ eps) - 0.5 * _log_det(name, pi)
    return total


def grad_belief(errors: ErrorSet, precisions: PrecisionSet,
                beta: TemporalScale) -> BeliefGradient:
    """Analytic dF/dmu~ holding o, mu_d, Pi and beta fixed."""
    _check_error_dims(errors, precisions.n)
    if beta.n != precisions.n:
        raise ContractViolation("beta and precisions disagree in dimension")
    b = beta.diag
    w_o = precisions.pi_o @ errors.eps_o
    w_op = precisions.pi_op @ errors.eps_op
    w_mu = precisions.pi_mu @ errors.eps_mu
    w_mup = precisions.pi_mup @ errors.eps_mup
    return BeliefGradient(
        d_mu=-w_o + b * w_mu,
        d_mu_p=-w_op + w_mu + b * w_mup,
        d_mu_pp=w_mup.copy(),
    )


def grad_precision_block(eps: np.ndarray, pi: np.ndarray, name: str = "precision") -> np.ndarray:
    """dF/dPi = 1/2 (eps eps' - Pi^-1) for a single block."""
    try:
        inv = np.linalg.inv(pi)
    except np.linalg.LinAlgError as e:
        raise DomainError(f"{name} is singular", field=name) from e
    if not np.all(np.isfinite(inv)):
        raise DomainError(f"{name} is singular", field=name)
    return 0.5 * (np.outer(eps, eps) - inv)


def grad_precision(errors: ErrorSet, precisions: PrecisionSet) -> PrecisionGradient:
    """Per-block dF/dPi_i = 1/2 (eps_i eps_i' - Pi_i^-1)."""
    _check_error_dims(errors, precisions.n)
    names = ("pi_o", "pi_op", "pi_mu", "pi_mup")
    return PrecisionGradient(*(
        grad_precision_block(eps, pi, name)
        for name, eps, pi in zip(names, errors.vectors(), precisions.blocks())
    ))


def grad_beta(errors: ErrorSet, precisions: PrecisionSet, belief: GeneralizedBelief,
              target: Target) -> np.ndarray:
    """
    Derivative of F with respect to the diagonal of beta.

    dF/dbeta_j = -[Pi_mu eps_mu]_j (mu_d - mu)_j + [Pi_mu' eps_mu']_j mu'_j
    """
    _check_error_dims(errors, precisions.n)
    if belief.n != precisions.n or target.n != precisions.n:
        raise ContractViolation("belief, target and precisions disagree in dimension")
    w_mu = precisions.pi_mu @ errors.eps_mu
    w_mup = precisions.pi_mup @ errors.eps_mup
    return -w_mu * (target.mu_d - belief.mu) + w_mup * belief.mu_p
