"""
Gradient Check Module
Central finite differences and the randomized battery that validates every analytic gradient.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import OracleError
from .generalized import (
    GeneralizedBelief,
    GeneralizedObservation,
    PrecisionSet,
    Target,
    TemporalScale,
    compute_errors,
    free_energy,
    grad_belief,
    grad_beta,
    grad_precision,
)


logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-6
RELATIVE_TOL = 1e-5
ABSOLUTE_TOL = 1e-8
TINY_SCALE = 1e-6
BATTERY_DIMENSIONS = (1, 2, 7)
FAMILIES = ("belief", "precision", "beta")


def fd_oracle(f: Callable[[np.ndarray], float], point, step: float = DEFAULT_STEP) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of a flat parameter vector
        point: Where to evaluate the gradient
        step: Half-width h of the difference, must be positive

    Returns:
        Vector of (f(x + h e_i) - f(x - h e_i)) / 2h
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x0 = np.array(point, dtype=float).reshape(-1)
    grad = np.zeros_like(x0)
    for i in range(x0.size):
        x = x0.copy()
        x[i] = x0[i] + step
        f_plus = f(x)
        x[i] = x0[i] - step
        f_minus = f(x)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise OracleError("non-finite function value during finite differencing", coordinate=i)
        grad[i] = (f_plus - f_minus) / (2 * step)
    return grad


def gradient_mismatch(analytic: np.ndarray, numeric: np.ndarray) -> Tuple[float, bool]:
    """
    Norm-wise mismatch between two gradients.

    Returns:
        (error, is_relative): relative error in the infinity norm, or the absolute
        error when both gradients are smaller than TINY_SCALE
    """
    a = np.asarray(analytic, dtype=float).reshape(-1)
    b = np.asarray(numeric, dtype=float).reshape(-1)
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b)))) if a.size else 0.0
    if scale < TINY_SCALE:
        return diff, False
    return diff / scale, True


def within_tolerance(error: float, is_relative: bool) -> bool:
    return error < (RELATIVE_TOL if is_relative else ABSOLUTE_TOL)


@dataclass
class GradientCase:
    """One randomized point at which all three gradient families are checked."""

    belief: GeneralizedBelief
    obs: GeneralizedObservation
    target: Target
    precisions: PrecisionSet
    beta: TemporalScale

    @property
    def n(self) -> int:
        return self.belief.n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "mu": self.belief.mu.tolist(),
            "mu_p": self.belief.mu_p.tolist(),
            "mu_pp": self.belief.mu_pp.tolist(),
            "o": self.obs.o.tolist(),
            "o_p": self.obs.o_p.tolist(),
            "mu_d": self.target.mu_d.tolist(),
            "beta": self.beta.diag.tolist(),
            "pi_o": self.precisions.pi_o.tolist(),
            "pi_op": self.precisions.pi_op.tolist(),
            "pi_mu": self.precisions.pi_mu.tolist(),
            "pi_mup": self.precisions.pi_mup.tolist(),
        }


def _random_precision(rng: np.random.Generator, n: int) -> np.ndarray:
    # Diagonally dominant, so positive-definite with the dense path exercised.
    diag = rng.uniform(0.1, 5.0, size=n)
    if n == 1:
        return np.diag(diag)
    off = rng.uniform(-1.0, 1.0, size=(n, n))
    off = 0.5 * (off + off.T)
    np.fill_diagonal(off, 0.0)
    off *= 0.5 * diag.min() / (n - 1)
    return np.diag(diag) + off


def random_case(rng: np.random.Generator, n: int) -> GradientCase:
    def vec():
        return rng.uniform(-2.0, 2.0, size=n)

    return GradientCase(
        belief=GeneralizedBelief(vec(), vec(), vec()),
        obs=GeneralizedObservation(vec(), vec()),
        target=Target(vec()),
        precisions=PrecisionSet(*(_random_precision(rng, n) for _ in range(4)), n=n),
        beta=TemporalScale(rng.uniform(0.5, 5.0, size=n)),
    )


def _belief_check(case: GradientCase) -> Tuple[np.ndarray, np.ndarray]:
    n = case.n
    errors = compute_errors(case.belief, case.obs, case.target, case.beta)
    g = grad_belief(errors, case.precisions, case.beta)
    analytic = np.concatenate([g.d_mu, g.d_mu_p, g.d_mu_pp])

    def f(x):
        belief = GeneralizedBelief(x[:n], x[n:2 * n], x[2 * n:])
        return free_energy(compute_errors(belief, case.obs, case.target, case.beta), case.precisions)

    point = np.concatenate([case.belief.mu, case.belief.mu_p, case.belief.mu_pp])
    return analytic, fd_oracle(f, point)


def _precision_check(case: GradientCase) -> Tuple[np.ndarray, np.ndarray]:
    n = case.n
    errors = compute_errors(case.belief, case.obs, case.target, case.beta)
    grads = grad_precision(errors, case.precisions)
    rows, cols = np.triu_indices(n)
    # Pi_ij and Pi_ji move together, so the off-diagonal derivative is 2 G_ij.
    weight = np.where(rows == cols, 1.0, 2.0)
    analytic, numeric = [], []
    blocks = list(case.precisions.blocks())
    for k, grad in enumerate(grads):
        analytic.append(weight * grad[rows, cols])

        def f(x, k=k):
            pi = np.zeros((n, n))
            pi[rows, cols] = x
            pi[cols, rows] = x
            trial = list(blocks)
            trial[k] = pi
            return free_energy(errors, PrecisionSet(*trial, n=n))

        numeric.append(fd_oracle(f, blocks[k][rows, cols]))
    return np.concatenate(analytic), np.concatenate(numeric)


def _beta_check(case: GradientCase) -> Tuple[np.ndarray, np.ndarray]:
    errors = compute_errors(case.belief, case.obs, case.target, case.beta)
    analytic = grad_beta(errors, case.precisions, case.belief, case.target)

    def f(x):
        beta = TemporalScale(x, floor=0.0)
        return free_energy(compute_errors(case.belief, case.obs, case.target, beta), case.precisions)

    return analytic, fd_oracle(f, case.beta.diag)


_CHECKS = {
    "belief": _belief_check,
    "precision": _precision_check,
    "beta": _beta_check,
}


@dataclass
class FamilyResult:
    """Worst mismatch seen for one gradient family."""

    name: str
    worst_relative: float = 0.0
    worst_absolute: float = 0.0
    cases: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, error: float, is_relative: bool, case: GradientCase, index: int) -> None:
        self.cases += 1
        if is_relative:
            self.worst_relative = max(self.worst_relative, error)
        else:
            self.worst_absolute = max(self.worst_absolute, error)
        if not within_tolerance(error, is_relative):
            self.failures.append({
                "family": self.name,
                "case_index": index,
                "error": error,
                "relative": is_relative,
                "config": case.to_dict(),
            })


@dataclass
class BatteryReport:
    families: Dict[str, FamilyResult]
    count: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.families.values())

    def summary(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "seed": self.seed,
            "passed": self.passed,
            "families": {
                name: {
                    "worst_relative": r.worst_relative,
                    "worst_absolute": r.worst_absolute,
                    "failures": len(r.failures),
                }
                for name, r in self.families.items()
            },
        }


def run_battery(count: int = 100, seed: int = 0,
                dimensions=BATTERY_DIMENSIONS,
                on_case: Optional[Callable[[int, int], None]] = None) -> BatteryReport:
    """
    Check all gradient families against fd_oracle on randomized configurations.

    Args:
        count: Number of configurations; dimensions cycle through `dimensions`
        seed: Seed for np.random.default_rng
        dimensions: Joint counts to cycle through
        on_case: Optional progress callback (done, total)

    Returns:
        BatteryReport with the worst errors per family and any offending configs
    """
    rng = np.random.default_rng(seed)
    results = {name: FamilyResult(name) for name in FAMILIES}
    for index in range(count):
        n = dimensions[index % len(dimensions)]
        case = random_case(rng, n)
        for name in FAMILIES:
            analytic, numeric = _CHECKS[name](case)
            error, is_relative = gradient_mismatch(analytic, numeric)
            results[name].record(error, is_relative, case, index)
        if on_case:
            on_case(index + 1, count)
    report = BatteryReport(results, count, seed)
    for name, r in results.items():
        logger.info("gradcheck %s: worst relative %.3e, worst absolute %.3e",
                    name, r.worst_relative, r.worst_absolute)
    return report
