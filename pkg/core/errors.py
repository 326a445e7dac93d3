"""
Errors Module
Typed failures raised by the toolkit and the exit codes the CLI maps them to.
"""

from typing import Any, Dict, Optional


EXIT_OK = 0
EXIT_MISSING_FILE = 1
EXIT_SCHEMA = 2
EXIT_DIVERGENCE = 3


class AicError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"
    exit_code = EXIT_SCHEMA

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        """Structured form used for stderr diagnostics."""
        payload = {"error": self.kind, "message": self.message, "exit_code": self.exit_code}
        payload.update(self.context)
        return payload


class ContractViolation(AicError, ValueError):
    """Inputs disagree in shape or kind."""

    kind = "contract_violation"


class DomainError(AicError, ValueError):
    """A precision matrix is not positive-definite or cannot be inverted."""

    kind = "domain_error"


class ConfigError(AicError):
    """Experiment or sweep configuration failed validation."""

    kind = "schema_violation"
    exit_code = EXIT_SCHEMA

    def __init__(self, message: str, key: Optional[str] = None, **context: Any):
        if key is not None:
            context["key"] = key
        super().__init__(message, **context)
        self.key = key


class DivergenceError(AicError, ArithmeticError):
    """A simulated quantity became non-finite."""

    kind = "divergence"
    exit_code = EXIT_DIVERGENCE

    def __init__(self, message: str, tick: Optional[int] = None,
                 time: Optional[float] = None, **context: Any):
        if tick is not None:
            context["tick"] = tick
        if time is not None:
            context["time"] = time
        super().__init__(message, **context)
        self.tick = tick
        self.time = time
        # Partial trajectory, attached by run_episode
        self.log = None

    def at_tick(self, tick: int, time: float) -> "DivergenceError":
        """Attach tick context if the raiser did not know it."""
        if self.tick is None:
            self.tick = tick
            self.context["tick"] = tick
        if self.time is None:
            self.time = time
            self.context["time"] = time
        return self


class IntegrationError(DivergenceError):
    """Plant dynamics could not be integrated (near-singular inertia)."""

    kind = "integration_error"


class OracleError(AicError):
    """Finite-difference evaluation produced a non-finite value."""

    kind = "oracle_failure"
    exit_code = EXIT_DIVERGENCE
