"""
Simulation Module
Closed-loop episode execution: plant, controller, sensor noise and schedules, logged per tick.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .baselines import PidController, PidGains, PidKind, matched_pi_gains, pure_filter_mode
from .controller import ActiveInferenceController, ControllerState, GainSet, LearningSwitches
from .errors import AicError, ConfigError, ContractViolation, DivergenceError, DomainError
from .generalized import GeneralizedBelief, PrecisionSet, Target, TemporalScale
from .plants import NoiseSpec, PlantState, PlantType, create_plant, episode_rng, observe


logger = logging.getLogger(__name__)

STIFFNESS_LIMIT = 2.0


class ControllerKind(Enum):
    """Controller selection used by experiment configs."""
    AIC = "aic"
    PID = "pid"
    PI_RATE = "pi_rate"
    FILTER = "filter"


def _vector(value, n: int, key: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigError(f"'{key}' needs {n} entries", key=key)
    return arr


def _precision(value, n: int, key: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(n)
    if arr.ndim == 1 and arr.shape == (n,):
        return np.diag(arr)
    if arr.shape == (n, n):
        return arr
    raise ConfigError(f"'{key}' must be a scalar, {n} diagonal entries or an {n}x{n} matrix", key=key)


def _schedule(entries, n: Optional[int], key: str) -> List[Tuple[float, Any]]:
    schedule = []
    last = -math.inf
    for i, entry in enumerate(entries):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"'{key}[{i}]' must be [time, value]", key=key)
        time = float(entry[0])
        if time < last:
            raise ConfigError(f"'{key}' must be sorted by time", key=key)
        last = time
        value = _vector(entry[1], n, key) if n is not None else float(entry[1])
        schedule.append((time, value))
    return schedule


@dataclass
class EpisodeConfig:
    """Everything one episode needs, parsed from an experiment config dict."""

    plant_type: PlantType
    plant_params: Dict[str, Any]
    q0: np.ndarray
    q_dot0: np.ndarray
    controller_kind: ControllerKind
    gains: GainSet
    precisions: PrecisionSet
    beta: TemporalScale
    switches: LearningSwitches
    belief0: GeneralizedBelief
    action0: np.ndarray
    targets: List[Tuple[float, np.ndarray]]
    payloads: List[Tuple[float, float]] = field(default_factory=list)
    pid_gains: Optional[PidGains] = None
    a_limit: Optional[float] = None
    precision_floor: float = 0.01
    dt: float = 0.001
    duration: float = 10.0
    rate_divider: int = 1
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    index: int = 0

    @property
    def n(self) -> int:
        return self.q0.shape[0]

    @property
    def n_ticks(self) -> int:
        return max(1, math.ceil(self.duration / self.dt - 1e-9))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], index: int = 0) -> "EpisodeConfig":
        """
        Parse a merged experiment config.

        Raises:
            ConfigError: naming the offending key on any schema violation
        """
        try:
            return cls._parse(data, index)
        except ConfigError:
            raise
        except DomainError as e:
            field_name = e.context.get("field")
            key = f"controller.precisions.{field_name}" if field_name else None
            raise ConfigError(f"invalid config: {e.message}", key=key) from e
        except (AicError, ValueError, TypeError, KeyError) as e:
            message = e.message if isinstance(e, AicError) else str(e)
            raise ConfigError(f"invalid config: {message}") from e

    @classmethod
    def _parse(cls, data: Dict[str, Any], index: int) -> "EpisodeConfig":
        ctrl = data["controller"]
        try:
            kind = ControllerKind(ctrl["type"])
        except ValueError:
            raise ConfigError(f"unknown controller type '{ctrl['type']}'", key="controller.type")
        if kind == ControllerKind.FILTER:
            data = pure_filter_mode(data)
            ctrl = data["controller"]
        try:
            plant_type = PlantType(data["plant"]["type"])
        except ValueError:
            raise ConfigError(f"unknown plant type '{data['plant']['type']}'", key="plant.type")

        dt = float(data["dt"])
        duration = float(data["duration"])
        if not dt > 0:
            raise ConfigError("dt must be positive", key="dt")
        if not duration > 0:
            raise ConfigError("duration must be positive", key="duration")
        rate_divider = int(data["rate_divider"])
        if rate_divider < 1:
            raise ConfigError("rate_divider must be at least 1", key="rate_divider")

        params = dict(data["plant"]["params"])
        n = create_plant(plant_type, params).joints
        q0 = _vector(data["plant"]["q0"], n, "plant.q0")
        q_dot0 = _vector(data["plant"]["q_dot0"], n, "plant.q_dot0")

        targets = _schedule(data["targets"], n, "targets")
        if not targets or targets[0][0] > 0:
            raise ConfigError("the first target must apply from t = 0", key="targets")
        payloads = _schedule(data["payloads"], None, "payloads")
        if payloads and plant_type != PlantType.SURROGATE_ARM:
            raise ConfigError("payload schedules need the surrogate arm plant", key="payloads")

        pre = ctrl["precisions"]
        precisions = PrecisionSet(
            _precision(pre["pi_o"], n, "controller.precisions.pi_o"),
            _precision(pre["pi_op"], n, "controller.precisions.pi_op"),
            _precision(pre["pi_mu"], n, "controller.precisions.pi_mu"),
            _precision(pre["pi_mup"], n, "controller.precisions.pi_mup"),
            n=n,
        )
        precision_floor = float(ctrl["precision_floor"])
        if not precision_floor > 0:
            raise ConfigError("precision_floor must be positive", key="controller.precision_floor")
        for name, block in zip(("pi_o", "pi_op", "pi_mu", "pi_mup"), precisions.blocks()):
            if np.any(np.diag(block) < precision_floor):
                raise ConfigError(f"{name} has a diagonal entry below precision_floor",
                                  key=f"controller.precisions.{name}")
        beta = TemporalScale(_vector(ctrl["beta"], n, "controller.beta"), float(ctrl["beta_floor"]))
        gains = GainSet(**ctrl["gains"])
        switches = LearningSwitches(**ctrl["learning"])
        b0 = ctrl["belief0"]
        belief0 = GeneralizedBelief(
            _vector(b0["mu"], n, "controller.belief0.mu"),
            _vector(b0["mu_p"], n, "controller.belief0.mu_p"),
            _vector(b0["mu_pp"], n, "controller.belief0.mu_pp"),
        )
        a_limit = ctrl["a_limit"]
        if a_limit is not None and not float(a_limit) > 0:
            raise ConfigError("a_limit must be positive", key="controller.a_limit")

        pid_gains = None
        if kind in (ControllerKind.PID, ControllerKind.PI_RATE):
            pid = ctrl["pid"]
            if pid.get("matched"):
                pid_gains = matched_pi_gains(gains.kappa_a, precisions.pi_o, precisions.pi_op)
            else:
                pid_gains = PidGains(
                    _vector(pid["p"], n, "controller.pid.p"),
                    _vector(pid["i"], n, "controller.pid.i"),
                    _vector(pid["d"], n, "controller.pid.d"),
                )

        noise = NoiseSpec(float(data["noise"]["sigma_pos"]), float(data["noise"]["sigma_vel"]),
                          int(data["seed"]))
        config = cls(
            plant_type=plant_type,
            plant_params=params,
            q0=q0,
            q_dot0=q_dot0,
            controller_kind=kind,
            gains=gains,
            precisions=precisions,
            beta=beta,
            switches=switches,
            belief0=belief0,
            action0=_vector(ctrl["action0"], n, "controller.action0"),
            targets=targets,
            payloads=payloads,
            pid_gains=pid_gains,
            a_limit=None if a_limit is None else float(a_limit),
            precision_floor=precision_floor,
            dt=dt,
            duration=duration,
            rate_divider=rate_divider,
            noise=noise,
            seed=int(data["seed"]),
            index=index,
        )
        config.warn_if_stiff()
        return config

    def warn_if_stiff(self) -> None:
        """Log when the belief flow is too stiff for explicit Euler at this dt."""
        if self.controller_kind != ControllerKind.AIC:
            return
        pi_mu = float(np.max(np.diag(self.precisions.pi_mu)))
        stiffness = self.gains.kappa_mu * float(np.max(self.beta.diag)) ** 2 * pi_mu * self.dt
        if stiffness >= STIFFNESS_LIMIT:
            logger.warning(
                "belief update is stiff (kappa_mu * beta^2 * pi_mu * dt = %.3g); "
                "reduce kappa_mu or dt", stiffness,
            )

    def build_controller(self):
        if self.controller_kind in (ControllerKind.PID, ControllerKind.PI_RATE):
            kind = PidKind.RATE if self.controller_kind == ControllerKind.PI_RATE else PidKind.POSITIONAL
            return PidController(self.pid_gains, self.n, kind, self.a_limit, self.action0)
        state = ControllerState(self.belief0, self.action0, self.precisions, self.beta)
        return ActiveInferenceController(state, self.gains, self.switches, self.a_limit,
                                         self.precision_floor)


class TrajectoryLog:
    """Per-tick record of plant, sensor, controller and hyperparameter values."""

    def __init__(self, n_ticks: int, n: int):
        self.n = n
        self.size = 0
        self.t = np.zeros(n_ticks)
        self.q = np.zeros((n_ticks, n))
        self.q_dot = np.zeros((n_ticks, n))
        self.o = np.zeros((n_ticks, n))
        self.o_p = np.zeros((n_ticks, n))
        self.mu = np.zeros((n_ticks, n))
        self.mu_p = np.zeros((n_ticks, n))
        self.mu_pp = np.zeros((n_ticks, n))
        self.a = np.zeros((n_ticks, n))
        self.free_energy = np.zeros(n_ticks)
        self.beta = np.zeros((n_ticks, n))
        self.pi_o = np.zeros((n_ticks, n))
        self.pi_op = np.zeros((n_ticks, n))
        # Not part of the CSV layout; metrics need them.
        self.target = np.zeros((n_ticks, n))
        self.payload = np.zeros(n_ticks)

    _SERIES = ("t", "q", "q_dot", "o", "o_p", "mu", "mu_p", "mu_pp", "a", "free_energy",
               "beta", "pi_o", "pi_op", "target", "payload")

    def __len__(self) -> int:
        return self.size

    def truncate(self, size: int) -> "TrajectoryLog":
        for name in self._SERIES:
            setattr(self, name, getattr(self, name)[:size])
        self.size = size
        return self

    def columns(self) -> List[str]:
        """CSV header in row order."""
        cols = ["t"]
        for prefix in ("q", "qd", "o", "op", "mu", "mup", "mupp", "a"):
            cols += [f"{prefix}{j}" for j in range(self.n)]
        cols.append("F")
        for prefix in ("beta", "pio", "piop"):
            cols += [f"{prefix}{j}" for j in range(self.n)]
        return cols

    def table(self) -> np.ndarray:
        """Rows in CSV column order."""
        return np.column_stack([
            self.t, self.q, self.q_dot, self.o, self.o_p, self.mu, self.mu_p, self.mu_pp,
            self.a, self.free_energy, self.beta, self.pi_o, self.pi_op,
        ])


def _active(schedule, starts: List[int], tick: int, default):
    value = default
    for (_, v), start in zip(schedule, starts):
        if tick >= start:
            value = v
    return value


def _start_ticks(schedule, dt: float) -> List[int]:
    # First tick whose time reaches the scheduled time.
    return [max(0, math.ceil(time / dt - 1e-9)) for time, _ in schedule]


def run_episode(config: EpisodeConfig) -> TrajectoryLog:
    """
    Run one closed-loop episode.

    Each tick applies schedules, observes, ticks the controller, logs the row with
    the pre-step plant state and steps the plant. Identical config and seed give an
    identical log.

    Raises:
        DivergenceError: with the partial log attached as `log`
    """
    n, dt = config.n, config.dt
    n_ticks = config.n_ticks
    plant = create_plant(config.plant_type, config.plant_params)
    controller = config.build_controller()
    rng = episode_rng(config.seed, config.index)
    log = TrajectoryLog(n_ticks, n)

    target_starts = _start_ticks(config.targets, dt)
    payload_starts = _start_ticks(config.payloads, dt)
    base_payload = getattr(plant.params, "payload_mass", 0.0)
    payload = base_payload
    state = PlantState(config.q0, config.q_dot0, 0.0)
    action = config.action0.copy()
    controller_dt = dt * config.rate_divider

    for i in range(n_ticks):
        t = i * dt
        try:
            target = Target(_active(config.targets, target_starts, i, config.targets[0][1]))
            if config.payloads:
                mass = _active(config.payloads, payload_starts, i, base_payload)
                if mass != payload:
                    plant.set_payload(mass)
                    payload = mass
            obs = observe(state, config.noise, rng)
            if i % config.rate_divider == 0:
                action = controller.tick(obs, target, controller_dt, tick=i)

            log.t[i] = t
            log.q[i], log.q_dot[i] = state.q, state.q_dot
            log.o[i], log.o_p[i] = obs.o, obs.o_p
            log.mu[i], log.mu_p[i], log.mu_pp[i] = controller.mu, controller.mu_p, controller.mu_pp
            log.a[i] = action
            log.free_energy[i] = controller.last_free_energy
            log.beta[i] = controller.beta_diag
            log.pi_o[i], log.pi_op[i] = controller.pi_o_diag, controller.pi_op_diag
            log.target[i] = target.mu_d
            log.payload[i] = payload
            log.size = i + 1

            if i < n_ticks - 1:
                state = plant.step(state, action, dt)
                if not state.finite:
                    raise DivergenceError("plant state became non-finite", tick=i, time=t)
        except (DivergenceError, ContractViolation) as e:
            # Non-finite values surface as contract violations when wrapped into types.
            error = e if isinstance(e, DivergenceError) else DivergenceError(
                f"non-finite value at tick {i}: {e.message}")
            error.at_tick(i, t)
            error.log = log.truncate(log.size)
            logger.warning("episode diverged at tick %d (t = %.4f s): %s", i, t, error.message)
            if error is e:
                raise
            raise error from e
    return log
