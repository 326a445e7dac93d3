"""
Plants Module
Simulated plants and sensors: mass-spring-damper, 7-joint arm surrogate, two-link arm.

Every plant integrates with explicit Euler: positions advance with the old velocity.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ContractViolation, IntegrationError
from .generalized import GeneralizedObservation


SURROGATE_JOINTS = 7
SINGULAR_INERTIA_TOL = 1e-12


class PlantType(Enum):
    """Plant selection used by experiment configs."""
    MSD = "msd"
    SURROGATE_ARM = "surrogate_arm"
    TWO_LINK = "two_link"


@dataclass(frozen=True)
class PlantState:
    q: np.ndarray
    q_dot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.atleast_1d(np.array(self.q, dtype=float))
        q_dot = np.atleast_1d(np.array(self.q_dot, dtype=float))
        if q.shape != q_dot.shape or q.ndim != 1:
            raise ContractViolation("q and q_dot must be vectors of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "q_dot", q_dot)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.q_dot)))


@dataclass(frozen=True)
class MsdParams:
    k1: float = 1.0
    k2: float = 0.1
    mass: float = 1.0

    def __post_init__(self):
        if self.mass <= 0 or self.k1 < 0 or self.k2 < 0:
            raise ContractViolation("mass must be positive and k1, k2 non-negative")


def _seven(value) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(SURROGATE_JOINTS, float(arr))
    if arr.shape != (SURROGATE_JOINTS,):
        raise ContractViolation(f"surrogate arm parameters need {SURROGATE_JOINTS} entries")
    return arr


@dataclass(frozen=True)
class SurrogateArmParams:
    """Per-joint decoupled arm with a gravity-like sin(q) bias and a payload term."""

    inertia: np.ndarray = field(default_factory=lambda: np.full(SURROGATE_JOINTS, 1.0))
    damping: np.ndarray = field(default_factory=lambda: np.full(SURROGATE_JOINTS, 0.5))
    gravity_gain: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 3.0, 2.0, 2.0, 0.5, 0.5, 0.1])
    )
    payload_mass: float = 0.0
    payload_coupling: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 1.5, 1.0, 1.0, 0.3, 0.2, 0.05])
    )

    def __post_init__(self):
        for name in ("inertia", "damping", "gravity_gain", "payload_coupling"):
            object.__setattr__(self, name, _seven(getattr(self, name)))
        if np.any(self.inertia <= 0):
            raise ContractViolation("inertia must be positive", field="inertia")
        if self.payload_mass < 0:
            raise ContractViolation("payload mass must be non-negative", field="payload_mass")


@dataclass(frozen=True)
class TwoLinkParams:
    """Two uniform rods; angles from the +x axis, gravity along -y."""

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        if min(self.m1, self.m2, self.l1, self.l2) <= 0:
            raise ContractViolation("link masses and lengths must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    sigma_pos: float = 0.001
    sigma_vel: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.sigma_pos < 0 or self.sigma_vel < 0:
            raise ContractViolation("noise standard deviations must be non-negative")

    @property
    def silent(self) -> bool:
        return self.sigma_pos == 0 and self.sigma_vel == 0


def _euler(state: PlantState, acc: np.ndarray, dt: float) -> PlantState:
    if dt <= 0:
        raise ContractViolation("dt must be positive", field="dt")
    return PlantState(state.q + dt * state.q_dot, state.q_dot + dt * acc, state.t + dt)


def _check_action(action, n: int) -> np.ndarray:
    a = np.atleast_1d(np.array(action, dtype=float))
    if a.shape != (n,):
        raise ContractViolation(f"action must have {n} entries", shape=list(a.shape))
    return a


def msd_step(state: PlantState, action, params: MsdParams, dt: float) -> PlantState:
    """x_ddot = (a - k1 x - k2 x_dot) / m."""
    a = _check_action(action, state.n)
    acc = (a - params.k1 * state.q - params.k2 * state.q_dot) / params.mass
    return _euler(state, acc, dt)


def surrogate_arm_torque_bias(q: np.ndarray, params: SurrogateArmParams) -> np.ndarray:
    """Configuration-dependent torque the controller has to overcome."""
    return (params.gravity_gain + params.payload_coupling * params.payload_mass) * np.sin(q)


def surrogate_arm_step(state: PlantState, action, params: SurrogateArmParams, dt: float) -> PlantState:
    a = _check_action(action, SURROGATE_JOINTS)
    acc = (a - params.damping * state.q_dot - surrogate_arm_torque_bias(state.q, params)) / params.inertia
    return _euler(state, acc, dt)


def _two_link_terms(q: np.ndarray, q_dot: np.ndarray, params: TwoLinkParams):
    m1, m2, l1, l2, g = params.m1, params.m2, params.l1, params.l2, params.g
    c1, c2 = l1 / 2, l2 / 2
    i1, i2 = m1 * l1 ** 2 / 12, m2 * l2 ** 2 / 12
    cos2 = np.cos(q[1])
    m11 = i1 + i2 + m1 * c1 ** 2 + m2 * (l1 ** 2 + c2 ** 2 + 2 * l1 * c2 * cos2)
    m12 = i2 + m2 * (c2 ** 2 + l1 * c2 * cos2)
    m22 = i2 + m2 * c2 ** 2
    mass = np.array([[m11, m12], [m12, m22]])
    h = m2 * l1 * c2 * np.sin(q[1])
    coriolis = np.array([-h * (2 * q_dot[0] * q_dot[1] + q_dot[1] ** 2), h * q_dot[0] ** 2])
    cos12 = np.cos(q[0] + q[1])
    gravity = np.array([
        (m1 * c1 + m2 * l1) * g * np.cos(q[0]) + m2 * c2 * g * cos12,
        m2 * c2 * g * cos12,
    ])
    return mass, coriolis, gravity


def two_link_step(state: PlantState, action, params: TwoLinkParams, dt: float) -> PlantState:
    """
    q_ddot = M(q)^-1 (a - C(q, q_dot) q_dot - G(q)).

    Raises:
        IntegrationError: if the inertia matrix is numerically singular
    """
    if state.n != 2:
        raise ContractViolation("two-link plant state must have 2 joints")
    a = _check_action(action, 2)
    mass, coriolis, gravity = _two_link_terms(state.q, state.q_dot, params)
    if abs(np.linalg.det(mass)) < SINGULAR_INERTIA_TOL:
        raise IntegrationError("two-link inertia matrix is singular", time=state.t)
    acc = np.linalg.solve(mass, a - coriolis - gravity)
    return _euler(state, acc, dt)


def two_link_energy(state: PlantState, params: TwoLinkParams) -> float:
    """Kinetic plus potential energy, potential measured from the shoulder height."""
    mass, _, _ = _two_link_terms(state.q, state.q_dot, params)
    kinetic = 0.5 * float(state.q_dot @ mass @ state.q_dot)
    y1 = params.l1 / 2 * np.sin(state.q[0])
    y2 = params.l1 * np.sin(state.q[0]) + params.l2 / 2 * np.sin(state.q[0] + state.q[1])
    potential = params.g * (params.m1 * y1 + params.m2 * y2)
    return kinetic + float(potential)


def episode_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based per-episode generator: SeedSequence(seed, spawn_key=(index,))."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def observe(state: PlantState, noise: NoiseSpec,
            rng: Optional[np.random.Generator] = None) -> GeneralizedObservation:
    """
    Noisy generalized observation o = q + n_p, o' = q_dot + n_v.

    Position noise is drawn before velocity noise. Noiseless specs draw nothing.
    """
    if noise.silent:
        return GeneralizedObservation(state.q.copy(), state.q_dot.copy())
    if rng is None:
        raise ContractViolation("a random generator is required for noisy observation")
    o = state.q + noise.sigma_pos * rng.standard_normal(state.n)
    o_p = state.q_dot + noise.sigma_vel * rng.standard_normal(state.n)
    return GeneralizedObservation(o, o_p)


class Plant:
    """Stateful plant wrapper used by the episode loop."""

    plant_type: PlantType

    def __init__(self, params):
        self.params = params

    @property
    def joints(self) -> int:
        raise NotImplementedError

    def step(self, state: PlantState, action, dt: float) -> PlantState:
        raise NotImplementedError

    def set_payload(self, mass: float) -> None:
        raise ContractViolation(f"{self.plant_type.value} plant has no payload")


class MsdPlant(Plant):
    plant_type = PlantType.MSD

    @property
    def joints(self) -> int:
        return 1

    def step(self, state, action, dt):
        return msd_step(state, action, self.params, dt)


class SurrogateArmPlant(Plant):
    plant_type = PlantType.SURROGATE_ARM

    @property
    def joints(self) -> int:
        return SURROGATE_JOINTS

    def step(self, state, action, dt):
        return surrogate_arm_step(state, action, self.params, dt)

    def set_payload(self, mass: float) -> None:
        self.params = replace(self.params, payload_mass=float(mass))


class TwoLinkPlant(Plant):
    plant_type = PlantType.TWO_LINK

    @property
    def joints(self) -> int:
        return 2

    def step(self, state, action, dt):
        return two_link_step(state, action, self.params, dt)


def create_plant(plant_type: PlantType, params: dict) -> Plant:
    """Build a plant from its type and a parameter dict."""
    if plant_type == PlantType.MSD:
        return MsdPlant(MsdParams(**params))
    elif plant_type == PlantType.SURROGATE_ARM:
        return SurrogateArmPlant(SurrogateArmParams(**params))
    else:
        return TwoLinkPlant(TwoLinkParams(**params))
