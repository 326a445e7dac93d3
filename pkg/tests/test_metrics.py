"""Episode scoring against synthetic logs with known answers."""

import numpy as np
import pytest

from core.errors import ContractViolation
from core.generalized import Target
from core.metrics import compute_metrics, count_crossings, segment_bounds
from core.simulation import TrajectoryLog


def _log(t, q, mu, target):
    q = np.asarray(q, dtype=float).reshape(len(t), -1)
    mu = np.asarray(mu, dtype=float).reshape(len(t), -1)
    log = TrajectoryLog(len(t), q.shape[1])
    log.t[:] = t
    log.q[:] = q
    log.mu[:] = mu
    log.target[:] = np.broadcast_to(target, q.shape)
    log.size = len(t)
    return log


def _decaying(a=0.5, omega=2 * np.pi, duration=5.0, dt=0.001):
    t = np.arange(int(round(duration / dt))) * dt
    q = 1.0 - np.exp(-a * t) * np.cos(omega * t)
    return t, q


class TestCompute:

    def test_constant_offset(self):
        t = np.arange(100) * 0.01
        log = _log(t, np.full(100, 0.9), np.full(100, 0.9), 1.0)
        m = compute_metrics(log)
        assert m.mae == pytest.approx(0.1)
        assert m.mae_position == pytest.approx(0.1)
        assert m.target_bias == pytest.approx(0.1)

    def test_perfect_tracking(self):
        t = np.arange(50) * 0.01
        log = _log(t, np.full((50, 2), 0.3), np.full((50, 2), 0.3), [0.3, 0.3])
        m = compute_metrics(log)
        assert m.mae == 0.0
        assert m.overshoot == 0.0
        assert m.zero_crossings == 0
        assert m.settling_time_2pct == 0.0
        assert m.target_bias == 0.0
        assert m.tracking_error == 0.0
        assert m.settled

    def test_decaying_sinusoid(self):
        a, omega = 0.5, 2 * np.pi
        t, q = _decaying(a, omega)
        m = compute_metrics(_log(t, q, q, 1.0), duration=5.0)
        peak = (np.pi - np.arctan(a / omega)) / omega
        expected = np.exp(-a * peak) * np.cos(np.arctan(a / omega))
        assert m.overshoot == pytest.approx(expected, rel=1e-4)
        # Zeros at t = 0.25 + 0.5 k inside 5 s: ten sign changes, the first not counted.
        assert m.zero_crossings == 9
        assert m.zero_crossings_per_joint == [9]

    def test_settling_time(self):
        t, q = _decaying(a=2.0, omega=2 * np.pi)
        m = compute_metrics(_log(t, q, q, 1.0), duration=5.0)
        outside = np.abs(q - 1.0) > 0.02
        expected = t[np.flatnonzero(outside)[-1] + 1]
        assert m.settled
        assert m.settling_time_2pct == pytest.approx(expected)

    def test_never_settles(self):
        t = np.arange(100) * 0.01
        log = _log(t, np.zeros(100), np.zeros(100), 1.0)
        m = compute_metrics(log, duration=1.0)
        assert not m.settled
        assert m.settling_time_2pct == 1.0

    def test_overshoot_from_above(self):
        t = np.arange(4) * 0.1
        q = np.array([2.0, 1.0, 0.6, 0.9])
        m = compute_metrics(_log(t, q, q, 1.0))
        assert m.overshoot == pytest.approx(0.4)

    def test_segments_restart(self):
        t = np.arange(8) * 0.1
        q = np.array([0.0, 1.2, 0.9, 1.1, 1.1, -0.2, -0.1, 0.1])
        target = np.array([1, 1, 1, 1, 0, 0, 0, 0], dtype=float).reshape(-1, 1)
        log = _log(t, q, q, 0.0)
        log.target[:] = target
        m = compute_metrics(log)
        # First segment: 3 sign changes -> 2; second: 2 sign changes -> 1.
        assert m.zero_crossings == 3
        assert m.overshoot == pytest.approx(0.2)

    def test_explicit_target(self):
        t = np.arange(10) * 0.1
        log = _log(t, np.zeros(10), np.full(10, 0.5), 0.0)
        assert compute_metrics(log, target=Target([1.0])).mae == pytest.approx(0.5)

    def test_permutation_and_scaling(self, rng):
        t = np.arange(30) * 0.1
        mu = rng.normal(size=(30, 3))
        target = rng.normal(size=3)
        base = compute_metrics(_log(t, mu, mu, target)).mae
        perm = [2, 0, 1]
        assert compute_metrics(_log(t, mu[:, perm], mu[:, perm], target[perm])).mae == pytest.approx(base)
        assert compute_metrics(_log(t, 3 * mu, 3 * mu, 3 * target)).mae == pytest.approx(3 * base)

    def test_empty(self):
        with pytest.raises(ContractViolation):
            compute_metrics(TrajectoryLog(0, 1))


class TestHelpers:

    def test_crossings_skip_zeros(self):
        assert count_crossings(np.array([1.0, 0.0, -1.0, 0.0, 1.0])) == 1
        assert count_crossings(np.array([0.0, 0.0])) == 0

    def test_segment_bounds(self):
        targets = np.array([[1.0], [1.0], [2.0], [2.0], [2.0]])
        assert segment_bounds(targets) == [(0, 2), (2, 5)]
