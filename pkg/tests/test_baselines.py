"""PID baselines, matched PI gains and the pure-filter diagnostic."""

import numpy as np
import pytest

from core.baselines import (
    FILTER_BETA,
    PidController,
    PidGains,
    PidKind,
    PidState,
    matched_pi_gains,
    pi_rate_step,
    pid_step,
    pure_filter_mode,
)
from core.config_manager import DEFAULT_CONFIG
from core.errors import ContractViolation
from core.generalized import GeneralizedObservation, Target


class TestPidStep:

    def test_zero_error(self):
        gains = PidGains(2.0, 1.0, 0.5)
        state = PidState.zeros(1)
        for _ in range(5):
            state, action = pid_step(state, [0.0], gains, 0.01)
            np.testing.assert_array_equal(action, [0.0])

    def test_proportional(self):
        _, action = pid_step(PidState.zeros(1), [0.5], PidGains(1.0, 0.0, 0.0), 0.01)
        np.testing.assert_allclose(action, [0.5])

    def test_step_error_unrolled(self):
        gains = PidGains(2.0, 0.5, 0.1)
        state = PidState.zeros(1)
        actions = []
        for _ in range(5):
            state, action = pid_step(state, [1.0], gains, 0.1)
            actions.append(action[0])
        # Integral grows by 0.1 per tick; the derivative kicks only on the first tick.
        np.testing.assert_allclose(actions, [3.05, 2.1, 2.15, 2.2, 2.25])

    def test_rate_form_unrolled(self):
        gains = PidGains(p=3.0, i=2.0, d=0.0)
        state = PidState.zeros(1)
        errors = [1.0, 0.8, 0.5]
        rates = [-2.0, -3.0, -1.0]
        expected, a = [], 0.0
        for e, r in zip(errors, rates):
            a = a + 0.01 * (2.0 * e + 3.0 * r)
            expected.append(a)
            state, action = pi_rate_step(state, [e], [r], gains, 0.01)
            np.testing.assert_allclose(action, [a])
        np.testing.assert_allclose(state.output, [expected[-1]])


class TestMatchedGains:

    def test_tuned_precisions(self):
        gains = matched_pi_gains(1.0, 1.5 * np.eye(3), 0.5 * np.eye(3))
        np.testing.assert_allclose(gains.p, 0.5)
        np.testing.assert_allclose(gains.i, 1.5)
        np.testing.assert_array_equal(gains.d, 0.0)

    def test_zero_rate(self):
        gains = matched_pi_gains(0.0, np.eye(2), np.eye(2))
        np.testing.assert_array_equal(gains.p, 0.0)
        np.testing.assert_array_equal(gains.i, 0.0)

    def test_non_diagonal(self):
        with pytest.raises(ContractViolation):
            matched_pi_gains(1.0, np.array([[1.0, 0.2], [0.2, 1.0]]), np.eye(2))


class TestPidController:

    def test_reports_observation_as_belief(self):
        controller = PidController(PidGains(1.0, 0.0, 0.0), 1)
        obs = GeneralizedObservation([0.2], [0.7])
        action = controller.tick(obs, Target([1.0]), 0.01)
        np.testing.assert_allclose(action, [0.8])
        np.testing.assert_array_equal(controller.mu, [0.2])
        np.testing.assert_array_equal(controller.mu_p, [0.7])
        assert np.isnan(controller.last_free_energy)

    def test_clamped(self):
        controller = PidController(PidGains(100.0, 0.0, 0.0), 1, a_limit=2.0)
        action = controller.tick(GeneralizedObservation([0.0], [0.0]), Target([1.0]), 0.01)
        np.testing.assert_array_equal(action, [2.0])

    def test_rate_kind_uses_velocity(self):
        controller = PidController(PidGains(p=1.0, i=0.0, d=0.0), 1, kind=PidKind.RATE, action0=[0.5])
        action = controller.tick(GeneralizedObservation([0.0], [2.0]), Target([0.0]), 0.1)
        np.testing.assert_allclose(action, [0.5 - 0.1 * 2.0])


class TestPureFilterMode:

    def test_settings(self):
        original = {"controller": dict(DEFAULT_CONFIG["controller"])}
        out = pure_filter_mode(original)
        ctrl = out["controller"]
        assert ctrl["beta"] == FILTER_BETA
        assert ctrl["beta_floor"] == 0.0
        assert ctrl["gains"]["kappa_a"] == 0.0
        assert not any(ctrl["learning"].values())

    def test_input_untouched(self):
        original = {"controller": {"beta": 2.0, "gains": {"kappa_a": 600.0}}}
        pure_filter_mode(original)
        assert original == {"controller": {"beta": 2.0, "gains": {"kappa_a": 600.0}}}
