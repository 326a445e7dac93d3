"""Episode configuration, the tick loop and trajectory logging."""

import logging

import numpy as np
import pytest

from core.errors import ConfigError, DivergenceError
from core.simulation import ControllerKind, EpisodeConfig, TrajectoryLog, run_episode


class TestEpisodeConfig:

    def test_tick_count(self, msd_small, episode_from):
        msd_small["duration"] = 10.0
        assert episode_from(msd_small).n_ticks == 10_000

    def test_bad_dt(self, msd_small, episode_from):
        msd_small["dt"] = -0.001
        with pytest.raises(ConfigError) as info:
            episode_from(msd_small)
        assert info.value.key == "dt"

    def test_first_target_at_zero(self, msd_small, episode_from):
        msd_small["targets"] = [[1.0, 1.0]]
        with pytest.raises(ConfigError):
            episode_from(msd_small)

    def test_wrong_vector_length(self, msd_small, episode_from):
        msd_small["plant"]["q0"] = [0.0, 1.0]
        with pytest.raises(ConfigError) as info:
            episode_from(msd_small)
        assert info.value.key == "plant.q0"

    def test_payloads_need_arm(self, msd_small, episode_from):
        msd_small["payloads"] = [[0.0, 1.0]]
        with pytest.raises(ConfigError):
            episode_from(msd_small)

    def test_bad_precision_becomes_config_error(self, msd_small, episode_from):
        msd_small["controller"]["precisions"]["pi_o"] = -1.0
        with pytest.raises(ConfigError) as info:
            episode_from(msd_small)
        assert info.value.key == "controller.precisions.pi_o"

    def test_indefinite_precision_matrix(self, msd_small, episode_from):
        msd_small["plant"] = {"type": "two_link", "params": {}, "q0": 0.0, "q_dot0": 0.0}
        msd_small["targets"] = [[0.0, 0.0]]
        msd_small["controller"]["precisions"]["pi_op"] = [[1.0, 2.0], [2.0, 1.0]]
        with pytest.raises(ConfigError) as info:
            episode_from(msd_small)
        assert info.value.key == "controller.precisions.pi_op"

    def test_precision_below_floor(self, msd_small, episode_from):
        msd_small["controller"]["precision_floor"] = 0.5
        with pytest.raises(ConfigError) as info:
            episode_from(msd_small)
        assert info.value.key == "controller.precisions.pi_mup"

    def test_filter_kind(self, msd_small, episode_from):
        msd_small["controller"]["type"] = "filter"
        episode = episode_from(msd_small)
        assert episode.controller_kind == ControllerKind.AIC
        np.testing.assert_array_equal(episode.beta.diag, [1e-6])
        assert episode.gains.kappa_a == 0.0

    def test_matched_pi(self, msd_small, episode_from):
        msd_small["controller"]["type"] = "pi_rate"
        msd_small["controller"]["pid"] = {"matched": True}
        episode = episode_from(msd_small)
        np.testing.assert_allclose(episode.pid_gains.p, [600.0 * 2.0])
        np.testing.assert_allclose(episode.pid_gains.i, [600.0 * 1.5])

    def test_stiffness_warning(self, msd_small, episode_from, caplog):
        msd_small["dt"] = 0.1
        msd_small["duration"] = 1.0
        with caplog.at_level(logging.WARNING, logger="core.simulation"):
            episode_from(msd_small)
        assert "stiff" in caplog.text


class TestRunEpisode:

    def test_shorter_than_one_tick(self, msd_small, episode_from):
        msd_small["duration"] = 0.0005
        log = run_episode(episode_from(msd_small))
        assert len(log) == 1
        assert log.t[0] == 0.0
        np.testing.assert_array_equal(log.q[0], [-0.5])

    def test_first_row_is_initial_state(self, msd_small, episode_from):
        log = run_episode(episode_from(msd_small))
        assert len(log) == 200
        np.testing.assert_array_equal(log.q[0], [-0.5])
        np.testing.assert_array_equal(log.q_dot[0], [-1.0])
        np.testing.assert_allclose(log.t[-1], 0.199)

    def test_deterministic(self, msd_small, episode_from):
        a = run_episode(episode_from(msd_small)).table()
        b = run_episode(episode_from(msd_small)).table()
        np.testing.assert_array_equal(a, b)

    def test_seed_and_index_change_noise(self, msd_small, episode_from):
        base = run_episode(episode_from(msd_small)).o
        other_index = run_episode(episode_from(msd_small, index=1)).o
        msd_small["seed"] = 4
        other_seed = run_episode(episode_from(msd_small)).o
        assert not np.array_equal(base, other_index)
        assert not np.array_equal(base, other_seed)

    def test_target_switch_tick(self, msd_small, episode_from):
        msd_small["targets"] = [[0.0, 1.0], [0.0105, 2.0], [0.02, 3.0]]
        log = run_episode(episode_from(msd_small))
        assert log.target[10, 0] == 1.0
        assert log.target[11, 0] == 2.0
        assert log.target[19, 0] == 2.0
        assert log.target[20, 0] == 3.0

    def test_payload_schedule(self, episode_from):
        data = {
            "duration": 0.05,
            "plant": {"type": "surrogate_arm", "params": {"payload_mass": 0.5}},
            "controller": {"gains": {"kappa_a": 100.0}},
            "targets": [[0.0, 0.5]],
            "payloads": [[0.02, 3.0]],
        }
        log = run_episode(episode_from(data))
        assert log.payload[19] == 0.5
        assert log.payload[20] == 3.0
        assert log.q.shape == (50, 7)

    def test_rate_divider_holds_action(self, msd_small, episode_from):
        msd_small["rate_divider"] = 5
        log = run_episode(episode_from(msd_small))
        for start in range(0, 200, 5):
            np.testing.assert_array_equal(log.a[start:start + 5], np.repeat(log.a[start:start + 1], 5, axis=0))
        assert not np.array_equal(log.a[0], log.a[5])

    def test_hyperparameter_columns(self, msd_small, episode_from):
        msd_small["controller"]["learning"] = {"learn_pi_o": True, "learn_beta": True}
        log = run_episode(episode_from(msd_small))
        assert log.beta[-1, 0] != 2.0
        assert log.pi_o[-1, 0] != 1.5
        np.testing.assert_array_equal(log.pi_op[:, 0], 2.0)
        assert np.all(np.isfinite(log.free_energy))

    def test_pid_rows(self, msd_small, episode_from):
        msd_small["controller"]["type"] = "pid"
        msd_small["controller"]["pid"] = {"p": 50.0, "i": 5.0, "d": 1.0}
        log = run_episode(episode_from(msd_small))
        np.testing.assert_array_equal(log.mu, log.o)
        assert np.all(np.isnan(log.free_energy))
        assert np.all(np.isnan(log.beta))

    def test_divergence_keeps_partial_log(self, msd_small, episode_from):
        msd_small["dt"] = 0.1
        msd_small["duration"] = 100.0
        msd_small["controller"]["gains"]["kappa_a"] = 1e6
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError) as info:
                run_episode(episode_from(msd_small))
        error = info.value
        assert error.tick is not None
        assert error.log is not None
        assert 1 <= len(error.log) <= error.tick + 1
        assert error.to_dict()["exit_code"] == 3


class TestTrajectoryLog:

    def test_columns(self):
        assert TrajectoryLog(3, 1).columns() == [
            "t", "q0", "qd0", "o0", "op0", "mu0", "mup0", "mupp0", "a0", "F",
            "beta0", "pio0", "piop0",
        ]

    def test_table_width(self):
        log = TrajectoryLog(4, 7)
        assert log.table().shape == (4, len(log.columns()))
