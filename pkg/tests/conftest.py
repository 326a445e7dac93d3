"""Shared fixtures: seeded generators, small MSD configs and bundled experiment runs."""

import copy
from typing import Any, Dict

import numpy as np
import pytest

from core.config_library import ConfigLibrary
from core.config_manager import ConfigManager, read_json
from core.metrics import compute_metrics
from core.simulation import EpisodeConfig, run_episode
from core.sweep import SweepRunner, SweepSpec


MSD_SMALL: Dict[str, Any] = {
    "name": "msd_small",
    "seed": 3,
    "dt": 0.001,
    "duration": 0.2,
    "plant": {"type": "msd", "params": {"k1": 1.0, "k2": 0.1, "mass": 1.0},
              "q0": -0.5, "q_dot0": -1.0},
    "controller": {
        "gains": {"kappa_mu": 20.0, "kappa_a": 600.0, "kappa_sigma": 1.0, "kappa_tau": 1.0},
        "precisions": {"pi_o": 1.5, "pi_op": 2.0, "pi_mu": 1.0, "pi_mup": 0.1},
        "beta": 2.0,
        "belief0": {"mu": 0.0, "mu_p": -1.5, "mu_pp": 0.0},
    },
    "targets": [[0.0, 1.0]],
}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def msd_small():
    """Raw (unmerged) short MSD experiment dict; tests may edit their copy."""
    return copy.deepcopy(MSD_SMALL)


@pytest.fixture
def episode_from():
    """Merge a raw experiment dict over the defaults and parse it."""

    def build(data: Dict[str, Any], index: int = 0) -> EpisodeConfig:
        return EpisodeConfig.from_dict(ConfigManager(data).all, index=index)

    return build


_BUNDLED_CACHE: Dict[str, Dict[str, Any]] = {}
_SWEEP_CACHE: Dict[str, Any] = {}


@pytest.fixture(scope="session")
def bundled_run():
    """
    Run every variant of a bundled config once per session.

    Returns a function name -> {label: (episode, log, metrics)}.
    """

    def run(name: str) -> Dict[str, Any]:
        if name not in _BUNDLED_CACHE:
            config = ConfigManager.from_file(ConfigLibrary().get_path(name))
            results = {}
            for label, data in config.variants():
                episode = EpisodeConfig.from_dict(data)
                log = run_episode(episode)
                results[label] = (episode, log, compute_metrics(log, duration=episode.duration))
            _BUNDLED_CACHE[name] = results
        return _BUNDLED_CACHE[name]

    return run


@pytest.fixture(scope="session")
def bundled_sweep():
    """Run a bundled sweep once per session; returns {(axis_value, learning): row}."""

    def run(name: str) -> Dict[Any, Dict[str, Any]]:
        if name not in _SWEEP_CACHE:
            library = ConfigLibrary()
            path = library.get_path(name)
            data = read_json(path)
            base = ConfigManager.from_file(library.resolve(data["base"], path.parent))
            rows = SweepRunner(SweepSpec.from_dict(data, base), workers=1).run()
            _SWEEP_CACHE[name] = {(row["axis_value"], row["learning"]): row for row in rows}
        return _SWEEP_CACHE[name]

    return run
