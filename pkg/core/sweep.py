"""
Sweep Module
Runs one episode (or a learning on/off pair) per value of a config parameter.
"""

import concurrent.futures
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from .config_manager import ConfigManager, deep_merge, get_path, set_path
from .errors import ConfigError, DivergenceError
from .metrics import compute_metrics
from .simulation import EpisodeConfig, run_episode


logger = logging.getLogger(__name__)

LEARNING_OFF = {"learn_pi_o": False, "learn_pi_op": False, "learn_beta": False}
LEARNING_ON = {"learn_pi_o": True, "learn_pi_op": True, "learn_beta": True}


@dataclass
class SweepSpec:
    """
    A parameter sweep over a base experiment.

    Both arms of a pair share the noise stream of their value index.
    """

    base: ConfigManager
    axis: str
    values: List[Any]
    paired: bool = False
    learning: Dict[str, bool] = field(default_factory=lambda: dict(LEARNING_ON))

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep needs at least one value", key="values")
        if self.base.all.get("variants"):
            raise ConfigError("sweep base must not declare variants", key="base.variants")
        current = get_path(self.base.all, self.axis) if not self.axis.startswith("plant.params.") else None
        if current is not None and isinstance(current, (list, dict, str, bool)):
            raise ConfigError(f"sweep axis '{self.axis}' is not a scalar", key="axis")
        for v in self.values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError("sweep values must be real scalars", key="values")
        unknown = set(self.learning) - set(LEARNING_ON)
        if unknown:
            raise ConfigError(f"unknown learning switches {sorted(unknown)}", key="learning")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base: ConfigManager) -> "SweepSpec":
        extra = set(data) - {"base", "axis", "values", "paired", "learning", "description"}
        if extra:
            raise ConfigError(f"unknown sweep keys {sorted(extra)}", key=sorted(extra)[0])
        for key in ("axis", "values"):
            if key not in data:
                raise ConfigError(f"sweep is missing '{key}'", key=key)
        learning = dict(LEARNING_OFF)
        learning.update(data.get("learning", LEARNING_ON))
        return cls(base, str(data["axis"]), list(data["values"]), bool(data.get("paired", False)), learning)

    def episodes(self) -> List[Dict[str, Any]]:
        """Expanded episode list in deterministic order."""
        jobs = []
        for value_index, value in enumerate(self.values):
            data = self.base.all
            data.pop("variants", None)
            set_path(data, self.axis, value)
            if self.paired:
                arms = [(False, LEARNING_OFF), (True, self.learning)]
            else:
                switches = data["controller"]["learning"]
                arms = [(any(switches.values()), None)]
            for learning, switches in arms:
                episode = data if switches is None else deep_merge(
                    data, {"controller": {"learning": switches}})
                jobs.append({
                    "index": len(jobs),
                    "value_index": value_index,
                    "axis_value": value,
                    "learning": learning,
                    "config": episode,
                })
        return jobs


def run_job(job: Dict[str, Any]) -> Dict[str, Any]:
    """Run one sweep episode and return its summary row."""
    row = {
        "index": job["index"],
        "axis_value": job["axis_value"],
        "learning": job["learning"],
    }
    try:
        config = EpisodeConfig.from_dict(job["config"], index=job["value_index"])
        log = run_episode(config)
        metrics = compute_metrics(log, duration=config.duration)
        row.update(metrics.to_dict())
        row["status"] = "ok"
    except DivergenceError as e:
        row.update({"mae": float("nan"), "overshoot": float("nan"),
                    "settling_time_2pct": float("nan"), "zero_crossings": float("nan")})
        row["status"] = "diverged"
        row["error"] = e.to_dict()
    return row


class SweepRunner:
    """Executes a SweepSpec on a process pool, assembling results by episode index."""

    def __init__(self, spec: SweepSpec, workers: int = 1):
        self.spec = spec
        self.workers = max(1, int(workers))

        # Callbacks
        self.on_progress: Optional[Callable[[int, int, str], None]] = None
        self.on_error: Optional[Callable[[str, str], None]] = None
        self.on_complete: Optional[Callable[[int], None]] = None

        # Control
        self._stop_requested: bool = False

    def stop(self) -> None:
        """Request to stop after the episodes already running."""
        self._stop_requested = True

    @staticmethod
    def _label(row: Dict[str, Any]) -> str:
        return f"{row['axis_value']}/{'on' if row['learning'] else 'off'}"

    def _collect(self, row: Dict[str, Any], results: Dict[int, Dict[str, Any]], total: int) -> None:
        results[row["index"]] = row
        label = self._label(row)
        if row["status"] != "ok":
            logger.warning("sweep episode %s diverged", label)
            if self.on_error:
                self.on_error(label, row["error"]["message"])
        logger.info("sweep episode %d/%d done (%s)", len(results), total, label)
        if self.on_progress:
            self.on_progress(len(results), total, label)

    def run(self) -> List[Dict[str, Any]]:
        """
        Run all episodes.

        Returns:
            Summary rows ordered by episode index, independent of worker count
        """
        self._stop_requested = False
        jobs = self.spec.episodes()
        total = len(jobs)
        results: Dict[int, Dict[str, Any]] = {}

        if self.workers == 1:
            for job in jobs:
                if self._stop_requested:
                    break
                self._collect(run_job(job), results, total)
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [pool.submit(run_job, job) for job in jobs]
                for future in concurrent.futures.as_completed(futures):
                    if self._stop_requested:
                        for f in futures:
                            f.cancel()
                        break
                    self._collect(future.result(), results, total)

        rows = [results[i] for i in sorted(results)]
        if self.on_complete:
            self.on_complete(len(rows))
        return rows
