"""
Metrics Module
Scores a trajectory log: tracking error, overshoot, settling and oscillation counts.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import ContractViolation
from .generalized import Target


SETTLING_BAND = 0.02


@dataclass
class MetricsSummary:
    mae: float
    overshoot: float
    settling_time_2pct: float
    zero_crossings: int
    target_bias: float
    tracking_error: float
    mae_position: float = 0.0
    settled: bool = True
    zero_crossings_per_joint: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def segment_bounds(targets: np.ndarray) -> List[tuple]:
    """(start, stop) index pairs of constant-target stretches."""
    changes = np.flatnonzero(np.any(targets[1:] != targets[:-1], axis=1)) + 1
    edges = [0] + changes.tolist() + [targets.shape[0]]
    return list(zip(edges[:-1], edges[1:]))


def count_crossings(signal: np.ndarray) -> int:
    """Sign changes of a 1-D signal, zeros skipped, not counting the first one."""
    signs = np.sign(signal)
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    changes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    return max(0, changes - 1)


def _settling(t: np.ndarray, q: np.ndarray, mu_d: np.ndarray, duration: float):
    band = SETTLING_BAND * np.abs(mu_d - q[0])
    outside = np.any(np.abs(q - mu_d) > band, axis=1)
    if not np.any(outside):
        return 0.0, True
    last = int(np.flatnonzero(outside)[-1])
    if last == len(t) - 1:
        return duration, False
    return float(t[last + 1] - t[0]), True


def compute_metrics(log, target: Optional[Target] = None,
                    duration: Optional[float] = None) -> MetricsSummary:
    """
    Summarize an episode.

    Args:
        log: TrajectoryLog with at least one row
        target: Constant target overriding the log's per-tick targets
        duration: Reported as the settling time of unsettled runs; defaults to the
            time span covered by the log

    Returns:
        MetricsSummary. mae is measured on the belief, mae_position on the plant.
        Overshoot, crossings and settling restart at every target change; settling
        refers to the final target.
    """
    if len(log) == 0:
        raise ContractViolation("cannot score an empty trajectory")
    mu, q = log.mu, log.q
    if target is not None:
        targets = np.broadcast_to(target.mu_d, mu.shape)
    else:
        targets = log.target
    if duration is None:
        duration = float(log.t[-1] + (log.t[1] - log.t[0] if len(log) > 1 else 0.0))

    overshoot = 0.0
    per_joint = np.zeros(log.n, dtype=int)
    bounds = segment_bounds(np.asarray(targets))
    for start, stop in bounds:
        mu_d = targets[start]
        seg_q = q[start:stop]
        direction = np.sign(mu_d - seg_q[0])
        direction[direction == 0] = 1.0
        overshoot = max(overshoot, float(np.max(direction * (seg_q - mu_d), initial=0.0)))
        for j in range(log.n):
            per_joint[j] += count_crossings(seg_q[:, j] - mu_d[j])

    start, stop = bounds[-1]
    settling, settled = _settling(log.t[start:stop], q[start:stop], targets[start], duration)

    return MetricsSummary(
        mae=float(np.mean(np.abs(targets - mu))),
        mae_position=float(np.mean(np.abs(targets - q))),
        overshoot=max(overshoot, 0.0),
        settling_time_2pct=settling,
        settled=settled,
        zero_crossings=int(per_joint.sum()),
        zero_crossings_per_joint=per_joint.tolist(),
        target_bias=float(np.mean(np.linalg.norm(mu - targets, axis=1))),
        tracking_error=float(np.mean(np.linalg.norm(mu - q, axis=1))),
    )
