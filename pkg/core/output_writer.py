"""
Output Writer Module
Handles run directory layout and the CSV / JSON files a run produces.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import __version__


FLOAT_FORMAT = "%.9g"
SUMMARY_COLUMNS = ("axis_value", "learning", "mae", "overshoot", "settling_time_2pct",
                   "zero_crossings", "status")


def get_output_dir(out_dir) -> Path:
    """
    Create the run directory if needed.

    Args:
        out_dir: Directory for this run

    Returns:
        Path to the directory
    """
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def trajectory_filename(label: Optional[str] = None) -> str:
    return "trajectory.csv" if label is None else f"trajectory_{label}.csv"


def save_trajectory(log, path: Path) -> Path:
    """
    Write a trajectory log as CSV, one row per tick.

    Args:
        log: TrajectoryLog
        path: Destination file
    """
    np.savetxt(path, log.table(), fmt=FLOAT_FORMAT, delimiter=",",
               header=",".join(log.columns()), comments="")
    return path


def save_json(data: Any, path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def save_summary(rows: Iterable[Dict[str, Any]], path: Path) -> Path:
    """Write sweep results, one line per episode, in episode order."""
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        cells = []
        for col in SUMMARY_COLUMNS:
            cell = _format_value(row.get(col, ""))
            if "," in cell:
                cell = f'"{cell}"'
            cells.append(cell)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def build_manifest(config_hash: str, seed: int, outputs: List[Path], out_dir: Path,
                   metrics: Dict[str, Any], errors: Optional[List[Dict[str, Any]]] = None) -> Dict[str, Any]:
    """Manifest listing every file a run wrote, relative to the run directory."""
    manifest = {
        "version": __version__,
        "config_hash": config_hash,
        "seed": seed,
        "outputs": sorted(str(Path(p).relative_to(out_dir)) for p in outputs),
        "metrics": metrics,
    }
    if errors:
        manifest["errors"] = errors
    return manifest
