"""
Plotting Module
Static SVG line plots of a trajectory log.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_trajectory(log, path: Path, title: str = "") -> Path:
    """
    Plot position, belief and target, then action, free energy and beta.

    Args:
        log: TrajectoryLog
        path: Destination .svg file
        title: Figure title

    Returns:
        The written path
    """
    fig, axes = plt.subplots(4, 1, figsize=(8, 10), sharex=True)

    # Position vs belief
    ax1 = axes[0]
    for j in range(log.n):
        line, = ax1.plot(log.t, log.q[:, j], lw=1.5, label=f"q{j}")
        ax1.plot(log.t, log.mu[:, j], "--", color=line.get_color(), lw=1, label=f"mu{j}")
        ax1.plot(log.t, log.target[:, j], ":", color=line.get_color(), alpha=0.6)
    ax1.set_ylabel("Position")
    if log.n <= 2:
        ax1.legend(loc="lower right")
    ax1.set_title(title)

    ax2 = axes[1]
    ax2.plot(log.t, log.a)
    ax2.set_ylabel("Action")

    ax3 = axes[2]
    ax3.plot(log.t, log.free_energy, color="purple")
    ax3.set_ylabel("F")

    ax4 = axes[3]
    if np.all(np.isfinite(log.beta)):
        ax4.plot(log.t, log.beta)
    ax4.set_ylabel("beta")
    ax4.set_xlabel("Time (s)")

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)
