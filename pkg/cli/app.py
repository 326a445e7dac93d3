"""
Command-Line Application
Runs experiments, sweeps and the gradient self-test from bundled or user configs.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from core import __version__
from core.config_library import ConfigLibrary
from core.config_manager import ConfigManager, get_output_root, read_json
from core.errors import (
    EXIT_DIVERGENCE,
    EXIT_MISSING_FILE,
    EXIT_OK,
    AicError,
    ConfigError,
    DivergenceError,
)
from core.gradcheck import run_battery
from core.metrics import compute_metrics
from core.output_writer import (
    build_manifest,
    get_output_dir,
    save_json,
    save_summary,
    save_trajectory,
    trajectory_filename,
)
from core.simulation import EpisodeConfig, run_episode
from core.sweep import SweepRunner, SweepSpec


logger = logging.getLogger(__name__)


def _json_safe(value: Any) -> Any:
    """Replace non-finite floats so emitted JSON stays strict."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _report(payload: Dict[str, Any]) -> None:
    print(json.dumps(_json_safe(payload), sort_keys=True), file=sys.stderr)


def _missing(error: FileNotFoundError) -> int:
    _report({"error": "missing_file", "message": str(error), "exit_code": EXIT_MISSING_FILE})
    return EXIT_MISSING_FILE


def _load_config(ref: str, seed_override: Optional[int],
                 relative_to: Optional[Path] = None) -> ConfigManager:
    path = ConfigLibrary().resolve(ref, relative_to)
    config = ConfigManager.from_file(path)
    if seed_override is not None:
        config.set("seed", int(seed_override))
    config.validate()
    return config


def _default_out(name: str) -> Path:
    return get_output_root() / name


def cmd_run(args: argparse.Namespace) -> int:
    """Run every variant of one experiment config."""
    config = _load_config(args.config, args.seed_override)
    out_dir = get_output_dir(args.out or _default_out(Path(args.config).stem))
    logger.info("writing run outputs to %s", out_dir)
    outputs: List[Path] = []
    metrics: Dict[str, Any] = {}
    errors: List[Dict[str, Any]] = []

    for label, data in config.variants():
        episode = EpisodeConfig.from_dict(data)
        try:
            log = run_episode(episode)
        except DivergenceError as e:
            _report(dict(e.to_dict(), variant=label))
            errors.append(dict(e.to_dict(), variant=label))
            log = e.log
            if log is None:
                continue
        path = save_trajectory(log, out_dir / trajectory_filename(label))
        outputs.append(path)
        summary = compute_metrics(log, duration=episode.duration).to_dict() if len(log) else {}
        if label is None:
            metrics = summary
        else:
            metrics[label] = summary
        if args.emit_plots and len(log):
            from core.plotting import plot_trajectory

            plot_path = path.with_suffix(".svg")
            plot_trajectory(log, plot_path, title=label or config.get("name", ""))
            outputs.append(plot_path)

    outputs.append(save_json(_json_safe(metrics), out_dir / "metrics.json"))
    manifest_path = out_dir / "manifest.json"
    outputs.append(manifest_path)
    manifest = build_manifest(config.config_hash(), config.get("seed"), outputs, out_dir,
                              _json_safe(metrics), _json_safe(errors))
    save_json(manifest, manifest_path)
    print(str(out_dir))
    return EXIT_DIVERGENCE if errors else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a parameter sweep and write summary.csv."""
    library = ConfigLibrary()
    sweep_path = library.resolve(args.sweep)
    data = read_json(sweep_path)
    if "base" not in data:
        raise ConfigError("sweep is missing 'base'", key="base")
    base = _load_config(str(data["base"]), args.seed_override, sweep_path.parent)
    spec = SweepSpec.from_dict(data, base)
    for job in spec.episodes():
        EpisodeConfig.from_dict(job["config"])

    runner = SweepRunner(spec, workers=args.workers)
    rows = runner.run()

    out_dir = get_output_dir(args.out or _default_out(sweep_path.stem))
    logger.info("writing %d sweep rows to %s", len(rows), out_dir)
    outputs = [save_summary(rows, out_dir / "summary.csv")]
    manifest_path = out_dir / "manifest.json"
    outputs.append(manifest_path)
    table = [
        {k: row.get(k) for k in ("axis_value", "learning", "status", "mae", "mae_position",
                                 "overshoot", "settling_time_2pct", "zero_crossings")}
        for row in rows
    ]
    manifest = build_manifest(base.config_hash(), base.get("seed"), outputs, out_dir,
                              _json_safe({"axis": spec.axis, "episodes": table}))
    save_json(manifest, manifest_path)
    print(str(out_dir))
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Compare every analytic gradient with central finite differences."""
    report = run_battery(count=args.count, seed=args.seed)
    print(json.dumps(report.summary(), indent=2, sort_keys=True))
    if report.passed:
        return EXIT_OK
    for result in report.families.values():
        for failure in result.failures:
            _report(dict(failure, error="gradient_mismatch", exit_code=EXIT_DIVERGENCE,
                         family=result.name))
    return EXIT_DIVERGENCE


def cmd_list(args: argparse.Namespace) -> int:
    """Print bundled configs with their descriptions."""
    library = ConfigLibrary()
    for name in library.get_names():
        kind = "sweep" if library.is_sweep(name) else "run"
        print(f"{name:24s} {kind:6s} {library.description(name)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    outputs = argparse.ArgumentParser(add_help=False)
    outputs.add_argument("--out", type=Path, default=None,
                         help="output directory (default: $AIC_OUTPUT_ROOT/<name> or ./runs/<name>)")
    outputs.add_argument("--seed-override", type=int, default=None, help="replace the config seed")

    parser = argparse.ArgumentParser(
        prog="aic",
        description="Active inference controller toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common, outputs], help="run one experiment config")
    p_run.add_argument("config", help="config file or bundled config name")
    p_run.add_argument("--emit-plots", action="store_true", help="also write SVG plots")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common, outputs], help="run a parameter sweep")
    p_sweep.add_argument("sweep", help="sweep file or bundled sweep name")
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel episodes")
    p_sweep.set_defaults(func=cmd_sweep)

    p_grad = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient battery")
    p_grad.add_argument("--count", type=int, default=100, help="number of random configurations")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_list = sub.add_parser("list", parents=[common], help="list bundled configs")
    p_list.set_defaults(func=cmd_list)
    return parser


def run_app(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, and map failures to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except FileNotFoundError as e:
        return _missing(e)
    except AicError as e:
        _report(e.to_dict())
        return e.exit_code
