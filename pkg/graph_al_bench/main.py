#!/usr/bin/env python3
"""
graph-al-bench command line.

Usage: python -m graph_al_bench <command> ...

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import colorlog
import numpy as np
from pydantic import ValidationError

from . import __version__
from .analysis.graph.algorithms import regional_phase_fraction
from .analysis.graph.generators import sbm_generate
from .analysis.graph.rank import rank_table
from .config import Settings, load_settings
from .data_providers import (
    DatasetBundle,
    find_dataset,
    load_bundle,
    save_bundle,
    validate_bundle,
)
from .experiment.distance import distance_to_sampled_curve, write_distance_curve
from .experiment.sweep import run_sweep
from .modules.strategies import UnknownStrategyError
from .utils.manifest import RunManifest, dataset_checksums

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class UsageError(Exception):
    """Bad input detected before any work started."""


def setup_logging(level: str = "INFO", log_file: Optional[Path] = None) -> None:
    """Configure colored console logging and, optionally, a rotating log file."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

    console = colorlog.StreamHandler(sys.stderr)
    console.setFormatter(colorlog.ColoredFormatter('%(log_color)s' + LOG_FORMAT))
    root.addHandler(console)

    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(log_file, maxBytes=10 * 1024 * 1024,
                                           backupCount=3, encoding='utf-8')
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)


def _format_validation_error(e: ValidationError) -> str:
    return "\n".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Dict[str, Any]] = {}
    if getattr(args, 'strategy', None):
        overrides.setdefault('strategy', {})['names'] = [args.strategy]
    if getattr(args, 'reps', None) is not None:
        overrides.setdefault('protocol', {}).update(repetitions=args.reps, seeds=[])
    if getattr(args, 'seed', None) is not None:
        if args.command == 'analyze-distance':
            overrides.setdefault('analysis', {})['seed'] = args.seed
        else:
            overrides.setdefault('protocol', {}).update(seed=args.seed, seeds=[])
    if getattr(args, 'output', None):
        overrides.setdefault('output', {})['directory'] = args.output
    if getattr(args, 'dump_weights', False):
        overrides.setdefault('output', {})['dump_weights'] = True
    result: Dict[str, Any] = dict(overrides)
    if getattr(args, 'workers', None) is not None:
        result['workers'] = args.workers
    return result


def _settings(args: argparse.Namespace) -> Settings:
    return load_settings(args.config, **_overrides(args))


def _bundle(settings: Settings) -> DatasetBundle:
    ds = settings.dataset
    return load_bundle(ds.directory, name=ds.name, drop_isolated=ds.drop_isolated,
                       whitespace_separated=ds.whitespace_separated)


def _prepare_output(settings: Settings) -> Path:
    out = Path(settings.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    log_file = out / "run.log" if settings.output.log_to_file else None
    setup_logging(settings.output.log_level, log_file)
    return out


def cmd_run(args: argparse.Namespace) -> int:
    """Run one strategy (``run``) or the configured strategy list (``sweep``)."""
    settings = _settings(args)
    names = settings.strategy.names[:1] if args.command == 'run' else settings.strategy.names
    out = _prepare_output(settings)
    bundle = _bundle(settings)
    spec = find_dataset(bundle.name)
    cfgs = [settings.protocol_config(name, default_batch_size=spec.batch_size if spec else 1)
            for name in names]

    manifest = RunManifest(command=args.command, config=settings.snapshot(),
                           seeds=cfgs[0].run_seeds(), strategies=list(names),
                           dataset_checksums=dataset_checksums(settings.dataset.directory))
    manifest.write(out)

    try:
        result = run_sweep(bundle, cfgs, workers=settings.effective_workers)
        paths = result.write(out)
    except Exception as e:
        logger.error(f"Sweep failed: {e}", exc_info=True)
        manifest.finish(out, status="failed", error=str(e))
        return EXIT_RUNTIME

    manifest.outputs = {key: str(path) for key, path in paths.items()}
    if result.failed_runs:
        message = f"{len(result.failed_runs)} runs failed: {', '.join(result.failed_runs[:5])}"
        logger.error(message)
        manifest.finish(out, status="failed", error=message)
        return EXIT_RUNTIME
    manifest.finish(out)
    logger.info(f"Wrote {', '.join(str(p) for p in paths.values())}")
    return EXIT_OK


def cmd_analyze_distance(args: argparse.Namespace) -> int:
    settings = _settings(args)
    out = _prepare_output(settings)
    bundle = _bundle(settings)
    a = settings.analysis
    manifest = RunManifest(command=args.command, config=settings.snapshot(), seeds=[a.seed],
                           dataset_checksums=dataset_checksums(settings.dataset.directory))
    manifest.write(out)
    try:
        curve = distance_to_sampled_curve(bundle.graph, a.fractions, repetitions=a.repetitions,
                                          cap=a.cap, rng=np.random.default_rng(a.seed))
    except Exception as e:
        logger.error(f"Distance analysis failed: {e}", exc_info=True)
        manifest.finish(out, status="failed", error=str(e))
        return EXIT_RUNTIME

    phase = regional_phase_fraction(bundle.graph)
    logger.info(f"Regional phase ends near labeled fraction {phase:.6f}")
    path = write_distance_curve(curve, out / "distance_curve.csv")
    manifest.results = {"regional_phase_fraction": phase}
    manifest.outputs = {"distance_curve": str(path)}
    manifest.finish(out)
    logger.info(f"Wrote {path}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    bundle = load_bundle(args.dataset_dir, name=args.name)
    for line in validate_bundle(bundle).lines():
        print(line)
    return EXIT_OK


def cmd_gen_sbm(args: argparse.Namespace) -> int:
    sizes = _int_list(args.sizes)
    graph, labels = sbm_generate(sizes, args.p_in, args.p_out, directed=args.directed,
                                 seed=args.seed)
    out = Path(args.output_dir)
    bundle = DatasetBundle(name=out.name, graph=graph, labels=labels,
                           class_names=tuple(f"block{c}" for c in range(len(sizes))))
    for path in save_bundle(bundle, out):
        print(path)
    return EXIT_OK


def cmd_rank(args: argparse.Namespace) -> int:
    settings = _settings(args)
    out = _prepare_output(settings)
    bundle = _bundle(settings)
    ids = [s.strip() for s in args.labeled.split(',') if s.strip()]
    try:
        labeled = [bundle.graph.index_of(node_id) for node_id in ids]
    except KeyError as e:
        raise UsageError(str(e)) from None
    s = settings.strategy
    try:
        table = rank_table(bundle.graph, labeled, gamma=s.gamma, tol=s.rank_tol,
                           max_iters=s.rank_max_iters)
    except Exception as e:
        logger.error(f"Ranking failed: {e}", exc_info=True)
        return EXIT_RUNTIME
    path = out / "rank.csv"
    table.to_csv(path, index=False)
    logger.info(f"Wrote {path}")
    return EXIT_OK


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise UsageError(f"Expected comma-separated integers, got {text!r}") from None


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--strategy", help="Strategy name overriding the config list")
    p.add_argument("--reps", type=int, help="Number of repetitions")
    p.add_argument("--seed", type=int, help="First repetition seed")
    p.add_argument("--workers", type=int, help="Worker processes (default: all cores)")
    p.add_argument("--output", help="Output directory")
    p.add_argument("--dump-weights", action="store_true",
                   help="Write each run's final GCN weights under <output>/weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graph_al_bench",
                                     description="Active learning on graphs with a GCN learner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("run", "Run one strategy"),
                            ("sweep", "Run every configured strategy")):
        p = sub.add_parser(name, help=help_text)
        _add_run_options(p)
        p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze-distance", help="Distance to randomly sampled nodes")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_analyze_distance)

    p = sub.add_parser("validate", help="Check a dataset directory")
    p.add_argument("dataset_dir")
    p.add_argument("--name", help="Registry name (default: directory name)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-sbm", help="Write a stochastic block model dataset")
    p.add_argument("output_dir")
    p.add_argument("--sizes", default="40,40", help="Comma-separated block sizes")
    p.add_argument("--p-in", type=float, default=0.3)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_sbm)

    p = sub.add_parser("rank", help="Dump PageRank and adaptive PageRank")
    p.add_argument("--config", required=True)
    p.add_argument("--labeled", required=True, help="Comma-separated labeled node ids")
    p.add_argument("--output")
    p.set_defaults(func=cmd_rank)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging()
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"Invalid configuration:\n{_format_validation_error(e)}", file=sys.stderr)
    except UnknownStrategyError as e:
        print(str(e), file=sys.stderr)
    except (FileNotFoundError, KeyError, ValueError, UsageError) as e:
        print(f"Error: {e}", file=sys.stderr)
    logger.info(f"{args.command}: exiting with usage error")
    return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
