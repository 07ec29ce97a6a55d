#!/usr/bin/env python3
"""
Convert downloaded LINQS citation datasets (Cora, CiteSeer) into dataset
directories, and list where every registered dataset can be downloaded.

Usage:
    python scripts/import_linqs.py --list
    python scripts/import_linqs.py ~/Downloads/cora cora data/cora
"""
import argparse
import logging
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1]))

from graph_al_bench.data_providers import REGISTRY, import_linqs  # noqa: E402
from graph_al_bench.main import setup_logging  # noqa: E402

logger = logging.getLogger(__name__)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("source_dir", nargs="?", help="Folder with <name>.cites and <name>.content")
    parser.add_argument("name", nargs="?", help="Dataset file stem, e.g. cora")
    parser.add_argument("output_dir", nargs="?", help="Dataset directory to write")
    parser.add_argument("--list", action="store_true", help="Print dataset sources and exit")
    args = parser.parse_args()
    setup_logging("INFO")

    if args.list:
        for spec in REGISTRY.values():
            print(f"{spec.name:12s} {spec.nodes:>6d} nodes {spec.edges:>7d} edges  {spec.source_url}")
        return 0
    if not (args.source_dir and args.name and args.output_dir):
        parser.error("source_dir, name and output_dir are required unless --list is given")

    try:
        import_linqs(args.source_dir, args.name, args.output_dir)
    except (FileNotFoundError, ValueError) as e:
        logger.error(str(e))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
