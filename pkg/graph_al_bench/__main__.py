"""
Entry point for running graph-al-bench as a module.
Usage: python -m graph_al_bench <command>
"""
import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
