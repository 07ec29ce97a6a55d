"""
Analysis module for graph-al-bench.
Contains the graph structures and the algorithms run on them.
"""

__all__ = ['graph']
