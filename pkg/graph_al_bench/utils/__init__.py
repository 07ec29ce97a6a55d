"""Utility helpers for graph-al-bench."""
