"""graph-al-bench: active learning on graphs with a GCN learner."""

__version__ = "1.0.0"
