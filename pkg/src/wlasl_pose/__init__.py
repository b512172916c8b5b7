"""Pose-based word-level sign recognition: Pose-TGCN, Pose-GRU, and dataset tooling."""

__version__ = "0.1.0"
