"""Semantic communication as a Lewis signaling game with correlated knowledge bases."""

__version__ = "0.1.0"
