"""Headless gaze-hand steering simulator and experiment statistics."""

__version__ = "0.1.0"
