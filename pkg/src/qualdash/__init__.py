"""Dashboard generation engine for clinical audit quality metrics."""

__version__ = "0.1.0"
