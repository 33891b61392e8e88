"""HTTP service wrapping the certification pipeline."""

from .app import app

__all__ = ["app"]
