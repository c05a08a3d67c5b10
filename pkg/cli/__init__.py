"""CLI package for cqdd."""

from __future__ import annotations

from cqdd import __version__

__all__ = ["__version__"]
