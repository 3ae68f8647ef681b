"""Exceptions shared across modules (the CLI maps ResourceError to exit code 2)."""
from __future__ import annotations


class ResourceError(RuntimeError):
    """A search, enumeration or simulation exceeded its configured budget."""
