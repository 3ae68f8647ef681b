"""Floating-point rotation synthesis over Clifford+T with gearbox circuits."""
from __future__ import annotations

__version__ = "0.1.0"
