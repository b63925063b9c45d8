"""Numerical stability analysis for damped fractional Klein-Gordon equations on periodic grids."""

from __future__ import annotations

__version__ = "0.1.0"
