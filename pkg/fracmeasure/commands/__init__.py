"""Command handlers, one module per CLI command."""

from __future__ import annotations

from types import ModuleType
from typing import Dict

from . import control, converge, eig, quadcheck, solve

HANDLERS: Dict[str, ModuleType] = {module.NAME: module for module in (solve, control, converge, quadcheck, eig)}
