"""Exception types shared across the package."""

from __future__ import annotations


class ScoutError(Exception):
    """Base class for all package errors."""


class MapBoundsError(ScoutError, IndexError):
    """A grid index lies outside the map."""


class ParameterError(ScoutError, ValueError):
    """An argument violates a documented precondition."""


class SceneFormatError(ScoutError, ValueError):
    """A scene file or in-memory scene breaks the scene invariants."""


class InfeasiblePathError(ScoutError, ValueError):
    """A path crosses a cell that is impassable in the queried view."""


class ContractError(ScoutError, ValueError):
    """A structural precondition was violated (non-adjacent cells, a = b, ...)."""


class GenerationError(ScoutError, RuntimeError):
    """Procedural scene generation could not satisfy its constraints."""


class ConfigError(ScoutError, ValueError):
    """Run configuration is invalid."""
