"""Exception types raised across the package.

Everything derives from ``StreamMTLError`` so callers can catch one base
class; each subclass marks a distinct validation failure.
"""

from __future__ import annotations


class StreamMTLError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(StreamMTLError):
    """Vector or matrix shapes do not agree with the declared sizes."""


class HyperparameterError(StreamMTLError):
    """A hyperparameter violates its admissible range."""


class SymmetryError(StreamMTLError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPSDError(StreamMTLError):
    """A matrix required to be positive semidefinite has an eigenvalue
    below the admissible floor."""


class TopologyError(StreamMTLError):
    """A topology is malformed or unsupported for the requested protocol."""


class DisconnectedTopologyError(TopologyError):
    """The worker graph is not connected, so multi-hop paths do not exist."""


class ConfigError(StreamMTLError):
    """An experiment configuration is invalid; raised before any round runs."""


class DataFormatError(StreamMTLError):
    """A dataset file violates the expected CSV layout; the message names
    the offending line and column."""


class EmptyStreamError(StreamMTLError):
    """A task has no samples; raised at load time, never during a round."""


class InvalidRoundError(StreamMTLError):
    """A round index outside 1..T was passed to a per-round operation."""


class MetricError(StreamMTLError):
    """A metrics query refers to rounds that were never recorded."""


class OracleDivergenceError(StreamMTLError):
    """The batch reference solver produced a non-finite loss."""
