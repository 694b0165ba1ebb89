"""Deterministic nonlinear time-series analysis toolkit."""
from . import (
    codec,
    core,
    embedding,
    invariants,
    ordinal,
    prediction,
    recurrence,
    reservoir,
    surrogates,
    systems,
)
from ._kernels import BACKEND
from .core import NltsaError, PointCloud, RandomSource, TimeSeries, Trajectory

__version__ = "0.1.0"
