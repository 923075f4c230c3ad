"""Spectral zeta functions, analytic torsion and multi-torsion."""

import json as _json

from ._core import (
    AccuracyError,
    CapabilityError,
    ConditioningError,
    DomainError,
    ParseError,
    ValidationError,
    __version__,
    eta_invariant,
    fit_expansion,
    heat_trace,
    log_det,
    log_det_finite,
    log_torsion,
    mckean_singer_index,
)
from . import _core


def multi_torsion(geometry, tol=1e-7):
    """Multi-torsion of a geometry record given as a dict."""
    return _core.multi_torsion(_json.dumps(geometry), tol)


def validate_geometry(geometry):
    return _core.validate_geometry(_json.dumps(geometry))


def run(config):
    """Evaluate a run config dict and return the manifest dict."""
    return _json.loads(_core.execute(_json.dumps(config)))


__all__ = [
    "AccuracyError",
    "CapabilityError",
    "ConditioningError",
    "DomainError",
    "ParseError",
    "ValidationError",
    "eta_invariant",
    "fit_expansion",
    "heat_trace",
    "log_det",
    "log_det_finite",
    "log_torsion",
    "mckean_singer_index",
    "multi_torsion",
    "run",
    "validate_geometry",
]
