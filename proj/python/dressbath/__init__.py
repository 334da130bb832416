"""Dressed-qubit spin-bath laboratory."""

import json as _json

from ._core import (
    BcsSolution,
    ConfigError,
    ContractViolation,
    ConvergenceError,
    DimensionOverflow,
    InfeasibleError,
    RangeError,
    SpinBathSpec,
    Unsupported,
    c_z,
    compile_gate,
    compose_pulses,
    describe_experiment,
    dipolar_from_geometry,
    experiment_names,
    frame_h_m,
    frame_rows,
    gate_infidelity,
    overhauser_diag,
    pulse_unitary,
    run_tables,
    sector_dimension,
    solve_bcs,
    solve_bcs_uniform,
    version,
)
from ._core import run_experiment as _run_experiment

__version__ = version()


def run_experiment(config, is_json=False, seed=None, workers=1):
    """Run a config given as text; returns the report as a dict."""
    return _json.loads(_run_experiment(config, is_json, seed, workers))
