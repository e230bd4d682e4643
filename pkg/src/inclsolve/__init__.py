"""
First-order methods for nonlinear inclusions ``0 in Fx + Tx``.

``F`` is single-valued and Lipschitz; ``T`` is reached only through its
resolvent.  The package provides extragradient-type schemes (plain, past,
forward-backward-forward, reflected, golden ratio, Halpern-anchored and
Nesterov-accelerated), a zoo of analytic test problems, per-iteration
convergence certificates and a small experiment harness.

Modules
-------
operators
    Operator containers, resolvents, residuals and property probes.
zoo
    Registered test problems with exact constants and solutions.
solvers
    Step-size windows, schedules and one-step kernels.
instrumentation
    Potentials, certificates, traces and rate fits.
harness
    Experiment configs, run loop, CSV output, presets.
"""

from inclsolve.errors import (ConfigurationError, InclsolveError, NumericError,
                              ParameterError, ShapeError)
from inclsolve.harness import (EXIT_CODES, PRESETS, ExperimentConfig, emit_csv,
                               emit_plotdata, run_experiment, verify_preset)
from inclsolve.instrumentation import (Certificate, CertificateChecker, Trace,
                                       check_certificates, rate_fit)
from inclsolve.operators import Problem, SetOp, SingleOp, fb_residual, residual_norm
from inclsolve.solvers import (METHODS, IterState, Schedule, SolverConfig, StepWindow,
                               iterate, make_config, step, stepsize_window)
from inclsolve.zoo import get_problem, initial_point, list_problems

__version__ = "0.1.0"

__all__ = [
    "Certificate", "CertificateChecker", "ConfigurationError", "EXIT_CODES",
    "ExperimentConfig", "InclsolveError", "IterState", "METHODS", "NumericError",
    "PRESETS", "ParameterError", "Problem", "Schedule", "SetOp", "ShapeError",
    "SingleOp", "SolverConfig", "StepWindow", "Trace", "check_certificates",
    "emit_csv", "emit_plotdata", "fb_residual", "get_problem", "initial_point",
    "iterate", "list_problems", "make_config", "rate_fit", "residual_norm",
    "run_experiment", "step", "stepsize_window", "verify_preset",
]
