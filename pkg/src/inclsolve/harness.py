"""
Experiment configuration, run loop, CSV output and theorem presets.

A run is fully determined by an :class:`ExperimentConfig`: the problem is
looked up in the zoo registry, the starting point is drawn from ``seed``,
and the certificates of the matching convergence statement are evaluated
at every iteration.  Output files are byte-for-byte reproducible.
"""

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional, Union

import numpy as np

from inclsolve.errors import (ConfigurationError, InclsolveError, NumericError,
                              ParameterError)
from inclsolve.instrumentation import (THEOREMS, CertificateChecker, Trace,
                                       default_theorem, state_metrics)
from inclsolve.operators import RTOL
from inclsolve.solvers import GOLDEN, METHODS, iterate, make_config
from inclsolve.zoo import get_problem, initial_point

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

EXIT_CODES = {"ok": EXIT_OK, "certificate_failure": EXIT_CERTIFICATE,
              "usage": EXIT_USAGE, "numeric": EXIT_NUMERIC}

CSV_COLUMNS = ("k", "res_norm", "fb_res", "dist", "potential", "best_res", "cert_pass")
PLOT_COLUMNS = ("run_id", "k", "metric", "value")

RTOL_ENV = "INCLSOLVE_RTOL"


def exit_code_for(exc):
    """Exit status for an exception raised by a run."""
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (InclsolveError, OSError)):
        return EXIT_USAGE
    raise exc


def resolve_rtol(rtol=None):
    """
    Certificate tolerance: explicit value, else ``$INCLSOLVE_RTOL``, else the default.

    Raises
    ------
    ParameterError
        If the environment value is not a nonnegative number.
    """
    if rtol is not None:
        return float(rtol)
    raw = os.environ.get(RTOL_ENV)
    if raw is None or raw.strip() == "":
        return RTOL
    try:
        val = float(raw)
    except ValueError:
        raise ParameterError(f"{RTOL_ENV}={raw!r} is not a number") from None
    if not val >= 0 or math.isinf(val):
        raise ParameterError(f"{RTOL_ENV} must be a finite nonnegative number")
    return val


#%% CONFIGURATION

@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything needed to reproduce one run.

    Parameters
    ----------
    problem_id : str
        Key of :data:`inclsolve.zoo.REGISTRY`.
    method : str
        One of :data:`inclsolve.solvers.METHODS`.
    eta : float or "auto"
        ``"auto"`` takes the midpoint of the admissible window.
    beta, omega, gamma, rho : float, optional
        Scheme parameters; ``rho=None`` uses the problem constant.
    iterations, seed : int
    check_theorems : bool
        Turn certificate failures into a nonzero exit status.
    override_window : bool
        Accept a step size outside the theorem window (certificates are
        then reported as not applicable).
    output_path : str, optional
        CSV destination.
    theorem : str, optional
        Convergence statement to certify; defaults to the one matching
        ``method`` and the problem.
    """

    problem_id: str
    method: str
    eta: Union[float, str] = "auto"
    beta: float = 1.0
    omega: Optional[float] = None
    gamma: Optional[float] = None
    rho: Optional[float] = None
    iterations: int = 1000
    seed: int = 0
    check_theorems: bool = False
    override_window: bool = False
    output_path: Optional[str] = None
    theorem: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.iterations, bool) or not isinstance(self.iterations, (int, np.integer)):
            raise ParameterError("iterations must be an integer")
        if self.iterations < 0:
            raise ParameterError("iterations must be nonnegative")
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.theorem is not None and self.theorem not in THEOREMS:
            raise ConfigurationError(f"unknown theorem tag {self.theorem!r}")
        if isinstance(self.eta, str) and self.eta != "auto":
            raise ParameterError(f"eta must be a number or 'auto', got {self.eta!r}")

    @classmethod
    def from_dict(cls, data):
        """Build from a mapping, rejecting unknown keys."""
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        """Read a JSON object with the field names as keys."""
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)


#%% RUN LOOP

def run_experiment(config, rtol=None):
    """
    Run one experiment and record its metrics and certificates.

    Parameters
    ----------
    config : ExperimentConfig
    rtol : float, optional
        Certificate tolerance; see :func:`resolve_rtol`.

    Returns
    -------
    Trace
        ``iterations + 1`` rows.  ``meta`` records the resolved parameters,
        the theorem constants, ``d0sq = ||x0 - x*||^2`` and
        ``w0sq = ||w^0||^2``.

    Raises
    ------
    ConfigurationError, ParameterError
        Unknown ids or inadmissible parameters.
    NumericError
        An iterate overflowed.
    """
    rtol = resolve_rtol(rtol)
    problem = get_problem(config.problem_id)
    solver = make_config(config.method, problem, eta=config.eta, beta=config.beta,
                         omega=config.omega, gamma=config.gamma, rho=config.rho,
                         override=config.override_window)
    theorem = config.theorem or default_theorem(config.method, problem)
    checker = CertificateChecker(theorem, problem, solver, rtol=rtol) if theorem else None

    x_init = initial_point(problem, config.seed)
    xs = problem.known_solution
    meta = {"run_id": run_id(config), "problem": problem.name, "method": solver.method,
            "eta": solver.eta, "beta": solver.beta, "omega": solver.omega,
            "gamma": solver.gamma, "rho": solver.rho_assumed, "L": problem.L,
            "iterations": config.iterations, "seed": config.seed, "theorem": theorem,
            "applicable": bool(checker and checker.applicable),
            "reason": checker.reason if checker else "no convergence statement",
            "constants": dict(checker.constants) if checker else {}, "rtol": rtol,
            "d0sq": float(np.sum((x_init - xs) ** 2)) if xs is not None else float("nan")}
    trace = Trace(meta=meta)

    best = math.inf
    for st in iterate(problem, solver, x_init, config.iterations):
        res, fb, dist = state_metrics(st, problem, solver.eta)
        if not (math.isfinite(res) and math.isfinite(fb)):
            raise NumericError(f"non-finite residual at k = {st.k}")
        if st.k == 0:
            meta["w0sq"] = res * res
        best = min(best, res)
        certs = checker.update(st) if checker else []
        pot = checker.last_potential if checker else None
        ok = all(c.passed for c in certs if c.applicable and not c.informational)
        trace.append({"k": st.k, "res_norm": res, "fb_res": fb, "dist": dist,
                      "potential": float("nan") if pot is None else float(pot),
                      "best_res": best, "cert_pass": ok}, certs)
    return trace


def run_id(config):
    """Short deterministic label of a config."""
    eta = config.eta if isinstance(config.eta, str) else f"{float(config.eta):.6g}"
    parts = [config.problem_id, config.method, f"eta={eta}"]
    if config.omega is not None:
        parts.append(f"omega={config.omega:.6g}")
    parts.append(f"seed={config.seed}")
    return ":".join(parts)


def exit_status(trace, check_theorems):
    """``EXIT_CERTIFICATE`` when checking is on and a certificate failed."""
    if check_theorems and trace.failure is not None:
        return EXIT_CERTIFICATE
    return EXIT_OK


def describe_certificate(cert):
    return (f"{cert.theorem} {cert.kind} at k = {cert.k}: lhs = {cert.lhs!r} "
            f"> rhs = {cert.rhs!r} (slack {cert.slack:.3e})")


#%% OUTPUT

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def emit_csv(trace, path):
    """
    Write one row per iteration with round-trip float precision.

    Columns are :data:`CSV_COLUMNS`; ``cert_pass`` is written as 0/1 and
    missing values as ``nan``.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for row in trace.rows:
            wr.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return path


def read_csv(path):
    """Parse a file written by :func:`emit_csv` into column arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return {c: np.array([float(r[c]) for r in rows]) for c in CSV_COLUMNS}


def reference_line(meta):
    """
    Theorem bound on ``||w^k||^2`` in the form ``C / (k + 1)**alpha``.

    Returns
    -------
    (C, alpha) or None
        ``None`` for statements without a sublinear bound of this form.
        Anchored bounds with ``(k + 2)`` denominators are relaxed to
        ``(k + 1)``, which keeps them valid upper bounds.
    """
    th, cst = meta.get("theorem"), meta.get("constants", {})
    d0, w0 = meta.get("d0sq", float("nan")), meta.get("w0sq", float("nan"))
    eta, rho, gamma = meta["eta"], meta["rho"], meta.get("gamma")
    one = {"thm3.1a": "C_rho", "thm3.1b": "M_rho", "thm4.1a": "C0", "thm4.1b": "C0_hat",
           "thm5.1a": "C_rho", "thm5.1b": "C_hat_rho", "thm6.1": "C0"}
    if th in one:
        key = one[th]
        if th == "thm3.1b" and key not in cst:
            key = "C_hat_rho"
        return (cst[key] * d0, 1.0) if key in cst else None
    if th == "thm6.2":
        C = cst.get("C0", cst.get("C0_hat"))
        return None if C is None else (C * d0, 1.0)
    if th == "thm7.1":
        return (4 * d0 + 2 * eta ** 2 * w0) / eta ** 2, 2.0
    if th == "thm7.2":
        e = eta - 2 * rho
        return (4 * d0 + 2 * eta * e * w0) / e ** 2, 2.0
    if th == "thm7.3":
        e = eta - 4 * rho
        return 4 * d0 / (3 * e ** 2) + 2 * (3 * eta - 2 * rho) * w0 / (9 * e), 2.0
    if th in ("thm8.1", "thm8.2") and gamma:
        return 4 * d0 / gamma ** 2, 2.0
    return None


def emit_plotdata(traces, path):
    """
    Long-format CSV ``run_id,k,metric,value`` for external plotting.

    Each trace contributes the metrics ``res_norm``, ``res_sq``,
    ``fb_res`` and ``best_res``, plus ``ref_res_sq`` (see
    :func:`reference_line`) when its theorem provides one.

    Raises
    ------
    ParameterError
        On an empty list.
    """
    traces = list(traces)
    if not traces:
        raise ParameterError("emit_plotdata needs at least one trace")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(PLOT_COLUMNS)
        for i, tr in enumerate(traces):
            rid = tr.meta.get("run_id", f"run{i}")
            ref = reference_line(tr.meta)
            for row in tr.rows:
                k = row["k"]
                vals = [("res_norm", row["res_norm"]), ("res_sq", row["res_norm"] ** 2),
                        ("fb_res", row["fb_res"]), ("best_res", row["best_res"])]
                if ref is not None:
                    vals.append(("ref_res_sq", ref[0] / (k + 1) ** ref[1]))
                for name, v in vals:
                    wr.writerow([rid, str(k), name, _fmt(v)])
    return path


#%% PRESETS

@dataclass(frozen=True)
class Preset:
    """
    Named bundle of runs that exercises one convergence statement.

    ``check`` (optional) receives the list of traces and returns
    ``(ok, message)``; without it, a preset passes when every applicable
    certificate of every run passes.
    """

    name: str
    description: str
    runs: tuple
    check: Optional[Callable] = field(default=None, compare=False)


def _growth_check(traces, factor=math.sqrt(1.25), tol=1e-12):
    r = traces[0].column("res_norm")
    ratios = r[1:] / r[:-1]
    err = float(np.max(np.abs(ratios - factor))) if ratios.size else 0.0
    return err <= tol, f"max |ratio - {factor:.12g}| = {err:.3e}"


def _linear_check(traces):
    tr = traces[0]
    certs = [c for c in tr.certificates if c.kind == "linear_contraction"]
    bad = [c for c in certs if not c.passed]
    if not certs:
        return False, "no linear contraction certificate was produced"
    if bad:
        return False, describe_certificate(bad[0])
    return True, f"{len(certs)} contraction steps certified"


def _runs(problems, method, theorem, iterations=10_000, **kw):
    return tuple(ExperimentConfig(problem_id=p, method=method, theorem=theorem,
                                  iterations=iterations, check_theorems=True, **kw)
                 for p in problems)


def _rfbs_runs(problems):
    return sum((_runs([p], "rfbs", "thm6.1",
                      eta=0.9 * (math.sqrt(2.0) - 1.0) / get_problem(p).L)
                for p in problems), ())


PRESETS = {p.name: p for p in (
    Preset("thm3.1a", "EG on an equation: summability, Fejer, last-iterate bound",
           _runs(["rotation2"], "eg", "thm3.1a", eta=0.5)),
    Preset("thm3.1b", "past-extragradient on an equation",
           _runs(["rotation2"], "peg", "thm3.1b")),
    Preset("rem3.3", "EG linear contraction under strong monotonicity",
           _runs(["strongly-monotone-0.5-2"], "eg", "rem3.3", iterations=200, eta=0.25),
           _linear_check),
    Preset("thm4.1a", "EG on a monotone inclusion: monotone residual and O(1/k) bound",
           _runs(["bilinear-box-4"], "eg", "thm4.1a")),
    Preset("thm4.1b", "past-extragradient on a monotone inclusion",
           _runs(["bilinear-box-4"], "peg", "thm4.1b")),
    Preset("thm5.1a", "forward-backward-forward splitting",
           _runs(["rotation2"], "fbfs", "thm5.1a")),
    Preset("thm5.1b", "past forward-backward-forward splitting",
           _runs(["rotation2"], "past_fbfs", "thm5.1b")),
    Preset("thm6.1", "reflected forward-backward splitting potential and bound",
           _rfbs_runs(["rotation2", "bilinear-box-4"])),
    Preset("thm6.2", "golden-ratio method Lyapunov decrease and summability",
           sum((_runs(["bilinear-box-4"], "gr", "thm6.2", omega=om)
                for om in (1.3, GOLDEN, 2.0, 2.6)), ())),
    Preset("thm7.1", "extra-anchored gradient (monotone)",
           _runs(["bilinear-box-4"], "eag", "thm7.1")),
    Preset("thm7.2", "fast extragradient, Halpern anchoring",
           _runs(["bilinear-box-4", "cohypo-0.05"], "feg", "thm7.2")),
    Preset("thm7.3", "past fast extragradient, Halpern anchoring",
           _runs(["bilinear-box-4", "cohypo-0.05"], "peag", "thm7.3")),
    Preset("thm8.1", "Nesterov-accelerated extragradient",
           _runs(["bilinear-box-4", "cohypo-0.05"], "aeg", "thm8.1")),
    Preset("thm8.2", "Nesterov-accelerated past extragradient",
           _runs(["bilinear-box-4", "cohypo-0.05"], "apeg", "thm8.2")),
    Preset("fw-divergence", "forward method on a rotation: norm grows by sqrt(1.25)",
           (ExperimentConfig(problem_id="rotation2", method="fw", eta=0.5, iterations=200,
                             override_window=True),),
           _growth_check),
)}


def list_presets():
    """``[(name, description), ...]`` in registry order."""
    return [(p.name, p.description) for p in PRESETS.values()]


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}") from None


def verify_preset(name, rtol=None, iterations=None):
    """
    Run every experiment of a preset and judge it.

    Parameters
    ----------
    name : str
    rtol : float, optional
    iterations : int, optional
        Override the preset iteration counts (for quick checks).

    Returns
    -------
    ok : bool
    lines : list of str
        One human-readable line per run.
    traces : list of Trace
    """
    preset = get_preset(name)
    traces, lines, ok = [], [], True
    for cfg in preset.runs:
        if iterations is not None:
            cfg = replace(cfg, iterations=iterations)
        tr = run_experiment(cfg, rtol)
        traces.append(tr)
        if preset.check is None:
            fail = tr.failure
            good = fail is None and tr.meta["applicable"]
            if fail is not None:
                msg = describe_certificate(fail)
            elif not tr.meta["applicable"]:
                msg = f"not applicable: {tr.meta['reason']}"
            else:
                n = sum(1 for c in tr.certificates if not c.informational)
                msg = f"{n} certificates passed"
            ok &= good
            lines.append(f"{'PASS' if good else 'FAIL'} {tr.meta['run_id']}: {msg}")
    if preset.check is not None:
        good, msg = preset.check(traces)
        ok &= good
        lines.append(f"{'PASS' if good else 'FAIL'} {name}: {msg}")
    return ok, lines, traces
