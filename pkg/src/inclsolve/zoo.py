"""
Synthetic inclusion instances with analytic constants and known solutions.

Every constructor returns a :class:`~inclsolve.operators.Problem` whose
Lipschitz, strong monotonicity and co-hypomonotonicity constants are exact
(not estimated), so that convergence certificates can be checked against
them.  The registry at the bottom names the instances used by the harness.
"""

import itertools

import numpy as np

from inclsolve.errors import ConfigurationError, ParameterError
from inclsolve.operators import (Problem, SetOp, SingleOp, ball_normal_cone,
                                 box_normal_cone, l1_subdifferential,
                                 simplex_normal_cone, zero_operator)

_MAX_ENUM_DIM = 12


#%% CONSTRAINTS

def make_constraint(spec, dim):
    """
    Build the set-valued part from a short description.

    Parameters
    ----------
    spec : None, str, tuple or SetOp
        ``None``/``"none"``, ``"simplex"``, ``("box", l, u)``,
        ``("ball", r)``, ``("l1", lam)``, or a ready :class:`SetOp`.
    dim : int

    Returns
    -------
    T : SetOp
    tag : tuple
        Normalized description, e.g. ``("box", -1.0, 1.0)``.
    """
    if isinstance(spec, SetOp):
        return spec, ("custom",)
    if spec is None or spec == "none":
        return zero_operator(), ("none",)
    if spec == "simplex":
        return simplex_normal_cone(), ("simplex",)
    if isinstance(spec, (tuple, list)) and spec:
        kind = spec[0]
        if kind == "box" and len(spec) == 3:
            lo = np.broadcast_to(np.asarray(spec[1], dtype=float), (dim,)).copy()
            hi = np.broadcast_to(np.asarray(spec[2], dtype=float), (dim,)).copy()
            return box_normal_cone(lo, hi), ("box", lo, hi)
        if kind == "ball" and len(spec) == 2:
            return ball_normal_cone(float(spec[1])), ("ball", float(spec[1]))
        if kind == "l1" and len(spec) == 2:
            return l1_subdifferential(float(spec[1])), ("l1", float(spec[1]))
    raise ParameterError(f"unrecognized constraint {spec!r}")


def _linear_solution(A, tag):
    """Zero of ``x -> A x + T x`` for the constraint ``tag``."""
    n = A.shape[0]
    kind = tag[0]
    if kind in ("none", "ball", "l1"):
        return np.zeros(n)
    if kind == "box":
        lo, hi = tag[1], tag[2]
        if np.all(lo <= 0) and np.all(hi >= 0):
            return np.zeros(n)
        return _box_active_set(A, lo, hi)
    if kind == "simplex":
        return _simplex_support(A)
    raise ConfigurationError(f"no solution rule for constraint {kind!r}")


def _simplex_support(A):
    # A x + lam 1 - nu = 0, nu >= 0, nu_S = 0, x_S > 0, sum x = 1
    n = A.shape[0]
    if n > _MAX_ENUM_DIM:
        raise ConfigurationError("support enumeration limited to small dimensions")
    for size in range(1, n + 1):
        for S in itertools.combinations(range(n), size):
            S = list(S)
            K = np.zeros((size + 1, size + 1))
            K[:size, :size] = A[np.ix_(S, S)]
            K[:size, size] = 1.0
            K[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = np.zeros(n)
            x[S] = sol[:size]
            nu = A @ x + sol[size]
            if np.all(sol[:size] > 0) and np.all(nu >= -1e-12):
                return x
    raise ConfigurationError("no solution found on the simplex")


def _box_active_set(A, lo, hi):
    n = A.shape[0]
    if n > 8:
        raise ConfigurationError("active-set enumeration limited to dim <= 8")
    for pattern in itertools.product((0, -1, 1), repeat=n):
        pattern = np.array(pattern)
        free = pattern == 0
        x = np.where(pattern < 0, lo, hi).astype(float)
        if free.any():
            try:
                x[free] = np.linalg.solve(A[np.ix_(free, free)],
                                          -A[np.ix_(free, ~free)] @ x[~free])
            except np.linalg.LinAlgError:
                continue
        g = A @ x
        ok = (np.all(x[free] >= lo[free]) and np.all(x[free] <= hi[free])
              and np.all(g[pattern < 0] >= -1e-12) and np.all(g[pattern > 0] <= 1e-12))
        if ok:
            return x
    raise ConfigurationError("no solution found on the box")


def _linear_op(A, L, mono_class, param):
    A = np.array(A, dtype=float)
    A.setflags(write=False)
    return SingleOp(eval=lambda x: A @ x, lipschitz_L=L, mono_class=mono_class,
                    class_param=param)


#%% FAMILIES

def make_affine_skew(a, b, dim=2, constraint=None):
    r"""
    Block skew-shifted linear operator.

    ``F(x) = A x`` where ``A`` is block diagonal with 2x2 blocks
    ``[[a, b], [-b, a]]``.  Then ``<Ax - Ay, x - y> = a ||x - y||^2`` and
    ``||Ax - Ay|| = sqrt(a^2 + b^2) ||x - y||``, which gives the constants

    * ``L = sqrt(a^2 + b^2)``,
    * ``mu = a`` when ``a > 0``,
    * ``rho = max(0, -a) / (a^2 + b^2)``.

    Parameters
    ----------
    a, b : float
        Not both zero.
    dim : int
        Even dimension.
    constraint : see :func:`make_constraint`

    Returns
    -------
    Problem
    """
    if dim <= 0 or dim % 2:
        raise ParameterError("affine skew problems need an even positive dimension")
    if a == 0 and b == 0:
        raise ParameterError("(a, b) must not both vanish")
    A = np.kron(np.eye(dim // 2), np.array([[a, b], [-b, a]], dtype=float))
    L = float(np.hypot(a, b))
    mu = max(a, 0.0)
    rho = max(0.0, -a) / (a * a + b * b)
    if a > 0:
        F = _linear_op(A, L, "mu_strong", mu)
    elif a == 0:
        F = _linear_op(A, L, "monotone", 0.0)
    else:
        F = _linear_op(A, L, "rho_cohypo", rho)
    T, tag = make_constraint(constraint, dim)
    name = "rotation" if (a == 0 and b == 1) else f"affine-skew({a:g},{b:g})"
    return Problem(F=F, T=T, dim=dim, known_solution=_linear_solution(A, tag),
                   L=L, mu=mu, rho=rho, name=name,
                   meta={"family": "affine_skew", "matrix": A, "constraint": tag})


def make_rotation(dim=2, constraint=None):
    """The rotation field ``(x2, -x1)`` per block: monotone, not cocoercive."""
    return make_affine_skew(0.0, 1.0, dim, constraint)


def make_bilinear_saddle(M, constraint=None):
    r"""
    Saddle operator of :math:`\mathcal{H}(u, v) = u^\top M v`.

    ``F(u, v) = (M v, -M^T u)`` is monotone with ``L = sigma_max(M)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ParameterError("M must be finite")
    m, n = M.shape
    A = np.block([[np.zeros((m, m)), M], [-M.T, np.zeros((n, n))]])
    L = float(np.linalg.norm(M, 2))
    T, tag = make_constraint(constraint, m + n)
    return Problem(F=_linear_op(A, L, "monotone", 0.0), T=T, dim=m + n,
                   known_solution=_linear_solution(A, tag), L=L, name="bilinear",
                   meta={"family": "bilinear_saddle", "matrix": A, "M": M,
                         "constraint": tag})


def make_strongly_monotone(mu, L, dim=2, skew=False):
    r"""
    Linear strongly monotone operator.

    Without skew part, ``F(x) = D x`` with ``D`` diagonal and eigenvalues
    spread evenly over ``[mu, L]``.  With ``skew=True`` (even ``dim``),
    ``F = mu I + s J`` with ``s = sqrt(L^2 - mu^2)`` and ``J`` the block
    rotation, so the symmetric part is ``mu I`` and the norm is ``L``.
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    if mu > L:
        raise ParameterError("need mu <= L")
    if skew:
        if dim % 2:
            raise ParameterError("skew part needs an even dimension")
        s = np.sqrt(L * L - mu * mu)
        A = np.kron(np.eye(dim // 2), np.array([[mu, s], [-s, mu]]))
    else:
        A = np.diag(np.linspace(mu, L, dim))
    return Problem(F=_linear_op(A, float(L), "mu_strong", float(mu)), T=zero_operator(),
                   dim=dim, known_solution=np.zeros(dim), L=float(L), mu=float(mu),
                   name=f"strongly-monotone({mu:g},{L:g})",
                   meta={"family": "strongly_monotone", "matrix": A,
                         "constraint": ("none",)})


def make_cohypo_2d(rho_target, L_target):
    r"""
    Planar co-hypomonotone (non-monotone) operator with exact constants.

    Uses :func:`make_affine_skew` with ``a = -rho L^2`` and
    ``b = sqrt(L^2 - a^2)``, so that ``-a / (a^2 + b^2) = rho`` and
    ``sqrt(a^2 + b^2) = L``.  Feasible only when ``rho L <= 1``.
    """
    if not (rho_target >= 0 and L_target > 0):
        raise ParameterError("need rho >= 0 and L > 0")
    if rho_target * L_target > 1:
        raise ParameterError("infeasible pair: rho * L must not exceed 1")
    a = -rho_target * L_target ** 2
    b = np.sqrt(max(L_target ** 2 - a * a, 0.0))
    if b == 0 and a == 0:
        raise ParameterError("degenerate operator")
    prob = make_affine_skew(a if a != 0 else 0.0, b, 2)
    # keep the requested constants verbatim
    mono = "rho_cohypo" if rho_target > 0 else "monotone"
    F = SingleOp(eval=prob.F.eval, lipschitz_L=float(L_target), mono_class=mono,
                 class_param=float(rho_target))
    return Problem(F=F, T=prob.T, dim=2, known_solution=prob.known_solution,
                   L=float(L_target), rho=float(rho_target),
                   name=f"cohypo({rho_target:g},{L_target:g})",
                   meta={**prob.meta, "family": "cohypo_2d"})


#%% REGISTRY

def _log_spaced_bilinear(n, smin, seed):
    # orthogonal factors from a seeded QR, singular values log-spaced in [smin, 1]
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return U @ np.diag(np.logspace(0.0, np.log10(smin), n)) @ V.T


_BILINEAR_4 = np.array([[1.0, 0.5], [-0.3, 0.8]])

REGISTRY = {
    "rotation2": ("2-D rotation field, T = 0",
                  lambda: _named(make_rotation(2), "rotation2")),
    "identity2": ("identity operator in the plane",
                  lambda: _named(make_affine_skew(1.0, 0.0, 2), "identity2")),
    "skew-cohypo-0.1": ("affine skew a=-0.1, b=1 (rho = 0.1/1.01)",
                        lambda: _named(make_affine_skew(-0.1, 1.0, 2), "skew-cohypo-0.1")),
    "cohypo-0.05": ("co-hypomonotone plane operator, rho = 0.05, L = 1",
                    lambda: _named(make_cohypo_2d(0.05, 1.0), "cohypo-0.05")),
    "cohypo-0.01": ("co-hypomonotone plane operator, rho = 0.01, L = 1",
                    lambda: _named(make_cohypo_2d(0.01, 1.0), "cohypo-0.01")),
    "bilinear-box-4": ("bilinear saddle, 2x2 M, box [-1, 1]^4",
                       lambda: _named(make_bilinear_saddle(_BILINEAR_4, ("box", -1.0, 1.0)),
                                      "bilinear-box-4")),
    "bilinear-box-10": ("bilinear saddle, 5x5 M with singular values in [1e-3, 1], box [-1, 1]^10",
                        lambda: _named(make_bilinear_saddle(_log_spaced_bilinear(5, 1e-3, 7),
                                                            ("box", -1.0, 1.0)),
                                       "bilinear-box-10")),
    "skew-simplex-4": ("affine skew a=0.2, b=1 on the unit simplex in R^4",
                       lambda: _named(make_affine_skew(0.2, 1.0, 4, "simplex"), "skew-simplex-4")),
    "rotation-l1-4": ("rotation blocks plus 0.1 ||x||_1 in R^4",
                      lambda: _named(make_rotation(4, ("l1", 0.1)), "rotation-l1-4")),
    "rotation-ball-4": ("rotation blocks on the unit ball in R^4",
                        lambda: _named(make_rotation(4, ("ball", 1.0)), "rotation-ball-4")),
    "strongly-monotone-0.5-2": ("diagonal operator with spectrum {0.5, 2}",
                                lambda: _named(make_strongly_monotone(0.5, 2.0, 2),
                                               "strongly-monotone-0.5-2")),
    "strongly-monotone-1-sqrt2": ("identity plus unit rotation, mu = 1, L = sqrt(2)",
                                  lambda: _named(make_strongly_monotone(1.0, np.sqrt(2.0), 2, skew=True),
                                                 "strongly-monotone-1-sqrt2")),
}


def _named(problem, name):
    return Problem(F=problem.F, T=problem.T, dim=problem.dim,
                   known_solution=problem.known_solution, L=problem.L, mu=problem.mu,
                   rho=problem.rho, name=name, meta=problem.meta)


def list_problems():
    """Return ``[(id, description), ...]`` sorted by id."""
    return sorted((k, v[0]) for k, v in REGISTRY.items())


def get_problem(problem_id):
    """Instantiate a registered problem by id."""
    try:
        return REGISTRY[problem_id][1]()
    except KeyError:
        raise ConfigurationError(f"unknown problem id {problem_id!r}") from None


def initial_point(problem, seed=0):
    """
    Seeded starting point inside ``dom T``.

    A standard Gaussian draw (scaled by 1.5 so that box constraints can be
    active at the start) projected onto the domain of ``T``.
    """
    rng = np.random.default_rng(seed)
    return problem.project_domain(1.5 * rng.standard_normal(problem.dim))
