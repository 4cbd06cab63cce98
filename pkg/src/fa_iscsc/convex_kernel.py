"""Small dense barrier interior-point solver.

Problems are posed over a real vector ``x``. Hermitian matrix variables
enter through a real parameterization (real diagonal, then real and
imaginary parts of the strict upper triangle), so a PSD constraint is an
affine map from blocks of ``x`` to a Hermitian matrix.

The method is textbook path following: maximize ``t f0(x) - phi(x)`` by
damped Newton steps with Armijo backtracking, multiplying ``t`` after each
centering until ``m / t`` drops below the tolerance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import Infeasible

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
MAX_ITERATIONS = "MaxIterations"
INFEASIBLE = "Infeasible"


# ---------------------------------------------------------------------------
# Hermitian parameterization
# ---------------------------------------------------------------------------

_BASIS_CACHE: dict[int, np.ndarray] = {}


def hermitian_basis(n: int) -> np.ndarray:
    """Matrix whose column ``a`` is the row-major ``vec`` of basis element ``E_a``.

    Shape ``(n*n, n*n)``; ``X = sum_a p_a E_a`` for ``p = herm_to_real(X)``.
    """
    if n not in _BASIS_CACHE:
        T = np.zeros((n, n, n * n), dtype=complex)
        T[np.arange(n), np.arange(n), np.arange(n)] = 1.0
        iu, ju = np.triu_indices(n, 1)
        npair = len(iu)
        re = n + np.arange(npair)
        im = n + npair + np.arange(npair)
        T[iu, ju, re] = 1.0
        T[ju, iu, re] = 1.0
        T[iu, ju, im] = 1j
        T[ju, iu, im] = -1j
        T = T.reshape(n * n, n * n)
        T.flags.writeable = False
        _BASIS_CACHE[n] = T
    return _BASIS_CACHE[n]


def herm_to_real(X) -> np.ndarray:
    X = np.asarray(X)
    n = X.shape[0]
    iu, ju = np.triu_indices(n, 1)
    return np.concatenate([np.real(np.diag(X)), np.real(X[iu, ju]), np.imag(X[iu, ju])])


def real_to_herm(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    iu, ju = np.triu_indices(n, 1)
    npair = len(iu)
    X = np.zeros((n, n), dtype=complex)
    X[np.arange(n), np.arange(n)] = p[:n]
    off = p[n:n + npair] + 1j * p[n + npair:n + 2 * npair]
    X[iu, ju] = off
    X[ju, iu] = off.conj()
    return X


def hermitian_coefficients(h, n: Optional[int] = None) -> np.ndarray:
    """Real vector ``c`` with ``h^H X h = c . herm_to_real(X)``.

    ``h`` may carry leading batch axes.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[-1] if n is None else n
    outer = np.einsum("...i,...j->...ij", h.conj(), h)     # h_i^* h_j
    iu, ju = np.triu_indices(n, 1)
    diag = np.real(np.diagonal(outer, axis1=-2, axis2=-1))
    # X_ij h_i^* h_j + X_ji h_j^* h_i with X_ij = r + j s
    re = 2 * np.real(outer[..., iu, ju])
    im = -2 * np.imag(outer[..., iu, ju])
    return np.concatenate([diag, re, im], axis=-1)


def trace_coefficients(n: int) -> np.ndarray:
    """Real vector ``c`` with ``Tr(X) = c . herm_to_real(X)``."""
    c = np.zeros(n * n)
    c[:n] = 1.0
    return c


def trace_product_hessian(A, B, basis) -> np.ndarray:
    """``H[a, b] = Re Tr(A E_a B E_b)`` for the basis columns of ``basis``."""
    m = A.shape[0]
    K = np.einsum("ij,kl->jkli", A, B).reshape(m * m, m * m)
    return np.real(basis.T @ (K @ basis))


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsdTerm:
    """``coeff * sum_j basis[:, j] * x[idx[j]]`` reshaped to ``(m, m)``."""

    idx: np.ndarray
    basis: np.ndarray
    coeff: float = 1.0


@dataclass(frozen=True)
class PsdConstraint:
    """Affine Hermitian matrix map required to be positive semidefinite."""

    size: int
    terms: tuple
    offset: Optional[np.ndarray] = None
    name: str = "psd"

    def matrix(self, x) -> np.ndarray:
        m = self.size
        F = np.zeros((m, m), dtype=complex) if self.offset is None else np.array(self.offset, dtype=complex)
        for term in self.terms:
            F += term.coeff * (term.basis @ x[term.idx]).reshape(m, m)
        return (F + F.conj().T) / 2


@dataclass(frozen=True)
class LowRank:
    """Hessian ``sum_i weights[i] * outer(factors[i], factors[i])``."""

    factors: np.ndarray
    weights: np.ndarray

    def dense(self) -> np.ndarray:
        f = np.asarray(self.factors)
        return (f.T * self.weights) @ f


@dataclass(frozen=True)
class ScalarConstraint:
    """Smooth convex constraint ``value(x[idx]) <= 0``.

    ``derivs`` returns the gradient and Hessian with respect to ``x[idx]``;
    the Hessian may be a dense array, a :class:`LowRank` factorization or
    ``None`` for an affine constraint. ``value`` may return ``inf`` outside
    its domain.
    """

    idx: np.ndarray
    value: Callable[[np.ndarray], float]
    derivs: Callable[[np.ndarray], tuple]
    name: str = "scalar"


def affine_constraint(idx, a, b, name="affine") -> ScalarConstraint:
    """``a . x[idx] + b <= 0``."""
    a = np.asarray(a, dtype=float)
    return ScalarConstraint(np.asarray(idx), lambda xs: float(a @ xs + b),
                            lambda xs: (a, None), name)


def linear_objective(c) -> Callable:
    c = np.asarray(c, dtype=float)
    return lambda x: (float(c @ x), c, None)


@dataclass
class ConicProblem:
    """Maximize a concave ``objective`` subject to PSD, scalar and box constraints.

    ``objective(x)`` returns ``(value, gradient, hessian_or_None)``. Box
    entries with ``lower == upper`` are treated as fixed variables.
    """

    n: int
    objective: Callable
    x0: np.ndarray
    psd: Sequence[PsdConstraint] = ()
    scalar: Sequence[ScalarConstraint] = ()
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).copy()
        if self.lower is None:
            self.lower = np.full(self.n, -np.inf)
        if self.upper is None:
            self.upper = np.full(self.n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.x0.shape != (self.n,):
            raise ValueError("x0 has the wrong length")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def fixed(self) -> np.ndarray:
        return self.lower == self.upper

    def slacks(self, x) -> dict[str, float]:
        """Smallest slack of every constraint family (negative = violated)."""
        out = {}
        free = ~self.fixed
        lo, hi = self.lower[free], self.upper[free]
        xf = x[free]
        box = np.concatenate([(xf - lo)[np.isfinite(lo)], (hi - xf)[np.isfinite(hi)]])
        out["box"] = float(box.min()) if box.size else np.inf
        out["psd"] = min((float(np.linalg.eigvalsh(c.matrix(x)).min()) for c in self.psd),
                         default=np.inf)
        vals = [c.value(x[c.idx]) for c in self.scalar]
        out["scalar"] = float(-max(vals)) if vals else np.inf
        return out


@dataclass
class SolveReport:
    x: np.ndarray
    objective: float
    status: str
    outer_iterations: int
    newton_iterations: int
    kkt_residual: float
    gap: float
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    t0: float = 1.0
    mu: float = 10.0
    max_newton: int = 200
    armijo: float = 1e-4
    shrink: float = 0.5
    newton_tol: float = 1e-10

    @classmethod
    def from_config(cls, cfg, **overrides) -> "SolverSettings":
        base = dict(tol=cfg.solver_tol, mu=cfg.solver_mu, max_newton=cfg.solver_max_newton,
                    armijo=cfg.solver_armijo, shrink=cfg.solver_shrink)
        base.update(overrides)
        return cls(**base)


# ---------------------------------------------------------------------------
# Barrier machinery
# ---------------------------------------------------------------------------

class _Barrier:
    def __init__(self, problem: ConicProblem):
        self.p = problem
        free = ~problem.fixed
        self.lo_idx = np.flatnonzero(free & np.isfinite(problem.lower))
        self.hi_idx = np.flatnonzero(free & np.isfinite(problem.upper))
        self.m = (len(self.lo_idx) + len(self.hi_idx) + len(problem.scalar)
                  + sum(c.size for c in problem.psd))
        self.psd_index = [[_as_index(t.idx) for t in c.terms] for c in problem.psd]
        self.scalar_index = [_as_index(c.idx) for c in problem.scalar]

    def value(self, x) -> float:
        p = self.p
        dl = x[self.lo_idx] - p.lower[self.lo_idx]
        du = p.upper[self.hi_idx] - x[self.hi_idx]
        if np.any(dl <= 0) or np.any(du <= 0):
            return np.inf
        val = -np.sum(np.log(dl)) - np.sum(np.log(du))
        for c in p.psd:
            try:
                L = np.linalg.cholesky(c.matrix(x))
            except np.linalg.LinAlgError:
                return np.inf
            val -= 2 * np.sum(np.log(np.real(np.diag(L))))
        for c in p.scalar:
            v = c.value(x[c.idx])
            if not v < 0:
                return np.inf
            val -= np.log(-v)
        return float(val)

    def derivs(self, x):
        p = self.p
        n = p.n
        g = np.zeros(n)
        H = np.zeros((n, n))
        dl = x[self.lo_idx] - p.lower[self.lo_idx]
        du = p.upper[self.hi_idx] - x[self.hi_idx]
        g[self.lo_idx] -= 1 / dl
        g[self.hi_idx] += 1 / du
        H[self.lo_idx, self.lo_idx] += 1 / dl ** 2
        H[self.hi_idx, self.hi_idx] += 1 / du ** 2
        for c, index in zip(p.psd, self.psd_index):
            F = c.matrix(x)
            Finv = np.linalg.inv(F)
            Finv = (Finv + Finv.conj().T) / 2
            m = c.size
            K = np.einsum("ij,kl->jkli", Finv, Finv).reshape(m * m, m * m)
            vinv = Finv.T.ravel()
            cache: dict[int, np.ndarray] = {}
            for term, ia in zip(c.terms, index):
                g[ia] -= term.coeff * np.real(vinv @ term.basis)
                key = id(term.basis)
                if key not in cache:
                    cache[key] = K @ term.basis
            quad_cache: dict[tuple, np.ndarray] = {}
            for ta, ia in zip(c.terms, index):
                for tb, ib in zip(c.terms, index):
                    key = (id(ta.basis), id(tb.basis))
                    if key not in quad_cache:
                        quad_cache[key] = np.real(ta.basis.T @ cache[id(tb.basis)])
                    H[_block(ia, ib)] += ta.coeff * tb.coeff * quad_cache[key]
        # rank-one pieces are gathered and added with a single product
        cols, weights = [], []
        for c, index in zip(p.scalar, self.scalar_index):
            xs = x[c.idx]
            v = c.value(xs)
            gs, hs = c.derivs(xs)
            g[index] += gs / (-v)
            col = np.zeros(n)
            col[index] = gs
            cols.append(col)
            weights.append(1 / v ** 2)
            if isinstance(hs, LowRank):
                for f, w in zip(hs.factors, hs.weights):
                    col = np.zeros(n)
                    col[index] = f
                    cols.append(col)
                    weights.append(w / (-v))
            elif hs is not None:
                H[_block(index, index)] += hs / (-v)
        if cols:
            U = np.array(cols)
            H += (U.T * np.array(weights)) @ U
        return g, H


def _as_index(idx):
    """Contiguous index arrays become slices, which index much faster."""
    idx = np.asarray(idx)
    if idx.size and np.all(np.diff(idx) == 1):
        return slice(int(idx[0]), int(idx[-1]) + 1)
    return idx


def _block(ia, ib):
    if isinstance(ia, slice) and isinstance(ib, slice):
        return ia, ib
    ra = np.arange(ia.start, ia.stop) if isinstance(ia, slice) else ia
    rb = np.arange(ib.start, ib.stop) if isinstance(ib, slice) else ib
    return np.ix_(ra, rb)


def _newton_direction(H, g):
    try:
        cf = sla.cho_factor(H, check_finite=False)
        d = sla.cho_solve(cf, -g, check_finite=False)
        if np.all(np.isfinite(d)):
            return d
    except (np.linalg.LinAlgError, sla.LinAlgError):
        pass
    w, V = np.linalg.eigh((H + H.T) / 2)
    floor = max(w.max(), 1.0) * 1e-14
    return -(V @ ((V.T @ g) / np.maximum(w, floor)))


def _run_barrier(problem: ConicProblem, x, settings: SolverSettings,
                 stop: Optional[Callable[[np.ndarray], bool]] = None) -> SolveReport:
    bar = _Barrier(problem)
    free = np.flatnonzero(~problem.fixed)
    m = bar.m
    t = settings.t0
    newton = 0
    outer = 0
    history = []
    status = None
    lam2 = 0.0

    def merit(xv, tv):
        b = bar.value(xv)
        if not np.isfinite(b):
            return np.inf
        f0 = problem.objective(xv)[0]
        return -tv * f0 + b

    while True:
        outer += 1
        while True:
            f0, g0, H0 = problem.objective(x)
            gb, Hb = bar.derivs(x)
            g = -t * g0 + gb
            H = Hb if H0 is None else Hb - t * H0
            if len(free) == problem.n:
                gf, Hf = g, H
            else:
                gf = g[free]
                Hf = H[np.ix_(free, free)]
            d = _newton_direction(Hf, gf)
            lam2 = float(-gf @ d)
            if lam2 / 2 <= settings.newton_tol:
                break
            if newton >= settings.max_newton:
                status = MAX_ITERATIONS
                break
            current = -t * f0 + bar.value(x)
            # decrease below this is indistinguishable from rounding noise
            floor = 64 * np.finfo(float).eps * max(abs(current), 1.0)
            if lam2 / 2 <= floor:
                break
            slope = float(gf @ d)
            s = 1.0
            accepted = False
            while s > 1e-16:
                xn = x.copy()
                xn[free] += s * d
                trial = merit(xn, t)
                if trial <= current + settings.armijo * s * slope:
                    accepted = True
                    break
                s *= settings.shrink
            newton += 1
            if not accepted:
                break
            x = xn
            if current - trial <= floor:
                break
            if stop is not None and stop(x):
                return SolveReport(x, problem.objective(x)[0], OPTIMAL, outer, newton,
                                   np.nan, m / t, history)
        history.append(float(problem.objective(x)[0]))
        gap = m / t
        if status == MAX_ITERATIONS:
            break
        if gap <= settings.tol:
            status = OPTIMAL
            break
        t *= settings.mu
    kkt = (m + max(lam2, 0.0)) / t
    return SolveReport(x, float(problem.objective(x)[0]), status, outer, newton,
                       kkt, m / t, history)


def _strictly_feasible(problem: ConicProblem, x, margin: float) -> bool:
    free = ~problem.fixed
    width = (problem.upper - problem.lower)[free]
    lo, hi, xf = problem.lower[free], problem.upper[free], x[free]
    box_margin = np.minimum(margin, width / 4)
    if np.any((xf - lo) < box_margin) or np.any((hi - xf) < box_margin):
        return False
    slack = problem.slacks(x)
    return slack["psd"] >= margin and slack["scalar"] >= margin


def _max_violation(problem: ConicProblem, x) -> float:
    slack = problem.slacks(x)
    return -min(slack.values())


def feasibility_init(problem: ConicProblem, settings: Optional[SolverSettings] = None,
                     margin: float = 1e-8) -> np.ndarray:
    """Return a point with every constraint slack at least ``margin``.

    Starts from ``problem.x0``; if that is not strictly feasible, solves the
    phase-I problem ``min s`` subject to every constraint relaxed by ``s``,
    stopping as soon as ``s <= -margin``.

    Raises
    ------
    Infeasible
        When the smallest achievable violation is not negative.
    """
    settings = settings or SolverSettings()
    x = problem.x0.copy()
    fixed = problem.fixed
    x[fixed] = problem.lower[fixed]
    if _strictly_feasible(problem, x, margin):
        return x
    viol = _max_violation(problem, x)
    if not np.isfinite(viol):
        raise Infeasible("heuristic start lies outside a constraint's domain")

    n = problem.n
    s_idx = np.array([n])
    psd = []
    for c in problem.psd:
        eye = np.eye(c.size, dtype=complex).reshape(-1, 1)
        psd.append(PsdConstraint(c.size, tuple(c.terms) + (PsdTerm(s_idx, eye, 1.0),),
                                 c.offset, c.name))
    scalar = []
    for c in problem.scalar:
        scalar.append(_relaxed_scalar(c, n))
    free = ~fixed
    for i in np.flatnonzero(free & np.isfinite(problem.lower)):
        scalar.append(affine_constraint([i, n], [-1.0, -1.0], problem.lower[i], "lower"))
    for i in np.flatnonzero(free & np.isfinite(problem.upper)):
        scalar.append(affine_constraint([i, n], [1.0, -1.0], -problem.upper[i], "upper"))
    lower = np.concatenate([np.where(fixed, problem.lower, -np.inf), [-1.0 - abs(viol)]])
    upper = np.concatenate([np.where(fixed, problem.upper, np.inf), [np.inf]])
    s0 = viol + max(1.0, abs(viol))
    c = np.zeros(n + 1)
    c[n] = -1.0
    aug = ConicProblem(n + 1, linear_objective(c), np.concatenate([x, [s0]]),
                       psd, scalar, lower, upper)

    def done(xa):
        return xa[n] <= -margin and _strictly_feasible(problem, xa[:n], margin)

    m_aug = _Barrier(aug).m
    phase1 = SolverSettings(**{**settings.__dict__,
                               "t0": m_aug / (s0 - lower[n])})
    report = _run_barrier(aug, aug.x0, phase1, stop=done)
    if done(report.x):
        return report.x[:n]
    raise Infeasible(f"smallest achievable constraint violation is {report.x[n]:.3e}")


def _relaxed_scalar(c: ScalarConstraint, s_pos: int) -> ScalarConstraint:
    idx = np.concatenate([c.idx, [s_pos]])

    def value(xs):
        return c.value(xs[:-1]) - xs[-1]

    def derivs(xs):
        gs, hs = c.derivs(xs[:-1])
        g = np.concatenate([gs, [-1.0]])
        if hs is None:
            return g, None
        if isinstance(hs, LowRank):
            f = np.asarray(hs.factors)
            return g, LowRank(np.hstack([f, np.zeros((f.shape[0], 1))]), hs.weights)
        k = len(gs)
        H = np.zeros((k + 1, k + 1))
        H[:k, :k] = hs
        return g, H

    return ScalarConstraint(idx, value, derivs, c.name)


def solve(problem: ConicProblem, tol: Optional[float] = None,
          settings: Optional[SolverSettings] = None) -> SolveReport:
    """Barrier path-following solve.

    Runs :func:`feasibility_init` first when ``x0`` is not strictly inside
    every constraint.
    The report status is ``Optimal`` once ``m / t <= tol`` and
    ``MaxIterations`` when the Newton budget is exhausted; the returned point
    is strictly feasible either way.

    Raises
    ------
    Infeasible
        When no strictly feasible point exists.
    """
    settings = settings or SolverSettings()
    if tol is not None:
        settings = SolverSettings(**{**settings.__dict__, "tol": tol})
    x = problem.x0.copy()
    x[problem.fixed] = problem.lower[problem.fixed]
    if not np.isfinite(_Barrier(problem).value(x)):
        x = feasibility_init(problem, settings)
    report = _run_barrier(problem, x, settings)
    if report.status != OPTIMAL:
        log.debug("barrier solve stopped with %s after %d Newton steps",
                  report.status, report.newton_iterations)
    return report


def inverse_trace(n: int):
    """Value and derivatives of ``Tr(X^{-1})`` in the real parameterization.

    Returns ``(value, derivs)`` callables; ``value`` is ``inf`` when ``X``
    is not positive definite.
    """
    T = hermitian_basis(n)

    def value(p):
        X = real_to_herm(p, n)
        try:
            L = np.linalg.cholesky(X)
        except np.linalg.LinAlgError:
            return np.inf
        Linv = sla.solve_triangular(L, np.eye(n), lower=True)
        return float(np.real(np.sum(np.abs(Linv) ** 2)))

    def derivs(p):
        X = real_to_herm(p, n)
        Xi = np.linalg.inv(X)
        Xi = (Xi + Xi.conj().T) / 2
        Xi2 = Xi @ Xi
        grad = -np.real(Xi2.T.ravel() @ T)
        H = trace_product_hessian(Xi2, Xi, T)
        return grad, H + H.T

    return value, derivs


def inverse_trace_constraint(idx, n: int, bound: float, name="inverse_trace") -> ScalarConstraint:
    """``Tr(X^{-1}) <= bound`` for the Hermitian block stored at ``x[idx]``."""
    value, derivs = inverse_trace(n)
    return ScalarConstraint(np.asarray(idx), lambda p: value(p) - bound, derivs, name)
