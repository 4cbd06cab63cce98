"""Fluid-antenna placement by quadratic-surrogate ascent.

With the beamformers fixed, every user/target secrecy term is a smooth
function of the antenna coordinates through the steering phases. Each
epoch replaces it by its first-order expansion minus an isotropic
curvature penalty and solves the resulting convex max-min problem over the
movable boxes. The curvature starts at 1 and doubles until the step really
improves the worst-case secrecy.

The surrogate measures each coordinate in units of its box side and the
secrecy in units of the largest pair magnitude at the start of the block,
so a unit curvature allows a first step across the whole box whatever the
region size or link budget; backtracking then settles the curvature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import convex_kernel as ck
from .config import SystemConfig
from .errors import CurvatureOverflow
from .model import ArrayGeometry, BeamformingSolution, ChannelSet, Scenario, build_channels

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


def _direction_cosines(angles):
    theta, phi = angles[..., 0], angles[..., 1]
    return np.stack([np.cos(theta) * np.sin(phi), np.cos(phi)], axis=-1)


def _quad_and_grad(h, dh, M):
    """``h^H M h`` and its gradient over the ``(N, 2)`` coordinates.

    Only element ``i`` of ``h`` depends on antenna ``i``, so
    ``d/du_i = 2 Re(conj(dh_i) (M h)_i)``.
    """
    Mh = np.einsum("...ij,...j->...i", M, h)
    val = np.real(np.einsum("...i,...i->...", h.conj(), Mh))
    grad = 2 * np.real(dh.conj() * Mh[..., None])
    return val, grad


def secrecy_values_and_gradient(u, channels: ChannelSet, sol: BeamformingSolution, rho,
                                cfg: SystemConfig):
    """Unclamped secrecy ``S_{k,l}`` and its gradient in meters.

    Parameters
    ----------
    u : array_like, shape (N_t, 2) or (2 N_t,)
        Antenna positions; ``channels`` must have been built at ``u``.

    Returns
    -------
    values : ndarray, shape (K, L)
    grads : ndarray, shape (K, L, 2 N_t)
        Ordered like ``u.ravel()``: ``x_0, z_0, x_1, z_1, ...``.
    """
    n_t = channels.h_users.shape[1]
    kappa = 2 * np.pi / cfg.wavelength
    noise = cfg.noise_comm
    W, R = sol.W, sol.R_x
    K = W.shape[0]

    hu = channels.h_users                                            # (K, N)
    cu = _direction_cosines(channels.user_angles)                    # (K, 2)
    dhu = 1j * kappa * hu[..., None] * cu[:, None, :]                # (K, N, 2)

    u = np.asarray(u, dtype=float).reshape(n_t, 2)
    cs = _direction_cosines(channels.scatter_angles)                 # (L, S, 2)
    phase = np.einsum("nc,lsc->lsn", u, cs) * kappa
    terms = channels.target_gains[..., None] * np.exp(1j * phase)    # (L, S, N)
    ht = channels.h_targets                                          # (L, N)
    dht = np.einsum("lsn,lsc->lnc", 1j * kappa * terms, cs)          # (L, N, 2)

    tot_u, g_tot_u = _quad_and_grad(hu, dhu, R[None])
    own_u, g_own_u = _quad_and_grad(hu, dhu, W)
    tot_t, g_tot_t = _quad_and_grad(ht, dht, R[None])
    # stream k seen at target l
    own_t, g_own_t = _quad_and_grad(ht[:, None], dht[:, None], W[None])   # (L, K), (L, K, N, 2)

    A = tot_u + noise
    B = A - own_u
    D = tot_t + noise
    C = D[:, None] - own_t                                           # (L, K)
    gA = g_tot_u
    gB = g_tot_u - g_own_u
    gD = g_tot_t
    gC = g_tot_t[:, None] - g_own_t

    weight = cfg.iota / np.asarray(rho, dtype=float) / LN2
    user_part = np.log(A) - np.log(B)                                # (K,)
    target_part = np.log(C) - np.log(D)[:, None]                     # (L, K)
    values = weight[:, None] * (user_part[:, None] + target_part.T)

    g_user = gA / A[:, None, None] - gB / B[:, None, None]           # (K, N, 2)
    g_target = gC / C[..., None, None] - gD[:, None] / D[:, None, None, None]   # (L, K, N, 2)
    grads = weight[:, None, None, None] * (g_user[:, None] + g_target.transpose(1, 0, 2, 3))
    return values, grads.reshape(K, -1, 2 * n_t)


def secrecy_position_gradient(u, channels: ChannelSet, sol: BeamformingSolution, rho,
                              cfg: SystemConfig) -> np.ndarray:
    """Gradient of every ``S_{k,l}`` with respect to the flattened positions (per meter)."""
    return secrecy_values_and_gradient(u, channels, sol, rho, cfg)[1]


@dataclass
class PositionIterate:
    """Incumbent of the position ascent.

    ``delta_user``, ``eps_user`` (K,) and ``delta_pair``, ``eps_pair``
    (K, L) are the scalar stand-ins for the Hessians of ``log2 A``,
    ``log2 B``, ``log2 C`` and ``log2 D``; the backtracked total curvature
    is split evenly between them. ``level`` is the surrogate max-min value.
    """

    u: np.ndarray
    epoch: int = 0
    delta_user: Optional[np.ndarray] = None
    eps_user: Optional[np.ndarray] = None
    delta_pair: Optional[np.ndarray] = None
    eps_pair: Optional[np.ndarray] = None
    level: float = -np.inf
    s_min: float = -np.inf
    history: list = field(default_factory=list)
    status: str = ""


@dataclass
class SurrogateStep:
    u: np.ndarray
    delta: float
    level: float
    value: float
    doublings: int


def _surrogate_qp(values, grads, lower, upper, delta, settings):
    """Maximize the smallest quadratic surrogate over the box ``lower <= d <= upper``."""
    n = grads.shape[1]
    fixed = lower == upper
    centre = np.where(fixed, 0.0, (lower + upper) / 2)
    d0 = np.where(fixed, 0.0, 1e-6 * centre)
    d0 = np.clip(d0, lower, upper)
    cons = []
    hess = np.zeros((n + 1, n + 1))
    hess[:n, :n] = delta * np.eye(n)
    idx = np.arange(n + 1)
    for v, g in zip(values, grads):
        def value(xs, v=v, g=g):
            d = xs[:n]
            return xs[n] - (v + g @ d - 0.5 * delta * d @ d)

        def derivs(xs, g=g):
            d = xs[:n]
            grad = np.concatenate([-(g - delta * d), [1.0]])
            return grad, hess

        cons.append(ck.ScalarConstraint(idx, value, derivs, "surrogate"))
    start_level = min(v + g @ d0 - 0.5 * delta * d0 @ d0 for v, g in zip(values, grads))
    start_level -= 0.1 * (1.0 + abs(start_level))
    c = np.zeros(n + 1)
    c[n] = 1.0
    problem = ck.ConicProblem(n + 1, ck.linear_objective(c), np.concatenate([d0, [start_level]]),
                              scalar=cons, lower=np.concatenate([lower, [-np.inf]]),
                              upper=np.concatenate([upper, [np.inf]]))
    report = ck.solve(problem, settings=settings)
    return report.x[:n], report.x[n], report.gap


def surrogate_curvature(objective: Callable, u_e, lower, upper, settings=None,
                        max_doublings: int = 20) -> SurrogateStep:
    """Backtrack the surrogate curvature until the step is a true ascent.

    Parameters
    ----------
    objective : callable
        ``objective(u) -> (values, grads)`` for the smooth pieces whose
        minimum is maximized; ``grads`` has shape ``(P, len(u))``.
    u_e, lower, upper : ndarray
        Incumbent and box; entries with ``lower == upper`` never move.

    Raises
    ------
    CurvatureOverflow
        When ``max_doublings`` doublings still give no improvement.
    """
    settings = settings or ck.SolverSettings()
    u_e = np.asarray(u_e, dtype=float)
    values, grads = objective(u_e)
    values = np.ravel(values)
    grads = np.asarray(grads).reshape(len(values), -1)
    current = float(values.min())
    lo = np.minimum(lower - u_e, 0.0)
    hi = np.maximum(upper - u_e, 0.0)
    lo[lower == upper] = 0.0
    hi[lower == upper] = 0.0
    delta = 1.0
    for doubling in range(max_doublings + 1):
        d, level, gap = _surrogate_qp(values, grads, lo, hi, delta, settings)
        if level - current <= max(gap, 1e-12):
            return SurrogateStep(u_e.copy(), delta, current, current, doubling)
        u_new = np.clip(u_e + d, lower, upper)
        new_values = np.ravel(objective(u_new)[0])
        if new_values.min() > current:
            return SurrogateStep(u_new, delta, float(level), float(new_values.min()), doubling)
        delta *= 2
    raise CurvatureOverflow(f"no ascent step after {max_doublings} curvature doublings")


def optimize_positions(incumbent: PositionIterate, sol: BeamformingSolution, rho,
                       cfg: SystemConfig, geo: ArrayGeometry, scenario: Scenario) -> PositionIterate:
    """Surrogate ascent of ``min_{k,l} S_{k,l}`` over the movable boxes.

    Stops when the worst-case secrecy moves by at most ``cfg.pos_tol`` or
    after ``cfg.pos_max_epochs`` epochs. Returned positions always lie in
    their boxes, and the worst-case secrecy never decreases.
    """
    side = geo.upper - geo.lower
    unit = np.where(side > 0, side, 1.0)
    lower = geo.lower / unit
    upper = geo.upper / unit
    settings = ck.SolverSettings.from_config(cfg)
    K, L = sol.W.shape[0], scenario.n_targets

    def raw(v):
        u = v * unit
        channels = build_channels(cfg, geo.with_positions(u.reshape(-1, 2)), scenario)
        values, grads = secrecy_values_and_gradient(u, channels, sol, rho, cfg)
        return values.ravel(), grads.reshape(K * L, -1) * unit

    v = np.asarray(incumbent.u, dtype=float).ravel() / unit
    start = raw(v)[0]
    scale = max(float(np.abs(start).max()), 1e-300)

    def objective(v):
        values, grads = raw(v)
        return values / scale, grads / scale

    current = float(start.min())
    history = list(incumbent.history) or [current]
    delta = np.nan
    status = "converged"
    epoch = incumbent.epoch
    if np.all(lower == upper):
        status = "fixed"
    else:
        for _ in range(cfg.pos_max_epochs):
            try:
                step = surrogate_curvature(objective, v, lower, upper, settings,
                                           cfg.pos_max_doublings)
            except CurvatureOverflow:
                log.debug("position ascent: curvature overflow, keeping incumbent")
                status = "curvature_overflow"
                break
            epoch += 1
            improvement = step.value * scale - current
            v, current, delta = step.u, step.value * scale, step.delta * scale
            history.append(current)
            if improvement <= cfg.pos_tol:
                break
        else:
            status = "max_epochs"
    split = np.full(K, delta / 4)
    weights = cfg.iota / np.asarray(rho, dtype=float) / LN2
    pair = np.repeat(split[:, None], L, axis=1)
    u = np.clip(v * unit, geo.lower, geo.upper).reshape(-1, 2)
    return PositionIterate(u, epoch, split / weights, split / weights,
                           pair / weights[:, None], pair / weights[:, None],
                           level=current, s_min=max(current, 0.0), history=history,
                           status=status)
