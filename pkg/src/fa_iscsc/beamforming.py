"""Max-min semantic secrecy beamforming by successive convex approximation.

Each epoch solves the relaxed problem over ``{W_k, R_x, zeta}``: the
concave terms ``log2 A_k`` and ``log2 C_{l|k}`` are kept exactly while the
convex ones ``log2 B_k`` and ``log2 D_{l|k}`` are replaced by their tangent
at the incumbent. With

    A_k     = h_k^H R_x h_k + sigma^2          (everything at user k)
    B_k     = A_k - h_k^H W_k h_k               (interference at user k)
    D_{l|k} = h_l^H R_x h_l + sigma^2           (everything at target l)
    C_{l|k} = D_{l|k} - h_l^H W_k h_l           (target l minus stream k)

the secrecy of user ``k`` against target ``l`` is
``(iota / rho_k) (log2 A - log2 B + log2 C - log2 D)``.

Internally powers are divided by the total budget and channels scaled by
``sqrt(P_t) / sigma_c`` so that every quantity is of order one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import convex_kernel as ck
from .config import SystemConfig
from .errors import DomainError
from .metrics import crb_normalized, secrecy_pairs
from .model import BeamformingSolution, ChannelSet

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


def linearize_logs(expansion):
    """Tangent of ``log2`` at ``expansion``: returns ``(intercept, slope)``.

    The affine map ``intercept + slope * B`` equals ``log2(B_e)`` at
    ``B = B_e`` and lies above ``log2`` everywhere else.
    """
    expansion = np.asarray(expansion, dtype=float)
    if np.any(~(expansion > 0)):
        raise DomainError("log expansion points must be positive")
    slope = 1.0 / (expansion * LN2)
    intercept = np.log2(expansion) - 1.0 / LN2
    return intercept, slope


@dataclass
class ScaState:
    """Incumbent of the SCA iteration (original units)."""

    epoch: int
    W: np.ndarray
    R_x: np.ndarray
    b_expansion: np.ndarray         # (K,)  B_{k,e} / sigma^2
    d_expansion: np.ndarray         # (L, K) D_{l|k,e} / sigma^2
    zeta: float                     # min over (k, l) of the unclamped secrecy
    converged: bool = False
    history: list = field(default_factory=list)

    @property
    def solution(self) -> BeamformingSolution:
        return BeamformingSolution(self.W, self.R_x)


def isotropic_start(cfg: SystemConfig, n_users: int, p_avail: float, n_t: Optional[int] = None):
    """Equal split of the available power between users and sensing, each
    spread isotropically over the antennas (slightly inside the budget)."""
    n = cfg.n_t if n_t is None else n_t
    scale = 0.999 * p_avail / (2 * n)
    W = np.repeat((scale / n_users * np.eye(n, dtype=complex))[None], n_users, axis=0)
    R_x = W.sum(axis=0) + scale * np.eye(n)
    return BeamformingSolution(W, R_x)


def _expansions(channels: ChannelSet, W, R_x, noise):
    hu, ht = channels.h_users, channels.h_targets
    tot_u = np.real(np.einsum("ki,ij,kj->k", hu.conj(), R_x, hu))
    own_u = np.real(np.einsum("ki,kij,kj->k", hu.conj(), W, hu))
    tot_t = np.real(np.einsum("li,ij,lj->l", ht.conj(), R_x, ht))
    b = (tot_u - own_u + noise) / noise
    d = np.repeat(((tot_t + noise) / noise)[:, None], W.shape[0], axis=1)
    return b, d


def initial_state(channels: ChannelSet, sol: BeamformingSolution, rho, cfg: SystemConfig) -> ScaState:
    b, d = _expansions(channels, sol.W, sol.R_x, cfg.noise_comm)
    zeta = float(secrecy_pairs(channels, sol.W, sol.R_x, rho, cfg).min())
    return ScaState(0, sol.W.copy(), sol.R_x.copy(), b, d, zeta, history=[zeta])


class _Layout:
    def __init__(self, n_users: int, n: int):
        self.n = n
        self.k = n_users
        sz = n * n
        self.w = [np.arange(k * sz, (k + 1) * sz) for k in range(n_users)]
        self.r = np.arange(n_users * sz, (n_users + 1) * sz)
        self.zeta = (n_users + 1) * sz
        self.size = self.zeta + 1

    def pack(self, W, R_x, zeta) -> np.ndarray:
        x = np.empty(self.size)
        for k in range(self.k):
            x[self.w[k]] = ck.herm_to_real(W[k])
        x[self.r] = ck.herm_to_real(R_x)
        x[self.zeta] = zeta
        return x

    def unpack(self, x):
        W = np.stack([ck.real_to_herm(x[idx], self.n) for idx in self.w])
        return W, ck.real_to_herm(x[self.r], self.n), x[self.zeta]


def _secrecy_constraint(layout, k, user_coef, target_coef, weight, b_lin, d_lin, name):
    """Surrogate ``zeta - weight [log2 A + log2 C - lin(B) - lin(D)] <= 0``."""
    sz = layout.n * layout.n
    idx = np.concatenate([layout.w[k], layout.r, [layout.zeta]])
    zero = np.zeros(sz)
    vA = np.concatenate([zero, user_coef, [0.0]])
    vB = np.concatenate([-user_coef, user_coef, [0.0]])
    vD = np.concatenate([zero, target_coef, [0.0]])
    vC = np.concatenate([-target_coef, target_coef, [0.0]])
    e_zeta = np.zeros(len(idx))
    e_zeta[-1] = 1.0
    b0, b1 = b_lin
    d0, d1 = d_lin

    def value(xs):
        A = 1.0 + vA @ xs
        C = 1.0 + vC @ xs
        if A <= 0 or C <= 0:
            return np.inf
        B = 1.0 + vB @ xs
        D = 1.0 + vD @ xs
        concave = math.log2(A) + math.log2(C) - (b0 + b1 * B) - (d0 + d1 * D)
        return xs[-1] - weight * concave

    def derivs(xs):
        A = 1.0 + vA @ xs
        C = 1.0 + vC @ xs
        g = e_zeta - weight * (vA / (A * LN2) + vC / (C * LN2) - b1 * vB - d1 * vD)
        H = ck.LowRank(np.stack([vA, vC]), (weight / LN2) * np.array([1 / A ** 2, 1 / C ** 2]))
        return g, H

    return ck.ScalarConstraint(idx, value, derivs, name)


def build_epoch_problem(state: ScaState, channels: ChannelSet, cfg: SystemConfig, rho,
                        p_avail: float) -> tuple[ck.ConicProblem, _Layout]:
    """Convex surrogate problem of one SCA epoch, in normalized units."""
    K, n = state.W.shape[0], state.W.shape[1]
    lay = _Layout(K, n)
    p_ref = cfg.power_budget
    gain = math.sqrt(p_ref / cfg.noise_comm)
    T = ck.hermitian_basis(n)
    user_coef = ck.hermitian_coefficients(channels.h_users * gain)       # (K, n^2)
    target_coef = ck.hermitian_coefficients(channels.h_targets * gain)   # (L, n^2)
    weights = cfg.iota / np.asarray(rho, dtype=float)

    psd = [ck.PsdConstraint(n, (ck.PsdTerm(lay.w[k], T, 1.0),), name=f"W{k}") for k in range(K)]
    psd.append(ck.PsdConstraint(n, (ck.PsdTerm(lay.r, T, 1.0),)
                                + tuple(ck.PsdTerm(lay.w[k], T, -1.0) for k in range(K)),
                                name="R_s"))
    scalar = [ck.affine_constraint(lay.r, ck.trace_coefficients(n), -p_avail / p_ref, "power")]
    if cfg.xi_norm is not None:
        scalar.append(ck.inverse_trace_constraint(lay.r, n, cfg.xi_norm * p_ref, "crb"))
    b_lin = linearize_logs(state.b_expansion)
    d_lin = linearize_logs(state.d_expansion)
    for k in range(K):
        for l in range(target_coef.shape[0]):
            scalar.append(_secrecy_constraint(
                lay, k, user_coef[k], target_coef[l], weights[k],
                (b_lin[0][k], b_lin[1][k]), (d_lin[0][l, k], d_lin[1][l, k]), f"secrecy{k},{l}"))

    zeta0 = state.zeta - 0.1 * (1.0 + abs(state.zeta))
    x0 = lay.pack(state.W / p_ref, state.R_x / p_ref, zeta0)
    c = np.zeros(lay.size)
    c[lay.zeta] = 1.0
    return ck.ConicProblem(lay.size, ck.linear_objective(c), x0, psd, scalar), lay


def solve_sdr_epoch(state: ScaState, channels: ChannelSet, cfg: SystemConfig, rho,
                    p_avail: Optional[float] = None) -> ScaState:
    """One SCA epoch: solve the linearized relaxed problem at the incumbent.

    The returned incumbent never has a smaller true objective than the
    input one; if the solver returns a worse point (rounding), the input is
    kept and the state is flagged converged.

    Raises
    ------
    Infeasible
        When the CRB and power constraints admit no strictly feasible point.
    """
    p_avail = cfg.power_budget if p_avail is None else p_avail
    problem, lay = build_epoch_problem(state, channels, cfg, rho, p_avail)
    report = ck.solve(problem, settings=ck.SolverSettings.from_config(cfg))
    W, R, _ = lay.unpack(report.x)
    W = W * cfg.power_budget
    R = R * cfg.power_budget
    zeta = float(secrecy_pairs(channels, W, R, rho, cfg).min())
    if zeta < state.zeta:
        return ScaState(state.epoch + 1, state.W, state.R_x, state.b_expansion, state.d_expansion,
                        state.zeta, True, state.history + [state.zeta])
    b, d = _expansions(channels, W, R, cfg.noise_comm)
    converged = abs(zeta - state.zeta) <= cfg.sca_tol
    return ScaState(state.epoch + 1, W, R, b, d, zeta, converged, state.history + [zeta])


def sca_beamforming(channels: ChannelSet, cfg: SystemConfig, rho, p_avail: Optional[float] = None,
                    init: Optional[BeamformingSolution] = None) -> ScaState:
    """Iterate :func:`solve_sdr_epoch` until ``zeta`` moves by at most
    ``cfg.sca_tol`` or ``cfg.sca_max_epochs`` epochs pass."""
    p_avail = cfg.power_budget if p_avail is None else p_avail
    if init is None:
        init = isotropic_start(cfg, channels.h_users.shape[0], p_avail,
                               channels.h_users.shape[1])
    state = initial_state(channels, init, rho, cfg)
    for _ in range(cfg.sca_max_epochs):
        state = solve_sdr_epoch(state, channels, cfg, rho, p_avail)
        if state.converged:
            break
    return state


# ---------------------------------------------------------------------------
# Rank-one recovery
# ---------------------------------------------------------------------------

@dataclass
class RecoveryResult:
    solution: BeamformingSolution
    objective: float            # clamped worst-case secrecy of the vectors
    sdr_objective: float        # same measure for the relaxed matrices
    gap: float                  # relative loss with respect to the relaxed value
    repair: str


def _feasible(R_x, p_avail, xi, rtol=1e-9) -> bool:
    if np.real(np.trace(R_x)) > p_avail * (1 + rtol):
        return False
    if xi is None:
        return True
    try:
        return crb_normalized(R_x) <= xi * (1 + rtol)
    except ValueError:
        return False


def _repair_clip(R_x, W_vec, target_trace):
    R_s = R_x - W_vec.sum(axis=0)
    lam, V = np.linalg.eigh((R_s + R_s.conj().T) / 2)
    lam = np.maximum(lam, 0.0)
    total = lam.sum()
    if total > 0:
        lam *= max(target_trace, 0.0) / total
    R_s = (V * lam) @ V.conj().T
    return W_vec.sum(axis=0) + R_s


def _repair_scale(R_x, w):
    """Shrink the beams until ``R_x - sum w w^H`` is PSD; ``R_x`` is kept."""
    L = np.linalg.cholesky(R_x)
    Y = np.linalg.solve(L, w.T)                      # L^{-1} w_k as columns
    top = np.linalg.eigvalsh(Y @ Y.conj().T).max()
    s = 1.0 if top <= 1 else 1.0 / math.sqrt(top * (1 + 1e-12))
    return w * s


def _channel_projector(channels: ChannelSet, rtol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the span of all user and target channels."""
    H = np.concatenate([channels.h_users, channels.h_targets]).conj()
    U, sv, Vh = np.linalg.svd(H, full_matrices=False)
    rank = int(np.sum(sv > rtol * sv.max())) if sv.size and sv.max() > 0 else 0
    V = Vh[:rank].conj().T
    return V @ V.conj().T


def rank_one_recovery(sol: BeamformingSolution, channels: ChannelSet, cfg: SystemConfig, rho,
                      trials: Optional[int] = None, rng=None,
                      p_avail: Optional[float] = None) -> RecoveryResult:
    """Gaussian randomization around the relaxed beamforming matrices.

    The relaxed matrices are first projected onto the span of the channels
    (and ``R_x`` pinched onto that span and its complement), which leaves
    every SINR unchanged and keeps the point feasible. Candidate ``t`` then draws
    ``w_k ~ CN(0, W_k)`` for every user and rescales it to power
    ``Tr(W_k)``. Two deterministic candidates are added: the principal
    eigenvector rescaled to ``Tr(W_k)``, and the principal rank-one part
    of ``W_k`` with the remainder moved into the sensing covariance.
    The sensing covariance is repaired by clipping negative eigenvalues and
    restoring the relaxed sensing power; if that breaks the power or CRB
    constraint the beams are shrunk inside the relaxed ``R_x`` instead.
    The feasible candidate with the best worst-case secrecy is returned.
    """
    trials = cfg.randomization_trials if trials is None else trials
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    p_avail = cfg.power_budget if p_avail is None else p_avail
    K, n = sol.W.shape[0], sol.W.shape[1]
    # Power in directions no channel sees is free to move between W_k and
    # R_s; the barrier spreads it evenly, so strip it before randomizing.
    # Pinching R_x onto the channel span and its complement keeps every
    # channel quadratic form and the trace, cannot raise Tr(R_x^{-1}), and
    # leaves R_x - sum_k Q W_k Q positive semidefinite.
    Q = _channel_projector(channels)
    P = np.eye(n) - Q
    W = np.einsum("ij,kjl,lm->kim", Q, sol.W, Q)
    R_x = Q @ sol.R_x @ Q + P @ sol.R_x @ P
    R_x = (R_x + R_x.conj().T) / 2
    powers = np.real(np.trace(W, axis1=1, axis2=2))
    sensing_trace = float(np.real(np.trace(R_x)) - powers.sum())

    cands = np.zeros((trials + 2, K, n), dtype=complex)
    for k in range(K):
        lam, V = np.linalg.eigh((W[k] + W[k].conj().T) / 2)
        lam = np.maximum(lam, 0.0)
        cands[0, k] = V[:, -1]
        cands[1, k] = V[:, -1] * math.sqrt(lam[-1])
        z = (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))) / math.sqrt(2)
        cands[2:, k] = z @ (V * np.sqrt(lam)).T
    norms = np.linalg.norm(cands, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(norms > 0, np.sqrt(powers)[None] / norms, 0.0)
    factor[1] = 1.0
    cands *= factor[..., None]

    sdr_value = float(secrecy_pairs(channels, sol.W, sol.R_x, rho, cfg).min())
    best = None
    for t in range(trials + 2):
        w = cands[t]
        Wv = np.einsum("ki,kj->kij", w, w.conj())
        options = []
        R_clip = _repair_clip(R_x, Wv, sensing_trace)
        if _feasible(R_clip, p_avail, cfg.xi_norm):
            options.append((BeamformingSolution(Wv, (R_clip + R_clip.conj().T) / 2, w), "clip"))
        ws = _repair_scale(R_x, w)
        options.append((BeamformingSolution.from_vectors(ws, R_x - np.einsum(
            "ki,kj->ij", ws, ws.conj())), "scale"))
        for cand, how in options:
            value = float(secrecy_pairs(channels, cand.W, cand.R_x, rho, cfg).min())
            if best is None or value > best[0]:
                best = (value, cand, how)
    value, cand, how = best
    obj = max(value, 0.0)
    sdr = max(sdr_value, 0.0)
    gap = (sdr - obj) / sdr if sdr > 0 else 0.0
    return RecoveryResult(cand, obj, sdr, gap, how)
