"""Sensing, communication and computing performance measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import SystemConfig
from .errors import DomainError, EmptyTargets, SingularCovariance
from .model import BeamformingSolution, ChannelSet

_MIN_EIG = 1e-12


def crb_normalized(R_x) -> float:
    """``Tr(R_x^{-1})``: the CRB with ``sigma_r^2 N_r / F`` factored out."""
    R = np.asarray(R_x, dtype=complex)
    R = (R + R.conj().T) / 2
    eig = np.linalg.eigvalsh(R)
    if eig.min() <= _MIN_EIG:
        raise SingularCovariance(f"smallest eigenvalue {eig.min():.3e} of R_x is not positive")
    return float(np.sum(1.0 / eig))


def crb(R_x, cfg: SystemConfig) -> float:
    """CRB of the vectorized echo channel, ``sigma_r^2 N_r / F * Tr(R_x^{-1})``."""
    return cfg.crb_scale * crb_normalized(R_x)


def quad(h, M) -> np.ndarray:
    """Real quadratic forms ``h^H M h``, broadcasting over leading axes."""
    return np.real(np.einsum("...i,...ij,...j->...", h.conj(), M, h))


def sinr(h, sol: BeamformingSolution, k: int, noise: float) -> float:
    """SINR of stream ``k`` seen through channel ``h``.

    Interference is the per-stream power of the other users plus the sensing
    covariance, ``h^H (R_x - W_k) h``.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != sol.R_x.shape[0]:
        raise ValueError("channel and beamformer dimensions differ")
    if noise <= 0:
        raise DomainError("noise power must be positive")
    signal = quad(h, sol.W[k])
    interference = quad(h, sol.R_x) - signal
    return float(signal / (max(interference, 0.0) + noise))


def semantic_rate(gamma, rho, iota: float, rho_lb: float = 0.0):
    """Semantic rate ``(iota / rho) log2(1 + gamma)`` in bits.

    Used both for the intended user and for the leakage to a target.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0) or np.any(rho > 1) or np.any(rho < rho_lb):
        raise DomainError(f"extraction ratio outside [{rho_lb}, 1]: {rho}")
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("SINR must be non-negative")
    out = iota / rho * np.log2(1.0 + gamma)
    return float(out) if np.ndim(out) == 0 else out


def secrecy_rate(rate: float, leakage: Sequence[float]) -> float:
    """Worst case over targets of the clamped rate difference."""
    leakage = np.asarray(leakage, dtype=float)
    if leakage.size == 0:
        raise EmptyTargets("secrecy rate needs at least one target")
    return float(np.min(np.maximum(rate - leakage, 0.0)))


def compute_power(rho, nu: float) -> float:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("extraction ratios must be positive")
    return float(-nu * np.sum(np.log(rho)))


def power_split(sol: BeamformingSolution, rho, nu: float) -> tuple[float, float]:
    """Return ``(P_cs, P_comp)``: transmit trace and semantic-extraction power."""
    p_cs = float(np.real(np.trace(sol.R_x)))
    return p_cs, compute_power(rho, nu)


def sinr_tables(channels: ChannelSet, W, R_x, noise: float):
    """User SINRs ``(K,)`` and leakage SINRs ``(L, K)`` for matrix beamformers."""
    W = np.asarray(W)
    sig_u = quad(channels.h_users, W)                              # h_k^H W_k h_k
    tot_u = quad(channels.h_users, R_x[None])
    gamma = sig_u / (np.maximum(tot_u - sig_u, 0.0) + noise)
    ht = channels.h_targets
    sig_t = np.real(np.einsum("li,kij,lj->lk", ht.conj(), W, ht))
    tot_t = quad(ht, R_x[None])[:, None]
    leak = sig_t / (np.maximum(tot_t - sig_t, 0.0) + noise)
    return gamma, leak


def secrecy_pairs(channels: ChannelSet, W, R_x, rho, cfg: SystemConfig) -> np.ndarray:
    """Unclamped ``R_k - R_{l|k}`` for every user/target pair, shape ``(K, L)``."""
    gamma, leak = sinr_tables(channels, W, R_x, cfg.noise_comm)
    scale = cfg.iota / np.asarray(rho, dtype=float)
    return scale[:, None] * (np.log2(1 + gamma)[:, None] - np.log2(1 + leak.T))


def worst_secrecy(channels: ChannelSet, W, R_x, rho, cfg: SystemConfig) -> float:
    """``min_k S_k`` with the clamp at zero."""
    return max(float(secrecy_pairs(channels, W, R_x, rho, cfg).min()), 0.0)


@dataclass(frozen=True)
class MetricsReport:
    sinr: np.ndarray
    leakage_sinr: np.ndarray
    rate: np.ndarray
    leakage_rate: np.ndarray
    secrecy: np.ndarray
    s_min: float
    crb_value: float
    p_comp: float
    p_cs: float


def evaluate(channels: ChannelSet, sol: BeamformingSolution, rho, cfg: SystemConfig) -> MetricsReport:
    """Every performance measure for one solution."""
    rho = np.asarray(rho, dtype=float)
    if channels.h_targets.shape[0] == 0:
        raise EmptyTargets("secrecy rate needs at least one target")
    gamma, leak = sinr_tables(channels, sol.W, sol.R_x, cfg.noise_comm)
    rate = semantic_rate(gamma, rho, cfg.iota, cfg.rho_lb)
    leak_rate = semantic_rate(leak, rho[None, :], cfg.iota, cfg.rho_lb)
    secrecy = np.array([secrecy_rate(rate[k], leak_rate[:, k]) for k in range(len(rho))])
    p_cs, p_comp = power_split(sol, rho, cfg.nu)
    try:
        crb_value = crb(sol.R_x, cfg)
    except SingularCovariance:
        crb_value = float("inf")
    return MetricsReport(gamma, leak, np.atleast_1d(rate), np.atleast_2d(leak_rate), secrecy,
                         float(secrecy.min()), crb_value, p_comp, p_cs)
