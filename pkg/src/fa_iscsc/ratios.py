"""Semantic extraction ratios under the leftover compute budget.

Minimizing ``sum_k rho_k`` subject to ``-nu sum_k ln rho_k <= B`` and
``rho_lb <= rho_k <= 1`` has a symmetric KKT point: every ratio equals a
common value fixed by the budget. That value is found by bisection on the
budget residual, always keeping the feasible bracket end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import BudgetExceeded

AT_LOWER = "lower"
INTERIOR = "interior"
AT_ONE = "one"


@dataclass(frozen=True)
class RatioSolution:
    """Ratios, leftover compute budget (W) and per-user binding flags."""

    rho: np.ndarray
    residual_budget: float
    binding: tuple


def _common_ratio(budget: float, n_users: int, nu: float, rho_lb: float, tol: float) -> float:
    def residual(r):
        return -nu * n_users * math.log(r) - budget

    if residual(rho_lb) <= 0:
        return rho_lb
    if budget <= 0:
        return 1.0
    lo, hi = rho_lb, 1.0                # residual(lo) > 0 >= residual(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if residual(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def optimize_ratios(p_cs: float, cfg: SystemConfig, n_users: int | None = None,
                    tol: float = 1e-10) -> RatioSolution:
    """Smallest common extraction ratio the compute budget ``P_t - P_cs`` affords.

    Parameters
    ----------
    p_cs : float
        Transmit power already committed, in watts.
    cfg : SystemConfig
    n_users : int, optional
        Defaults to ``cfg.n_users``.
    tol : float
        Bisection bracket width.

    Raises
    ------
    BudgetExceeded
        If ``p_cs`` is larger than the total power budget.
    """
    K = cfg.n_users if n_users is None else n_users
    if p_cs > cfg.power_budget:
        raise BudgetExceeded(f"transmit power {p_cs:.6g} W exceeds the budget "
                             f"{cfg.power_budget:.6g} W")
    budget = cfg.power_budget - p_cs
    r = _common_ratio(budget, K, cfg.nu, cfg.rho_lb, tol)
    rho = np.full(K, r)
    p_comp = -cfg.nu * K * math.log(r)
    if r <= cfg.rho_lb:
        flag = AT_LOWER
    elif r >= 1.0:
        flag = AT_ONE
    else:
        flag = INTERIOR
    return RatioSolution(rho, budget - p_comp, (flag,) * K)
