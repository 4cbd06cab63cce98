"""Alternating optimization over beams, antenna positions and extraction ratios."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import beamforming as bf
from .config import SystemConfig
from .errors import Infeasible
from .metrics import compute_power, crb, secrecy_pairs
from .model import ArrayGeometry, BeamformingSolution, Scenario, build_channels
from .positions import PositionIterate, optimize_positions
from .ratios import optimize_ratios

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    """State after one outer epoch.

    ``blocks`` maps ``start``, ``beams``, ``positions`` and ``ratios`` to the
    clamped worst-case secrecy right after that block.
    """

    epoch: int
    s_min: float
    zeta: float
    crb_value: float
    p_cs: float
    p_comp: float
    positions: np.ndarray
    rho: np.ndarray
    seconds: float
    blocks: dict


@dataclass
class AoTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    relaxed_objective: float = float("nan")
    recovered_objective: float = float("nan")
    recovery_repair: str = ""

    @property
    def s_min(self) -> np.ndarray:
        return np.array([r.s_min for r in self.records])

    @property
    def epochs(self) -> int:
        return len(self.records)

    def block_sequence(self) -> np.ndarray:
        """Worst-case secrecy after every block in execution order."""
        out = []
        for r in self.records:
            out.extend(r.blocks[name] for name in ("start", "beams", "positions", "ratios")
                       if name in r.blocks)
        return np.array(out)


@dataclass(frozen=True)
class AoStart:
    """Warm start: positions, ratios and a beamforming solution feasible for them."""

    positions: np.ndarray
    rho: np.ndarray
    solution: BeamformingSolution


@dataclass
class AoResult:
    trace: AoTrace
    solution: BeamformingSolution          # recovered rank-one beams
    relaxed: BeamformingSolution
    geometry: ArrayGeometry
    rho: np.ndarray
    seconds: float

    @property
    def s_min(self) -> float:
        return self.trace.recovered_objective

    def as_start(self) -> AoStart:
        return AoStart(self.geometry.fa_positions.copy(), self.rho.copy(), self.relaxed)


def _value(channels, sol, rho, cfg) -> float:
    return float(secrecy_pairs(channels, sol.W, sol.R_x, rho, cfg).min())


def check_feasible(cfg: SystemConfig, p_avail: float, n_t: int) -> None:
    """Raise :class:`Infeasible` if no covariance meets the CRB bound.

    ``Tr(R^{-1}) >= N^2 / Tr(R)`` with equality for the isotropic split, so
    the bound is attainable only if ``xi >= N^2 / p_avail``.
    """
    if cfg.xi_norm is None:
        return
    floor = n_t ** 2 / p_avail
    if cfg.xi_norm < floor:
        raise Infeasible(f"CRB bound {cfg.xi_norm:.6g} is below the isotropic floor "
                         f"{floor:.6g} for {p_avail:.6g} W")


def run_ao(cfg: SystemConfig, geo: ArrayGeometry, scenario: Scenario, *,
           optimize_positions_block: bool = True, optimize_ratios_block: bool = True,
           start: Optional[AoStart] = None, recover: bool = True) -> AoResult:
    """Maximize the worst-case semantic secrecy rate by alternating blocks.

    Each epoch runs SCA beamforming to convergence, then the position
    ascent, then the ratio update; the compute power of the new ratios
    shrinks the transmit budget of the next epoch. The loop stops once the
    worst-case secrecy moves by at most ``cfg.ao_tol`` bits or after
    ``cfg.ao_max_epochs`` epochs, and Gaussian randomization recovers
    rank-one beams at the end.

    Parameters
    ----------
    cfg, geo, scenario
        System constants, antenna boxes and user/target draws.
    optimize_positions_block, optimize_ratios_block : bool
        Freeze a block by passing ``False``.
    start : AoStart, optional
        Warm start. By default antennas sit at their box centers, every
        ratio is 1 and the beams start from the isotropic split.
    recover : bool
        Run rank-one recovery after convergence.

    Raises
    ------
    Infeasible
        If the CRB bound cannot be met with the available power.
    """
    t_start = time.perf_counter()
    K = scenario.n_users
    if start is None:
        geo = geo.with_positions(geo.centers)
        rho = np.ones(K)
    else:
        geo = geo.with_positions(start.positions)
        rho = np.asarray(start.rho, dtype=float).copy()
    p_comp = compute_power(rho, cfg.nu)
    p_avail = cfg.power_budget - p_comp
    check_feasible(cfg, p_avail, geo.n_t)

    channels = build_channels(cfg, geo, scenario)
    sol = start.solution if start is not None else bf.isotropic_start(cfg, K, p_avail, geo.n_t)
    previous = max(_value(channels, sol, rho, cfg), 0.0)
    trace = AoTrace()

    for epoch in range(cfg.ao_max_epochs):
        t0 = time.perf_counter()
        blocks = {"start": previous}

        state = bf.sca_beamforming(channels, cfg, rho, p_avail, init=sol)
        sol = state.solution
        blocks["beams"] = max(_value(channels, sol, rho, cfg), 0.0)

        if optimize_positions_block:
            it = optimize_positions(PositionIterate(geo.fa_positions), sol, rho, cfg, geo, scenario)
            geo = geo.with_positions(it.u)
            channels = build_channels(cfg, geo, scenario)
            blocks["positions"] = max(_value(channels, sol, rho, cfg), 0.0)

        p_cs = float(np.real(np.trace(sol.R_x)))
        if optimize_ratios_block:
            ratios = optimize_ratios(min(p_cs, cfg.power_budget), cfg, K)
            rho = np.minimum(ratios.rho, rho)      # old ratios stay feasible
            p_comp = compute_power(rho, cfg.nu)
            p_avail = cfg.power_budget - p_comp
            blocks["ratios"] = max(_value(channels, sol, rho, cfg), 0.0)

        zeta = _value(channels, sol, rho, cfg)
        current = max(zeta, 0.0)
        trace.records.append(EpochRecord(
            epoch, current, zeta, crb(sol.R_x, cfg), p_cs, p_comp, geo.fa_positions.copy(),
            rho.copy(), time.perf_counter() - t0, blocks))
        log.debug("epoch %d: S_min %.6g bits", epoch, current)
        if abs(current - previous) <= cfg.ao_tol:
            trace.status = "converged"
            break
        previous = current
    else:
        trace.status = "max_epochs"

    relaxed = sol
    trace.relaxed_objective = max(_value(channels, relaxed, rho, cfg), 0.0)
    final = relaxed
    if recover:
        rec = bf.rank_one_recovery(relaxed, channels, cfg, rho, p_avail=p_avail)
        final = rec.solution
        trace.recovered_objective = rec.objective
        trace.recovery_repair = rec.repair
    else:
        trace.recovered_objective = trace.relaxed_objective
    return AoResult(trace, final, relaxed, geo, rho, time.perf_counter() - t_start)
