"""Single runs, region and CRB sweeps with baselines, and Monte Carlo CRB checks."""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..ao import AoResult, AoStart, run_ao
from ..config import SystemConfig
from ..errors import Infeasible, SingularDesign
from ..metrics import crb, crb_normalized
from ..model import ArrayGeometry, build_channels, make_geometry
from .scenario import generate_scenario

log = logging.getLogger(__name__)

KINDS = ("single-run", "region-sweep", "crb-sweep", "crb-validate")
PROPOSED, RANDOM_FA, FPA = "proposed", "random-FA", "FPA"
BASELINES = (PROPOSED, RANDOM_FA, FPA)

# target count and transmit grid of the CRB-sweep presets
PRESETS = {
    "1T-9FA": dict(n_targets=1, n_tx=3, n_tz=3),
    "3T-9FA": dict(n_targets=3, n_tx=3, n_tz=3),
    "3T-15FA": dict(n_targets=3, n_tx=5, n_tz=3),
}

OK, INFEASIBLE, FAILED = "ok", "infeasible", "failed"

_RANDOM_FA_STREAM = 0xFA


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run and how often.

    Trial ``t`` uses the scenario seed ``seed + t``; every sweep value of a
    trial shares that scenario.
    """

    kind: str = "single-run"
    values: tuple = ()
    baselines: tuple = BASELINES
    trials: int = 1
    out_dir: Optional[str] = None
    seed: int = 0
    config: SystemConfig = field(default_factory=SystemConfig)
    presets: tuple = tuple(PRESETS)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        values = tuple(float(v) for v in self.values)
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}")
        if self.kind == "region-sweep" and not {PROPOSED, FPA} <= set(self.baselines):
            raise ValueError("a region sweep needs at least the proposed and FPA baselines")
        bad = set(self.presets) - set(PRESETS)
        if bad:
            raise ValueError(f"unknown presets {sorted(bad)}")

    def trial_seeds(self) -> list[int]:
        return [self.seed + t for t in range(self.trials)]


@dataclass(frozen=True)
class ResultRow:
    """One ``(baseline, sweep value, trial)`` outcome.

    ``xi_norm`` is the achieved ``Tr(R_x^{-1})``. Failed or infeasible
    runs carry zeros in the metric columns and say why in ``status``.
    """

    scenario: str
    baseline: str
    sweep_value: float
    s_min_bits: float
    crb: float
    xi_norm: float
    p_cs_w: float
    p_comp_w: float
    epochs: int
    seconds: float
    status: str = OK

    @staticmethod
    def fields() -> list[str]:
        return [f.name for f in dataclasses.fields(ResultRow)]

    def sort_key(self):
        order = BASELINES.index(self.baseline) if self.baseline in BASELINES else len(BASELINES)
        return (order, self.baseline, self.sweep_value, self.scenario)


def _row(scenario: str, baseline: str, value: float, result: AoResult, cfg: SystemConfig,
         seconds: Optional[float] = None) -> ResultRow:
    last = result.trace.records[-1]
    R = result.solution.R_x
    return ResultRow(scenario, baseline, float(value), float(result.s_min), crb(R, cfg),
                     crb_normalized(R), float(np.real(np.trace(R))), float(last.p_comp),
                     result.trace.epochs, result.seconds if seconds is None else seconds, OK)


def _failure(scenario, baseline, value, status, seconds=0.0) -> ResultRow:
    return ResultRow(scenario, baseline, float(value), 0.0, 0.0, 0.0, 0.0, 0.0, 0, seconds, status)


def _guarded(scenario, baseline, value, cfg, fn):
    """Run ``fn`` and turn failures into status rows; returns ``(row, result)``."""
    t0 = time.perf_counter()
    try:
        result = fn()
    except Infeasible as exc:
        log.info("%s/%s at %g infeasible: %s", scenario, baseline, value, exc)
        return _failure(scenario, baseline, value, INFEASIBLE, time.perf_counter() - t0), None
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        log.warning("%s/%s at %g failed: %s", scenario, baseline, value, exc)
        return _failure(scenario, baseline, value, FAILED, time.perf_counter() - t0), None
    return _row(scenario, baseline, value, result, cfg), result


def random_positions(geo: ArrayGeometry, unit: np.ndarray) -> np.ndarray:
    """Positions at ``center + side * (unit - 1/2)`` inside every box.

    ``unit`` holds uniform draws in ``[0, 1)`` of shape ``(N_t, 2)``; reusing
    it across box sizes gives common random numbers.
    """
    b = geo.fa_regions
    lo = b[:, [0, 2]]
    hi = b[:, [1, 3]]
    return np.clip(lo + (hi - lo) * unit, lo, hi)


def run_single(spec: ExperimentSpec) -> list[ResultRow]:
    """Full alternating optimization once per trial."""
    cfg = spec.config
    rows = []
    for seed in spec.trial_seeds():
        geo, scenario = generate_scenario(cfg, seed)
        row, _ = _guarded(f"single-seed{seed}", PROPOSED, cfg.region_area, cfg,
                          lambda: run_ao(cfg, geo, scenario))
        rows.append(row)
    return sorted(rows, key=ResultRow.sort_key)


def run_region_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Worst-case secrecy against the movable-region area for every baseline.

    * FPA: antennas pinned at the box centers; independent of the area, so
      it is solved once per trial and repeated for every value.
    * random-FA: antennas frozen at uniform positions in the boxes, drawn
      once per trial and scaled with the box side.
    * proposed: full alternating optimization, warm-started from the FPA
      solution at the smallest area and from the previous area afterwards.
      Boxes share their centers, so each warm start stays feasible.
    """
    cfg = spec.config
    values = spec.values or (cfg.region_area,)
    rows: list[ResultRow] = []
    for seed in spec.trial_seeds():
        name = f"region-seed{seed}"
        _, scenario = generate_scenario(cfg, seed)
        pinned = make_geometry(cfg, 0.0)
        fpa_row, fpa = _guarded(name, FPA, values[0], cfg, lambda: run_ao(
            cfg, pinned, scenario, optimize_positions_block=False))
        if FPA in spec.baselines:
            rows.extend(dataclasses.replace(fpa_row, sweep_value=float(v)) for v in values)
        unit = np.random.default_rng([seed, _RANDOM_FA_STREAM]).random((cfg.n_t, 2))
        start: Optional[AoStart] = fpa.as_start() if fpa is not None else None
        for v in values:
            geo = make_geometry(cfg, v)
            if RANDOM_FA in spec.baselines:
                frozen = geo.with_positions(random_positions(geo, unit)).frozen()
                row, _ = _guarded(name, RANDOM_FA, v, cfg, lambda: run_ao(
                    cfg, frozen, scenario, optimize_positions_block=False))
                rows.append(row)
            row, result = _guarded(name, PROPOSED, v, cfg,
                                   lambda: run_ao(cfg, geo, scenario, start=start))
            rows.append(row)
            if result is not None:
                start = result.as_start()
    return sorted(rows, key=ResultRow.sort_key)


def preset_config(cfg: SystemConfig, preset: str) -> SystemConfig:
    return cfg.replace(**PRESETS[preset])


def run_crb_sweep(spec: ExperimentSpec) -> list[ResultRow]:
    """Worst-case secrecy against the normalized CRB bound for every preset.

    Values are visited in increasing order and each run is warm-started
    from the previous feasible one, whose solution stays feasible under the
    looser bound. Values below the isotropic floor ``N_t^2 / P_t`` give
    ``infeasible`` rows.
    """
    rows: list[ResultRow] = []
    values = spec.values or (spec.config.xi_norm,)
    for preset in spec.presets:
        base = preset_config(spec.config, preset)
        for seed in spec.trial_seeds():
            name = f"{preset}-seed{seed}"
            geo, scenario = generate_scenario(base, seed)
            start: Optional[AoStart] = None
            for v in values:
                cfg = base.replace(xi_norm=float(v))
                row, result = _guarded(name, PROPOSED, v, cfg,
                                       lambda: run_ao(cfg, geo, scenario, start=start))
                rows.append(row)
                if result is not None:
                    start = result.as_start()
    return sorted(rows, key=lambda r: (r.scenario.split("-seed")[0], r.sweep_value, r.scenario))


@dataclass(frozen=True)
class CrbValidation:
    mse: float
    crb: float
    ratio: float
    trials: int
    frames: int


def _orthonormal_rows(rng, n: int, f: int) -> np.ndarray:
    Z = (rng.standard_normal((f, n)) + 1j * rng.standard_normal((f, n))) / math.sqrt(2)
    Qm, _ = np.linalg.qr(Z)
    return Qm.conj().T                              # (n, f) with Q Q^H = I


def validate_crb(spec: ExperimentSpec, R_x=None, G=None, batch: int = 500) -> CrbValidation:
    """Least-squares echo-channel estimation MSE against the CRB.

    Each trial draws a probing block ``X`` with ``X X^H = F R_x`` exactly
    and complex Gaussian noise of power ``sigma_r^2``, estimates
    ``G_hat = Z X^H (X X^H)^{-1}`` and accumulates ``||G_hat - G||_F^2``.

    Parameters
    ----------
    spec : ExperimentSpec
        ``config`` fixes the array sizes, frames and noise; ``trials`` the
        number of noise draws.
    R_x : array_like, optional
        Transmit covariance; the identity by default.
    G : array_like, optional
        True echo channel; drawn from the seeded scenario by default. The
        MSE does not depend on it.

    Raises
    ------
    SingularDesign
        If ``X X^H`` has condition number above ``1e12``.
    """
    cfg = spec.config
    n, nr, f = cfg.n_t, cfg.n_r, cfg.frames
    R = np.eye(n, dtype=complex) if R_x is None else np.asarray(R_x, dtype=complex)
    R = (R + R.conj().T) / 2
    if f <= n:
        raise SingularDesign("frames must exceed the number of transmit antennas")
    eig = np.linalg.eigvalsh(R)
    if eig.min() <= 0 or eig.max() / eig.min() > 1e12:
        raise SingularDesign("X X^H is singular or ill-conditioned")
    if G is None:
        geo, scenario = generate_scenario(cfg, spec.seed)
        G = build_channels(cfg, geo, scenario).echo
    G = np.asarray(G, dtype=complex)
    lam, V = np.linalg.eigh(R)
    root = (V * np.sqrt(lam)) @ V.conj().T
    rng = np.random.default_rng([spec.seed, 0xC4B])
    total = 0.0
    done = 0
    while done < spec.trials:
        b = min(batch, spec.trials - done)
        X = np.stack([math.sqrt(f) * root @ _orthonormal_rows(rng, n, f) for _ in range(b)])
        N = math.sqrt(cfg.noise_radar / 2) * (rng.standard_normal((b, nr, f))
                                              + 1j * rng.standard_normal((b, nr, f)))
        Z = G @ X + N
        XH = np.conj(np.swapaxes(X, 1, 2))
        gram = X @ XH
        G_hat = np.linalg.solve(np.swapaxes(gram, 1, 2), np.swapaxes(Z @ XH, 1, 2))
        G_hat = np.swapaxes(G_hat, 1, 2)                 # Z X^H (X X^H)^{-1}
        total += float(np.sum(np.abs(G_hat - G) ** 2))
        done += b
    mse = total / spec.trials
    bound = crb(R, cfg)
    return CrbValidation(mse, bound, mse / bound, spec.trials, f)


def aggregate(rows: Sequence[ResultRow], field_name: str = "s_min_bits") -> dict:
    """Mean of ``field_name`` over successful rows per ``(baseline, value)``.

    Also groups CRB-sweep rows by preset via the scenario prefix.
    """
    groups: dict = defaultdict(list)
    for r in rows:
        if r.status != OK:
            continue
        series = r.baseline if "-seed" not in r.scenario or r.scenario.startswith(
            ("region", "single")) else r.scenario.split("-seed")[0]
        groups[(series, r.sweep_value)].append(getattr(r, field_name))
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def run_experiment(spec: ExperimentSpec):
    """Dispatch on ``spec.kind``."""
    if spec.kind == "single-run":
        return run_single(spec)
    if spec.kind == "region-sweep":
        return run_region_sweep(spec)
    if spec.kind == "crb-sweep":
        return run_crb_sweep(spec)
    return validate_crb(spec)
