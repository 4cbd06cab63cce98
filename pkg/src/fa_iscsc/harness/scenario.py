"""Seeded placement of users, targets and scatterers."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..config import SystemConfig
from ..model import ArrayGeometry, Scenario, make_geometry

AZIMUTH_RANGE = (math.radians(-60.0), math.radians(60.0))
BROADSIDE_RANGE = (math.radians(60.0), math.radians(120.0))
DISTANCE_RANGE = (30.0, 100.0)
RCS_RANGE = (0.5, 2.0)

_USERS, _TARGETS = 0, 1


def _angles(rng):
    return np.array([rng.uniform(*AZIMUTH_RANGE), rng.uniform(*BROADSIDE_RANGE)])


def generate_scenario(cfg: SystemConfig, seed: Optional[int] = None,
                      region_area: Optional[float] = None) -> tuple[ArrayGeometry, Scenario]:
    """Array geometry plus a random scenario.

    Every user and every target draws from its own stream keyed by
    ``(seed, kind, index)``, so a scenario with fewer users or targets is a
    prefix of a larger one with the same seed.
    """
    seed = cfg.seed if seed is None else seed
    geo = make_geometry(cfg, region_area)

    user_angles, user_dist, user_phase = [], [], []
    for k in range(cfg.n_users):
        rng = np.random.default_rng([seed, _USERS, k])
        user_angles.append(_angles(rng))
        user_dist.append(rng.uniform(*DISTANCE_RANGE))
        user_phase.append(rng.uniform(0, 2 * np.pi))

    ns = cfg.n_scatterers
    spread = cfg.scatter_spread
    t_angles, t_dist, s_angles, s_phase, e_phase, rcs = [], [], [], [], [], []
    for l in range(cfg.n_targets):
        rng = np.random.default_rng([seed, _TARGETS, l])
        nominal = _angles(rng)
        t_angles.append(nominal)
        t_dist.append(rng.uniform(*DISTANCE_RANGE))
        s_angles.append(nominal + rng.uniform(-spread, spread, size=(ns, 2)))
        s_phase.append(rng.uniform(0, 2 * np.pi, size=ns))
        e_phase.append(rng.uniform(0, 2 * np.pi, size=ns))
        rcs.append(np.exp(rng.uniform(np.log(RCS_RANGE[0]), np.log(RCS_RANGE[1]), size=ns)))

    scenario = Scenario(
        np.array(user_angles).reshape(-1, 2), np.array(user_dist), np.array(user_phase),
        np.array(t_angles).reshape(-1, 2), np.array(t_dist),
        np.array(s_angles).reshape(cfg.n_targets, ns, 2),
        np.array(s_phase).reshape(cfg.n_targets, ns),
        np.array(e_phase).reshape(cfg.n_targets, ns),
        np.array(rcs).reshape(cfg.n_targets, ns))
    return geo, scenario
