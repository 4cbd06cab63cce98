"""Scenario and solver constants."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Optional

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


_DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / 3.5e9

# JSON keys carrying a unit different from the in-memory SI field.
_DBM_FIELDS = {
    "noise_comm_dbm": "noise_comm",
    "noise_radar_dbm": "noise_radar",
    "power_budget_dbm": "power_budget",
}
_DEG_FIELDS = {"scatter_spread_deg": "scatter_spread"}


@dataclass(frozen=True)
class SystemConfig:
    """All constants of one scenario, in SI units (watts, meters, radians).

    ``xi_norm`` bounds ``Tr(R_x^{-1})``, the CRB with the factor
    ``sigma_r^2 N_rx N_rz / F`` removed; ``None`` disables the sensing
    constraint.
    """

    wavelength: float = _DEFAULT_WAVELENGTH
    frames: int = 32
    n_tx: int = 5
    n_tz: int = 1
    n_rx: int = 7
    n_rz: int = 1
    n_users: int = 5
    n_targets: int = 2
    n_scatterers: int = 3
    noise_comm: float = dbm_to_watt(-30.0)
    noise_radar: float = dbm_to_watt(-30.0)
    power_budget: float = dbm_to_watt(25.0)
    iota: float = 1.0
    nu: float = 0.01
    rho_lb: float = 0.1
    xi_norm: Optional[float] = 250.0
    d_x: float = _DEFAULT_WAVELENGTH / 2
    d_z: float = _DEFAULT_WAVELENGTH / 2
    region_area: float = 0.0025
    fa_spacing: float = 0.055
    scatter_spread: float = math.radians(5.0)
    # alternating optimization
    ao_tol: float = 1e-3
    ao_max_epochs: int = 50
    # beamforming SCA
    sca_tol: float = 1e-5
    sca_max_epochs: int = 30
    randomization_trials: int = 200
    # position surrogate ascent
    pos_tol: float = 1e-5
    pos_max_epochs: int = 20
    pos_max_doublings: int = 20
    # barrier solver
    solver_tol: float = 1e-8
    solver_max_newton: int = 200
    solver_mu: float = 10.0
    solver_armijo: float = 1e-4
    solver_shrink: float = 0.5
    seed: int = 0

    def __post_init__(self):
        counts = ("frames", "n_tx", "n_tz", "n_rx", "n_rz", "n_users", "n_targets")
        for name in counts:
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive count")
        if self.n_scatterers < 0:
            raise ValueError("n_scatterers must be non-negative")
        positive = ("wavelength", "noise_comm", "noise_radar", "power_budget",
                    "iota", "nu", "d_x", "d_z", "fa_spacing")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0 < self.rho_lb <= 1:
            raise ValueError("rho_lb must lie in (0, 1]")
        if self.region_area < 0:
            raise ValueError("region_area must be non-negative")
        if self.xi_norm is not None and not self.xi_norm > 0:
            raise ValueError("xi_norm must be positive or None")
        if self.frames <= self.n_tx * self.n_tz:
            raise ValueError("frames must exceed the number of transmit antennas "
                             "for a non-singular Fisher information matrix")

    @property
    def n_t(self) -> int:
        return self.n_tx * self.n_tz

    @property
    def n_r(self) -> int:
        return self.n_rx * self.n_rz

    @property
    def crb_scale(self) -> float:
        """Factor turning ``Tr(R_x^{-1})`` into the CRB of the echo channel."""
        return self.noise_radar * self.n_r / self.frames

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SystemConfig":
        """Build from a JSON-style mapping (powers in dBm, angles in degrees).

        Unknown keys raise ``ValueError``.
        """
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in _DBM_FIELDS:
                kwargs[_DBM_FIELDS[key]] = dbm_to_watt(float(value))
            elif key in _DEG_FIELDS:
                kwargs[_DEG_FIELDS[key]] = math.radians(float(value))
            elif key in names and key not in _DBM_FIELDS.values() \
                    and key not in _DEG_FIELDS.values():
                kwargs[key] = value
            else:
                raise ValueError(f"unknown configuration key: {key!r}")
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        """Inverse of :meth:`from_dict`."""
        out: dict[str, Any] = {}
        inv_dbm = {v: k for k, v in _DBM_FIELDS.items()}
        inv_deg = {v: k for k, v in _DEG_FIELDS.items()}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name in inv_dbm:
                out[inv_dbm[f.name]] = watt_to_dbm(value)
            elif f.name in inv_deg:
                out[inv_deg[f.name]] = math.degrees(value)
            else:
                out[f.name] = value
        return out
