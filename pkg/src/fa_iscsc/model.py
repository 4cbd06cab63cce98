"""Array geometry, steering vectors, channels and transmit covariance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import SystemConfig


def tx_steering_vector(theta, phi, positions, wavelength):
    """Transmit steering vector of antennas at arbitrary ``(x, z)`` positions.

    Element ``i`` is ``exp(j 2pi/lambda (x_i cos(theta) sin(phi) + z_i cos(phi)))``,
    which equals the Kronecker product of the x and z factors when the
    positions form a grid.

    Parameters
    ----------
    theta, phi : float or array_like
        Azimuth and broadside angles in radians. Arrays broadcast together.
    positions : array_like, shape (N, 2)
        Antenna coordinates in meters.
    wavelength : float
        Carrier wavelength in meters.

    Returns
    -------
    ndarray, shape ``broadcast(theta, phi).shape + (N,)``
    """
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    phase = pos[:, 0] * (np.cos(theta) * np.sin(phi)) + pos[:, 1] * np.cos(phi)
    return np.exp(1j * (2 * np.pi / wavelength) * phase)


def rx_steering_vector(theta, phi, positions, wavelength):
    """Receive steering vector over the fixed grid ``(m d_x, m d_z)``.

    Same phase law as :func:`tx_steering_vector`; kept separate because the
    receive grid never moves.
    """
    return tx_steering_vector(theta, phi, positions, wavelength)


def grid_positions(nx: int, nz: int, dx: float, dz: float) -> np.ndarray:
    """Grid coordinates ordered x-major, matching ``a_x kron a_z``."""
    mx, mz = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    return np.column_stack([mx.ravel() * dx, mz.ravel() * dz]).astype(float)


@dataclass(frozen=True)
class ArrayGeometry:
    """Fluid-antenna positions with their movable boxes, plus the fixed
    receive grid.

    ``fa_regions`` rows are ``[x_min, x_max, z_min, z_max]``.
    """

    fa_positions: np.ndarray
    fa_regions: np.ndarray
    fpa_positions: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.fa_positions, dtype=float).reshape(-1, 2)
        boxes = np.asarray(self.fa_regions, dtype=float).reshape(-1, 4)
        v = np.asarray(self.fpa_positions, dtype=float).reshape(-1, 2)
        if boxes.shape[0] != u.shape[0]:
            raise ValueError("one region box per fluid antenna is required")
        if np.any(boxes[:, 1] < boxes[:, 0]) or np.any(boxes[:, 3] < boxes[:, 2]):
            raise ValueError("region boxes must have min <= max")
        if not _inside(u, boxes):
            raise ValueError("fluid-antenna positions must lie inside their regions")
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _boxes_intersect(boxes[i], boxes[j]):
                    raise ValueError(f"region boxes {i} and {j} intersect")
        object.__setattr__(self, "fa_positions", u)
        object.__setattr__(self, "fa_regions", boxes)
        object.__setattr__(self, "fpa_positions", v)

    @property
    def n_t(self) -> int:
        return self.fa_positions.shape[0]

    @property
    def centers(self) -> np.ndarray:
        b = self.fa_regions
        return np.column_stack([(b[:, 0] + b[:, 1]) / 2, (b[:, 2] + b[:, 3]) / 2])

    @property
    def lower(self) -> np.ndarray:
        """Flattened lower bounds matching ``fa_positions.ravel()``."""
        return self.fa_regions[:, [0, 2]].ravel()

    @property
    def upper(self) -> np.ndarray:
        return self.fa_regions[:, [1, 3]].ravel()

    def with_positions(self, u) -> "ArrayGeometry":
        return ArrayGeometry(np.asarray(u, dtype=float).reshape(-1, 2),
                             self.fa_regions, self.fpa_positions)

    def frozen(self) -> "ArrayGeometry":
        """Same antennas with every box shrunk to the current position."""
        u = self.fa_positions
        boxes = np.column_stack([u[:, 0], u[:, 0], u[:, 1], u[:, 1]])
        return ArrayGeometry(u, boxes, self.fpa_positions)


def _inside(u, boxes, tol=0.0) -> bool:
    return bool(np.all(u[:, 0] >= boxes[:, 0] - tol) and np.all(u[:, 0] <= boxes[:, 1] + tol)
                and np.all(u[:, 1] >= boxes[:, 2] - tol) and np.all(u[:, 1] <= boxes[:, 3] + tol))


def _boxes_intersect(a, b) -> bool:
    return a[0] <= b[1] and b[0] <= a[1] and a[2] <= b[3] and b[2] <= a[3]


def make_geometry(cfg: SystemConfig, region_area: Optional[float] = None) -> ArrayGeometry:
    """Square movable boxes centered on a ``fa_spacing`` grid, antennas at
    the box centers. ``region_area=0`` gives fixed-position antennas."""
    area = cfg.region_area if region_area is None else region_area
    side = math.sqrt(area)
    if side >= cfg.fa_spacing:
        raise ValueError(f"region side {side:.4g} m does not fit the "
                         f"{cfg.fa_spacing:.4g} m antenna spacing")
    centers = grid_positions(cfg.n_tx, cfg.n_tz, cfg.fa_spacing, cfg.fa_spacing)
    half = side / 2
    boxes = np.column_stack([centers[:, 0] - half, centers[:, 0] + half,
                             centers[:, 1] - half, centers[:, 1] + half])
    rx = grid_positions(cfg.n_rx, cfg.n_rz, cfg.d_x, cfg.d_z)
    return ArrayGeometry(centers, boxes, rx)


@dataclass(frozen=True)
class Scenario:
    """Node geometry and the random draws that fix the channel gains.

    Angles are ``(theta, phi)`` pairs in radians; ``scatter_*`` arrays have
    shape ``(L, N_s, ...)``.
    """

    user_angles: np.ndarray
    user_distances: np.ndarray
    user_phases: np.ndarray
    target_angles: np.ndarray
    target_distances: np.ndarray
    scatter_angles: np.ndarray
    scatter_phases: np.ndarray
    echo_phases: np.ndarray
    rcs: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.user_distances)

    @property
    def n_targets(self) -> int:
        return len(self.target_distances)

    @property
    def n_scatterers(self) -> int:
        return self.scatter_angles.shape[1]

    def subset(self, users=None, targets=None) -> "Scenario":
        """Keep only the given user / target indices."""
        ku = slice(None) if users is None else np.asarray(users)
        lt = slice(None) if targets is None else np.asarray(targets)
        return Scenario(self.user_angles[ku], self.user_distances[ku], self.user_phases[ku],
                        self.target_angles[lt], self.target_distances[lt],
                        self.scatter_angles[lt], self.scatter_phases[lt],
                        self.echo_phases[lt], self.rcs[lt])


def free_space_gain(distance, wavelength, phase):
    return wavelength / (4 * np.pi * np.asarray(distance)) * np.exp(1j * np.asarray(phase))


@dataclass(frozen=True)
class ChannelSet:
    """User and target channels for one antenna placement.

    ``h_users`` is ``(K, N_t)``, ``h_targets`` is ``(L, N_t)`` and ``echo``
    is the ``(N_r, N_t)`` matrix ``G``.
    """

    user_gains: np.ndarray
    user_angles: np.ndarray
    target_gains: np.ndarray
    echo_gains: np.ndarray
    scatter_angles: np.ndarray
    h_users: np.ndarray
    h_targets: np.ndarray
    echo: np.ndarray


def build_channels(cfg: SystemConfig, geo: ArrayGeometry, scenario: Scenario) -> ChannelSet:
    """Assemble user channels, aggregate target channels and the echo matrix."""
    if scenario.n_scatterers == 0:
        raise ValueError("each target needs at least one scatterer")
    lam = cfg.wavelength
    u = geo.fa_positions
    alpha = free_space_gain(scenario.user_distances, lam, scenario.user_phases)
    a_users = tx_steering_vector(scenario.user_angles[:, 0], scenario.user_angles[:, 1], u, lam)
    h_users = alpha[:, None] * a_users

    dist = scenario.target_distances[:, None]
    alpha_ls = free_space_gain(dist, lam, scenario.scatter_phases)
    beta_ls = scenario.rcs * free_space_gain(dist, lam, scenario.echo_phases)
    th, ph = scenario.scatter_angles[..., 0], scenario.scatter_angles[..., 1]
    a_t = tx_steering_vector(th, ph, u, lam)                       # (L, Ns, Nt)
    a_r = rx_steering_vector(th, ph, geo.fpa_positions, lam)        # (L, Ns, Nr)
    h_targets = np.einsum("ls,lsn->ln", alpha_ls, a_t)
    echo = np.einsum("ls,lsm,lsn->mn", beta_ls, a_r, a_t.conj())
    return ChannelSet(alpha, scenario.user_angles.copy(), alpha_ls, beta_ls,
                      scenario.scatter_angles.copy(), h_users, h_targets, echo)


def transmit_covariance(W, R_s) -> np.ndarray:
    """``sum_k W_k + R_s``.

    ``W`` may hold ``(K, N, N)`` beamforming matrices or ``(K, N)`` vectors,
    in which case their outer products are used.
    """
    W = np.asarray(W, dtype=complex)
    R_s = np.asarray(R_s, dtype=complex)
    if W.ndim == 2:
        W = np.einsum("ki,kj->kij", W, W.conj())
    if W.ndim != 3 or W.shape[1:] != R_s.shape or R_s.shape[0] != R_s.shape[1]:
        raise ValueError(f"dimension mismatch: W {W.shape} vs R_s {R_s.shape}")
    R = W.sum(axis=0) + R_s
    return (R + R.conj().T) / 2


@dataclass(frozen=True)
class BeamformingSolution:
    """Per-user beamforming matrices, optional rank-one vectors and the
    total transmit covariance."""

    W: np.ndarray
    R_x: np.ndarray
    w: Optional[np.ndarray] = field(default=None)

    @property
    def R_s(self) -> np.ndarray:
        return self.R_x - self.W.sum(axis=0)

    @property
    def n_users(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_vectors(cls, w, R_s) -> "BeamformingSolution":
        w = np.asarray(w, dtype=complex)
        W = np.einsum("ki,kj->kij", w, w.conj())
        return cls(W, transmit_covariance(W, R_s), w)

    @classmethod
    def from_matrices(cls, W, R_s) -> "BeamformingSolution":
        W = np.asarray(W, dtype=complex)
        return cls(W, transmit_covariance(W, R_s))

    def violations(self) -> dict[str, float]:
        """Hermitian asymmetry and smallest eigenvalues, for invariant checks."""
        R = self.R_x
        return {
            "hermitian": float(np.max(np.abs(R - R.conj().T))) if R.size else 0.0,
            "min_eig_R_x": float(np.linalg.eigvalsh((R + R.conj().T) / 2).min()),
            "min_eig_R_s": float(np.linalg.eigvalsh(_herm(self.R_s)).min()),
            "min_eig_W": float(min(np.linalg.eigvalsh(_herm(Wk)).min() for Wk in self.W)),
        }


def _herm(X):
    return (X + X.conj().T) / 2
