import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fa_iscsc.config import SystemConfig
from fa_iscsc.harness.scenario import generate_scenario
from fa_iscsc.model import (ArrayGeometry, BeamformingSolution, Scenario, build_channels,
                            grid_positions, make_geometry, rx_steering_vector,
                            transmit_covariance, tx_steering_vector)

from .conftest import random_psd
from .oracles import frozen

LAM = SystemConfig().wavelength
angles = st.floats(-np.pi, np.pi, allow_nan=False)
coords = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=8)


class TestSteering:
    def test_single_antenna_at_origin(self):
        np.testing.assert_allclose(tx_steering_vector(0.3, 1.1, [(0, 0)], LAM), [1 + 0j])

    def test_half_wavelength_gives_phase_pi(self):
        a = tx_steering_vector(0.0, np.pi / 2, [(LAM / 2, 0)], LAM)
        np.testing.assert_allclose(a, [-1 + 0j], atol=1e-15)

    def test_two_antennas_against_high_precision_evaluation(self):
        a = tx_steering_vector(np.pi / 4, np.pi / 3, [(0, 0), (LAM / 4, LAM / 4)], LAM)
        np.testing.assert_allclose(a, frozen.TX_TWO_FA, atol=1e-14)

    def test_receive_grid_origin(self):
        np.testing.assert_allclose(rx_steering_vector(0.7, 0.2, [(0, 0)], LAM), [1 + 0j])

    def test_broadside_removes_z_dependence(self):
        pos = grid_positions(3, 4, LAM / 2, LAM / 2)
        a = rx_steering_vector(0.4, np.pi / 2, pos, LAM).reshape(3, 4)
        np.testing.assert_allclose(a, a[:, :1] * np.ones((1, 4)), atol=1e-12)

    def test_seven_element_grid_against_high_precision_evaluation(self):
        pos = grid_positions(7, 1, LAM / 2, LAM / 2)
        a = rx_steering_vector(np.pi / 6, np.pi / 3, pos, LAM)
        np.testing.assert_allclose(a, frozen.RX_SEVEN, atol=1e-13)

    def test_grid_matches_kronecker_product(self):
        theta, phi = 0.37, 1.2
        pos = grid_positions(3, 2, LAM / 2, LAM / 3)
        ax = np.exp(2j * np.pi / LAM * np.arange(3) * LAM / 2 * np.cos(theta) * np.sin(phi))
        az = np.exp(2j * np.pi / LAM * np.arange(2) * LAM / 3 * np.cos(phi))
        np.testing.assert_allclose(tx_steering_vector(theta, phi, pos, LAM), np.kron(ax, az))

    def test_broadcasts_over_angles(self):
        pos = grid_positions(4, 1, LAM / 2, LAM / 2)
        a = tx_steering_vector(np.zeros((2, 3)), np.full((2, 3), 1.0), pos, LAM)
        assert a.shape == (2, 3, 4)

    @given(angles, angles, coords)
    def test_unit_modulus_and_norm(self, theta, phi, pos):
        a = tx_steering_vector(theta, phi, pos, LAM)
        np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-12)
        assert np.vdot(a, a).real == pytest.approx(len(pos), rel=1e-12)

    @given(coords)
    def test_all_ones_when_both_direction_cosines_vanish(self, pos):
        a = tx_steering_vector(np.pi / 2, np.pi / 2, pos, LAM)
        np.testing.assert_allclose(a, np.ones(len(pos)), atol=1e-9)


class TestGeometry:
    def test_default_boxes(self, cfg):
        geo = make_geometry(cfg)
        b = geo.fa_regions
        area = (b[:, 1] - b[:, 0]) * (b[:, 3] - b[:, 2])
        assert geo.n_t == 5
        np.testing.assert_allclose(area, 0.0025)
        np.testing.assert_allclose(geo.fa_positions, geo.centers)

    def test_rejects_position_outside_box(self):
        with pytest.raises(ValueError, match="inside"):
            ArrayGeometry([[1.0, 0.0]], [[0, 0.5, 0, 0.5]], [[0, 0]])

    def test_rejects_overlapping_boxes(self):
        with pytest.raises(ValueError, match="intersect"):
            ArrayGeometry([[0, 0], [0.1, 0]], [[-0.1, 0.1, -0.1, 0.1], [0, 0.2, -0.1, 0.1]],
                          [[0, 0]])

    def test_rejects_box_too_large_for_spacing(self, cfg):
        with pytest.raises(ValueError, match="spacing"):
            make_geometry(cfg, region_area=0.01)

    def test_frozen_boxes_are_points(self, cfg):
        geo = make_geometry(cfg).frozen()
        np.testing.assert_array_equal(geo.lower, geo.upper)

    def test_bounds_follow_position_order(self, cfg):
        geo = make_geometry(cfg)
        u = geo.fa_positions.ravel()
        assert np.all(geo.lower <= u) and np.all(u <= geo.upper)


class TestChannels:
    def test_degenerate_arrays_give_unit_echo(self):
        cfg = SystemConfig(n_tx=1, n_rx=1, frames=2, n_users=1, n_targets=1, n_scatterers=1)
        geo = ArrayGeometry([[0, 0]], [[0, 0, 0, 0]], [[0, 0]])
        d = cfg.wavelength / (4 * np.pi)        # unit free-space amplitude
        sc = Scenario(np.array([[0.1, 1.0]]), np.array([d]), np.zeros(1),
                      np.array([[0.2, 1.1]]), np.array([d]), np.array([[[0.2, 1.1]]]),
                      np.zeros((1, 1)), np.zeros((1, 1)), np.ones((1, 1)))
        ch = build_channels(cfg, geo, sc)
        np.testing.assert_allclose(ch.echo, [[1.0]], atol=1e-15)

    def test_rejects_targets_without_scatterers(self, cfg):
        geo, sc = generate_scenario(cfg.replace(n_scatterers=0), 0)
        with pytest.raises(ValueError, match="scatterer"):
            build_channels(cfg, geo, sc)

    def test_user_channel_is_gain_times_steering(self, cfg):
        geo, sc = generate_scenario(cfg, 1)
        ch = build_channels(cfg, geo, sc)
        for k in range(cfg.n_users):
            a = tx_steering_vector(*sc.user_angles[k], geo.fa_positions, cfg.wavelength)
            np.testing.assert_allclose(ch.h_users[k], ch.user_gains[k] * a, rtol=1e-13)

    def test_target_channel_and_echo_are_scatterer_sums(self, cfg):
        geo, sc = generate_scenario(cfg, 2)
        ch = build_channels(cfg, geo, sc)
        G = np.zeros((cfg.n_r, cfg.n_t), dtype=complex)
        for l in range(cfg.n_targets):
            h = np.zeros(cfg.n_t, dtype=complex)
            for s in range(cfg.n_scatterers):
                th, ph = sc.scatter_angles[l, s]
                at = tx_steering_vector(th, ph, geo.fa_positions, cfg.wavelength)
                ar = rx_steering_vector(th, ph, geo.fpa_positions, cfg.wavelength)
                h += ch.target_gains[l, s] * at
                G += ch.echo_gains[l, s] * np.outer(ar, at.conj())
            np.testing.assert_allclose(ch.h_targets[l], h, rtol=1e-12)
        np.testing.assert_allclose(ch.echo, G, rtol=1e-12)

    def test_echo_rank_bound(self, cfg):
        c = cfg.replace(n_targets=1, n_scatterers=2)
        geo, sc = generate_scenario(c, 4)
        G = build_channels(c, geo, sc).echo
        assert np.linalg.matrix_rank(G, tol=1e-12 * np.abs(G).max()) <= 2

    def test_deterministic(self, cfg):
        geo, sc = generate_scenario(cfg, 5)
        a, b = build_channels(cfg, geo, sc), build_channels(cfg, geo, sc)
        assert np.array_equal(a.h_users, b.h_users) and np.array_equal(a.echo, b.echo)


class TestTransmitCovariance:
    def test_identity_sensing_only(self):
        np.testing.assert_array_equal(transmit_covariance(np.zeros((2, 3, 3)), np.eye(3)),
                                      np.eye(3))

    def test_rank_one_vector(self):
        R = transmit_covariance(np.array([[1.0, 0.0]]), np.zeros((2, 2)))
        np.testing.assert_array_equal(R, [[1, 0], [0, 0]])

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(7)
        W = np.stack([random_psd(rng, 4) for _ in range(3)])
        Rs = random_psd(rng, 4)
        expected = Rs.copy()
        for Wk in W:
            for i in range(4):
                for j in range(4):
                    expected[i, j] += Wk[i, j]
        np.testing.assert_allclose(transmit_covariance(W, Rs), expected, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            transmit_covariance(np.zeros((2, 3, 3)), np.eye(4))

    def test_solution_views(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        sol = BeamformingSolution.from_vectors(w, np.eye(3))
        np.testing.assert_allclose(sol.R_s, np.eye(3), atol=1e-12)
        v = sol.violations()
        assert v["hermitian"] < 1e-12 and v["min_eig_R_s"] > 0.99
