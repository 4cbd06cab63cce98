import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fa_iscsc.config import SystemConfig
from fa_iscsc.errors import DomainError, EmptyTargets, SingularCovariance
from fa_iscsc.metrics import (compute_power, crb, crb_normalized, evaluate, power_split,
                              secrecy_pairs, secrecy_rate, semantic_rate, sinr, worst_secrecy)
from fa_iscsc.model import BeamformingSolution

from .conftest import random_psd
from .oracles import frozen


def test_crb_identity():
    cfg = SystemConfig(noise_radar=1.0, frames=10, n_rx=7)
    assert crb(np.eye(5), cfg) == pytest.approx(3.5, rel=1e-14)


def test_crb_singular():
    with pytest.raises(SingularCovariance):
        crb_normalized(np.diag([1.0, 0.0]))


def test_isotropic_covariance_minimizes_inverse_trace():
    n, P = 4, 2.0
    iso = crb_normalized(P / n * np.eye(n))
    assert iso == pytest.approx(n * n / P)
    rng = np.random.default_rng(0)
    for _ in range(50):
        R = random_psd(rng, n) + 1e-3 * np.eye(n)
        R *= P / np.trace(R).real
        assert crb_normalized(R) >= iso - 1e-12


def test_crb_scaling_laws():
    cfg = SystemConfig()
    R = random_psd(np.random.default_rng(1), 5) + np.eye(5)
    base = crb(R, cfg)
    assert crb(R, cfg.replace(frames=64)) == pytest.approx(base / 2)
    assert crb(R, cfg.replace(noise_radar=3 * cfg.noise_radar)) == pytest.approx(3 * base)
    assert crb(R, cfg.replace(n_rx=3, n_rz=2)) == pytest.approx(base * 6 / 7)


@given(st.integers(0, 10_000))
def test_crb_monotone_in_psd_order(seed):
    rng = np.random.default_rng(seed)
    R = random_psd(rng, 3) + 0.1 * np.eye(3)
    R2 = R + random_psd(rng, 3, rank=1)
    assert crb_normalized(R2) <= crb_normalized(R) * (1 + 1e-12)


def test_sinr_single_user():
    P, noise = 2.0, 0.1
    sol = BeamformingSolution.from_vectors(np.array([[math.sqrt(P), 0]]), np.zeros((2, 2)))
    assert sinr(np.array([1, 0]), sol, 0, noise) == pytest.approx(P / noise)


def test_sinr_null_beam():
    sol = BeamformingSolution.from_vectors(np.array([[0, 1.0]]), np.eye(2))
    assert sinr(np.array([1.0, 0]), sol, 0, 0.1) == 0.0


def test_sinr_matches_direct_formula():
    rng = np.random.default_rng(12)
    w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    Rs = random_psd(rng, 3)
    h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    sol = BeamformingSolution.from_vectors(w, Rs)
    for k in range(2):
        sig = abs(sum(h[i].conjugate() * w[k, i] for i in range(3))) ** 2
        other = abs(sum(h[i].conjugate() * w[1 - k, i] for i in range(3))) ** 2
        sens = sum(h[i].conjugate() * Rs[i, j] * h[j] for i in range(3) for j in range(3)).real
        assert sinr(h, sol, k, 0.3) == pytest.approx(sig / (other + sens + 0.3), rel=1e-12)


def test_sinr_rejects_bad_inputs():
    sol = BeamformingSolution.from_vectors(np.array([[1.0, 0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        sinr(np.ones(3), sol, 0, 1.0)
    with pytest.raises(DomainError):
        sinr(np.ones(2), sol, 0, 0.0)


@given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.integers(0, 1000))
def test_sinr_phase_invariance(a, b, seed):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    base = sinr(h, BeamformingSolution.from_vectors(w, np.eye(3)), 0, 1.0)
    w2 = w * np.exp(1j * np.array([[a], [b]]))
    rotated = sinr(h * np.exp(1j * a), BeamformingSolution.from_vectors(w2, np.eye(3)), 0, 1.0)
    assert rotated == pytest.approx(base, rel=1e-10)


def test_semantic_rate_values():
    assert semantic_rate(1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert semantic_rate(1.0, 0.5, 1.0) == pytest.approx(2.0)
    assert semantic_rate(3.5, 0.8, 1.0) == pytest.approx(frozen.SEMANTIC_RATE_3_5, rel=1e-14)


def test_semantic_rate_domain():
    with pytest.raises(DomainError):
        semantic_rate(1.0, 0.05, 1.0, rho_lb=0.1)
    with pytest.raises(DomainError):
        semantic_rate(1.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        semantic_rate(-1.0, 0.5, 1.0)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0, 1e3), st.floats(0.1, 5))
def test_semantic_rate_decreasing_in_ratio(r1, r2, gamma, iota):
    lo, hi = sorted((r1, r2))
    assert semantic_rate(gamma, lo, iota) >= semantic_rate(gamma, hi, iota)
    assert semantic_rate(0.0, lo, iota) == 0.0


def test_secrecy_rate_examples():
    assert secrecy_rate(2.0, [3.0]) == 0.0
    assert secrecy_rate(2.0, [0.5, 1.2]) == pytest.approx(0.8)
    with pytest.raises(EmptyTargets):
        secrecy_rate(2.0, [])


@given(st.floats(0, 50), st.lists(st.floats(0, 50), min_size=1, max_size=5))
def test_secrecy_rate_bounds(rate, leakage):
    s = secrecy_rate(rate, leakage)
    assert 0.0 <= s <= rate


def test_report_matches_brute_force(default_case):
    c = default_case
    cfg, ch, sol = c["cfg"], c["channels"], c["solution"]
    rho = np.array([1.0, 0.9, 0.5, 0.7, 0.3])
    rep = evaluate(ch, sol, rho, cfg)
    s_best = math.inf
    for k in range(cfg.n_users):
        gk = sinr(ch.h_users[k], sol, k, cfg.noise_comm)
        rk = cfg.iota / rho[k] * math.log2(1 + gk)
        s_k = math.inf
        for l in range(cfg.n_targets):
            gl = sinr(ch.h_targets[l], sol, k, cfg.noise_comm)
            s_k = min(s_k, max(rk - cfg.iota / rho[k] * math.log2(1 + gl), 0.0))
        assert rep.secrecy[k] == pytest.approx(s_k, rel=1e-10, abs=1e-15)
        s_best = min(s_best, s_k)
    assert rep.s_min == pytest.approx(s_best, rel=1e-10, abs=1e-15)
    assert worst_secrecy(ch, sol.W, sol.R_x, rho, cfg) == pytest.approx(s_best, rel=1e-10)
    assert np.all(rep.secrecy <= rep.rate + 1e-15)
    assert rep.crb_value > 0 and rep.p_comp >= 0


def test_secrecy_pairs_shape(default_case):
    c = default_case
    pairs = secrecy_pairs(c["channels"], c["solution"].W, c["solution"].R_x, c["rho"], c["cfg"])
    assert pairs.shape == (5, 2)


def test_power_split():
    sol = BeamformingSolution.from_vectors(np.array([[1.0, 1.0]]), np.eye(2))
    p_cs, p_comp = power_split(sol, [1.0], 0.01)
    assert p_cs == pytest.approx(4.0) and p_comp == 0.0
    assert compute_power([math.exp(-1)], 0.01) == pytest.approx(0.01)
    with pytest.raises(DomainError):
        compute_power([0.0], 0.01)


def test_compute_power_matches_summation():
    rho = np.random.default_rng(9).uniform(0.1, 1.0, 5)
    expected = -0.01 * math.fsum(math.log(r) for r in rho)
    assert compute_power(rho, 0.01) == pytest.approx(expected, abs=1e-14)
