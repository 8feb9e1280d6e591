"""Subspace estimation, delay-domain transforms, and prediction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ialink.channel import (LinkChannel, generate_link, observe_pilots,
                            pilot_positions, spectrum_for,
                            to_frequency_response)
from ialink.config import SimConfig
from ialink.dps import compute_basis
from ialink.predictor import (SubspaceEstimate, estimate_coefficients,
                              from_delay_domain, mmse_predict, mse_analytic,
                              mse_block, predict, predict_block,
                              to_delay_domain)

PILOTS = np.asarray([1, 4, 7])


def _subspace_link(basis, gamma, n):
    """Channel whose taps live exactly in the basis span."""
    taps = basis.u_ext[:, :gamma.shape[0]] @ gamma
    return LinkChannel(taps=taps, freq=to_frequency_response(taps, n),
                       nu_d=basis.nu_d)


def test_delay_domain_round_trip(rng):
    gamma = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    phi = from_delay_domain(gamma, 5)
    np.testing.assert_allclose(to_delay_domain(phi, 3), gamma, atol=1e-12)


def test_delay_domain_rejects_excess_taps(rng):
    phi = rng.standard_normal((2, 5)) + 0j
    with pytest.raises(ValueError):
        to_delay_domain(phi, 6)


def test_eta_layout_is_tap_major(rng):
    gamma = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    est = SubspaceEstimate(phi=from_delay_domain(gamma, 5), gamma=gamma)
    eta = est.eta
    # entries (i d .. i d + d - 1) hold tap i across basis dimensions
    for tap in range(3):
        np.testing.assert_array_equal(eta[tap * 2:(tap + 1) * 2],
                                      gamma[:, tap])


def test_from_eta_round_trip(rng):
    gamma = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    est = SubspaceEstimate(phi=from_delay_domain(gamma, 5), gamma=gamma)
    back = SubspaceEstimate.from_eta(est.eta, 3, 5)
    np.testing.assert_allclose(back.gamma, gamma, atol=1e-12)
    np.testing.assert_allclose(back.phi, est.phi, atol=1e-12)


def test_noiseless_in_subspace_recovery(rng):
    # a channel synthesized inside the span must be recovered exactly
    basis = compute_basis(9, 0.05, 14, PILOTS, 2)
    gamma = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    link = _subspace_link(basis, gamma, 5)
    obs = observe_pilots(link, PILOTS, np.inf, rng)
    est = estimate_coefficients(obs, basis, 3)
    np.testing.assert_allclose(est.gamma, gamma, atol=1e-9)


def test_noiseless_prediction_matches_truth(rng):
    basis = compute_basis(9, 0.05, 14, PILOTS, 2)
    gamma = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    link = _subspace_link(basis, gamma, 5)
    obs = observe_pilots(link, PILOTS, np.inf, rng)
    est = estimate_coefficients(obs, basis, 3)
    for m in (3, 9, 12, 14):      # inside and past the window
        h_hat, w_hat = predict(est, basis, m)
        np.testing.assert_allclose(h_hat, link.taps[m - 1], atol=1e-9)
        np.testing.assert_allclose(w_hat, link.freq[m - 1], atol=1e-9)
    block = predict_block(est, basis, [10, 14])
    np.testing.assert_allclose(block, link.freq[[9, 13]], atol=1e-9)


def test_observation_count_mismatch(rng):
    basis = compute_basis(9, 0.05, 14, PILOTS, 2)
    cfg = SimConfig(m=9, t=5, nu_d=0.05)
    link = generate_link(cfg, rng)
    obs = observe_pilots(link, np.asarray([1, 4]), np.inf, rng)
    with pytest.raises(ValueError):
        estimate_coefficients(obs, basis, 3)


def test_mmse_interpolates_pilots_noiselessly(rng):
    cfg = SimConfig(m=9, t=5, nu_d=0.05)
    link = generate_link(cfg, rng)
    pos = pilot_positions(1, cfg)
    obs = observe_pilots(link, pos, np.inf, rng)
    spec = spectrum_for(cfg.spectrum, cfg.nu_d)
    # with zero ridge the predictor at a pilot index returns the sample
    out = mmse_predict(obs, spec, np.inf, int(pos[1]))
    np.testing.assert_allclose(out, obs.values[1], atol=1e-8)


def test_mmse_accepts_autocovariance_array(rng):
    cfg = SimConfig(m=9, t=5, nu_d=0.05)
    link = generate_link(cfg, rng)
    pos = pilot_positions(1, cfg)
    obs = observe_pilots(link, pos, 100.0, rng)
    spec = spectrum_for(cfg.spectrum, cfg.nu_d)
    arr = spec.autocovariance(np.arange(cfg.horizon))
    a = mmse_predict(obs, spec, 100.0, 11)
    b = mmse_predict(obs, arr, 100.0, 11)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_mse_block_matches_scalar():
    basis = compute_basis(9, 0.05, 14, PILOTS, 2)
    spec = spectrum_for("clarke", 0.05)
    block = mse_block([10, 12, 14], 2, 50.0, basis, spec)
    for i, m in enumerate((10, 12, 14)):
        assert abs(block[i] - mse_analytic(m, 2, 50.0, basis, spec)) < 1e-12


def test_mse_noise_term_scales_with_snr():
    basis = compute_basis(9, 0.05, 14, PILOTS, 2)
    spec = spectrum_for("clarke", 0.05)
    hi = mse_analytic(12, 2, np.inf, basis, spec)
    lo = mse_analytic(12, 2, 10.0, basis, spec)
    mid = mse_analytic(12, 2, 100.0, basis, spec)
    assert hi < mid < lo
    # the gap to the bias floor is exactly the 1/snr noise variance
    assert abs((lo - hi) - 10.0 * (mid - hi)) < 1e-9 * lo


def test_mse_grows_with_prediction_depth():
    # holds while the prediction depth stays well inside a Doppler period
    basis = compute_basis(9, 0.01, 20, PILOTS, 2)
    spec = spectrum_for("clarke", 0.01)
    vals = mse_block([10, 13, 16, 20], 2, np.inf, basis, spec)
    assert np.all(np.diff(vals) > 0)


def test_mse_analytic_against_monte_carlo():
    # per-tap normalized error power should match the analytic value;
    # flat profile makes every tap's power n/s
    cfg = SimConfig(m=9, t=4, nu_d=0.05, p=100.0, seed=0)
    d = 2
    pos = pilot_positions(1, cfg)
    basis = compute_basis(cfg.m, cfg.nu_d, cfg.horizon, pos, d)
    spec = spectrum_for(cfg.spectrum, cfg.nu_d)
    snr = cfg.n * cfg.p / cfg.s
    analytic = mse_block(cfg.payload_indices, d, snr, basis, spec)

    rng = np.random.default_rng(42)
    trials = 4000
    acc = np.zeros(cfg.t)
    for _ in range(trials):
        link = generate_link(cfg, rng)
        obs = observe_pilots(link, pos, cfg.p, rng)
        est = estimate_coefficients(obs, basis, cfg.s)
        taps_hat = basis.f_block(cfg.payload_indices) @ est.gamma
        err = taps_hat - link.taps[cfg.payload_indices - 1]
        acc += (np.abs(err) ** 2).mean(axis=1)
    mc = acc / trials / (cfg.n / cfg.s)
    np.testing.assert_allclose(mc, analytic, rtol=0.12)


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 4), s=st.integers(1, 5), extra=st.integers(0, 4),
       seed=st.integers(0, 2 ** 16))
def test_delay_round_trip_random(d, s, extra, seed):
    n = s + extra
    r = np.random.default_rng(seed)
    gamma = r.standard_normal((d, s)) + 1j * r.standard_normal((d, s))
    np.testing.assert_allclose(
        to_delay_domain(from_delay_domain(gamma, n), s), gamma, atol=1e-10)
