"""Reduced-rank channel estimation and prediction in the Slepian subspace.

Per subcarrier, least squares on the pilot rows of the basis yields the
subspace coefficients; a unitary IDFT across subcarriers moves them to the
delay domain, where only the first S taps carry signal. Prediction evaluates
the band-limited basis extension at future symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import to_frequency_response


@dataclass
class SubspaceEstimate:
    """Estimated subspace coefficients of one link.

    phi : ndarray, (d, n)
        Per-subcarrier coefficients.
    gamma : ndarray, (d, s)
        Delay-domain coefficients, first s taps of the IDFT of phi.
    """

    phi: np.ndarray
    gamma: np.ndarray

    @property
    def eta(self):
        """Stacked coefficients, tap-major: entries (s-1)d+1..sd hold tap s."""
        return self.gamma.T.reshape(-1)

    @classmethod
    def from_eta(cls, eta, d, n):
        gamma = eta.reshape(-1, d).T
        return cls(phi=from_delay_domain(gamma, n), gamma=gamma)


def estimate_coefficients(obs, basis, s):
    """Least-squares subspace coefficients from pilot observations.

    Solves G phi = U_pilot^T g' per subcarrier, with G the pilot Gram
    matrix of the basis, then truncates the delay domain to s taps.
    """
    rows = basis.pilot_rows()
    if rows.shape[0] != obs.values.shape[0]:
        raise ValueError("observation count does not match the pilot set")
    phi = basis.solve_gram(rows.T @ obs.values)
    return SubspaceEstimate(phi=phi, gamma=to_delay_domain(phi, s))


def to_delay_domain(phi, s):
    """First s delay taps of the unitary IDFT of per-subcarrier coefficients."""
    n = phi.shape[1]
    if s > n:
        raise ValueError("more taps than subcarriers")
    return np.sqrt(n) * np.fft.ifft(phi, axis=1)[:, :s]


def from_delay_domain(gamma, n):
    """Inverse of ``to_delay_domain`` for zero-padded taps."""
    d, s = gamma.shape
    padded = np.zeros((d, n), dtype=complex)
    padded[:, :s] = gamma
    return np.fft.fft(padded, axis=1) / np.sqrt(n)


def predict(est, basis, m):
    """Predicted channel at 1-based symbol m.

    Returns
    -------
    (h_hat, w_hat) : taps of shape (s,) and frequency response of shape (n,).
    """
    f = basis.f(m)
    h_hat = est.gamma.T @ f
    return h_hat, to_frequency_response(h_hat, est.phi.shape[1])


def predict_block(est, basis, indices):
    """Predicted frequency responses at several symbols, shape (len, n)."""
    taps = basis.f_block(indices) @ est.gamma
    return to_frequency_response(taps, est.phi.shape[1])


def mmse_predict(obs, autocov, p, m):
    """Linear MMSE prediction from the true temporal statistics.

    ``autocov`` is either a spectrum object with an ``autocovariance``
    method or a 1-D array of autocovariance values indexed by lag. Solves
    (R_pilot + I/p) x = r and returns x^H g' per subcarrier, shape (n,).
    """
    pos = np.asarray(obs.positions, dtype=int)
    if hasattr(autocov, "autocovariance"):
        acf = lambda lags: autocov.autocovariance(lags)
    else:
        arr = np.asarray(autocov, dtype=float)
        acf = lambda lags: arr[np.asarray(lags)]
    r_mat = acf(np.abs(np.subtract.outer(pos, pos)))
    r_vec = acf(np.abs(m - pos))
    ridge = 0.0 if np.isinf(p) else 1.0 / p
    lhs = r_mat + ridge * np.eye(pos.size)
    try:
        x = np.linalg.solve(lhs, r_vec)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(lhs, r_vec, rcond=None)[0]
    return x @ obs.values


def mse_analytic(m, d, snr, basis, spectrum):
    """Analytic per-subcarrier prediction MSE at symbol m.

    Sum of the squared bias of the band-limited interpolator, averaged over
    the Doppler spectrum, and the estimation-noise variance
    f^T G^{-1} f / snr. ``snr`` here is the effective pilot SNR of the
    quantity being predicted (N P / S for a unit-power tap).
    """
    return float(mse_block([m], d, snr, basis, spectrum)[0])


def mse_block(indices, d, snr, basis, spectrum):
    """Vectorized ``mse_analytic`` over several symbols."""
    basis = basis if basis.d == d else basis.restrict(d)
    indices = np.asarray(indices, dtype=int)
    f = basis.f_block(indices)
    a = basis.solve_gram(f.T)
    var = np.einsum("md,dm->m", f, a) / snr if not np.isinf(snr) else 0.0
    rows = basis.pilot_rows()
    weights = rows @ a  # interpolation weights per pilot, (m_p, len)
    delta = np.subtract.outer(indices, basis.pilot_set).astype(float)

    def integrand(nodes):
        phase = np.exp(-2j * np.pi * nodes[:, None, None] * delta[None, :, :])
        resp = np.einsum("qmp,pm->qm", phase, weights)
        return np.abs(1.0 - resp) ** 2

    bias = spectrum.average(integrand)
    return bias + var
