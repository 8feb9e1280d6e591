"""Time-variant frequency-flat tap channels and their pilot observations.

Each link carries S delay taps evolving as stationary band-limited Gaussian
processes; the frequency response over the N-point symbol extension follows
through a unitary DFT. Trajectories are synthesized by coloring i.i.d.
complex Gaussians with a factor of the temporal covariance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import j0


@lru_cache(maxsize=32)
def unitary_dft(n):
    """Unitary N x N DFT matrix, [D]_ij = exp(-2j pi (i-1)(j-1)/N) / sqrt(N)."""
    idx = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n) / np.sqrt(n)


def to_frequency_response(taps, n):
    """Map delay taps to the frequency response over n subcarriers.

    Parameters
    ----------
    taps : array, shape (..., s)
    n : int
        Subcarriers, n >= s.

    Returns
    -------
    array, shape (..., n)
    """
    taps = np.asarray(taps)
    s = taps.shape[-1]
    if s > n:
        raise ValueError("more taps than subcarriers")
    return taps @ unitary_dft(n)[:, :s].T


class ClarkeSpectrum:
    """Isotropic-scattering Doppler spectrum with maximum frequency nu_d."""

    def __init__(self, nu_d):
        if not 0.0 <= nu_d < 0.5:
            raise ValueError("nu_d must lie in [0, 1/2)")
        self.nu_d = float(nu_d)

    def autocovariance(self, lags):
        return j0(2.0 * np.pi * self.nu_d * np.asarray(lags, dtype=float))

    def _nodes(self, nq):
        # Gauss-Chebyshev midpoints absorb the 1/sqrt(1-(f/nu)^2) weight
        theta = (np.arange(nq) + 0.5) * np.pi / nq
        return self.nu_d * np.cos(theta)

    def average(self, fn, rtol=1e-8):
        """Spectral average E_nu[fn(nu)] by adaptive node doubling.

        ``fn`` maps an array of frequencies to an array whose leading axis
        runs over those frequencies; averaging is along that axis.
        """
        return _adaptive_average(self._nodes, fn, rtol, self.nu_d)


class FlatSpectrum:
    """Rectangular Doppler spectrum, uniform over [-nu_d, nu_d]."""

    def __init__(self, nu_d):
        if not 0.0 <= nu_d < 0.5:
            raise ValueError("nu_d must lie in [0, 1/2)")
        self.nu_d = float(nu_d)

    def autocovariance(self, lags):
        return np.sinc(2.0 * self.nu_d * np.asarray(lags, dtype=float))

    def _nodes(self, nq):
        step = 2.0 * self.nu_d / nq
        return -self.nu_d + (np.arange(nq) + 0.5) * step

    def average(self, fn, rtol=1e-8):
        return _adaptive_average(self._nodes, fn, rtol, self.nu_d)


def _adaptive_average(nodes_of, fn, rtol, nu_d):
    if nu_d == 0.0:
        return np.mean(fn(np.zeros(1)), axis=0)
    prev = None
    nq = 64
    while nq <= 1 << 21:
        cur = np.mean(fn(nodes_of(nq)), axis=0)
        if prev is not None:
            err = np.max(np.abs(cur - prev) / (np.abs(cur) + 1e-12))
            if err <= rtol:
                return cur
        prev = cur
        nq *= 2
    raise RuntimeError("spectral quadrature failed to converge")


def spectrum_for(name, nu_d):
    if name == "clarke":
        return ClarkeSpectrum(nu_d)
    if name == "flat":
        return FlatSpectrum(nu_d)
    raise ValueError(f"unknown spectrum {name!r}")


@lru_cache(maxsize=64)
def _temporal_factor(length, nu_key, spectrum):
    # factor F with F F^T = clamped Toeplitz covariance of the tap process
    spec = spectrum_for(spectrum, nu_key)
    row = spec.autocovariance(np.arange(length))
    cov = toeplitz(row)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)  # covariance is PSD up to roundoff
    return evecs * np.sqrt(evals)


@dataclass
class LinkChannel:
    """One link's trajectory: delay taps and frequency response per symbol.

    ``taps`` has shape (horizon, s) and ``freq`` shape (horizon, n); row m-1
    is the channel at 1-based time index m.
    """

    taps: np.ndarray
    freq: np.ndarray
    nu_d: float

    @property
    def horizon(self):
        return self.taps.shape[0]


def generate_link(cfg, rng):
    """Draw one link trajectory over the configured horizon.

    Tap s has variance pdp[s]; taps are mutually independent with common
    temporal autocovariance set by ``cfg.spectrum`` and ``cfg.nu_d``.
    """
    length = cfg.horizon
    factor = _temporal_factor(length, float(cfg.nu_d), cfg.spectrum)
    white = rng.standard_normal((2, length, cfg.s))
    z = (white[0] + 1j * white[1]) / np.sqrt(2.0)
    taps = (factor @ z) * np.sqrt(np.asarray(cfg.pdp))
    return LinkChannel(taps=taps, freq=to_frequency_response(taps, cfg.n), nu_d=cfg.nu_d)


def pilot_positions(k, cfg):
    """1-based pilot time indices of transmitter k under round-robin sharing.

    Transmitter k sounds at symbols k, k+K, k+2K, ... within the window
    1..m, so each of the K transmitters gets m/K pilots.
    """
    if not 1 <= k <= cfg.users:
        raise ValueError(f"transmitter index {k} outside 1..{cfg.users}")
    return k + cfg.users * np.arange(cfg.m_p)


@dataclass
class PilotObservation:
    """Noisy frequency-response snapshots at a set of pilot symbols.

    positions : 1-based time indices, shape (m_p,)
    values : observed responses, shape (m_p, n)
    """

    positions: np.ndarray
    values: np.ndarray


def observe_pilots(link, positions, p, rng):
    """Observe ``link`` at the given 1-based symbols with SNR ``p``.

    The observation is freq[m] + z/sqrt(p) with z unit-variance complex
    Gaussian; p=inf gives exact observations while consuming the identical
    RNG stream.
    """
    positions = np.asarray(positions, dtype=int)
    if positions.size == 0:
        raise ValueError("empty pilot position set")
    if positions.min() < 1 or positions.max() > link.horizon:
        raise ValueError("pilot positions outside the simulated horizon")
    white = rng.standard_normal((2, positions.size, link.freq.shape[1]))
    noise = (white[0] + 1j * white[1]) / np.sqrt(2.0)
    scale = 0.0 if np.isinf(p) else 1.0 / np.sqrt(p)
    return PilotObservation(positions=positions.copy(),
                            values=link.freq[positions - 1] + scale * noise)
