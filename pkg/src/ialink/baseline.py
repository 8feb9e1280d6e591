"""Static impulse-response feedback baseline.

The receiver averages the full-rank delay-domain estimates over the pilot
window, feeds back the direction of the averaged impulse response, and the
transmitters design the alignment once, holding it over the whole payload.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import feedback, ia, solver
from .channel import to_frequency_response, unitary_dft


@dataclass
class CirEstimate:
    """Static channel impulse response summary of one link.

    h_avg : ndarray, (s,)
        Mean delay-domain estimate over the pilot indices.
    """

    h_avg: np.ndarray

    @property
    def direction(self):
        norm = np.linalg.norm(self.h_avg)
        if norm == 0:
            raise ValueError("zero impulse response has no direction")
        return self.h_avg / norm


def estimate_static_cir(obs, s):
    """Average the per-pilot least-squares impulse responses.

    Each pilot observation is mapped back to the delay domain with the
    truncated unitary DFT and the results are averaged into one static
    impulse response. Equals interpolating with a full-dimension subspace
    whenever that Gram matrix is invertible, but stays well behaved at
    small Doppler where it is not.
    """
    values = np.asarray(obs.values)
    n = values.shape[1]
    taps = values @ unitary_dft(n)[:, :s].conj()
    return CirEstimate(h_avg=taps.mean(axis=0))


def quantize_static(cir, n_d, quantizer, rng):
    """Quantized unit direction of the static impulse response.

    Uses the same direction quantizers as the subspace feedback, with
    effective dimension s. Magnitude is not fed back; alignment is
    invariant to per-link scaling.
    """
    direction = cir.direction
    if quantizer == "perturbation":
        return feedback.quantize_perturbation(direction, n_d, rng)
    if quantizer == "explicit-rvq":
        book = feedback.Codebook.random(n_d, direction.size, rng)
        return quantize_with_book(direction, book)
    raise ValueError(f"unknown quantizer {quantizer!r}")


def quantize_with_book(direction, book):
    _, word = feedback.quantize_explicit(direction, book)
    return word


def baseline_rate(recon, w_true, cfg, pool=None):
    """Rate of alignment designed once from static quantized responses.

    Parameters
    ----------
    recon : array, (users, users, s)
        Quantized static impulse response of every link.
    w_true : array, (frames, users, users, n)
        True payload channels the fixed design is evaluated against.
    pool : rotation candidates; identity only when omitted.

    Returns
    -------
    (rates, i1, i2, ok): per-frame sum rate and leakage, and the design
    validity flag.
    """
    d_alloc = ia.stream_allocation(cfg.users, cfg.n)
    if pool is None:
        pool = [np.eye(dk, dtype=complex)[None] for dk in d_alloc]
    design = to_frequency_response(np.asarray(recon), cfg.n)[None]
    v, u, ok = solver.solve_frames(design, d_alloc, pool, cfg.p)
    frames = w_true.shape[0]
    sol = ia.IaSolution(v=np.repeat(v, frames, axis=0),
                        u=np.repeat(u, frames, axis=0),
                        d=tuple(d_alloc))
    rates = ia.sum_rate(sol, w_true, cfg.p)
    i1, i2 = ia.leakage(sol, w_true, cfg.p)
    return rates, i1, i2, bool(ok[0])
