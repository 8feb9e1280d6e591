"""Closed-form leakage and rate-loss bounds, and subspace-dimension choice.

Everything here is deterministic: prediction error enters through the
analytic subspace MSE, quantization through the expected chordal
distortion of an optimal direction codebook. The adaptive dimension rule
minimizes the rate-loss bound over the dimensions the unquantized rule
admits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dps, feedback, ia, predictor
from .channel import spectrum_for


def q_bound(n_d, ds):
    """Upper bound on the expected squared chordal quantization error.

    Gamma(1/(ds-1)) / (ds-1) * 2^(-n_d/(ds-1)) for a ds-dimensional
    direction quantized with n_d bits; a one-dimensional direction incurs
    no error.
    """
    if ds < 1:
        raise ValueError("dimension must be >= 1")
    if ds == 1:
        return 0.0
    c = ds - 1
    return math.gamma(1.0 / c) / c * 2.0 ** (-n_d / c)


def _pilot_key(cfg):
    # earliest pilot pattern: largest payload lag, hence the conservative
    # choice for a bound shared across links
    return tuple(range(1, cfg.m + 1, cfg.users))


def _basis(cfg, d, pilot_key=None):
    if pilot_key is None:
        pilot_key = _pilot_key(cfg)
    return dps.cached_basis(cfg.m, float(cfg.nu_d), cfg.horizon, pilot_key, d)


def mse_profile(cfg, d, indices=None, pilot_key=None):
    """Analytic prediction MSE over the payload (or given 1-based indices)."""
    basis = _basis(cfg, d, pilot_key)
    if indices is None:
        indices = cfg.payload_indices
    spec = spectrum_for(cfg.spectrum, cfg.nu_d)
    return predictor.mse_block(indices, d, cfg.n * cfg.p / cfg.s, basis, spec)


def zeta_profile(cfg, d, indices=None, pilot_key=None):
    """Per-symbol quantization leverage f^T lam f of the coefficient error.

    ``lam`` is the noise-inclusive per-tap coefficient covariance; with a
    non-flat profile the worst tap is taken, which is tight for the flat
    one.
    """
    basis = _basis(cfg, d, pilot_key)
    if indices is None:
        indices = cfg.payload_indices
    stats = feedback.coefficient_covariance(basis, cfg.pdp, cfg.p)
    f = basis.f_block(indices)
    vals = np.einsum("md,sde,me->sm", f, stats.lam, f)
    return vals.max(axis=0)


def prediction_leakage_bound(m, d, cfg, q_sq=1.0):
    """Bound on interference power leaked by prediction error at symbol m.

    Returns one value per transmitting user l:
    n^2 p / (s d_l) * E||q||^2 * mse(m).
    """
    mse = float(mse_profile(cfg, d, [m])[0])
    alloc = np.asarray(ia.stream_allocation(cfg.users, cfg.n), dtype=float)
    return cfg.n ** 2 * cfg.p / (cfg.s * alloc) * q_sq * mse


def quantization_leakage_bound(m, d, cfg, q_sq=1.0):
    """Bound on interference power leaked by quantization at symbol m.

    Returns one value per transmitting user l:
    n p ds / (d_l (ds - 1)) * E||q||^2 * zeta(m) * q_bound. Zero when the
    stacked dimension is 1.
    """
    ds = d * cfg.s
    alloc = np.asarray(ia.stream_allocation(cfg.users, cfg.n), dtype=float)
    if ds == 1:
        return np.zeros_like(alloc)
    zeta = float(zeta_profile(cfg, d, [m])[0])
    return (cfg.n * cfg.p * ds / (alloc * (ds - 1.0))
            * q_sq * zeta * q_bound(cfg.n_d, ds))


def _loss_sum(cfg, arg):
    """(1/(n t)) sum_k sum_m d_k log2(1 + n p (K - 1/d_k) arg[m])."""
    alloc = ia.stream_allocation(cfg.users, cfg.n)
    total = 0.0
    for d_k in alloc:
        gain = cfg.n * cfg.p * (cfg.users - 1.0 / d_k)
        total += d_k * np.sum(np.log2(1.0 + gain * arg))
    return float(total / (cfg.n * cfg.t))


def rate_loss_upper_bound(cfg, d, q_sq=1.0):
    """Sum-rate loss bound of the feedback chain at dimension d."""
    ds = d * cfg.s
    arg = (cfg.n / cfg.s) * mse_profile(cfg, d) * q_sq
    if ds > 1:
        arg = arg + ds / (ds - 1.0) * zeta_profile(cfg, d) * q_bound(cfg.n_d, ds) * q_sq
    return _loss_sum(cfg, arg)


def rate_loss_terms(cfg, d, q_sq=1.0):
    """Prediction-only and quantization-only rate-loss terms.

    Their sum dominates ``rate_loss_upper_bound`` since the log splits
    subadditively.
    """
    ds = d * cfg.s
    pred = _loss_sum(cfg, (cfg.n / cfg.s) * mse_profile(cfg, d) * q_sq)
    if ds == 1:
        return pred, 0.0
    rho = zeta_profile(cfg, d) / (ds - 1.0)
    quant = _loss_sum(cfg, ds * rho * q_bound(cfg.n_d, ds) * q_sq)
    return pred, quant


def adaptive_sds(cfg):
    """Dimension minimizing the rate-loss bound, and that bound.

    Candidates run from 1 to the unquantized optimum; ties keep the
    smaller dimension. Numerically rejected dimensions are skipped.
    """
    d_cap = dps.optimal_dimension_unquantized(cfg.m, cfg.nu_d, cfg.p)
    d_cap = min(d_cap, cfg.m_p)
    best_d, best_val = None, math.inf
    for d in range(1, d_cap + 1):
        try:
            val = rate_loss_upper_bound(cfg, d)
        except dps.DimensionRejected:
            continue
        if val < best_val:
            best_d, best_val = d, val
    if best_d is None:
        raise dps.DimensionRejected("no usable subspace dimension")
    return best_d, best_val


def rate_lower_bound(perfect_mean, dr_ub):
    """Guaranteed rate under limited feedback: perfect-CSI mean minus loss."""
    return perfect_mean - dr_ub


@dataclass
class BoundRow:
    axis: str
    value: float
    d: int
    dr_ub: float
    pred_term: float
    quant_term: float
    chosen: bool


def bound_table(cfg, axis, grid):
    """Rate-loss bound rows over a parameter grid, one row per dimension.

    ``axis`` is snr_db, n_bits or nu_d; dimensions run from 1 to the
    unquantized optimum of each point, with the bound-minimizing one
    flagged.
    """
    rows = []
    for value in grid:
        if axis == "snr_db":
            sub = cfg.replace(snr_db=float(value))
        elif axis == "n_bits":
            sub = cfg.replace(n_d=int(value))
        elif axis == "nu_d":
            sub = cfg.replace(nu_d=float(value))
        else:
            raise ValueError(f"unknown bound axis {axis!r}")
        d_star, _ = adaptive_sds(sub)
        d_cap = min(dps.optimal_dimension_unquantized(sub.m, sub.nu_d, sub.p),
                    sub.m_p)
        for d in range(1, d_cap + 1):
            try:
                dr = rate_loss_upper_bound(sub, d)
                pred, quant = rate_loss_terms(sub, d)
            except dps.DimensionRejected:
                continue
            rows.append(BoundRow(axis=axis, value=float(value), d=d, dr_ub=dr,
                                 pred_term=pred, quant_term=quant,
                                 chosen=(d == d_star)))
    return rows
