"""Vectorized per-frame alignment solver, pure numpy.

Implements the same construction as the reference module but batched over
payload frames: closed-form precoders, orthonormalization, zero-forcing
decoders through the orthogonal complement of the aligned interference,
and the per-user rotation search. The compiled extension mirrors this
algorithm frame by frame.
"""

from __future__ import annotations

import numpy as np

GAIN_TOL = 1e-6


def _phase_fixed_qr(mat):
    # batched thin QR with positive real diagonal of R
    q, r = np.linalg.qr(mat)
    diag = np.diagonal(r, axis1=-2, axis2=-1).copy()
    mag = np.abs(diag)
    bad = mag < 1e-150
    safe = np.where(bad, 1.0, diag)
    phase = safe / np.abs(safe)
    return q * phase[..., None, :], mag, bad.any(axis=-1)


def solve_frames(w_design, d_alloc, pool, p):
    """Design aligned precoders and decoders for a block of frames.

    Parameters
    ----------
    w_design : array, (frames, 3, 3, n)
        Design channel diagonals, receiver axis first.
    d_alloc : tuple
        Streams per user, (q+1, q, q) for n = 2q+1.
    pool : list of arrays
        Per-user rotation candidates, shape (r+1, d_k, d_k); entry 0 must
        be the identity.
    p : float
        Transmit power entering the rotation objective.

    Returns
    -------
    (v, u, ok): padded precoders and decoders of shape
    (frames, 3, n, max_d) and a boolean frame-validity mask. Frames flagged
    invalid carry unspecified coefficients.
    """
    w = np.asarray(w_design, dtype=complex)
    frames, _, _, n = w.shape
    q = (n - 1) // 2
    dmax = max(d_alloc)
    ok = np.isfinite(w).all(axis=(1, 2, 3)) & (np.abs(w).min(axis=(1, 2, 3)) > 1e-150)

    safe_w = np.where(np.abs(w) > 1e-150, w, 1.0)
    t_vec = (safe_w[:, 0, 2] / safe_w[:, 1, 2]) * (safe_w[:, 1, 0] / safe_w[:, 2, 0]) \
        * (safe_w[:, 2, 1] / safe_w[:, 0, 1])
    powers = np.empty((frames, n, q + 1), dtype=complex)
    powers[:, :, 0] = 1.0
    for j in range(1, q + 1):
        powers[:, :, j] = powers[:, :, j - 1] * t_vec

    raw = [
        powers,
        (safe_w[:, 2, 0] / safe_w[:, 2, 1])[:, :, None] * powers[:, :, 1:],
        (safe_w[:, 1, 0] / safe_w[:, 1, 2])[:, :, None] * powers[:, :, :q],
    ]
    v_on = []
    for mat in raw:
        qmat, diag_mag, degenerate = _phase_fixed_qr(mat)
        ok &= ~degenerate
        ok &= diag_mag.min(axis=-1) > 1e-10 * diag_mag.max(axis=-1)
        v_on.append(qmat)

    # aligned interference at each receiver is spanned by one cross link
    generators = (
        safe_w[:, 0, 1][:, :, None] * v_on[1],
        safe_w[:, 1, 0][:, :, None] * v_on[0],
        safe_w[:, 2, 0][:, :, None] * v_on[0],
    )

    v = np.zeros((frames, 3, n, dmax), dtype=complex)
    u = np.zeros((frames, 3, n, dmax), dtype=complex)
    for k in range(3):
        d_k = d_alloc[k]
        gen = generators[k]
        c_cols = gen.shape[-1]
        q_full = np.linalg.qr(gen, mode="complete")[0]
        comp = q_full[:, :, c_cols:]  # (frames, n, d_k)
        c_mat = np.einsum("fnd,fn,fne->fde", comp.conj(), safe_w[:, k, k], v_on[k])
        z = _batch_inv_h(c_mat, ok)

        cand = np.einsum("fde,rei->frdi", z, pool[k])
        norms2 = np.einsum("frdi,frdi->fri", cand.conj(), cand).real
        with np.errstate(divide="ignore"):
            obj = np.sum(np.log2(1.0 + (n * p / d_k) / norms2), axis=-1)
        sel = np.argmax(obj, axis=1)
        picked = np.take_along_axis(cand, sel[:, None, None, None], axis=1)[:, 0]
        pick_norm = np.sqrt(
            np.take_along_axis(norms2, sel[:, None, None], axis=1)[:, 0])
        ok &= pick_norm.max(axis=-1) < 1.0 / GAIN_TOL
        theta = pool[k][sel]
        v[:, k, :, :d_k] = v_on[k] @ theta
        u[:, k, :, :d_k] = np.einsum("fnd,fdi->fni", comp, picked / pick_norm[:, None, :])
    return v, u, ok


def _batch_inv_h(c_mat, ok):
    """Conjugate-transposed inverse per frame; flags singular frames."""
    try:
        inv = np.linalg.inv(c_mat)
    except np.linalg.LinAlgError:
        inv = np.empty_like(c_mat)
        for f in range(c_mat.shape[0]):
            try:
                inv[f] = np.linalg.inv(c_mat[f])
            except np.linalg.LinAlgError:
                inv[f] = np.eye(c_mat.shape[-1])
                ok[f] = False
    return inv.conj().transpose(0, 2, 1)
