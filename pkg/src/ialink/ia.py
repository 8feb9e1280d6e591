"""Interference alignment on diagonal symbol-extension channels.

Closed-form precoders for the 3-user single-antenna channel over an odd
symbol extension, zero-forcing decoders, precoder-subspace rotation search,
and the leakage and rate figures of merit. Functions here are the readable
reference; the batched per-frame solver used by the harness lives in the
solver backends and is cross-checked against this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RESIDUAL_TOL = 1e-8
GAIN_TOL = 1e-6


class TrialRejected(RuntimeError):
    """Channel realization unusable for alignment (measure-zero event)."""


def stream_allocation(k_users, n):
    """Streams per user achieving the alignment dimension split.

    The 3-user single-antenna scheme over an odd extension n = 2q+1 sends
    q+1 streams for user 1 and q for users 2 and 3. A single user gets the
    whole extension.
    """
    if k_users == 1:
        return (n,)
    if k_users != 3:
        raise ValueError("closed-form alignment covers 1 or 3 users")
    if n % 2 != 1:
        raise ValueError("symbol extension must be odd")
    q = (n - 1) // 2
    if q < 1:
        raise ValueError("extension too short for three users")
    return (q + 1, q, q)


def _column_normalize(mat):
    norms = np.linalg.norm(mat, axis=0)
    if np.any(norms < 1e-150):
        raise TrialRejected("degenerate precoder column")
    return mat / norms


def _check_rank(mat, what):
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise TrialRejected(f"{what} lost rank")


def closed_form_precoders(w_design, n=None):
    """Alignment precoders from the design channels of all nine links.

    Parameters
    ----------
    w_design : array, shape (3, 3, n)
        Diagonal of the extended channel between each receiver (first
        axis) and transmitter (second axis).
    n : int, optional
        Symbol extension length; defaults to the trailing axis.

    Returns
    -------
    list of arrays [v_1, v_2, v_3] with unit-norm columns, shapes
    (n, q+1), (n, q), (n, q).

    Raises TrialRejected on a zero channel coefficient or rank loss.
    """
    w = np.asarray(w_design)
    if n is None:
        n = w.shape[-1]
    if w.shape != (3, 3, n):
        raise ValueError("expected design channels of shape (3, 3, n)")
    if n % 2 != 1:
        raise ValueError("symbol extension must be odd")
    if np.any(np.abs(w) < 1e-150):
        raise TrialRejected("vanishing channel coefficient")
    q = (n - 1) // 2

    t = (w[0, 2] / w[1, 2]) * (w[1, 0] / w[2, 0]) * (w[2, 1] / w[0, 1])
    powers = np.empty((n, q + 1), dtype=complex)
    powers[:, 0] = 1.0
    for j in range(1, q + 1):
        powers[:, j] = powers[:, j - 1] * t
    _check_rank(powers, "alignment chain")

    v1 = _column_normalize(powers)
    v2 = _column_normalize((w[2, 0] / w[2, 1])[:, None] * powers[:, 1:])
    v3 = _column_normalize((w[1, 0] / w[1, 2])[:, None] * powers[:, :q])
    return [v1, v2, v3]


def _null_space(constraints, n):
    if constraints.shape[1] == 0:
        return np.eye(n)
    u_mat, sv, _ = np.linalg.svd(constraints, full_matrices=True)
    rank = int(np.sum(sv > RESIDUAL_TOL * sv[0]))
    if rank >= n:
        raise TrialRejected("no zero-forcing direction")
    return u_mat[:, rank:]


def _decoders_for_rx(k, precoders, w_design):
    """Zero-forcing decoders at receiver k, one column per own stream."""
    w = np.asarray(w_design)
    n = w.shape[-1]
    own = w[k, k][:, None] * precoders[k]
    cross = [w[k, l][:, None] * precoders[l]
             for l in range(len(precoders)) if l != k]
    cross = np.hstack(cross) if cross else np.empty((n, 0), dtype=complex)
    d_k = precoders[k].shape[1]
    out = np.empty((n, d_k), dtype=complex)
    for i in range(d_k):
        others = np.delete(own, i, axis=1)
        ns = _null_space(np.hstack([others, cross]), n)
        u = ns @ (ns.conj().T @ own[:, i])
        norm = np.linalg.norm(u)
        if norm < GAIN_TOL:
            raise TrialRejected("vanishing direct gain after zero forcing")
        out[:, i] = u / norm
    return out


def zero_forcing_decoders(precoders, w_design):
    """Per-stream unit-norm decoders nulling all other streams.

    The decoder for stream i of user k is the normalized projection of
    w_kk v_k^i onto the orthogonal complement of every other effective
    stream arriving at receiver k. With aligned interference that
    complement is one-dimensional and the resulting direct gain is real
    and positive.
    """
    return [_decoders_for_rx(k, precoders, w_design)
            for k in range(len(precoders))]


def alignment_residual(precoders, w_design):
    """Largest relative misalignment of interference at any receiver.

    At each receiver the interference from the transmitter with more
    streams must contain the other transmitter's interference. Returns the
    worst column-wise relative projection residual.
    """
    w = np.asarray(w_design)
    # (receiver, containing tx, contained tx)
    triples = ((0, 1, 2), (1, 0, 2), (2, 0, 1))
    worst = 0.0
    for rx, big, small in triples:
        span = np.linalg.qr(w[rx, big][:, None] * precoders[big])[0]
        inner = w[rx, small][:, None] * precoders[small]
        resid = inner - span @ (span.conj().T @ inner)
        worst = max(worst, float(np.max(
            np.linalg.norm(resid, axis=0) / np.linalg.norm(inner, axis=0))))
    return worst


def haar_rotation(d, rng):
    """Haar-distributed d x d unitary matrix."""
    white = rng.standard_normal((2, d, d))
    q, r = np.linalg.qr(white[0] + 1j * white[1])
    phase = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phase.conj()


def rotation_pool(d_alloc, r, rng):
    """Shared candidate rotations: identity plus r Haar draws per user.

    Returned as a list of arrays of shape (r + 1, d_k, d_k); draws are
    interleaved across users so the stream consumption is reproducible.
    """
    pool = [np.tile(np.eye(dk, dtype=complex), (r + 1, 1, 1)) for dk in d_alloc]
    for j in range(1, r + 1):
        for k, dk in enumerate(d_alloc):
            pool[k][j] = haar_rotation(dk, rng)
    return pool


def _orthonormalize(v):
    # unique thin QR: scale columns so R has a positive real diagonal
    q, r = np.linalg.qr(v)
    diag = np.diagonal(r)
    phase = np.where(np.abs(diag) > 0, diag / np.abs(np.maximum(np.abs(diag), 1e-300)), 1.0)
    return q * phase


def optimize_precoder_subspace(precoders, w_design, r, rng, p=1.0, pool=None):
    """Rotation search inside each user's alignment subspace.

    Orthonormalizes each precoder, then tries ``r`` random rotations plus
    the identity per user and keeps the one maximizing that user's sum of
    log2(1 + (n p / d_k) gain_i^2) after zero forcing. Rotations leave all
    subspaces unchanged, so users decouple and the search is exact per
    user. Ties keep the earliest candidate.

    Returns (precoders, decoders).
    """
    w = np.asarray(w_design)
    n = w.shape[-1]
    d_alloc = [v.shape[1] for v in precoders]
    base = [_orthonormalize(v) for v in precoders]
    if pool is None:
        pool = rotation_pool(d_alloc, r, rng)

    chosen = []
    for k, dk in enumerate(d_alloc):
        best_obj, best = -np.inf, None
        for cand in pool[k][: r + 1]:
            trial = list(base)
            trial[k] = base[k] @ cand
            u_k = _decoders_for_rx(k, trial, w)
            gains = np.abs(np.einsum("ni,n,ni->i", u_k.conj(), w[k, k], trial[k]))
            obj = float(np.sum(np.log2(1.0 + (n * p / dk) * gains ** 2)))
            if obj > best_obj + 1e-12:
                best_obj, best = obj, trial[k]
        chosen.append(best)
    return chosen, zero_forcing_decoders(chosen, w)


@dataclass
class IaSolution:
    """Precoders and decoders over a block of payload symbols.

    v, u : ndarray, (frames, users, n, max_d)
        Unit-norm columns; user k uses the first d[k] columns, the rest
        are zero padding.
    d : tuple of int
        Streams per user.
    """

    v: np.ndarray
    u: np.ndarray
    d: tuple

    @property
    def frames(self):
        return self.v.shape[0]

    def precoder(self, t, k):
        """Precoder of user k at frame t (0-based frame within the block)."""
        return self.v[t, k, :, : self.d[k]]

    def decoder(self, t, k):
        return self.u[t, k, :, : self.d[k]]

    @classmethod
    def from_lists(cls, per_frame, d):
        """Stack per-frame (precoders, decoders) lists into padded arrays."""
        frames = len(per_frame)
        k_users = len(d)
        n = per_frame[0][0][0].shape[0]
        dmax = max(d)
        v = np.zeros((frames, k_users, n, dmax), dtype=complex)
        u = np.zeros((frames, k_users, n, dmax), dtype=complex)
        for t, (pre, dec) in enumerate(per_frame):
            for k in range(k_users):
                v[t, k, :, : d[k]] = pre[k]
                u[t, k, :, : d[k]] = dec[k]
        return cls(v=v, u=u, d=tuple(d))


def pair_leakage(solution, w_true, p):
    """Per-stream-pair received power (n p / d_l) |u^H W v|^2.

    Parameters
    ----------
    solution : IaSolution
    w_true : array, (frames, users, users, n)
        True channel diagonals during the payload.
    p : float
        Transmit power per subcarrier.

    Returns
    -------
    array, (frames, users, users, max_d, max_d); entry [t, k, l, i, j] is
    the power stream j of transmitter l deposits on decoder i of receiver
    k. Padding streams contribute zero.
    """
    w = np.asarray(w_true)
    n = w.shape[-1]
    cross = np.einsum("tkni,tkln,tlnj->tklij",
                      solution.u.conj(), w, solution.v)
    alloc = np.asarray(solution.d, dtype=float)
    scale = n * p / alloc[None, None, :, None, None]
    return scale * np.abs(cross) ** 2


def leakage(solution, w_true, p):
    """Intra- and inter-user interference power per stream.

    Returns (i1, i2), each of shape (frames, users, max_d): i1 sums the
    other own-user streams, i2 sums every other user's streams.
    """
    power = pair_leakage(solution, w_true, p)
    frames, k_users, _, dmax, _ = power.shape
    own = power[:, np.arange(k_users), np.arange(k_users)]
    # sum the off-diagonal terms directly; subtracting the total would
    # absorb residuals many orders below the direct-stream power
    i1 = (own * ~np.eye(dmax, dtype=bool)).sum(axis=-1)
    per_tx = power.sum(axis=-1)
    i2 = (per_tx * ~np.eye(k_users, dtype=bool)[None, :, :, None]).sum(axis=2)
    return i1, i2


def sum_rate(solution, w_true, p):
    """Achievable sum rate per frame, treating interference as noise.

    Rate per frame is sum_k sum_i log2(1 + sinr) / n with
    sinr = (n p / d_k) |u^H W v|^2 / (i1 + i2 + 1).
    """
    power = pair_leakage(solution, w_true, p)
    k_users = power.shape[1]
    direct = np.einsum("tkii->tki", power[:, np.arange(k_users), np.arange(k_users)])
    i1, i2 = leakage(solution, w_true, p)
    n = w_true.shape[-1]
    return np.sum(np.log2(1.0 + direct / (i1 + i2 + 1.0)), axis=(1, 2)) / n
