"""Discrete prolate spheroidal (Slepian) sequences for band-limited fading.

The basis diagonalizes the flat-limited covariance over an M-symbol window
and extends outside the window through the band-limiting kernel, which is
what makes it usable for prediction beyond the observed block.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as _dc_replace
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class DimensionRejected(RuntimeError):
    """Requested subspace dimension is numerically unusable."""


def flat_covariance(m, nu_d):
    """M x M covariance of a unit-power process with rectangular spectrum.

    Entry (l, k) is sin(2 pi (l-k) nu_d) / (pi (l-k) 2 nu_d); the diagonal
    is 1. Requires 0 < nu_d < 1/2.
    """
    if not 0.0 < nu_d < 0.5:
        raise ValueError("nu_d must lie in (0, 1/2)")
    lag = np.arange(m, dtype=float)
    row = np.sinc(2.0 * nu_d * lag)
    return row[np.abs(np.subtract.outer(np.arange(m), np.arange(m)))]


@dataclass
class DpsBasis:
    """Slepian basis over a window plus its band-limited extension.

    Attributes
    ----------
    m : int
        Window length.
    nu_d : float
        One-sided band edge.
    horizon : int
        Largest 1-based time index covered by the extension.
    u : ndarray, (m, n_vec)
        Orthonormal basis vectors over the window, one per column, ordered
        by decreasing energy concentration.
    lam : ndarray, (n_vec,)
        Eigenvalues of the normalized band-limiting kernel, in [0, 1]. The
        p-th value equals the in-band energy fraction of column p.
    u_ext : ndarray, (horizon, n_vec)
        Band-limited extension of each column over 1..horizon; the window
        rows reproduce ``u``.
    pilot_set : ndarray
        1-based observation indices inside the window.
    d : int
        Active subspace dimension.
    g : ndarray, (d, d)
        Gram matrix of the pilot rows of the first d columns.
    """

    m: int
    nu_d: float
    horizon: int
    u: np.ndarray
    lam: np.ndarray
    u_ext: np.ndarray
    pilot_set: np.ndarray
    d: int
    g: np.ndarray

    @property
    def kappa(self):
        """In-band energy concentration per basis vector."""
        return self.lam

    def f(self, m):
        """Extended basis row at 1-based time index m, first d entries."""
        if not 1 <= m <= self.horizon:
            raise ValueError(f"time index {m} outside 1..{self.horizon}")
        return self.u_ext[m - 1, : self.d]

    def f_block(self, indices):
        indices = np.asarray(indices, dtype=int)
        if indices.min() < 1 or indices.max() > self.horizon:
            raise ValueError("time indices outside the extension horizon")
        return self.u_ext[indices - 1, : self.d]

    def pilot_rows(self):
        return self.u[self.pilot_set - 1, : self.d]

    def solve_gram(self, rhs):
        if not hasattr(self, "_g_chol"):
            object.__setattr__(self, "_g_chol", cho_factor(self.g))
        return cho_solve(self._g_chol, rhs)

    def restrict(self, d):
        """Same basis with a different active dimension."""
        g = _checked_gram(self.u, self.lam, self.pilot_set, d)
        return _dc_replace(self, d=d, g=g)


def _checked_gram(u, lam, pilot_set, d):
    if not 1 <= d <= u.shape[1]:
        raise DimensionRejected(f"dimension {d} outside 1..{u.shape[1]}")
    if lam[d - 1] < 1e-12:
        raise DimensionRejected(
            f"concentration {lam[d - 1]:.3e} of vector {d} below 1e-12")
    rows = u[np.asarray(pilot_set) - 1, :d]
    g = rows.T @ rows
    ev = np.linalg.eigvalsh(g)
    if ev[0] <= 0 or ev[-1] / ev[0] > 1e12:
        raise DimensionRejected("pilot Gram matrix condition number above 1e12")
    return g


def compute_basis(m, nu_d, horizon, pilot_set, d):
    """Build the Slepian basis for an m-symbol window.

    Columns are eigenvectors of ``flat_covariance(m, nu_d)`` sorted by
    decreasing eigenvalue, each scaled so its first nonzero entry is
    positive. The extension row at index l is R_row(l - window) @ u / raw
    eigenvalue, which reproduces the window rows exactly.

    nu_d = 0 degenerates to the single constant vector 1/sqrt(m).

    Raises DimensionRejected when vector d has concentration below 1e-12 or
    the pilot Gram matrix has condition number above 1e12.
    """
    pilot_set = np.asarray(pilot_set, dtype=int)
    if pilot_set.size == 0:
        raise ValueError("empty pilot set")
    if pilot_set.min() < 1 or pilot_set.max() > m:
        raise ValueError("pilot set must lie inside the window 1..m")
    if horizon < m:
        raise ValueError("horizon must cover the window")

    if nu_d == 0.0:
        u = np.full((m, 1), 1.0 / np.sqrt(m))
        lam = np.ones(1)
        u_ext = np.full((horizon, 1), 1.0 / np.sqrt(m))
        g = _checked_gram(u, lam, pilot_set, d)
        return DpsBasis(m=m, nu_d=nu_d, horizon=horizon, u=u, lam=lam,
                        u_ext=u_ext, pilot_set=pilot_set, d=d, g=g)

    cov = flat_covariance(m, nu_d)
    raw, vec = np.linalg.eigh(cov)
    order = np.argsort(raw)[::-1]
    raw = raw[order]
    vec = vec[:, order]
    for p in range(m):
        col = vec[:, p]
        nz = np.flatnonzero(np.abs(col) > 1e-9 * np.abs(col).max())
        if col[nz[0]] < 0:
            vec[:, p] = -col
    lam = np.clip(2.0 * nu_d * raw, 0.0, 1.0)

    # extension through the kernel; columns with vanishing eigenvalue are
    # unusable and stay gated behind the concentration check
    lag = np.subtract.outer(np.arange(1, horizon + 1), np.arange(1, m + 1))
    kernel = np.sinc(2.0 * nu_d * lag.astype(float))
    safe = np.where(raw > 1e-300, raw, 1.0)
    u_ext = (kernel @ vec) / safe

    g = _checked_gram(vec, lam, pilot_set, d)
    return DpsBasis(m=m, nu_d=nu_d, horizon=horizon, u=vec, lam=lam,
                    u_ext=u_ext, pilot_set=pilot_set, d=d, g=g)


@lru_cache(maxsize=256)
def cached_basis(m, nu_d, horizon, pilot_key, d):
    """Memoized compute_basis; ``pilot_key`` is the pilot set as a tuple."""
    return compute_basis(m, nu_d, horizon, np.asarray(pilot_key), d)


def energy_concentration(basis):
    """In-band energy fraction per basis vector (equals ``basis.lam``)."""
    return np.asarray(basis.lam)


def optimal_dimension_unquantized(m, nu_d, p):
    """Dimension minimizing leaked tail energy plus estimation-noise cost.

    Minimizes sum(lam[d:]) / (2 nu_d m) + d / (m p) over d = 1..m, taking
    the smaller d on ties. nu_d = 0 returns 1.
    """
    if p <= 0:
        raise ValueError("power must be positive")
    if m < 1:
        raise ValueError("window must be nonempty")
    if nu_d == 0.0:
        return 1
    lam = np.clip(2.0 * nu_d * np.linalg.eigvalsh(flat_covariance(m, nu_d)),
                  0.0, 1.0)[::-1]
    tail = np.concatenate([np.cumsum(lam[::-1])[::-1][1:], [0.0]])
    cost = tail / (2.0 * nu_d * m) + np.arange(1, m + 1) / (m * p)
    return int(np.argmin(cost)) + 1
