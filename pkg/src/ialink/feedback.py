"""Limited feedback of subspace coefficients on the Grassmannian manifold.

The stacked delay-domain coefficients are whitened by their covariance and
quantized as a direction: either against an explicit random vector codebook
or through a statistical perturbation model that matches the distortion law
of such codebooks at any bit count.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, solve_triangular

from .dps import flat_covariance

_MAGIC = b"RVQ1"
MAX_EXPLICIT_BITS = 20


@dataclass
class CoefficientStatistics:
    """Second-order statistics of the stacked coefficient estimate.

    lam : ndarray, (s, d, d)
        Per-tap coefficient covariance, including estimation noise.
    r_eta : ndarray, (s d, s d)
        Block-diagonal covariance of the tap-major stacked vector.
    sigma : ndarray, (s d, s d)
        Lower-triangular block Cholesky factor, sigma sigma^H = r_eta.
    """

    lam: np.ndarray
    r_eta: np.ndarray
    sigma: np.ndarray

    @property
    def dim(self):
        return self.r_eta.shape[0]


def coefficient_covariance(basis, pdp, p):
    """Covariance blocks of the least-squares coefficients per delay tap.

    Tap s with power pdp[s] contributes
    G^{-1} U_P^T (pdp[s] R_P + I/p) U_P G^{-1}, where R_P is the flat-band
    covariance restricted to the pilot set. Blocks failing the Cholesky
    test are regularized by 1e-12 on the diagonal with a warning.
    """
    pos = np.asarray(basis.pilot_set) - 1
    if basis.nu_d == 0.0:
        r_p = np.ones((pos.size, pos.size))
    else:
        r_p = flat_covariance(basis.m, basis.nu_d)[np.ix_(pos, pos)]
    rows = basis.pilot_rows()
    d = basis.d
    lam = np.empty((len(pdp), d, d))
    chol = []
    for s, power in enumerate(pdp):
        middle = rows.T @ (power * r_p + np.eye(pos.size) / p) @ rows
        block = basis.solve_gram(basis.solve_gram(middle).T)
        block = (block + block.T) / 2.0
        try:
            low = np.linalg.cholesky(block)
        except np.linalg.LinAlgError:
            warnings.warn("coefficient covariance block regularized")
            block = block + 1e-12 * np.eye(d)
            low = np.linalg.cholesky(block)
        lam[s] = block
        chol.append(low)
    return CoefficientStatistics(lam=lam,
                                 r_eta=block_diag(*lam),
                                 sigma=block_diag(*chol))


def whiten(eta, stats):
    """Decorrelate a stacked coefficient vector: sigma^{-1} eta."""
    return solve_triangular(stats.sigma, eta, lower=True)


def unwhiten(vec, stats):
    """Undo ``whiten``: sigma @ vec."""
    return stats.sigma @ vec


@dataclass
class Codebook:
    """Explicit random vector codebook of unit-norm directions."""

    n_d: int
    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.shape != (2 ** self.n_d, self.dim):
            raise ValueError("codebook shape does not match n_d and dim")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("codebook entries must be unit norm")

    @classmethod
    def random(cls, n_d, dim, rng):
        if n_d > MAX_EXPLICIT_BITS:
            raise ValueError(
                f"explicit codebooks are capped at {MAX_EXPLICIT_BITS} bits")
        if n_d < 0 or dim < 1:
            raise ValueError("n_d must be >= 0 and dim >= 1")
        white = rng.standard_normal((2, 2 ** n_d, dim))
        vec = white[0] + 1j * white[1]
        vec /= np.linalg.norm(vec, axis=1, keepdims=True)
        return cls(n_d=n_d, dim=dim, vectors=vec)

    def save(self, path):
        header = _MAGIC + struct.pack("<II", self.n_d, self.dim) + b"\x00" * 4
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.vectors).astype("<c16").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:4] != _MAGIC:
            raise ValueError("not an RVQ1 codebook file")
        n_d, dim = struct.unpack("<II", blob[4:12])
        body = blob[16:]
        expect = (2 ** n_d) * dim * 16
        if len(body) != expect:
            raise ValueError("codebook file truncated or oversized")
        vec = np.frombuffer(body, dtype="<c16").reshape(2 ** n_d, dim)
        return cls(n_d=n_d, dim=dim, vectors=vec.copy())


def quantize_explicit(x, codebook):
    """Pick the codeword maximizing |c^H x|.

    Returns the 1-based codeword index and the codeword itself; ties go to
    the lowest index.
    """
    x = np.asarray(x)
    if x.shape != (codebook.dim,):
        raise ValueError("vector dimension does not match the codebook")
    idx = int(np.argmax(np.abs(codebook.vectors.conj() @ x)))
    return idx + 1, codebook.vectors[idx].copy()


def quantize_perturbation(x, n_d, rng):
    """Statistical model of optimal vector quantization with n_d bits.

    Draws the squared chordal distance from the exact extreme-value law of
    2^n_d independent uniform directions and perturbs the input direction
    accordingly. Works for any n_d >= 0; dimension 1 is returned exactly
    since a single direction has no chordal error.
    """
    x = np.asarray(x, dtype=complex)
    dim = x.size
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("cannot quantize the zero vector")
    v = x / norm
    if dim == 1:
        return v
    u = rng.uniform()
    # inverse CDF of d^2, written to stay accurate for large n_d
    dsq = (-np.expm1(2.0 ** (-n_d) * np.log1p(-u))) ** (1.0 / (dim - 1))
    while True:
        white = rng.standard_normal((2, dim))
        z = white[0] + 1j * white[1]
        e = z - v * (v.conj() @ z)
        e_norm = np.linalg.norm(e)
        if e_norm > 1e-12:
            break
    e /= e_norm
    return np.sqrt(1.0 - dsq) * v + np.sqrt(dsq) * e


def required_bits(ds, p):
    """Bits needed to keep quantization loss commensurate with power p.

    ceil((ds - 1) log2 p) for p >= 1; dimension 1 needs no bits.
    """
    if p < 1:
        raise ValueError("power below 1 is outside the scaling regime")
    if ds < 1:
        raise ValueError("dimension must be >= 1")
    if ds == 1:
        return 0
    return int(math.ceil((ds - 1) * math.log2(p)))
