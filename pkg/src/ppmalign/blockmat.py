"""Symmetric block matrices with circulant blocks, and their expectation.

The lifted input of the alignment problem is an (nm, nm) symmetric matrix L
of n x n blocks of size m x m.  Diagonal blocks are zero.  Off-diagonal
blocks are circulant (every entry depends on the row-column residue only),
so each stored block is just its first column, and block-vector products
reduce to circular convolutions.

Storage is one first column per observed pair (i, j) with i > j; the
mirrored block is the transpose, which for a circulant is the circulant of
the index-reversed column.
"""

from __future__ import annotations

import io

import numpy as np
import scipy.sparse as sp

from .exceptions import RegularizationRequiredError
from .likelihood import NoiseDistribution, PairwiseObservations, entropy, kl

FORMS = ("agreement", "loglik", "debiased-loglik")

# below this block size the FFT overhead loses to a batched m^2 product
_FFT_MIN_M = 10

# expected_matrix materializes a dense (nm, nm) array; keep it desk-sized
_DENSE_CAP = 4096


def _circ_index(m: int) -> np.ndarray:
    """Index matrix turning a first column into a circulant block."""
    r = np.arange(m)
    return (r[:, None] - r[None, :]) % m


class CirculantBlockMatrix:
    """Sparse symmetric matrix of circulant blocks, applied blockwise.

    Parameters
    ----------
    n, m : int
        Number of items and labels; the operator is (n m, n m).
    ii, jj : ndarray of int
        Endpoints of the stored pairs, elementwise ii > jj.
    cols : ndarray, shape (n_edges, m)
        First column of the block at (ii[e], jj[e]).
    debiased : bool
        True when each block has had its grand mean subtracted.
    """

    def __init__(self, n, m, ii, jj, cols, debiased=False):
        ii = np.asarray(ii, dtype=np.int64)
        jj = np.asarray(jj, dtype=np.int64)
        cols = np.asarray(cols, dtype=float)
        if ii.shape != jj.shape or cols.shape != (ii.size, m):
            raise ValueError("edge arrays and first columns must be aligned")
        if ii.size and not np.all(ii > jj):
            raise ValueError("blocks must be stored with i > j")
        if ii.size and (ii.max() >= n or jj.min() < 0):
            raise ValueError("block indices out of range")
        self.n = int(n)
        self.m = int(m)
        self.ii = ii
        self.jj = jj
        self.cols = cols
        self.debiased = bool(debiased)
        self._fc = None
        self._blocks = None
        self._acc_i = None
        self._acc_j = None

    @property
    def shape(self):
        return (self.n * self.m, self.n * self.m)

    @property
    def n_edges(self) -> int:
        return self.ii.size

    def _accumulators(self):
        # (n, E) incidence maps; a CSR product sums edge contributions per row
        if self._acc_i is None:
            e = self.n_edges
            ones = np.ones(e)
            ar = np.arange(e)
            self._acc_i = sp.csr_matrix((ones, (self.ii, ar)), shape=(self.n, e))
            self._acc_j = sp.csr_matrix((ones, (self.jj, ar)), shape=(self.n, e))
        return self._acc_i, self._acc_j

    def _apply(self, zb):
        """Product with blocks stacked in zb of shape (n, m) or (n, m, r)."""
        single = zb.ndim == 2
        if single:
            zb = zb[:, :, None]
        n, m, r = zb.shape
        if self.n_edges == 0:
            out = np.zeros_like(zb)
            return out[:, :, 0] if single else out
        acc_i, acc_j = self._accumulators()
        if m < _FFT_MIN_M:
            if self._blocks is None:
                self._blocks = self.cols[:, _circ_index(m)]
            contrib_i = self._blocks @ zb[self.jj]
            contrib_j = self._blocks.transpose(0, 2, 1) @ zb[self.ii]
            e = self.n_edges
            w = acc_i @ contrib_i.reshape(e, m * r) + acc_j @ contrib_j.reshape(e, m * r)
            out = w.reshape(n, m, r)
        else:
            if self._fc is None:
                self._fc = np.fft.rfft(self.cols, axis=1)
            fz = np.fft.rfft(zb, axis=1)
            k = fz.shape[1]
            # block (i,j) acts on z_j via its spectrum; the transpose acts
            # via the conjugate spectrum (real first columns)
            p_i = self._fc[:, :, None] * fz[self.jj]
            p_j = np.conj(self._fc)[:, :, None] * fz[self.ii]
            e = self.n_edges
            fw = (acc_i @ p_i.reshape(e, k * r)) + (acc_j @ p_j.reshape(e, k * r))
            out = np.fft.irfft(fw.reshape(n, k, r), m, axis=1)
        return out[:, :, 0] if single else out

    def matvec(self, z):
        """Blockwise product: returns w with w_i = sum_j L_ij z_j, shape (n, m)."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n, self.m):
            raise ValueError(f"expected blocks of shape {(self.n, self.m)}, got {z.shape}")
        return self._apply(z)

    def matmat(self, x):
        """Product with an (nm, r) matrix, columns treated as block vectors."""
        x = np.asarray(x, dtype=float)
        nm = self.n * self.m
        if x.ndim != 2 or x.shape[0] != nm:
            raise ValueError(f"expected shape ({nm}, r)")
        zb = x.reshape(self.n, self.m, x.shape[1])
        return self._apply(zb).reshape(nm, x.shape[1])

    def block(self, a: int, b: int) -> np.ndarray:
        """Dense copy of block (a, b) for an observed pair, either orientation."""
        if a == b:
            raise KeyError("diagonal blocks are identically zero and not stored")
        hi, lo = (a, b) if a > b else (b, a)
        hits = np.flatnonzero((self.ii == hi) & (self.jj == lo))
        if hits.size == 0:
            raise KeyError(f"pair ({a}, {b}) not present")
        col = self.cols[hits[0]]
        if a < b:
            col = col[(-np.arange(self.m)) % self.m]
        return col[_circ_index(self.m)]

    def dump_block(self, a: int, b: int) -> str:
        """CSV dump of one block with header alpha,beta,value (debug aid)."""
        blk = self.block(a, b)
        buf = io.StringIO()
        buf.write("alpha,beta,value\n")
        for al in range(self.m):
            for be in range(self.m):
                buf.write(f"{al},{be},{blk[al, be]:.17g}\n")
        return buf.getvalue()


def build(obs: PairwiseObservations, d: NoiseDistribution | None = None,
          form: str = "agreement") -> CirculantBlockMatrix:
    """Assemble the lifted input matrix from observations.

    Forms
    -----
    agreement
        Entry 1 exactly where the residue difference matches the observed
        y, else 0.  Parameter-free; the matched-filter form for the
        random-corruption model.
    loglik
        Entry log P0(y - a + b mod m); requires a strictly positive pmf.
    debiased-loglik
        Same with the per-block grand mean removed, which kills the common
        offset direction and shrinks the top eigenvalue bias.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")
    m = obs.m
    e = obs.n_edges
    if form == "agreement":
        cols = np.zeros((e, m))
        cols[np.arange(e), obs.y] = 1.0
        return CirculantBlockMatrix(obs.n, m, obs.i, obs.j, cols)
    if d is None:
        raise ValueError("likelihood forms need a noise distribution")
    if d.m != m:
        raise ValueError("distribution support and observation modulus differ")
    if np.any(d.p0 == 0):
        raise RegularizationRequiredError(int(np.argmin(d.p0)))
    logp = np.log(d.p0)
    idx = (obs.y[:, None] - np.arange(m)[None, :]) % m
    cols = logp[idx]
    if form == "debiased-loglik":
        cols = cols - cols.mean(axis=1, keepdims=True)
    return CirculantBlockMatrix(obs.n, m, obs.i, obs.j, cols,
                                debiased=(form == "debiased-loglik"))


def expected_matrix(n: int, m: int, p_obs: float, d: NoiseDistribution) -> np.ndarray:
    """Dense expectation of the log-likelihood input matrix.

    Off-diagonal blocks equal p_obs * K where K[a, b] = -KL(P0 || P_{a-b})
    - H(P0); diagonal blocks are zero.  Intended as a small-scale oracle,
    so nm is capped at 4096.
    """
    if n * m > _DENSE_CAP:
        raise ValueError(f"dense expectation capped at nm <= {_DENSE_CAP}")
    if not 0 < p_obs <= 1:
        raise ValueError("p_obs must lie in (0, 1]")
    kl_l = np.array([kl(d.p0, np.roll(d.p0, l)) for l in range(m)])
    k0 = -kl_l[_circ_index(m)]
    k = k0 - entropy(d)
    out = np.kron(np.ones((n, n)) - np.eye(n), p_obs * k)
    return out


def estimate_sigma(L, i: int, iters: int = 200, tol: float = 1e-8) -> float:
    """i-th largest singular value of L (1-based), via orthogonal iteration.

    Convenience wrapper around the spectral factorization; a zero operator
    yields 0.  Non-convergence warns and returns the best estimate.
    """
    from .spectral import orthogonal_iteration

    if i < 1 or i > L.shape[0]:
        raise ValueError("singular value index out of range")
    # guard vectors push the slow-converging subspace boundary past index i
    r = min(i + 4, L.shape[0])
    fac = orthogonal_iteration(L, r=r, max_iters=iters, tol=tol, seed=0)
    return float(fac.S[i - 1])


def separation(a, ref: int) -> float:
    """Margin of the reference entry: a[ref] - max of the others.

    Positive when ref strictly dominates; the rounding step maps the block
    to vertex ref exactly when this margin is positive.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("need a 1-d block with m >= 2")
    if not 0 <= ref < a.size:
        raise ValueError("reference index out of range")
    others = np.delete(a, ref)
    return float(a[ref] - others.max())
