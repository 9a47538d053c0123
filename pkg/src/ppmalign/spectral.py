"""Spectral initialization: low-rank factorization and the starting iterate.

The solver needs a warm start correlated with the truth.  The top-m
singular subspace of the input matrix carries it: in expectation the matrix
is a rank-m pattern plus noise, so a randomly chosen column of the best
rank-m approximation already points toward the hidden labels.

The factorization is computed by orthogonal iteration (block power method
with QR re-orthonormalization), tracking the invariant subspace of the r
largest-magnitude eigenvalues; the operator only needs to support products
with (N, r) matrices, so both the circulant-block and the dense-block
operators plug in.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .simplex import project_blockwise


@dataclass(frozen=True, eq=False)
class LowRankFactor:
    """Rank-r factorization U diag(S) V^T of a symmetric operator.

    S holds singular values in nonincreasing order; V equals U with columns
    flipped by the sign of the corresponding eigenvalue.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    r: int
    converged: bool
    residual: float
    iterations: int

    def column(self, c: int) -> np.ndarray:
        """Column c of the reconstructed low-rank matrix."""
        return self.U @ (self.S * self.V[c, :])

    def reconstruct(self) -> np.ndarray:
        """Dense U diag(S) V^T; only sensible at small sizes."""
        return (self.U * self.S) @ self.V.T


def orthogonal_iteration(op, r: int, max_iters: int = 200, tol: float = 1e-8,
                         seed: int = 0) -> LowRankFactor:
    """Factor the dominant rank-r part of a symmetric operator.

    Parameters
    ----------
    op : operator
        Anything with ``shape`` (N, N) and ``matmat`` mapping (N, r) to
        (N, r).  Assumed symmetric; eigenvalues may have either sign.
    r : int
        Target rank, 1 <= r <= N.
    max_iters, tol : int, float
        The iteration stops once the subspace projector moves less than
        tol in Frobenius norm between sweeps.  Hitting max_iters first
        emits a warning and returns the current best estimate.
    seed : int
        Seed for the random orthonormal starting block.

    Returns
    -------
    LowRankFactor
        Singular vectors and values of the dominant subspace, obtained by
        a final Rayleigh-Ritz step, ordered by decreasing magnitude.
    """
    n = op.shape[0]
    if not 1 <= r <= n:
        raise ValueError(f"rank must lie in 1..{n}, got {r}")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    residual = np.inf
    converged = False
    its = 0
    for its in range(1, max_iters + 1):
        y = op.matmat(q)
        if not np.any(y):
            # operator annihilates the block: zero spectrum on this subspace
            return LowRankFactor(U=q, S=np.zeros(r), V=q.copy(), r=r,
                                 converged=True, residual=0.0, iterations=its)
        q_new, _ = np.linalg.qr(y)
        # ||P_new - P_old||_F = sqrt(2) * ||(I - P_new) Q_old||_F, computed as
        # an explicit residual so it reaches machine zero without cancellation
        rej = q - q_new @ (q_new.T @ q)
        residual = float(np.sqrt(2.0) * np.linalg.norm(rej))
        q = q_new
        if residual <= tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"orthogonal iteration stopped at max_iters={max_iters} with "
            f"subspace residual {residual:.3e}",
            stacklevel=2,
        )
    y = op.matmat(q)
    b = q.T @ y
    b = 0.5 * (b + b.T)
    theta, w = np.linalg.eigh(b)
    order = np.argsort(-np.abs(theta))
    theta = theta[order]
    u = q @ w[:, order]
    signs = np.where(theta >= 0, 1.0, -1.0)
    return LowRankFactor(U=u, S=np.abs(theta), V=u * signs, r=r,
                         converged=converged, residual=residual, iterations=its)


def initial_guess(L, fac: LowRankFactor, mu0: float, seed: int) -> np.ndarray:
    """Feasible starting blocks from one column of the low-rank approximation.

    Picks a uniformly random column of U diag(S) V^T, reshapes it into n
    blocks, and projects each block with scaling mu0 (``math.inf`` rounds
    to vertices).

    Returns an (n, m) array of feasible blocks.
    """
    n, m = L.n, L.m
    rng = np.random.default_rng(seed)
    c = int(rng.integers(0, n * m))
    zhat = fac.column(c).reshape(n, m)
    return project_blockwise(zhat, mu0)
