"""Euclidean projection onto the probability simplex, blockwise and with rounding.

The iterates of the alignment solver live in a product of n standard
simplices in R^m, one block per item.  Everything here operates on plain
numpy arrays: a single block is a length-m vector, a full iterate is an
(n, m) array whose rows are blocks.

``mu = math.inf`` is accepted as a distinguished policy value meaning
"project the rescaled point from infinitely far out", which collapses to
rounding each block to the vertex at its largest entry.  The infinity is
branched on before any arithmetic, never multiplied through.
"""

import math

import numpy as np

# Feasibility tolerances: row sums within SUM_TOL of 1, entries allowed to
# dip NEG_TOL below zero before being considered infeasible.
SUM_TOL = 1e-9
NEG_TOL = 1e-12


def project_simplex(v):
    """Project a vector onto the probability simplex {x >= 0, sum x = 1}.

    Sorting-based exact algorithm, O(m log m).  Ties in the input are
    handled like any other values; the result is the unique Euclidean
    projection.

    Parameters
    ----------
    v : array_like, shape (m,)
        Point to project.  Must be finite.

    Returns
    -------
    ndarray, shape (m,)
        The projection, entrywise >= 0 and summing to 1 up to rounding.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a vector with non-finite entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    cond = u - (css - 1.0) / ks > 0
    # the satisfying indices form a prefix; take the last one
    rho = v.size - 1 - int(np.argmax(cond[::-1]))
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_rows(z):
    """Row-wise simplex projection of an (n, m) array, vectorized."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 2:
        raise ValueError("expected an (n, m) array of blocks")
    if not np.all(np.isfinite(z)):
        raise ValueError("cannot project blocks with non-finite entries")
    n, m = z.shape
    u = -np.sort(-z, axis=1)
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, m + 1)
    cond = u - (css - 1.0) / ks > 0
    rho = m - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (css[np.arange(n), rho] - 1.0) / (rho + 1)
    return np.maximum(z - theta[:, None], 0.0)


def round_to_vertex(v):
    """Vertex of the simplex at the largest entry of v (ties: smallest index)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    out[np.argmax(v)] = 1.0
    return out


def round_rows(z):
    """Row-wise rounding of blocks to one-hot vertices (ties: smallest index)."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    out[np.arange(z.shape[0]), np.argmax(z, axis=1)] = 1.0
    return out


def project_blockwise(z, mu):
    """Apply z |-> P(mu * z) independently to every block (row) of z.

    Parameters
    ----------
    z : ndarray, shape (n, m)
        Current blocks.
    mu : float
        Positive scaling, or ``math.inf`` to round every block to the
        vertex at its largest entry.

    Returns
    -------
    ndarray, shape (n, m)
        Feasible blocks: rows sum to 1, entries >= 0.
    """
    if math.isinf(mu):
        return round_rows(z)
    if not mu > 0:
        raise ValueError(f"scaling mu must be positive or inf, got {mu}")
    return project_rows(np.asarray(z, dtype=float) * mu)


def is_feasible(z, sum_tol=SUM_TOL, neg_tol=NEG_TOL):
    """Check that every row of z lies on the simplex within tolerance."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[None, :]
    sums_ok = np.all(np.abs(z.sum(axis=1) - 1.0) <= sum_tol)
    return bool(sums_ok and np.all(z >= -neg_tol))
