"""Shared oracles for the test suite.

The dense expansion below is deliberately independent of the package's
matvec: blocks are materialized with scipy's circulant constructor and
placed entry by entry, so agreement between the two paths is meaningful.
"""

import numpy as np
import scipy.linalg as sla


def dense_expansion(L) -> np.ndarray:
    """Dense (nm, nm) copy of a circulant-block operator, built edge by edge."""
    m = L.m
    out = np.zeros((L.n * m, L.n * m))
    for e in range(L.n_edges):
        i, j = int(L.ii[e]), int(L.jj[e])
        blk = sla.circulant(L.cols[e])
        out[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
        out[j * m:(j + 1) * m, i * m:(i + 1) * m] = blk.T
    return out


def dense_match_expansion(obs) -> np.ndarray:
    """Dense stacked matrix of a matching instance."""
    m = obs.m
    out = np.zeros((obs.n * m, obs.n * m))
    for e in range(obs.n_edges):
        i, j = int(obs.ii[e]), int(obs.jj[e])
        out[i * m:(i + 1) * m, j * m:(j + 1) * m] = obs.blocks[e]
        out[j * m:(j + 1) * m, i * m:(i + 1) * m] = obs.blocks[e].T
    return out
