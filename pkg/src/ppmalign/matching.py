"""Joint matching of feature sets from noisy pairwise correspondences.

A variant of the alignment solver where each hidden state is a permutation
of m features instead of a cyclic shift: the truth is one permutation
matrix X_i per item, observations are noisy versions of X_i X_j^T, and the
projection step becomes a linear assignment per block.  Iterates are
stacked (nm, m) matrices; the estimate is defined up to one global
relabeling of features, mirroring the global cyclic shift of the alignment
problem.

Permutations are represented as 0-based index arrays p of length m, with
matrix form P[a, p[a]] = 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from .spectral import orthogonal_iteration

_LAP_TOL = 1e-9


def perm_matrix(p) -> np.ndarray:
    """Dense matrix of a permutation array: one 1 per row at column p[a]."""
    p = np.asarray(p, dtype=np.int64)
    m = p.size
    out = np.zeros((m, m))
    out[np.arange(m), p] = 1.0
    return out


def lap_project(score) -> np.ndarray:
    """Permutation maximizing sum_a score[a, p[a]], exactly.

    Among all maximizers, returns the lexicographically smallest index
    array, fixing rows in order and preferring smaller columns whenever an
    optimal completion still exists.
    """
    score = np.asarray(score, dtype=float)
    m = score.shape[0]
    if score.ndim != 2 or score.shape != (m, m):
        raise ValueError("score must be square")
    if not np.all(np.isfinite(score)):
        raise ValueError("score must be finite")
    rows, cols = linear_sum_assignment(score, maximize=True)
    best = float(score[rows, cols].sum())
    tol = _LAP_TOL * max(1.0, abs(best))
    free = list(range(m))
    out = np.empty(m, dtype=np.int64)
    acc = 0.0
    for a in range(m):
        for c in sorted(free):
            rest = [x for x in free if x != c]
            if rest:
                sub = score[np.ix_(range(a + 1, m), rest)]
                r2, c2 = linear_sum_assignment(sub, maximize=True)
                completion = float(sub[r2, c2].sum())
            else:
                completion = 0.0
            if acc + score[a, c] + completion >= best - tol:
                out[a] = c
                acc += score[a, c]
                free.remove(c)
                break
        else:
            raise AssertionError("no feasible completion; inconsistent assignment state")
    return out


@dataclass(frozen=True, eq=False)
class MatchObservations:
    """Noisy pairwise correspondence blocks on observed pairs, i > j.

    blocks[e] scores how strongly each feature of item ii[e] matches each
    feature of item jj[e]; the mirrored block is the transpose.
    """

    n: int
    m: int
    ii: np.ndarray
    jj: np.ndarray
    blocks: np.ndarray

    def __post_init__(self):
        if self.blocks.shape != (self.ii.size, self.m, self.m):
            raise ValueError("blocks must be (n_edges, m, m)")
        if self.ii.size and not np.all(self.ii > self.jj):
            raise ValueError("pairs must be stored with i > j")

    @property
    def n_edges(self) -> int:
        return self.ii.size

    def block(self, a: int, b: int) -> np.ndarray:
        if a == b:
            raise KeyError("no self-pairs")
        hi, lo = (a, b) if a > b else (b, a)
        hits = np.flatnonzero((self.ii == hi) & (self.jj == lo))
        if hits.size == 0:
            raise KeyError(f"pair ({a}, {b}) not observed")
        blk = self.blocks[hits[0]]
        return blk if a > b else blk.T

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,j,row,col,value\n")
        for e in range(self.n_edges):
            for a in range(self.m):
                for b in range(self.m):
                    buf.write(
                        f"{self.ii[e]},{self.jj[e]},{a},{b},{self.blocks[e, a, b]:.17g}\n"
                    )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int, m: int):
        rows = [ln for ln in text.strip().splitlines() if ln]
        if not rows or rows[0].strip() != "i,j,row,col,value":
            raise ValueError("expected header 'i,j,row,col,value'")
        seen: dict[tuple[int, int], np.ndarray] = {}
        for ln in rows[1:]:
            i_s, j_s, a_s, b_s, v_s = ln.split(",")
            key = (int(i_s), int(j_s))
            blk = seen.setdefault(key, np.zeros((m, m)))
            blk[int(a_s), int(b_s)] = float(v_s)
        if not seen:
            raise ValueError("no blocks found")
        keys = sorted(seen)
        ii = np.array([k[0] for k in keys], dtype=np.int64)
        jj = np.array([k[1] for k in keys], dtype=np.int64)
        blocks = np.stack([seen[k] for k in keys])
        return cls(n=n, m=m, ii=ii, jj=jj, blocks=blocks)


class DenseBlockMatrix:
    """Symmetric operator of dense m x m blocks, zero diagonal."""

    def __init__(self, obs: MatchObservations):
        self.n = obs.n
        self.m = obs.m
        self.ii = obs.ii
        self.jj = obs.jj
        self.blocks = obs.blocks
        e = obs.n_edges
        ones = np.ones(e)
        ar = np.arange(e)
        self._acc_i = sp.csr_matrix((ones, (self.ii, ar)), shape=(self.n, e))
        self._acc_j = sp.csr_matrix((ones, (self.jj, ar)), shape=(self.n, e))

    @property
    def shape(self):
        return (self.n * self.m, self.n * self.m)

    def matmat(self, x):
        x = np.asarray(x, dtype=float)
        nm = self.n * self.m
        if x.ndim != 2 or x.shape[0] != nm:
            raise ValueError(f"expected shape ({nm}, r)")
        r = x.shape[1]
        if self.ii.size == 0:
            return np.zeros_like(x)
        zb = x.reshape(self.n, self.m, r)
        ci = self.blocks @ zb[self.jj]
        cj = self.blocks.transpose(0, 2, 1) @ zb[self.ii]
        e = self.ii.size
        w = self._acc_i @ ci.reshape(e, self.m * r) + self._acc_j @ cj.reshape(e, self.m * r)
        return w.reshape(nm, r)


def sample_match_observations(n: int, m: int, corrupt_rate: float, seed: int,
                              p_obs: float = 1.0):
    """Synthetic matching instance: truth perms and corrupted pairwise blocks.

    Each observed pair carries the exact consistency block X_i X_j^T, or an
    independent uniformly random permutation matrix with probability
    corrupt_rate.

    Returns (MatchObservations, truth) where truth is an (n, m) array of
    permutation index arrays.
    """
    if not 0 <= corrupt_rate <= 1 or not 0 < p_obs <= 1:
        raise ValueError("rates must lie in [0, 1] (p_obs in (0, 1])")
    rng = np.random.default_rng(seed)
    truth = np.stack([rng.permutation(m) for _ in range(n)])
    a, b = np.triu_indices(n, k=1)
    keep = rng.random(a.size) < p_obs
    a, b = a[keep], b[keep]
    blocks = np.empty((a.size, m, m))
    for e in range(a.size):
        hi, lo = b[e], a[e]
        if rng.random() < corrupt_rate:
            blocks[e] = perm_matrix(rng.permutation(m))
        else:
            blocks[e] = perm_matrix(truth[hi]) @ perm_matrix(truth[lo]).T
    return MatchObservations(n=n, m=m, ii=b, jj=a, blocks=blocks), truth


def mismatch_rate(perms, truth) -> float:
    """Fraction of wrongly assigned (item, feature) pairs modulo one global
    relabeling of features, chosen by a final assignment on match counts."""
    perms = np.asarray(perms, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if perms.shape != truth.shape or perms.ndim != 2:
        raise ValueError("perms and truth must both be (n, m)")
    n, m = perms.shape
    counts = np.zeros((m, m))
    np.add.at(counts, (truth.ravel(), perms.ravel()), 1.0)
    g = lap_project(counts)
    matched = counts[np.arange(m), g].sum()
    return 1.0 - float(matched) / (n * m)


def input_mismatch_rate(obs: MatchObservations, truth) -> float:
    """Row-assignment error of the raw blocks against the consistent ones.

    Each block row's argmax is read as the input's proposed feature match;
    intended for permutation-valued inputs such as the synthetic corrupted
    instances.
    """
    truth = np.asarray(truth, dtype=np.int64)
    wrong = 0
    for e in range(obs.n_edges):
        ref = perm_matrix(truth[obs.ii[e]]) @ perm_matrix(truth[obs.jj[e]]).T
        wrong += int(np.count_nonzero(
            np.argmax(obs.blocks[e], axis=1) != np.argmax(ref, axis=1)
        ))
    return wrong / (obs.n_edges * obs.m)


@dataclass(frozen=True, eq=False)
class MatchReport:
    """Outcome of one matching run."""

    perms: np.ndarray
    iterations_run: int
    converged: bool
    mismatch_trace: np.ndarray | None

    @property
    def final_mismatch(self) -> float:
        if self.mismatch_trace is None:
            raise ValueError("run had no ground truth; no mismatch trace")
        return float(self.mismatch_trace[-1])

    def estimates_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,feature,assigned\n")
        n, m = self.perms.shape
        for i in range(n):
            for a in range(m):
                buf.write(f"{i},{a},{self.perms[i, a]}\n")
        return buf.getvalue()


def match_solve(obs: MatchObservations, T: int, seed: int, truth=None,
                init_iters: int = 200, init_tol: float = 1e-8) -> MatchReport:
    """Power iterations with per-block assignment rounding.

    Starts from assignments read off a random column block of the rank-m
    approximation of the stacked observation matrix, then repeats

        Z_i <- assignment maximizing <(L Z)_i, P>  over permutations P

    until the assignments stop changing or the budget runs out.
    """
    if T < 0:
        raise ValueError("iteration budget must be nonnegative")
    n, m = obs.n, obs.m
    op = DenseBlockMatrix(obs)
    rng = np.random.default_rng(seed)
    fac = orthogonal_iteration(op, r=m, max_iters=init_iters, tol=init_tol,
                               seed=int(rng.integers(2**63)))
    c = int(rng.integers(0, n))
    col_block = (fac.U * fac.S) @ fac.V[c * m:(c + 1) * m, :].T  # (nm, m)
    zb = col_block.reshape(n, m, m)
    perms = np.stack([lap_project(zb[i]) for i in range(n)])
    trace = None
    truth_arr = None
    if truth is not None:
        truth_arr = np.asarray(truth, dtype=np.int64)
        trace = [mismatch_rate(perms, truth_arr)]
    ran = 0
    met = False
    for _ in range(T):
        z = np.zeros((n, m, m))
        z[np.arange(n)[:, None], np.arange(m)[None, :], perms] = 1.0
        w = op.matmat(z.reshape(n * m, m)).reshape(n, m, m)
        new_perms = np.stack([lap_project(w[i]) for i in range(n)])
        ran += 1
        met = bool(np.array_equal(new_perms, perms))
        perms = new_perms
        if trace is not None:
            trace.append(mismatch_rate(perms, truth_arr))
        if met:
            break
    return MatchReport(
        perms=perms,
        iterations_run=ran,
        converged=met,
        mismatch_trace=None if trace is None else np.asarray(trace),
    )
