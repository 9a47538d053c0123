"""Noise models over Z_m, divergences, observation sampling, recovery thresholds.

The statistical model: n items carry hidden labels x_i in {1, ..., m}; for
each observed pair we see y_ij = x_i - x_j + eta_ij (mod m) where eta_ij is
drawn from a base distribution P0 on {0, ..., m-1} and eta_ji = -eta_ij.
Shifted versions P_l(y) = P0(y - l mod m) are the conditional laws of y
given a relative offset l, and the Kullback-Leibler divergences between P0
and its shifts drive everything: the information limits, the expected input
matrix, and the choice of regularization.

Divergences use natural log.  KL is +inf (a value, not an error) when the
first argument puts mass where the second has none.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import RegularizationRequiredError

PROB_SUM_TOL = 1e-12


def _probs(p):
    """Coerce a NoiseDistribution or array_like to a validated pmf array."""
    if isinstance(p, NoiseDistribution):
        return p.p0
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("a distribution over Z_m needs a 1-d pmf with m >= 2")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_SUM_TOL:
        raise ValueError("pmf entries must be nonnegative and sum to 1")
    return p


@dataclass(frozen=True, eq=False)
class NoiseDistribution:
    """A pmf P0 over residues {0, ..., m-1}.

    ``symmetric`` means P0(y) = P0(m - y) for every y, which is what makes
    the lifted input matrix symmetric; it is computed at construction.
    """

    p0: np.ndarray
    symmetric: bool = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.p0, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("pmf must be 1-d with m >= 2")
        if np.any(p < 0):
            raise ValueError("pmf entries must be nonnegative")
        if abs(p.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"pmf must sum to 1, got {p.sum()!r}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "p0", p)
        sym = bool(np.allclose(p[1:], p[1:][::-1], rtol=0.0, atol=1e-12))
        object.__setattr__(self, "symmetric", sym)

    @property
    def m(self) -> int:
        return self.p0.size

    @property
    def min_mass(self) -> float:
        return float(self.p0.min())


def random_corruption(pi0: float, m: int) -> NoiseDistribution:
    """Noise that is 0 with probability pi0 and uniform otherwise.

    P0(0) = pi0 + (1 - pi0)/m and P0(y) = (1 - pi0)/m for y != 0.
    """
    if not 0.0 <= pi0 <= 1.0:
        raise ValueError(f"pi0 must lie in [0, 1], got {pi0}")
    if m < 2:
        raise ValueError("m must be at least 2")
    p = np.full(m, (1.0 - pi0) / m)
    p[0] += pi0
    return NoiseDistribution(p)


def modified_gaussian(sigma: float, m: int) -> NoiseDistribution:
    """Discrete Gaussian-shaped noise on {-(m-1)/2, ..., (m-1)/2}, m odd.

    P{eta = z} is proportional to exp(-z^2 / (2 sigma^2)); residues are the
    values mod m, so the pmf is symmetric about 0.
    """
    if m < 3 or m % 2 == 0:
        raise ValueError("modified Gaussian noise needs odd m >= 3")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    half = (m - 1) // 2
    z = np.arange(-half, half + 1)
    w = np.exp(-(z.astype(float) ** 2) / (2.0 * sigma**2))
    p = np.zeros(m)
    p[z % m] = w / w.sum()
    return NoiseDistribution(p)


def shift_distribution(d: NoiseDistribution, l: int) -> NoiseDistribution:
    """The law of y given relative offset l: P_l(y) = P0(y - l mod m)."""
    return NoiseDistribution(np.roll(d.p0, l % d.m))


def regularize(d: NoiseDistribution, varsigma: float = 0.01) -> NoiseDistribution:
    """Mix with the uniform distribution: (1 - varsigma) P0 + varsigma Unif.

    Removes zero-probability residues so log-likelihoods stay finite while
    perturbing the model by at most varsigma in total variation.
    """
    if not 0.0 < varsigma < 1.0:
        raise ValueError("varsigma must lie in (0, 1)")
    return NoiseDistribution((1.0 - varsigma) * d.p0 + varsigma / d.m)


def kl(p, q) -> float:
    """KL divergence sum p log(p/q), natural log.

    Terms with p = 0 contribute 0; if p > 0 somewhere q = 0 the divergence
    is +inf (returned, not raised).
    """
    p, q = _probs(p), _probs(q)
    if p.size != q.size:
        raise ValueError("distributions must share the same support size")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def hellinger_sq(p, q) -> float:
    """Squared Hellinger distance (1/2) sum (sqrt p - sqrt q)^2."""
    p, q = _probs(p), _probs(q)
    if p.size != q.size:
        raise ValueError("distributions must share the same support size")
    return float(0.5 * np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def total_variation(p, q) -> float:
    """Total variation distance (1/2) sum |p - q|."""
    p, q = _probs(p), _probs(q)
    return float(0.5 * np.sum(np.abs(p - q)))


def entropy(d) -> float:
    """Shannon entropy -sum p log p in nats (0 log 0 = 0)."""
    p = _probs(d)
    mask = p > 0
    return float(-np.sum(p[mask] * np.log(p[mask])))


def kl_min_max(d: NoiseDistribution) -> tuple[float, float]:
    """Min and max of KL(P0 || P_l) over nonzero offsets l = 1, ..., m-1.

    The minimum is the effective signal strength of the model; recovery is
    possible roughly when it clears log(n)/(n p_obs) scaled by a constant.
    """
    vals = [kl(d.p0, np.roll(d.p0, l)) for l in range(1, d.m)]
    return (min(vals), max(vals))


def loglik_block(d: NoiseDistribution, y: int) -> np.ndarray:
    """The (m, m) block log P_{a-b}(y) = log P0(y - a + b mod m), 0-based a, b.

    Circulant: the entry depends only on (a - b) mod m.  Raises
    RegularizationRequiredError if any residue has zero probability, since
    every residue's log appears in the block.
    """
    col = loglik_first_col(d, y)
    m = d.m
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    return col[idx]


def loglik_first_col(d: NoiseDistribution, y: int) -> np.ndarray:
    """First column of the log-likelihood block: col[a] = log P0(y - a mod m)."""
    m = d.m
    if np.any(d.p0 == 0):
        bad = int(np.argmin(d.p0))
        raise RegularizationRequiredError(bad)
    return np.log(d.p0[(int(y) - np.arange(m)) % m])


def threshold_random_corruption(n: int, m: int, p_obs: float, constant: float = 1.01) -> float:
    """Critical pi0 scale 2 sqrt(constant * ln n / (m n p_obs)).

    constant = 1.01 (default) gives the sufficient side: above this value
    exact recovery succeeds with high probability for large n.  The
    converse holds with constant = 0.99: below that, every method fails.
    """
    if n < 2 or m < 2 or not 0 < p_obs <= 1:
        raise ValueError("need n >= 2, m >= 2, 0 < p_obs <= 1")
    return 2.0 * math.sqrt(constant * math.log(n) / (m * n * p_obs))


def threshold_kl(n: int, p_obs: float) -> tuple[float, float]:
    """(sufficient, necessary) KL_min levels: (4.01, 3.99) * ln n / (n p_obs)."""
    if n < 2 or not 0 < p_obs <= 1:
        raise ValueError("need n >= 2 and 0 < p_obs <= 1")
    base = math.log(n) / (n * p_obs)
    return (4.01 * base, 3.99 * base)


@dataclass(frozen=True, eq=False)
class PairwiseObservations:
    """Observed pairwise differences on a random subset of pairs.

    Each sampled unordered pair is stored once with i > j; the mirrored
    reading is y_ji = (m - y_ij) mod m.  Arrays ``i``, ``j``, ``y`` are
    aligned; indices are 0-based, residues lie in {0, ..., m-1}.
    """

    n: int
    m: int
    p_obs: float
    i: np.ndarray
    j: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if not (self.i.shape == self.j.shape == self.y.shape):
            raise ValueError("edge arrays must be aligned")
        if self.i.size and not np.all(self.i > self.j):
            raise ValueError("edges must be stored with i > j")
        if self.i.size and (self.i.max() >= self.n or self.j.min() < 0):
            raise ValueError("edge endpoints out of range")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.m):
            raise ValueError("residues out of range")

    @property
    def n_edges(self) -> int:
        return self.i.size

    def value(self, a: int, b: int) -> int:
        """y_ab for an observed pair, honoring the mirror convention."""
        if a == b:
            raise KeyError("no self-pairs are observed")
        lo, hi = (b, a) if a > b else (a, b)
        hits = np.flatnonzero((self.i == hi) & (self.j == lo))
        if hits.size == 0:
            raise KeyError(f"pair ({a}, {b}) was not observed")
        v = int(self.y[hits[0]])
        return v if a > b else (self.m - v) % self.m

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,j,y\n")
        for a, b, v in zip(self.i, self.j, self.y):
            buf.write(f"{a},{b},{v}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int, m: int, p_obs: float = float("nan")):
        rows = [ln for ln in text.strip().splitlines() if ln]
        if not rows or rows[0].strip() != "i,j,y":
            raise ValueError("expected header 'i,j,y'")
        data = np.array(
            [[int(f) for f in ln.split(",")] for ln in rows[1:]], dtype=np.int64
        ).reshape(-1, 3)
        return cls(n=n, m=m, p_obs=p_obs, i=data[:, 0], j=data[:, 1], y=data[:, 2])


def sample_observations(x, d: NoiseDistribution, p_obs: float, seed: int) -> PairwiseObservations:
    """Draw noisy pairwise differences y_ij = x_i - x_j + eta (mod m).

    Each unordered pair enters independently with probability p_obs; pairs
    are swept in a fixed lexicographic order so a given seed always yields
    the same observation set.

    Parameters
    ----------
    x : array_like of int, shape (n,)
        Hidden labels in {1, ..., m}.
    d : NoiseDistribution
        Law of the additive noise eta.
    p_obs : float in (0, 1]
        Pair sampling rate.
    seed : int
        Seed for the pair mask and the noise draws.
    """
    x = np.asarray(x, dtype=np.int64)
    m = d.m
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two items")
    if np.any(x < 1) or np.any(x > m):
        raise ValueError(f"labels must lie in 1..{m}")
    if not 0 < p_obs <= 1:
        raise ValueError("p_obs must lie in (0, 1]")
    n = x.size
    rng = np.random.default_rng(seed)
    a, b = np.triu_indices(n, k=1)
    keep = rng.random(a.size) < p_obs
    a, b = a[keep], b[keep]
    cdf = np.cumsum(d.p0)
    eta = np.searchsorted(cdf, rng.random(a.size), side="right")
    np.clip(eta, 0, m - 1, out=eta)
    # store with i > j: y_ij for (i, j) = (b, a)
    y = (x[b] - x[a] + eta) % m
    return PairwiseObservations(n=n, m=m, p_obs=p_obs, i=b, j=a, y=y)


def regularize_observations(obs: PairwiseObservations, varsigma: float, seed: int) -> PairwiseObservations:
    """Rerandomize each stored residue to uniform with probability varsigma.

    Companion to regularize(): after both, the data is exactly distributed
    according to the smoothed model, so likelihood weights stay consistent.
    """
    if not 0.0 < varsigma < 1.0:
        raise ValueError("varsigma must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    repl = rng.random(obs.n_edges) < varsigma
    y = obs.y.copy()
    y[repl] = rng.integers(0, obs.m, int(repl.sum()))
    return PairwiseObservations(obs.n, obs.m, obs.p_obs, obs.i, obs.j, y)
