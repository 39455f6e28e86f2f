"""Weighted-graph substrate, edge-weight laws, and synthetic generators.

Graphs are undirected, simple, and stored as flat arrays of (i, j, w)
triples with i < j; a symmetric CSR view is built lazily. All generators
are pure functions of (parameters, seed): randomness flows through
counter-based Philox streams so results are bit-reproducible regardless
of call order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionError,
    ParameterError,
    UnsupportedDistributionError,
)

# Named sub-streams derived from the user seed; each component of a run
# draws from its own counter-based stream.
_STREAMS = {
    "topology": 0,
    "weights": 1,
    "labels": 2,
    "features": 3,
    "pairs": 4,
    "solver": 5,
    "messages": 6,
}


def rng_stream(seed: int, stream: str) -> np.random.Generator:
    """Philox generator for one named component of a seeded run."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), _STREAMS[stream]]))
    )


# ---------------------------------------------------------------------------
# core types
# ---------------------------------------------------------------------------


@dataclass
class WeightedGraph:
    """Undirected simple weighted graph with i < j edge storage.

    Invariants enforced at construction: no self-loops, no duplicate
    edges, no explicitly stored zero weights, symmetric by convention
    (each undirected edge stored once).
    """

    n: int
    i: np.ndarray
    j: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if not (self.i.shape == self.j.shape == self.w.shape):
            raise DimensionError("edge arrays must have equal length")
        if self.n < 0:
            raise ParameterError("node count must be non-negative")
        if self.i.size:
            if self.i.min() < 0 or self.j.min() < 0 or max(self.i.max(), self.j.max()) >= self.n:
                raise ParameterError("edge endpoint out of range")
            if np.any(self.i == self.j):
                raise ParameterError("self-loops are not allowed")
            swap = self.i > self.j
            if np.any(swap):
                ii = np.where(swap, self.j, self.i)
                jj = np.where(swap, self.i, self.j)
                self.i, self.j = ii, jj
            if np.any(self.w == 0.0):
                raise ParameterError("explicit zero weights are not allowed")
            key = self.i * self.n + self.j
            if np.unique(key).size != key.size:
                raise ParameterError("duplicate edges are not allowed")
        for arr in (self.i, self.j, self.w):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return int(self.i.size)

    @property
    def avg_degree(self) -> float:
        return 2.0 * self.m / self.n if self.n else 0.0

    @cached_property
    def degrees(self) -> np.ndarray:
        """Unweighted degree vector."""
        d = np.zeros(self.n)
        np.add.at(d, self.i, 1.0)
        np.add.at(d, self.j, 1.0)
        return d

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Symmetric CSR adjacency view (weights on both triangles)."""
        rows = np.concatenate([self.i, self.j])
        cols = np.concatenate([self.j, self.i])
        vals = np.concatenate([self.w, self.w])
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr()

    @cached_property
    def abs_strength(self) -> np.ndarray:
        """|w| row sums, the diagonal of D-bar."""
        d = np.zeros(self.n)
        np.add.at(d, self.i, np.abs(self.w))
        np.add.at(d, self.j, np.abs(self.w))
        return d

    def signed_magnitude(self, rtol: float = 1e-12) -> Optional[float]:
        """Common |w| if the graph is signed (weights in {-J0, +J0}), else None."""
        if self.m == 0:
            return None
        mags = np.abs(self.w)
        j0 = mags[0]
        if np.all(np.abs(mags - j0) <= rtol * j0):
            return float(j0)
        return None

    def with_weights(self, w: np.ndarray) -> "WeightedGraph":
        """Same topology, new weights."""
        return WeightedGraph(self.n, self.i.copy(), self.j.copy(), np.asarray(w, dtype=np.float64))

    def gauge(self, sigma: np.ndarray) -> "WeightedGraph":
        """Entrywise sign conjugation: w_ij -> w_ij * sigma_i * sigma_j."""
        sigma = _check_labels(sigma, self.n)
        return self.with_weights(self.w * sigma[self.i] * sigma[self.j])


@dataclass
class LabeledInstance:
    """Observed graph (already gauged) together with its planted labels."""

    graph: WeightedGraph
    labels: np.ndarray
    true_beta_n: Optional[float] = None

    def __post_init__(self):
        self.labels = _check_labels(self.labels, self.graph.n)


@dataclass(frozen=True)
class Gaussian:
    """Edge-weight law N(J0, nu^2); its Nishimori temperature is J0/nu^2."""

    J0: float
    nu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ParameterError("Gaussian nu must be positive")


@dataclass(frozen=True)
class PlusMinusJ:
    """Two-valued law: +J0 with probability p, -J0 otherwise; p in [1/2, 1]."""

    p: float
    J0: float

    def __post_init__(self):
        if not (0.5 <= self.p <= 1.0):
            raise ParameterError("PlusMinusJ p must lie in [1/2, 1]")
        if self.J0 <= 0:
            raise ParameterError("PlusMinusJ J0 must be positive")


@dataclass(frozen=True)
class Empirical:
    """Raw multiset of observed nonzero weights; expectations are sample means."""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.size == 0:
            raise ParameterError("Empirical distribution needs at least one sample")
        object.__setattr__(self, "samples", samples)


WeightDistribution = Union[Gaussian, PlusMinusJ, Empirical]


def analytic_beta_n(dist: WeightDistribution) -> float:
    """Closed-form Nishimori temperature of a parametric weight law."""
    if isinstance(dist, Gaussian):
        return dist.J0 / dist.nu**2
    if isinstance(dist, PlusMinusJ):
        if dist.p == 1.0:
            return math.inf
        return math.log(dist.p / (1.0 - dist.p)) / (2.0 * dist.J0)
    raise UnsupportedDistributionError(
        "analytic beta_N is undefined for empirical weights; "
        "use estimate_beta_nishimori on the graph instead"
    )


def _check_labels(sigma, n: int) -> np.ndarray:
    sigma = np.asarray(sigma)
    if sigma.shape != (n,):
        raise DimensionError(f"label vector must have length {n}")
    if not np.all(np.abs(sigma) == 1):
        raise ParameterError("labels must be +-1")
    return sigma.astype(np.int8)


# ---------------------------------------------------------------------------
# random pair sampling (shared by ER topology and kernel pair masks)
# ---------------------------------------------------------------------------


def _pair_index_to_ij(lin: np.ndarray, n: int):
    # invert k = i*(2n-i-1)/2 + (j-i-1) over the i<j upper triangle
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(b * b - 8.0 * lin)) / 2).astype(np.int64)
    first = i * (b - i) // 2
    # repair float rounding at block boundaries
    while np.any(lin < first):
        bad = lin < first
        i[bad] -= 1
        first = i * (b - i) // 2
    nxt = (i + 1) * (b - (i + 1)) // 2
    while np.any(lin >= nxt):
        bad = lin >= nxt
        i[bad] += 1
        first = i * (b - i) // 2
        nxt = (i + 1) * (b - (i + 1)) // 2
    j = lin - first + i + 1
    return i, j.astype(np.int64)


def sample_pairs(n: int, p: float, rng: np.random.Generator):
    """Bernoulli(p) sample over the i<j pairs by geometric skipping, O(edges)."""
    npairs = n * (n - 1) // 2
    if p <= 0.0 or npairs == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    if p >= 1.0:
        lin = np.arange(npairs, dtype=np.int64)
        return _pair_index_to_ij(lin, n)
    hits = []
    pos = -1
    expected = npairs * p
    batch = max(64, int(expected + 6.0 * math.sqrt(expected) + 16))
    while pos < npairs:
        gaps = rng.geometric(p, size=batch)
        steps = np.cumsum(gaps) + pos
        hits.append(steps[steps < npairs])
        if steps[-1] >= npairs:
            break
        pos = int(steps[-1])
    lin = np.concatenate(hits) if hits else np.empty(0, dtype=np.int64)
    return _pair_index_to_ij(lin, n)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate_er(n: int, c: float, seed: int) -> WeightedGraph:
    """Erdos-Renyi topology with expected average degree c, unit weights."""
    if n < 2:
        raise ParameterError("need at least two nodes")
    if c < 0:
        raise ParameterError("expected degree c must be non-negative")
    if c >= n:
        raise ParameterError(f"expected degree c={c} must be below n={n}")
    rng = rng_stream(seed, "topology")
    i, j = sample_pairs(n, c / n, rng)
    return WeightedGraph(n, i, j, np.ones(i.size))


def generate_powerlaw(n: int, c: float, exponent: float, seed: int) -> WeightedGraph:
    """Chung-Lu graph whose degree sequence has a power-law tail.

    Intrinsic weights theta_i are proportional to (i+1)^(-1/(exponent-1)),
    rescaled so sum(theta) = n; pair (i, j) connects independently with
    probability min(1, c*theta_i*theta_j/n), which keeps the mean degree
    at c up to the clamping loss.
    """
    if n < 2:
        raise ParameterError("need at least two nodes")
    if c < 0:
        raise ParameterError("expected degree c must be non-negative")
    if exponent <= 2:
        raise ParameterError("power-law exponent must exceed 2 (finite mean)")
    if c >= n:
        raise ParameterError(f"expected degree c={c} must be below n={n}")
    rng = rng_stream(seed, "topology")
    theta = np.arange(1, n + 1, dtype=np.float64) ** (-1.0 / (exponent - 1.0))
    theta *= n / theta.sum()
    if c == 0:
        return WeightedGraph(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
    s = np.sqrt(c / n) * theta  # p_ij = min(1, s_i * s_j), s decreasing in i
    edges_i, edges_j = [], []
    for row in range(n - 1):
        q = s[row] * s[row + 1]
        if q >= 1.0:
            # hub row: the envelope saturates, scan it densely (O(c/4) such rows)
            p_row = np.minimum(1.0, s[row] * s[row + 1 :])
            hits = np.nonzero(rng.random(n - row - 1) < p_row)[0] + row + 1
        else:
            # geometric skipping under the constant row envelope q, thinned
            # to the true p_ij = s_i * s_j <= q (weights are decreasing)
            cand = _row_skip_sample(rng, q, row, n)
            if cand.size:
                keep = rng.random(cand.size) * q < s[row] * s[cand]
                hits = cand[keep]
            else:
                hits = cand
        if hits.size:
            edges_i.append(np.full(hits.size, row, dtype=np.int64))
            edges_j.append(hits.astype(np.int64))
    i = np.concatenate(edges_i) if edges_i else np.empty(0, np.int64)
    j = np.concatenate(edges_j) if edges_j else np.empty(0, np.int64)
    return WeightedGraph(n, i, j, np.ones(i.size))


def _row_skip_sample(rng, q: float, row: int, n: int) -> np.ndarray:
    """Columns j in (row, n) hit by a Bernoulli(q) process, via geometric gaps."""
    if q <= 0.0:
        return np.empty(0, dtype=np.int64)
    span = n - row - 1
    expected = q * span
    out = []
    pos = row
    while pos < n - 1:
        batch = max(8, int(expected + 6.0 * math.sqrt(expected + 1.0) + 8))
        steps = pos + np.cumsum(rng.geometric(q, size=batch))
        out.append(steps[steps < n])
        if steps[-1] >= n - 1:
            break
        pos = int(steps[-1])
        expected = q * (n - 1 - pos)
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def sample_weights(
    topology: WeightedGraph, dist: WeightDistribution, beta_n: float, seed: int
) -> WeightedGraph:
    """Draw i.i.d. edge weights whose law has Nishimori temperature beta_n.

    Gaussian: weights ~ N(J0, nu^2) with J0 = beta_n * nu^2 (the mean is
    derived from beta_n; dist.J0 is ignored for sampling). PlusMinusJ:
    +J0 with probability exp(beta_n*J0) / (2*cosh(beta_n*J0)).
    """
    if beta_n <= 0:
        raise ParameterError("beta_n must be positive")
    rng = rng_stream(seed, "weights")
    m = topology.m
    if isinstance(dist, Gaussian):
        j0 = beta_n * dist.nu**2
        w = rng.normal(j0, dist.nu, m)
        while np.any(w == 0.0):  # measure-zero, but the invariant is hard
            zeros = w == 0.0
            w[zeros] = rng.normal(j0, dist.nu, int(zeros.sum()))
    elif isinstance(dist, PlusMinusJ):
        p_plus = math.exp(beta_n * dist.J0) / (2.0 * math.cosh(beta_n * dist.J0))
        w = np.where(rng.random(m) < p_plus, dist.J0, -dist.J0)
    else:
        raise UnsupportedDistributionError("cannot sample from an empirical distribution")
    return topology.with_weights(w)


def plant_labels(graph: WeightedGraph, sigma: np.ndarray) -> LabeledInstance:
    """Gauge the weights by sigma: the observed matrix has w_ij * sigma_i * sigma_j."""
    sigma = _check_labels(sigma, graph.n)
    return LabeledInstance(graph=graph.gauge(sigma), labels=sigma)


def balanced_labels(n: int, seed: int) -> np.ndarray:
    """Random +-1 labels with exactly floor(n/2) entries equal to -1."""
    rng = rng_stream(seed, "labels")
    sigma = np.ones(n, dtype=np.int8)
    sigma[rng.permutation(n)[: n // 2]] = -1
    return sigma


# ---------------------------------------------------------------------------
# feature data and kernel sparsification
# ---------------------------------------------------------------------------


@dataclass
class FeatureDataset:
    """n feature vectors of dimension p, with optional evaluation labels."""

    vectors: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise DimensionError("feature matrix must be 2-D (n rows, p columns)")
        if self.labels is not None:
            self.labels = _check_labels(self.labels, self.n)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def p(self) -> int:
        return self.vectors.shape[1]


def sparsify_kernel(data: FeatureDataset, kappa: float, c: float, seed: int) -> WeightedGraph:
    """Two-level sparsified correlation kernel.

    Each feature coordinate is kept with probability sqrt(kappa/p); each
    (i, j) pair is evaluated only when a symmetric Bernoulli(c/n) mask
    hits it. Retained weights are (1/p) * (masked z_i)^T (masked z_j);
    exact zeros under the mask are dropped from the edge list.
    """
    n, p = data.n, data.p
    if not (0.0 < kappa <= p):
        raise ParameterError(f"kappa must lie in (0, p]; got kappa={kappa}, p={p}")
    if c < 0:
        raise ParameterError("expected degree c must be non-negative")
    if c >= n:
        raise ParameterError(f"expected degree c={c} must be below n={n}")
    keep = math.sqrt(kappa / p)
    masked = data.vectors
    if keep < 1.0:
        mask = rng_stream(seed, "features").random((n, p)) < keep
        masked = data.vectors * mask
    i, j = sample_pairs(n, c / n, rng_stream(seed, "pairs"))
    w = np.einsum("ij,ij->i", masked[i], masked[j]) / p
    nz = w != 0.0
    return WeightedGraph(n, i[nz], j[nz], w[nz])


def gaussian_mixture_features(
    n: int, p: int, separation: float, seed: int
) -> FeatureDataset:
    """Balanced two-cluster mixture: z_i = sigma_i * mu + N(0, I_p), |mu| = separation."""
    rng = rng_stream(seed, "features")
    sigma = balanced_labels(n, seed)
    mu = np.full(p, separation / math.sqrt(p))
    z = sigma[:, None] * mu[None, :] + rng.standard_normal((n, p))
    return FeatureDataset(vectors=z, labels=sigma)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def write_edgelist(graph: WeightedGraph, path) -> None:
    """Plain-text edge list: header '#n=<count>', lines 'i<TAB>j<TAB>w'."""
    with open(path, "w") as fh:
        fh.write(f"#n={graph.n}\n")
        for a, b, x in zip(graph.i, graph.j, graph.w):
            fh.write(f"{a}\t{b}\t{float(x)!r}\n")


def read_edgelist(path) -> WeightedGraph:
    path = Path(path)
    n = None
    ii, jj, ww = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#n="):
                    n = int(line[3:])
                continue
            a, b, x = line.split("\t")
            ii.append(int(a))
            jj.append(int(b))
            ww.append(float(x))
    if n is None:
        raise ParameterError(f"{path}: missing '#n=<count>' header")
    return WeightedGraph(n, np.array(ii, dtype=np.int64), np.array(jj, dtype=np.int64), np.array(ww))


def write_labels(labels: np.ndarray, path) -> None:
    np.savetxt(path, np.asarray(labels, dtype=int), fmt="%d")


def read_labels(path, n: Optional[int] = None) -> np.ndarray:
    labels = np.loadtxt(path, dtype=int, ndmin=1)
    if n is not None:
        labels = _check_labels(labels, n)
    return labels


def write_features(data: FeatureDataset, path) -> None:
    np.savetxt(path, data.vectors, fmt="%.17g")


def read_features(path, labels_path=None) -> FeatureDataset:
    vectors = np.loadtxt(path, ndmin=2)
    labels = read_labels(labels_path, vectors.shape[0]) if labels_path else None
    return FeatureDataset(vectors=vectors, labels=labels)
