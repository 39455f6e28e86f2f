"""Two-class node classification on weighted graphs, plus baselines.

The main classifier shifts the nonzero weights to zero empirical mean
(appropriate for two classes of equal size), estimates the Nishimori
temperature, extracts the eigenvector attached to the smallest
Bethe-Hessian eigenvalue at that temperature, and thresholds its
entries with an exact 1-D 2-means split. Baselines: the spin-glass
Bethe-Hessian, the leading eigenvector of the weight matrix (naive mean
field), the weighted signed Laplacian, and sum-product belief
propagation at a given temperature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError
from .graphs import WeightedGraph, rng_stream
from .nishimori import (
    BETA_TH_FACTOR,
    DETECT_TOL,
    estimate_beta_nishimori,
    estimate_beta_sg,
)
from .spectral import (
    largest_eigpair,
    regularized_laplacian,
    regularized_scaling,
    signed_bethe_hessian_r,
    signed_laplacian,
    smallest_eigpair,
)


@dataclass
class ClassificationResult:
    labels_hat: np.ndarray
    beta_used: Optional[float]
    eigvec: np.ndarray
    method: str
    overlap: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "beta_used": self.beta_used,
            "overlap": self.overlap,
            "labels": [int(s) for s in self.labels_hat],
            "diagnostics": self.diagnostics,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def overlap(sigma: np.ndarray, sigma_hat: np.ndarray) -> float:
    """|2 (agreement fraction - 1/2)|: 0 for random labels, 1 for perfect ones.

    Invariant under a global flip of either argument.
    """
    sigma = np.asarray(sigma)
    sigma_hat = np.asarray(sigma_hat)
    if sigma.shape != sigma_hat.shape:
        raise DimensionError("label vectors must have equal length")
    if sigma.size == 0:
        raise ParameterError("empty label vectors")
    if not (np.all(np.abs(sigma) == 1) and np.all(np.abs(sigma_hat) == 1)):
        raise ParameterError("labels must be +-1")
    # integer form |2k - n| / n keeps the global-flip symmetry exact
    k = int(np.sum(sigma == sigma_hat))
    n = sigma.size
    return abs(2 * k - n) / n


def kmeans_1d(values: np.ndarray) -> np.ndarray:
    """Exact two-cluster 1-D k-means by a single sorted split scan.

    Deterministic: among optimal splits the smallest left-block size
    wins; the side with the larger mean is labeled +1. All-equal input
    collapses to a single class labeled +1.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n < 2:
        raise ParameterError("k-means needs at least two values")
    order = np.argsort(values, kind="stable")
    v = values[order]
    if v[0] == v[-1]:
        return np.ones(n, dtype=np.int8)
    s1 = np.cumsum(v)
    s2 = np.cumsum(v * v)
    k = np.arange(1, n)
    left = s2[:-1] - s1[:-1] ** 2 / k
    right = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / (n - k)
    split = int(np.argmin(left + right)) + 1
    labels_sorted = np.full(n, -1, dtype=np.int8)
    labels_sorted[split:] = 1  # right block has the larger mean after sorting
    labels = np.empty(n, dtype=np.int8)
    labels[order] = labels_sorted
    return labels


def shift_edge_weights(graph: WeightedGraph) -> tuple[WeightedGraph, float]:
    """Subtract the mean of the nonzero entries (1^T J 1 / 2|E|) from every edge.

    Entries that land exactly on zero (measure-zero for continuous
    weights) are dropped to preserve the no-explicit-zeros invariant.
    """
    if graph.m == 0:
        raise ParameterError("graph has no edges")
    shift = float(np.mean(graph.w))
    w = graph.w - shift
    keep = w != 0.0
    if np.all(keep):
        return graph.with_weights(w), shift
    return WeightedGraph(graph.n, graph.i[keep], graph.j[keep], w[keep]), shift


def informative_eigvec(
    graph: WeightedGraph,
    beta: float,
    eig_tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> np.ndarray:
    """Eigenvector of the smallest Bethe-Hessian eigenvalue at temperature beta.

    Signed graphs solve the r-parametrized matrix directly; general
    weights solve the regularized Laplacian and map back through the
    (I+Lambda)^(1/2) scaling, which preserves the sign pattern.
    """
    j0 = graph.signed_magnitude()
    if j0 is not None:
        r = 1.0 / math.tanh(beta * j0)
        pair = smallest_eigpair(
            signed_bethe_hessian_r(graph, r), tol=eig_tol, seed=seed, dense_cutoff=dense_cutoff
        )
        return pair.vector
    L = regularized_laplacian(graph, beta)
    pair = smallest_eigpair(L, tol=eig_tol, seed=seed, dense_cutoff=dense_cutoff)
    x = pair.vector / np.sqrt(regularized_scaling(graph, beta))
    return x / np.linalg.norm(x)


def _finish(method, labels, beta, vec, truth, diagnostics) -> ClassificationResult:
    ov = overlap(truth, labels) if truth is not None else None
    return ClassificationResult(labels, beta, vec, method, ov, diagnostics)


def classify_nishimori(
    graph: WeightedGraph,
    epsilon: float = 1e-5,
    *,
    truth: Optional[np.ndarray] = None,
    shift: bool = True,
    detect_tol: float = DETECT_TOL,
    beta_th_factor: float = BETA_TH_FACTOR,
    eig_tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> ClassificationResult:
    """Full pipeline: shift, estimate the Nishimori temperature, threshold.

    The shift presumes two classes of equal size; disable it when the
    input is already zero-mean or the class sizes are known to be
    unequal. On undetectable instances the labels are still produced
    from the beta_SG eigenvector, with a warning flag in diagnostics.
    """
    work = graph
    shift_value = 0.0
    if shift:
        work, shift_value = shift_edge_weights(graph)
    est = estimate_beta_nishimori(
        work,
        epsilon,
        detect_tol=detect_tol,
        beta_th_factor=beta_th_factor,
        eig_tol=eig_tol,
        seed=seed,
        dense_cutoff=dense_cutoff,
    )
    vec = informative_eigvec(work, est.beta_n_hat, eig_tol, seed, dense_cutoff)
    labels = kmeans_1d(vec)
    diagnostics = {
        "detectable": est.detectable,
        "capped": est.capped,
        "beta_sg_hat": est.beta_sg_hat,
        "beta_th": est.beta_th,
        "shift": shift_value,
        "iterations": len(est.iterations),
    }
    if not est.detectable:
        diagnostics["warning"] = "undetectable: labels come from the beta_SG eigenvector"
    return _finish("nishimori_bh", labels, est.beta_n_hat, vec, truth, diagnostics)


def baseline_spinglass_bh(
    graph: WeightedGraph,
    *,
    truth: Optional[np.ndarray] = None,
    shift: bool = True,
    eig_tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> ClassificationResult:
    """Threshold the smallest-eigenvalue eigenvector at beta = beta_SG_hat."""
    work = shift_edge_weights(graph)[0] if shift else graph
    beta_sg = estimate_beta_sg(work)
    vec = informative_eigvec(work, beta_sg, eig_tol, seed, dense_cutoff)
    labels = kmeans_1d(vec)
    return _finish("spinglass_bh", labels, beta_sg, vec, truth, {})


def baseline_mean_field(
    graph: WeightedGraph,
    *,
    truth: Optional[np.ndarray] = None,
    eig_tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> ClassificationResult:
    """Naive mean field: leading eigenvector of the weight matrix itself."""
    if graph.m == 0:
        raise ParameterError("graph has no edges")
    pair = largest_eigpair(graph.csr, tol=eig_tol, seed=seed, dense_cutoff=dense_cutoff)
    labels = kmeans_1d(pair.vector)
    return _finish("mean_field", labels, None, pair.vector, truth, {})


def baseline_signed_laplacian(
    graph: WeightedGraph,
    *,
    truth: Optional[np.ndarray] = None,
    eig_tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> ClassificationResult:
    """Smallest eigenvector of the weighted Laplacian D_bar - J."""
    if graph.m == 0:
        raise ParameterError("graph has no edges")
    pair = smallest_eigpair(
        signed_laplacian(graph), tol=eig_tol, seed=seed, dense_cutoff=dense_cutoff
    )
    labels = kmeans_1d(pair.vector)
    return _finish("signed_laplacian", labels, None, pair.vector, truth, {})


def belief_propagation(
    graph: WeightedGraph,
    beta: float,
    max_sweeps: int = 300,
    damping: float = 0.2,
    tol: float = 1e-6,
    seed: int = 0,
    truth: Optional[np.ndarray] = None,
) -> ClassificationResult:
    """Sum-product cavity messages for the pairwise spin model at temperature beta.

    m_{i->j} = tanh( sum_{k in d(i) \\ j} atanh(tanh(beta J_ik) m_{k->i}) ),
    damped by ``damping`` toward the previous value, random uniform
    (-0.1, 0.1) start. Marginal signs give the labels (ties to +1); a
    non-converged run returns best-effort labels with converged=False.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if graph.m == 0:
        raise ParameterError("graph has no edges")
    n, m = graph.n, graph.m
    # directed edge d: 2e = (i->j), 2e+1 = (j->i); rev swaps the pair
    tails = np.empty(2 * m, dtype=np.int64)
    heads = np.empty(2 * m, dtype=np.int64)
    tails[0::2], heads[0::2] = graph.i, graph.j
    tails[1::2], heads[1::2] = graph.j, graph.i
    rev = np.arange(2 * m) ^ 1
    om = np.tanh(beta * np.repeat(graph.w, 2))
    np.clip(om, -1.0 + 1e-12, 1.0 - 1e-12, out=om)
    rng = rng_stream(seed, "messages")
    msg = rng.uniform(-0.1, 0.1, size=2 * m)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        a = np.arctanh(om * msg)
        node_sum = np.bincount(heads, weights=a, minlength=n)
        update = np.tanh(node_sum[tails] - a[rev])
        new = (1.0 - damping) * update + damping * msg
        delta = float(np.max(np.abs(new - msg)))
        msg = new
        if delta < tol:
            converged = True
            break
    a = np.arctanh(om * msg)
    marginal = np.tanh(np.bincount(heads, weights=a, minlength=n))
    labels = np.where(marginal >= 0.0, 1, -1).astype(np.int8)
    return _finish(
        "belief_propagation",
        labels,
        beta,
        marginal,
        truth,
        {"converged": converged, "sweeps": sweeps},
    )


METHODS = ("nishimori", "spinglass", "mean_field", "signed_laplacian", "bp")


def classify(
    graph: WeightedGraph,
    method: str,
    *,
    truth: Optional[np.ndarray] = None,
    epsilon: float = 1e-5,
    beta: Optional[float] = None,
    shift: bool = True,
    seed: int = 0,
) -> ClassificationResult:
    """Dispatch a single method by name; bp runs at ``beta`` or at beta_N_hat."""
    if method == "nishimori":
        return classify_nishimori(graph, epsilon, truth=truth, shift=shift, seed=seed)
    if method == "spinglass":
        return baseline_spinglass_bh(graph, truth=truth, shift=shift, seed=seed)
    if method == "mean_field":
        return baseline_mean_field(graph, truth=truth, seed=seed)
    if method == "signed_laplacian":
        return baseline_signed_laplacian(graph, truth=truth, seed=seed)
    if method == "bp":
        if beta is None:
            work = shift_edge_weights(graph)[0] if shift else graph
            beta = estimate_beta_nishimori(work, epsilon, seed=seed).beta_n_hat
            graph = work
        elif shift:
            graph = shift_edge_weights(graph)[0]
        return belief_propagation(graph, beta, seed=seed, truth=truth)
    raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")
