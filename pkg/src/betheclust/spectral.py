"""Matrix builders and eigensolvers for the Bethe-Hessian family.

Bethe-Hessian conventions. For edge weights omega and a scalar x away
from the poles +-omega_ij,

    H_ij(x) = (1 + sum_k omega_ik^2 / (x^2 - omega_ik^2)) delta_ij
              - x * omega_ij / (x^2 - omega_ij^2),

and H at inverse temperature beta is H(1) with omega = tanh(beta * J).
The direct beta form is evaluated through sinh/cosh identities
(tanh^2/(1-tanh^2) = sinh^2, tanh/(1-tanh^2) = sinh*cosh) which stay
exact where the naive quotient would lose all digits.

The non-backtracking operator B acts on directed edges,
B_{(ij),(kl)} = delta_jk (1 - delta_il) omega_kl, and is tied to H by
the determinant identity det(xI - B) = det H(x) * prod(x^2 - omega^2).
Dense tools (full B spectrum, M0, M(lambda), the determinant residual)
are capped by directed-edge count and meant for validation scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import (
    BetaOverflowError,
    DenseCapExceededError,
    NotSignedGraphError,
    ParameterError,
    PoleError,
    SolverConvergenceError,
)
from .graphs import WeightedGraph, rng_stream

# beta*|J| beyond which 1 - tanh^2 underflows to the point of uselessness
MAX_TANH_ARG = 18.0

# imaginary parts below this (relative) are treated as real eigenvalues
REAL_EIG_RTOL = 1e-8

# inner real eigenvalue must sit strictly inside the empirical bulk;
# finite-size complex pairs that collide on the real axis land within a
# few percent of the bulk edge, so the margin stays clear of them
INNER_BULK_MARGIN = 0.9

DEFAULT_DENSE_CAP = 5000


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------


@dataclass
class EigenPair:
    """One eigenvalue with its unit eigenvector and solver diagnostics."""

    value: float
    vector: np.ndarray
    residual: float
    iterations: int


@dataclass
class SpectrumReport:
    """Full spectrum of B with the isolated/bulk classification."""

    leading: complex
    inner_real: Optional[complex]
    bulk_radius_empirical: float
    all_eigs: np.ndarray

    @property
    def real_eigs(self) -> np.ndarray:
        return self.all_eigs[_is_real(self.all_eigs)]

    @property
    def complex_eigs(self) -> np.ndarray:
        return self.all_eigs[~_is_real(self.all_eigs)]


def _is_real(eigs: np.ndarray) -> np.ndarray:
    return np.abs(eigs.imag) <= REAL_EIG_RTOL * np.abs(eigs)


# ---------------------------------------------------------------------------
# sparse symmetric builders
# ---------------------------------------------------------------------------


def _assemble(n, i, j, off, diag) -> sp.csr_matrix:
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([off, off, diag])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def bethe_hessian(graph: WeightedGraph, beta: float) -> sp.csr_matrix:
    """H at inverse temperature beta with omega = tanh(beta * J).

    Raises BetaOverflowError when beta*|J| exceeds MAX_TANH_ARG, where
    1 - tanh^2 underflows; route those solves through
    ``regularized_laplacian`` instead.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    x = beta * graph.w
    worst = np.max(np.abs(x)) if x.size else 0.0
    if worst > MAX_TANH_ARG:
        raise BetaOverflowError(
            f"beta*|J| reaches {worst:.2f} > {MAX_TANH_ARG}; "
            "1 - tanh^2 underflows -- use regularized_laplacian for this beta"
        )
    off = -np.sinh(x) * np.cosh(x)
    dcontrib = np.sinh(x) ** 2
    diag = np.ones(graph.n)
    np.add.at(diag, graph.i, dcontrib)
    np.add.at(diag, graph.j, dcontrib)
    return _assemble(graph.n, graph.i, graph.j, off, diag)


def bethe_hessian_generic(graph: WeightedGraph, x: complex) -> sp.csr_matrix:
    """H(x) for arbitrary edge weights omega (the graph's weights) and scalar x.

    x may be complex; the matrix is then complex symmetric. Evaluation at
    (or within 1e-14 relative of) a pole x^2 = omega_ij^2 raises PoleError.
    """
    om = graph.w
    x = complex(x)
    if x.imag == 0.0:
        x = x.real
    denom = x**2 - om**2
    if om.size:
        if np.any(np.abs(denom) <= 1e-14 * np.abs(om**2)):
            raise PoleError(f"x={x} lies on (or within 1e-14 of) a pole x^2 = omega^2")
    off = -x * om / denom
    dcontrib = om**2 / denom
    diag = np.ones(graph.n, dtype=np.result_type(dcontrib, np.float64))
    np.add.at(diag, graph.i, dcontrib)
    np.add.at(diag, graph.j, dcontrib)
    return _assemble(graph.n, graph.i, graph.j, off, diag)


def signed_bethe_hessian(graph: WeightedGraph, beta: float) -> sp.csr_matrix:
    """Signed-graph variant (1-t^2) I + t^2 D - t * sign(J), t = tanh(beta*J0).

    Requires two-valued weights +-J0; equals (1 - tanh^2(beta*J0)) times
    the generic Bethe-Hessian entrywise.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    j0 = graph.signed_magnitude()
    if j0 is None:
        raise NotSignedGraphError("weights are not two-valued +-J0")
    t = np.tanh(beta * j0)
    off = -t * np.sign(graph.w)
    diag = (1.0 - t**2) + t**2 * graph.degrees
    return _assemble(graph.n, graph.i, graph.j, off, diag)


def signed_bethe_hessian_r(graph: WeightedGraph, r: float) -> sp.csr_matrix:
    """(r^2-1) I + D - r * sign(J): the signed Bethe-Hessian divided by tanh^2.

    r = 1/tanh(beta*J0) >= 1 is the natural parameter for the signed
    Courant-Fischer iteration; the rescaling preserves eigenvectors and
    eigenvalue signs.
    """
    j0 = graph.signed_magnitude()
    if j0 is None:
        raise NotSignedGraphError("weights are not two-valued +-J0")
    off = -r * np.sign(graph.w)
    diag = (r**2 - 1.0) + graph.degrees
    return _assemble(graph.n, graph.i, graph.j, off, diag)


def _reg_parts(graph: WeightedGraph, beta: float):
    x = beta * graph.w
    wt = np.sinh(x) * np.cosh(x)
    lam_edge = np.sinh(x) ** 2
    lamp = np.ones(graph.n)  # I + Lambda
    np.add.at(lamp, graph.i, lam_edge)
    np.add.at(lamp, graph.j, lam_edge)
    return wt, lamp


def regularized_laplacian(graph: WeightedGraph, beta: float) -> sp.csr_matrix:
    """L = I - (I+Lambda)^(-1/2) W~ (I+Lambda)^(-1/2), entries O(1) for any beta.

    W~_ij = tanh(beta J_ij)/(1-tanh^2), Lambda_ii = sum_k tanh^2/(1-tanh^2).
    With the I+Lambda convention, H = (I+Lambda) - W~ exactly, so
    L = (I+Lambda)^(-1/2) H (I+Lambda)^(-1/2): a congruence. Zero crossings
    and eigenvalue signs of H are preserved, and H x = 0 iff
    L (I+Lambda)^(1/2) x = 0.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    wt, lamp = _reg_parts(graph, beta)
    s = 1.0 / np.sqrt(lamp)
    off = -wt * s[graph.i] * s[graph.j]
    return _assemble(graph.n, graph.i, graph.j, off, np.ones(graph.n))


def regularized_scaling(graph: WeightedGraph, beta: float) -> np.ndarray:
    """Diagonal of I + Lambda; maps L's eigenvector v back to H's x = v/sqrt(.)."""
    _, lamp = _reg_parts(graph, beta)
    return lamp


def regularized_quadform(graph: WeightedGraph, beta: float, v: np.ndarray) -> float:
    """v^T L_beta v for a unit vector v, without assembling L."""
    wt, lamp = _reg_parts(graph, beta)
    sv = v / np.sqrt(lamp)
    return 1.0 - 2.0 * float(np.sum(wt * sv[graph.i] * sv[graph.j]))


def mean_field_hessian(graph: WeightedGraph, beta: float) -> sp.csr_matrix:
    """Naive mean-field Hessian I - beta * J (eigenvectors are J's)."""
    return sp.identity(graph.n, format="csr") - beta * graph.csr


def signed_laplacian(graph: WeightedGraph) -> sp.csr_matrix:
    """Weighted Laplacian D_bar - J with D_bar = diag(|J| 1)."""
    return sp.diags(graph.abs_strength).tocsr() - graph.csr


# ---------------------------------------------------------------------------
# non-backtracking operator and its dense validation tools
# ---------------------------------------------------------------------------


def directed_edges(graph: WeightedGraph):
    """Directed edge list sorted lexicographically by (tail, head)."""
    tails = np.concatenate([graph.i, graph.j])
    heads = np.concatenate([graph.j, graph.i])
    wts = np.concatenate([graph.w, graph.w])
    order = np.lexsort((heads, tails))
    return tails[order], heads[order], wts[order]


def _check_cap(graph: WeightedGraph, cap: int):
    if 2 * graph.m > cap:
        raise DenseCapExceededError(
            f"2|E| = {2 * graph.m} exceeds the dense cap {cap}; "
            "raise the cap only for validation-scale runs"
        )


def nonbacktracking(graph: WeightedGraph, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense 2|E| x 2|E| non-backtracking matrix (validation tool).

    Row/column order is the lexicographic directed-edge order of
    ``directed_edges``: B[(i,j),(k,l)] = omega_kl when j == k and l != i.
    """
    _check_cap(graph, cap)
    tails, heads, wts = directed_edges(graph)
    # B[e, f] = w_f when tail(f) == head(e) and head(f) != tail(e)
    follow = (tails[None, :] == heads[:, None]) & (heads[None, :] != tails[:, None])
    return np.where(follow, wts[None, :], 0.0)


def full_spectrum_b(
    graph: WeightedGraph, cap: int = DEFAULT_DENSE_CAP, dtype=np.float64
) -> SpectrumReport:
    """Dense eigensolve of B with isolated/bulk classification.

    An eigenvalue is real when its imaginary part vanishes (LAPACK returns
    exact zeros for 1x1 Schur blocks) or is below REAL_EIG_RTOL relative.
    The empirical bulk radius is the largest modulus among complex
    eigenvalues; the inner isolated eigenvalue is the real eigenvalue of
    largest modulus strictly below INNER_BULK_MARGIN times that radius.
    """
    B = nonbacktracking(graph, cap=cap)
    if dtype is not None and B.dtype != dtype:
        B = B.astype(dtype)
    eigs = sla.eigvals(B, check_finite=False) if B.size else np.empty(0, complex)
    eigs = eigs.astype(np.complex128)
    if eigs.size == 0:
        return SpectrumReport(0j, None, 0.0, eigs)
    real_mask = _is_real(eigs)
    complex_eigs = eigs[~real_mask]
    radius = float(np.max(np.abs(complex_eigs))) if complex_eigs.size else 0.0
    leading = eigs[np.argmax(np.abs(eigs))]
    inner = None
    reals = eigs[real_mask]
    if reals.size and radius > 0:
        inside = reals[np.abs(reals) < INNER_BULK_MARGIN * radius]
        if inside.size:
            inner = inside[np.argmax(np.abs(inside))]
    return SpectrumReport(complex(leading), None if inner is None else complex(inner), radius, eigs)


def build_m0(graph: WeightedGraph, bulk_radius_sq: float, cap: int = 4000) -> np.ndarray:
    """2n x 2n block matrix [[W, -I], [R^2 I, 0]] with R^2 = c E[omega^2]."""
    n = graph.n
    if 2 * n > cap:
        raise DenseCapExceededError(f"2n = {2 * n} exceeds the dense cap {cap}")
    W = graph.csr.toarray()
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = W
    M[:n, n:] = -np.eye(n)
    M[n:, :n] = bulk_radius_sq * np.eye(n)
    return M


def m0_eigenvalues_from_w(mu: np.ndarray, bulk_radius_sq: float) -> np.ndarray:
    """Analytic M0 spectrum: lambda = (mu +- sqrt(mu^2 - 4 R^2)) / 2 per mu of W."""
    mu = np.asarray(mu, dtype=np.complex128)
    root = np.sqrt(mu**2 - 4.0 * bulk_radius_sq)
    return np.concatenate([(mu + root) / 2.0, (mu - root) / 2.0])


def f_matrix(graph: WeightedGraph, lam: complex) -> np.ndarray:
    """Reaction-term matrix F(lambda) (dense, complex).

    Diagonal: -sum_{k in d(i)} omega_ik^4 / (lambda^2 - omega_ik^2);
    off-diagonal on edges: lambda * omega_ij^3 / (lambda^2 - omega_ij^2).
    Built so that [F psi]_i = sum_j omega_ij^3 g_ij whenever g solves the
    edge elimination at eigenvalue lambda.
    """
    om = graph.w
    denom = lam**2 - om.astype(np.complex128) ** 2
    if om.size and np.any(np.abs(denom) <= 1e-14 * np.abs(om**2)):
        raise PoleError(f"lambda={lam} lies on a pole lambda^2 = omega^2")
    n = graph.n
    F = np.zeros((n, n), dtype=np.complex128)
    dcontrib = -(om.astype(np.complex128) ** 4) / denom
    np.add.at(F, (graph.i, graph.i), dcontrib)
    np.add.at(F, (graph.j, graph.j), dcontrib)
    off = lam * om**3 / denom
    F[graph.i, graph.j] += off
    F[graph.j, graph.i] += off
    return F


def build_m_of_lambda(graph: WeightedGraph, lam: complex, cap: int = 4000) -> np.ndarray:
    """2n x 2n matrix [[W, -I], [D_W - F(lambda), 0]] for |lambda| >= 1."""
    if abs(lam) < 1.0:
        raise ParameterError("M(lambda) is defined for |lambda| >= 1")
    n = graph.n
    if 2 * n > cap:
        raise DenseCapExceededError(f"2n = {2 * n} exceeds the dense cap {cap}")
    dw = np.zeros(n)
    np.add.at(dw, graph.i, graph.w**2)
    np.add.at(dw, graph.j, graph.w**2)
    M = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    M[:n, :n] = graph.csr.toarray()
    M[:n, n:] = -np.eye(n)
    M[n:, :n] = np.diag(dw) - f_matrix(graph, lam)
    return M


def watanabe_fukumizu_residual(
    graph: WeightedGraph, x: complex, cap: int = DEFAULT_DENSE_CAP
) -> float:
    """Relative residual of det(xI - B) = det H(x) * prod(x^2 - omega^2).

    Both sides are accumulated as complex log-determinants; when either
    magnitude would overflow a float, the residual |lhs - rhs| / max(...)
    is evaluated through |exp(log rhs - log lhs) - 1|, which bounds it.
    """
    B = nonbacktracking(graph, cap=cap)
    x = complex(x)
    if B.size == 0:
        return 0.0  # both determinants are the empty product 1
    lhs_sign, lhs_log = np.linalg.slogdet(x * np.eye(B.shape[0], dtype=complex) - B)
    H = bethe_hessian_generic(graph, x).toarray().astype(np.complex128)
    h_sign, h_log = np.linalg.slogdet(H)
    edge_terms = np.log((x**2 - graph.w.astype(np.complex128) ** 2))
    rhs_log = h_log + float(np.sum(edge_terms.real))
    rhs_sign = h_sign * np.exp(1j * float(np.sum(edge_terms.imag)))
    if max(lhs_log, rhs_log) < 300.0:
        lhs = lhs_sign * np.exp(lhs_log)
        rhs = rhs_sign * np.exp(rhs_log)
        return float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0))
    diff = (rhs_log - lhs_log) + np.log(rhs_sign / lhs_sign)
    return float(abs(np.exp(diff) - 1.0))


# ---------------------------------------------------------------------------
# eigensolvers
# ---------------------------------------------------------------------------


def _dense_smallest(H, largest=False) -> EigenPair:
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    vals, vecs = sla.eigh(Hd)
    k = -1 if largest else 0
    vec = vecs[:, k]
    residual = float(np.linalg.norm(Hd @ vec - vals[k] * vec))
    return EigenPair(float(vals[k]), vec, residual, 0)


def _arpack_extremal(H, which, tol, maxiter, seed) -> EigenPair:
    n = H.shape[0]
    counter = {"matvec": 0}

    def mv(v):
        counter["matvec"] += 1
        return H @ v

    op = LinearOperator((n, n), matvec=mv, dtype=np.float64)
    v0 = rng_stream(seed, "solver").standard_normal(n)
    v0 /= np.linalg.norm(v0)
    try:
        vals, vecs = eigsh(op, k=1, which=which, v0=v0, tol=tol, maxiter=maxiter)
    except ArpackNoConvergence as exc:
        best = None
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            vec = exc.eigenvectors[:, 0]
            best = float(np.linalg.norm(H @ vec - exc.eigenvalues[0] * vec))
        raise SolverConvergenceError(
            f"ARPACK failed to converge within {maxiter} iterations", best_residual=best
        ) from exc
    vec = vecs[:, 0]
    val = float(vals[0])
    residual = float(np.linalg.norm(H @ vec - val * vec))
    return EigenPair(val, vec, residual, counter["matvec"])


def smallest_eigpair(
    H,
    tol: float = 1e-8,
    max_iter: Optional[int] = None,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> EigenPair:
    """Algebraically smallest eigenpair of a symmetric matrix.

    Dense LAPACK below ``dense_cutoff``; ARPACK Lanczos (which='SA') with a
    seeded deterministic start vector above it. ``iterations`` counts
    matrix-vector products on the iterative path.
    """
    n = H.shape[0]
    if n <= dense_cutoff:
        return _dense_smallest(H)
    maxiter = max_iter if max_iter is not None else 10 * n
    return _arpack_extremal(H, "SA", tol, maxiter, seed)


def largest_eigpair(
    H,
    tol: float = 1e-8,
    max_iter: Optional[int] = None,
    seed: int = 0,
    dense_cutoff: int = 500,
) -> EigenPair:
    """Algebraically largest eigenpair (used by the mean-field baseline)."""
    n = H.shape[0]
    if n <= dense_cutoff:
        return _dense_smallest(H, largest=True)
    maxiter = max_iter if max_iter is not None else 10 * n
    return _arpack_extremal(H, "LA", tol, maxiter, seed)


def dense_eigvalsh(H) -> np.ndarray:
    """All eigenvalues of a symmetric matrix (test oracle)."""
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    return sla.eigvalsh(Hd)


# ---------------------------------------------------------------------------
# dumps
# ---------------------------------------------------------------------------


def write_spectrum_csv(report: SpectrumReport, path) -> None:
    """CSV dump with columns re, im, kind in {bulk, leading, inner}."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "kind"])
        for lam in report.all_eigs:
            if lam == report.leading:
                kind = "leading"
            elif report.inner_real is not None and lam == report.inner_real:
                kind = "inner"
            else:
                kind = "bulk"
            writer.writerow([repr(float(lam.real)), repr(float(lam.imag)), kind])


def write_matrix_coo(H, path) -> None:
    """Debug dump in coordinate text format 'i j value'."""
    coo = H.tocoo() if sp.issparse(H) else sp.coo_matrix(H)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
