"""Network centrality: Brandes betweenness and power-iteration eigenvector.

Both operate on the directed graph as stored (edge u -> v means u retweeted
v).  Betweenness uses unweighted shortest paths, endpoints excluded, no
normalization.  Eigenvector centrality is oriented along influence: a user's
score grows with the scores of the users who retweet them.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from hategraph.graph import RetweetGraph

try:  # numba only accelerates; the same function runs un-jitted without it
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

# Fixed accumulation chunk so the summation order (and thus every bit of the
# result) is independent of how many workers process the chunks.
_CHUNK = 256


@njit(cache=True, nogil=True)
def _brandes_chunk(n, out_indptr, out_indices, in_indptr, in_indices, sources):
    """Dependency accumulation for one block of source nodes."""
    bc = np.zeros(n, dtype=np.float64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)  # BFS order; reversed it is the stack
    for si in range(len(sources)):
        s = sources[si]
        for i in range(n):
            dist[i] = -1
            sigma[i] = 0.0
            delta[i] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        head = 0
        tail = 0
        order[tail] = s
        tail += 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for ei in range(out_indptr[v], out_indptr[v + 1]):
                w = out_indices[ei]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]
        for qi in range(tail - 1, 0, -1):
            w = order[qi]
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            # predecessors of w are exactly its in-neighbors one level up
            for ei in range(in_indptr[w], in_indptr[w + 1]):
                v = in_indices[ei]
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
    return bc


def betweenness(g: RetweetGraph, sources=None, seed: int = 0) -> np.ndarray:
    """Directed betweenness via Brandes' accumulation.

    `sources` limits the source set (Brandes-Pich approximation): an int picks
    that many sources uniformly without replacement (seeded) and rescales by
    n/k; an array is used as-is without rescaling; None means exact.
    """
    if g.n == 0:
        return np.zeros(0, dtype=np.float64)
    scale = 1.0
    if sources is None:
        src = np.arange(g.n, dtype=np.int64)
    elif np.isscalar(sources):
        k = int(sources)
        if not (1 <= k <= g.n):
            raise ValueError(f"source count must be in [1, {g.n}], got {k}")
        rng = np.random.default_rng(seed)
        src = np.sort(rng.choice(g.n, size=k, replace=False)).astype(np.int64)
        scale = g.n / k
    else:
        src = np.asarray(sources, dtype=np.int64)

    partials = []
    for start in range(0, len(src), _CHUNK):
        chunk = src[start:start + _CHUNK]
        partials.append(_brandes_chunk(
            g.n, g.out_indptr, g.out_indices, g.in_indptr, g.in_indices, chunk))
    bc = np.zeros(g.n, dtype=np.float64)
    for part in partials:
        bc += part
    if scale != 1.0:
        bc *= scale
    return bc


@dataclass
class EigenResult:
    scores: np.ndarray      # L2-normalized, non-negative
    eigenvalue: float       # Rayleigh quotient at the returned vector
    converged: bool
    iterations: int
    dominant_simple: bool   # False when two starts converge to different vectors


def _influence_matrix(g: RetweetGraph) -> sp.csr_matrix:
    """M with (Mv)[u] = sum of v over users who retweeted u (rows = in-lists)."""
    data = np.ones(len(g.in_indices), dtype=np.float64)
    return sp.csr_matrix((data, g.in_indices, g.in_indptr), shape=(g.n, g.n))


def _power_iterate(M, v0, tol, max_iter):
    v = v0 / np.linalg.norm(v0)
    for it in range(1, max_iter + 1):
        y = M @ v
        norm = np.linalg.norm(y)
        if norm == 0.0:
            # nilpotent case (e.g. DAG): spectrum is {0}, scores all zero
            return np.zeros_like(v), 0.0, True, it
        y /= norm
        if np.max(np.abs(y - v)) < tol:
            lam = float(y @ (M @ y))
            return y, lam, True, it
        v = y
    lam = float(v @ (M @ v))
    return v, lam, False, max_iter


def eigenvector_centrality(g: RetweetGraph, tol: float = 1e-8,
                           max_iter: int = 1000, check_simple: bool = True,
                           seed: int = 0) -> EigenResult:
    """Power iteration on the influence direction, L2-normalized.

    A second run from a different positive start detects a (near-)degenerate
    dominant eigenvalue, e.g. two disconnected components of equal strength.
    """
    if g.n == 0:
        return EigenResult(np.zeros(0), 0.0, True, 0, True)
    M = _influence_matrix(g)
    v0 = np.full(g.n, 1.0 / np.sqrt(g.n))
    v, lam, converged, iters = _power_iterate(M, v0, tol, max_iter)
    simple = True
    if check_simple and converged and g.n > 1:
        rng = np.random.default_rng(seed)
        alt0 = rng.uniform(0.5, 1.5, size=g.n)
        alt, _, alt_conv, _ = _power_iterate(M, alt0, tol, max_iter)
        if not alt_conv or min(np.max(np.abs(alt - v)), np.max(np.abs(alt + v))) > 100 * tol:
            simple = False
    return EigenResult(np.abs(v), lam, converged, iters, simple)
