"""Numba build of the generalized hypergraph walk kernel.

Same splitmix64 streams and draw order as walks_numpy; outputs are bit
identical. Walks are independent streams, so prange parallelism does not
change the result.
"""

import numpy as np
from numba import njit, prange

_U = np.uint64
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53


@njit(cache=True)
def _mix64(x):
    x = x ^ (x >> _U(30))
    x = x * _U(_MIX1)
    x = x ^ (x >> _U(27))
    x = x * _U(_MIX2)
    return x ^ (x >> _U(31))


@njit(cache=True)
def _stream_state(seed, stream):
    return _mix64(_U(seed) ^ _mix64(_U(_GOLDEN) ^ _U(stream)))


@njit(cache=True)
def _walk_one(node_edge_indptr, node_edge_ids, edge_node_indptr, edge_nodes,
              edge_author_counts, n_authors, n_keywords, length, alpha,
              seed, w, out_row):
    state = _stream_state(seed, w)
    state = state + _U(_GOLDEN)
    cur = n_authors + np.int64(_mix64(state) % _U(n_keywords))
    out_row[0] = cur
    if node_edge_indptr[cur + 1] - node_edge_indptr[cur] == 0:
        return
    p_author = alpha / (alpha + 1.0)
    for t in range(1, length):
        lo = node_edge_indptr[cur]
        deg = node_edge_indptr[cur + 1] - lo
        if deg == 0:
            return
        state = state + _U(_GOLDEN)
        e = node_edge_ids[lo + np.int64(_mix64(state) % _U(deg))]
        s = edge_node_indptr[e]
        end = edge_node_indptr[e + 1]
        ac = edge_author_counts[e]
        has_a = ac > 0
        has_k = end - s - ac > 0
        if has_a and has_k:
            state = state + _U(_GOLDEN)
            u = np.float64(_mix64(state) >> _U(11)) * _TO_UNIT
            pick_author = u < p_author
        else:
            pick_author = has_a
        if pick_author:
            k_lo = s
            k_hi = s + ac
        else:
            k_lo = s + ac
            k_hi = end
        n_cand = 0
        for i in range(k_lo, k_hi):
            if edge_nodes[i] != cur:
                n_cand += 1
        if n_cand == 0:
            nxt = cur
        else:
            state = state + _U(_GOLDEN)
            j = np.int64(_mix64(state) % _U(n_cand))
            nxt = cur
            c = 0
            for i in range(k_lo, k_hi):
                v = edge_nodes[i]
                if v == cur:
                    continue
                if c == j:
                    nxt = v
                    break
                c += 1
        out_row[t] = nxt
        cur = nxt


@njit(cache=True, parallel=True)
def _generate(node_edge_indptr, node_edge_ids, edge_node_indptr, edge_nodes,
              edge_author_counts, n_authors, n_keywords, n_walks, length,
              alpha, seed):
    out = np.full((n_walks, length), -1, dtype=np.int64)
    for w in prange(n_walks):
        _walk_one(node_edge_indptr, node_edge_ids, edge_node_indptr,
                  edge_nodes, edge_author_counts, n_authors, n_keywords,
                  length, alpha, seed, w, out[w])
    return out


def generate_walks(node_edge_indptr, node_edge_ids,
                   edge_node_indptr, edge_nodes, edge_author_counts,
                   n_authors, n_keywords,
                   n_walks, length, alpha, seed):
    return _generate(node_edge_indptr, node_edge_ids, edge_node_indptr,
                     edge_nodes, edge_author_counts, np.int64(n_authors),
                     np.int64(n_keywords), np.int64(n_walks),
                     np.int64(length), np.float64(alpha), np.uint64(seed))
