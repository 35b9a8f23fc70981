"""Pure-python/numpy build of the generalized hypergraph walk kernel.

Node indices are laid out authors-first: [0, n_authors) are author nodes,
[n_authors, n_authors + n_keywords) are keyword nodes. Each edge's member
slice in `edge_nodes` is also authors-first, with `edge_author_counts[e]`
giving the split point. Draw-for-draw identical to the numba build.
"""

import numpy as np

from .rng import GOLDEN, MASK64, TO_UNIT, mix64, stream_state


def step_from(edge_node_indptr, edge_nodes, edge_author_counts,
              node_edge_indptr, node_edge_ids, n_authors,
              cur: int, alpha: float, state: int):
    """One walk step from node `cur`. Returns (next_node, new_state).

    Samples an incident edge uniformly, picks the member kind (author with
    probability alpha/(alpha+1) when both kinds are present), then picks
    uniformly within that kind excluding `cur`. If the chosen kind holds no
    node besides `cur`, the walk stays at `cur` for this step.
    """
    lo = int(node_edge_indptr[cur])
    deg = int(node_edge_indptr[cur + 1]) - lo
    if deg == 0:
        raise ValueError(f"no incident edge for node index {cur}")
    state = (state + GOLDEN) & MASK64
    e = node_edge_ids[lo + mix64(state) % deg]

    s = int(edge_node_indptr[e])
    t = int(edge_node_indptr[e + 1])
    ac = int(edge_author_counts[e])
    has_a = ac > 0
    has_k = t - s - ac > 0
    if has_a and has_k:
        state = (state + GOLDEN) & MASK64
        u = (mix64(state) >> 11) * TO_UNIT
        pick_author = u < alpha / (alpha + 1.0)
    else:
        pick_author = has_a
    if pick_author:
        k_lo, k_hi = s, s + ac
    else:
        k_lo, k_hi = s + ac, t

    n_cand = 0
    for i in range(k_lo, k_hi):
        if edge_nodes[i] != cur:
            n_cand += 1
    if n_cand == 0:
        return cur, state
    state = (state + GOLDEN) & MASK64
    j = mix64(state) % n_cand
    c = 0
    for i in range(k_lo, k_hi):
        v = edge_nodes[i]
        if v == cur:
            continue
        if c == j:
            return int(v), state
        c += 1
    raise AssertionError("unreachable")


def generate_walks(node_edge_indptr, node_edge_ids,
                   edge_node_indptr, edge_nodes, edge_author_counts,
                   n_authors, n_keywords,
                   n_walks, length, alpha, seed):
    """Walk matrix (n_walks, length), -1 padded past a dead end.

    Walk w draws from stream (seed, w): start keyword first, then the per-step
    draws, so serial and parallel schedules produce identical output.
    """
    out = np.full((n_walks, length), -1, dtype=np.int64)
    n_authors = int(n_authors)
    n_keywords = int(n_keywords)
    for w in range(n_walks):
        state = stream_state(seed, w)
        state = (state + GOLDEN) & MASK64
        cur = n_authors + mix64(state) % n_keywords
        if node_edge_indptr[cur + 1] - node_edge_indptr[cur] == 0:
            # keyword absent from every walkable edge cannot happen after
            # build() drops isolated nodes, but keep walks total anyway
            out[w, 0] = cur
            continue
        out[w, 0] = cur
        for t in range(1, length):
            cur, state = step_from(edge_node_indptr, edge_nodes,
                                   edge_author_counts, node_edge_indptr,
                                   node_edge_ids, n_authors, cur, alpha, state)
            out[w, t] = cur
    return out
