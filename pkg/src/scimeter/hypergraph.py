"""Author-keyword hypergraph over a year window, plus generalized walks.

Each paper is one hyperedge joining its author nodes and keyword nodes.
Edges with fewer than two distinct nodes carry no walk information and are
dropped at build time; nodes that appear in no surviving edge are absent.
Node indices are authors-first so the walk kernels can pick a member kind
without a lookup table. Walk tokens are `A:<author_id>` / `K:<keyword>`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._accel import kernels
from ._accel.rng import SplitMix64
from .corpus import Corpus


class NodeKind(Enum):
    AUTHOR = "A"
    KEYWORD = "K"


@dataclass(frozen=True)
class HyperNode:
    kind: NodeKind
    id: str

    @property
    def token(self) -> str:
        return f"{self.kind.value}:{self.id}"


def token_to_node(token: str) -> HyperNode:
    kind, _, node_id = token.partition(":")
    return HyperNode(NodeKind(kind), node_id)


@dataclass
class WalkConfig:
    length: int = 20
    alpha: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("walk length must be >= 2")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")


class Hypergraph:
    """Incidence-list hypergraph in flat CSR arrays."""

    def __init__(self, tokens: list[str], n_authors: int,
                 edge_paper_ids: list[str],
                 edge_node_indptr: np.ndarray, edge_nodes: np.ndarray,
                 edge_author_counts: np.ndarray):
        self.tokens = tokens
        self.n_authors = n_authors
        self.n_keywords = len(tokens) - n_authors
        self.token_index = {tok: i for i, tok in enumerate(tokens)}
        self.edge_paper_ids = edge_paper_ids
        self.edge_node_indptr = edge_node_indptr
        self.edge_nodes = edge_nodes
        self.edge_author_counts = edge_author_counts

        n = len(tokens)
        counts = np.zeros(n + 1, dtype=np.int64)
        for v in edge_nodes:
            counts[v + 1] += 1
        self.node_edge_indptr = np.cumsum(counts)
        self.node_edge_ids = np.empty(len(edge_nodes), dtype=np.int64)
        cursor = self.node_edge_indptr[:-1].copy()
        for e in range(len(edge_paper_ids)):
            for k in range(edge_node_indptr[e], edge_node_indptr[e + 1]):
                v = edge_nodes[k]
                self.node_edge_ids[cursor[v]] = e
                cursor[v] += 1

    @property
    def n_nodes(self) -> int:
        return len(self.tokens)

    @property
    def n_edges(self) -> int:
        return len(self.edge_paper_ids)

    def nodes(self) -> list[HyperNode]:
        return [token_to_node(tok) for tok in self.tokens]

    def degree(self, node: HyperNode) -> int:
        i = self.token_index[node.token]
        return int(self.node_edge_indptr[i + 1] - self.node_edge_indptr[i])

    def edge_members(self, e: int) -> set[str]:
        lo, hi = self.edge_node_indptr[e], self.edge_node_indptr[e + 1]
        return {self.tokens[v] for v in self.edge_nodes[lo:hi]}

    def edges(self) -> list[tuple[str, set[str]]]:
        return [(pid, self.edge_members(e))
                for e, pid in enumerate(self.edge_paper_ids)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.tokens == other.tokens
                and self.edge_paper_ids == other.edge_paper_ids
                and np.array_equal(self.edge_node_indptr, other.edge_node_indptr)
                and np.array_equal(self.edge_nodes, other.edge_nodes))


def build(view: Corpus) -> Hypergraph:
    """One hyperedge per paper with >= 2 distinct nodes; isolated nodes absent."""
    author_ids: set[str] = set()
    keyword_ids: set[str] = set()
    raw_edges: list[tuple[str, list[str], list[str]]] = []
    for rec in view:
        authors = sorted({a.author_id for a in rec.authors})
        keywords = list(rec.keywords)
        if len(authors) + len(keywords) < 2:
            continue
        raw_edges.append((rec.paper_id, authors, keywords))
        author_ids.update(authors)
        keyword_ids.update(keywords)

    authors_sorted = sorted(author_ids)
    keywords_sorted = sorted(keyword_ids)
    tokens = ([f"A:{a}" for a in authors_sorted]
              + [f"K:{k}" for k in keywords_sorted])
    a_index = {a: i for i, a in enumerate(authors_sorted)}
    k_index = {k: len(authors_sorted) + i for i, k in enumerate(keywords_sorted)}

    edge_paper_ids: list[str] = []
    indptr = [0]
    members: list[int] = []
    author_counts: list[int] = []
    for pid, authors, keywords in raw_edges:
        edge_paper_ids.append(pid)
        members.extend(a_index[a] for a in authors)
        members.extend(k_index[k] for k in keywords)
        author_counts.append(len(authors))
        indptr.append(len(members))

    return Hypergraph(tokens, len(authors_sorted), edge_paper_ids,
                      np.asarray(indptr, dtype=np.int64),
                      np.asarray(members, dtype=np.int64),
                      np.asarray(author_counts, dtype=np.int64))


def step(g: Hypergraph, current: HyperNode, cfg: WalkConfig,
         rng: SplitMix64) -> HyperNode:
    """One generalized walk step; raises ValueError on an isolated node."""
    from ._accel import walks_numpy
    cur = g.token_index[current.token]
    nxt, rng.state = walks_numpy.step_from(
        g.edge_node_indptr, g.edge_nodes, g.edge_author_counts,
        g.node_edge_indptr, g.node_edge_ids, g.n_authors,
        cur, cfg.alpha, rng.state)
    return token_to_node(g.tokens[nxt])


def generate_walks(g: Hypergraph, cfg: WalkConfig,
                   n_walks: int | None = None,
                   backend: str | None = None) -> list[list[str]]:
    """Token walks, one stream per walk; default n_walks = keyword count."""
    if n_walks is None:
        n_walks = g.n_keywords
    if g.n_keywords == 0 or n_walks == 0:
        return []
    kern = kernels("walks", backend)
    mat = kern.generate_walks(
        g.node_edge_indptr, g.node_edge_ids, g.edge_node_indptr,
        g.edge_nodes, g.edge_author_counts, g.n_authors, g.n_keywords,
        n_walks, cfg.length, cfg.alpha, cfg.rng_seed)
    walks = []
    for row in mat:
        walks.append([g.tokens[v] for v in row if v >= 0])
    return walks


def write_walks(walks: list[list[str]], path: str,
                config_hash: str = "") -> None:
    """Persist walks, one per line, TAB-separated tokens.

    Keywords may contain single spaces after normalization, so tokens are
    tab-delimited rather than space-delimited.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if config_hash:
            fh.write(f"# config={config_hash}\n")
        for walk in walks:
            fh.write("\t".join(walk))
            fh.write("\n")


def read_walks(path: str) -> list[list[str]]:
    walks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            walks.append(line.split("\t"))
    return walks
