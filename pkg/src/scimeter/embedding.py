"""Skip-gram embeddings over walk corpora, with exact similarity queries.

Training is written from scratch (negative sampling, dynamic window,
linearly decaying learning rate) so deterministic mode is bitwise
reproducible under a fixed seed. Query structures are immutable; nearest
neighbors use an exact scan with a fixed tie rule (ascending distance,
then lexicographic token id).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._accel import kernels
from ._accel.rng import GOLDEN, mix64

MAGIC = b"SCMEMB01"


class KeyMissing(KeyError):
    """Raised when a queried node is not in the embedding space."""


class UnrepresentableError(ValueError):
    """Raised when no requested keyword is present in the space."""


@dataclass
class TrainConfig:
    dim: int = 100
    context_window: int = 5
    negatives_per_positive: int = 5
    epochs: int = 5
    lr_initial: float = 0.025
    lr_final: float = 1e-4
    min_count: int = 1
    seed: int = 0
    mode: str = "deterministic"

    def __post_init__(self):
        for name in ("dim", "context_window", "negatives_per_positive",
                     "epochs", "min_count"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lr_initial <= 0 or self.lr_final <= 0:
            raise ValueError("learning rates must be positive")
        if self.mode not in ("deterministic", "parallel"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _splitmix_uniform(seed: int, stream: int, n: int) -> np.ndarray:
    """Vectorized splitmix64 uniforms in [0, 1); backend independent."""
    base = np.uint64(mix64((seed ^ mix64((GOLDEN ^ stream) & ((1 << 64) - 1)))
                           & ((1 << 64) - 1)))
    x = base + (np.arange(1, n + 1, dtype=np.uint64)) * np.uint64(GOLDEN)
    x ^= x >> np.uint64(30)
    x *= np.uint64(0xBF58476D1CE4E5B9)
    x ^= x >> np.uint64(27)
    x *= np.uint64(0x94D049BB133111EB)
    x ^= x >> np.uint64(31)
    return (x >> np.uint64(11)).astype(np.float64) * 2.0**-53


class EmbeddingSpace:
    """Per-year map from node token to a dense vector."""

    def __init__(self, year: int, dim: int, tokens: list[str],
                 matrix: np.ndarray, trained_on: str = "",
                 losses: np.ndarray | None = None):
        if matrix.shape != (len(tokens), dim):
            raise ValueError("matrix shape does not match tokens/dim")
        self.year = year
        self.dim = dim
        self.tokens = tokens
        self.matrix = matrix
        self.trained_on = trained_on
        self.losses = losses
        self.token_index = {t: i for i, t in enumerate(tokens)}
        self._unit: np.ndarray | None = None
        self._lexrank: np.ndarray | None = None

    def __contains__(self, token: str) -> bool:
        return token in self.token_index

    def __len__(self) -> int:
        return len(self.tokens)

    def vector(self, token: str) -> np.ndarray:
        try:
            return self.matrix[self.token_index[token]]
        except KeyError:
            raise KeyMissing(token) from None

    def keyword_tokens(self) -> list[str]:
        return [t for t in self.tokens if t.startswith("K:")]

    def author_tokens(self) -> list[str]:
        return [t for t in self.tokens if t.startswith("A:")]

    def _unit_matrix(self) -> np.ndarray:
        if self._unit is None:
            m = self.matrix.astype(np.float64)
            norms = np.linalg.norm(m, axis=1)
            norms[norms == 0] = np.nan
            self._unit = m / norms[:, None]
        return self._unit

    def _lex_ranks(self) -> np.ndarray:
        if self._lexrank is None:
            order = sorted(range(len(self.tokens)),
                           key=lambda i: self.tokens[i])
            ranks = np.empty(len(self.tokens), dtype=np.int64)
            for rank, i in enumerate(order):
                ranks[i] = rank
            self._lexrank = ranks
        return self._lexrank


def train(walks: list[list[str]], cfg: TrainConfig, year: int = 0,
          trained_on: str = "", backend: str | None = None) -> EmbeddingSpace:
    """Train a space on a walk corpus; fatal on an empty corpus."""
    if not walks or all(len(w) == 0 for w in walks):
        raise ValueError("empty walk corpus")
    counts: dict[str, int] = {}
    for walk in walks:
        for tok in walk:
            counts[tok] = counts.get(tok, 0) + 1
    vocab = sorted((t for t, c in counts.items() if c >= cfg.min_count),
                   key=lambda t: (-counts[t], t))
    if not vocab:
        raise ValueError("no token reaches min_count")
    index = {t: i for i, t in enumerate(vocab)}

    flat: list[int] = []
    offsets = [0]
    for walk in walks:
        enc = [index[t] for t in walk if t in index]
        if len(enc) >= 2:
            flat.extend(enc)
            offsets.append(len(flat))
    if not flat:
        raise ValueError("no trainable sentence after min_count filtering")
    sent_flat = np.asarray(flat, dtype=np.int32)
    sent_offsets = np.asarray(offsets, dtype=np.int64)

    v = len(vocab)
    syn0 = ((_splitmix_uniform(cfg.seed, 1, v * cfg.dim) - 0.5) / cfg.dim
            ).astype(np.float32).reshape(v, cfg.dim)
    syn1 = np.zeros((v, cfg.dim), dtype=np.float32)

    freq = np.array([counts[t] for t in vocab], dtype=np.float64) ** 0.75
    neg_cdf = np.cumsum(freq / freq.sum())
    neg_cdf[-1] = 1.0

    kern = kernels("sgns", backend)
    fn = kern.train_sgns if cfg.mode == "deterministic" else kern.train_sgns_parallel
    losses = fn(sent_flat, sent_offsets, syn0, syn1, neg_cdf,
                cfg.context_window, cfg.negatives_per_positive, cfg.epochs,
                cfg.lr_initial, cfg.lr_final, cfg.seed)
    return EmbeddingSpace(year, cfg.dim, vocab, syn0, trained_on, losses)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]; zero vectors are an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("dimension mismatch")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance undefined for zero vector")
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    return min(max(d, 0.0), 2.0)


def _kind_mask(space: EmbeddingSpace, kind_filter: str) -> np.ndarray:
    if kind_filter == "any":
        return np.ones(len(space.tokens), dtype=bool)
    prefix = {"keyword": "K:", "author": "A:"}.get(kind_filter)
    if prefix is None:
        raise ValueError(f"unknown kind_filter {kind_filter!r}")
    return np.array([t.startswith(prefix) for t in space.tokens], dtype=bool)


def nearest_to_vector(space: EmbeddingSpace, vec: np.ndarray, k: int,
                      kind_filter: str = "keyword",
                      exclude: frozenset[str] | set[str] = frozenset()
                      ) -> list[tuple[str, float]]:
    """k nearest tokens to an arbitrary vector, exact scan.

    Ascending cosine distance, ties broken by lexicographic token id.
    Returns fewer than k when the space runs short.
    """
    if k <= 0:
        return []
    vec = np.asarray(vec, dtype=np.float64)
    n = np.linalg.norm(vec)
    if n == 0.0:
        raise ValueError("cosine distance undefined for zero vector")
    mask = _kind_mask(space, kind_filter)
    if exclude:
        for t in exclude:
            i = space.token_index.get(t)
            if i is not None:
                mask[i] = False
    cand = np.flatnonzero(mask)
    if cand.size == 0:
        return []
    unit = space._unit_matrix()
    dists = 1.0 - unit[cand] @ (vec / n)
    order = np.lexsort((space._lex_ranks()[cand], dists))
    top = order[:k]
    return [(space.tokens[cand[i]], float(min(max(dists[i], 0.0), 2.0)))
            for i in top]


def nearest_neighbors(space: EmbeddingSpace, center: str, k: int,
                      kind_filter: str = "keyword") -> list[tuple[str, float]]:
    """k nearest tokens to `center` (a token, or a bare keyword)."""
    token = center if center in space.token_index else f"K:{center}"
    if token not in space.token_index:
        raise KeyMissing(center)
    return nearest_to_vector(space, space.vector(token), k, kind_filter,
                             exclude={token})


def centroid(space: EmbeddingSpace, keywords) -> np.ndarray:
    """Mean vector of the present keywords; absent ones are dropped.

    Raises UnrepresentableError when none are present.
    """
    rows = [space.token_index[f"K:{kw}"] for kw in keywords
            if f"K:{kw}" in space.token_index]
    if not rows:
        raise UnrepresentableError("no keyword present in space")
    # sorted so the float sum order never depends on set iteration order
    return space.matrix[sorted(rows)].astype(np.float64).mean(axis=0)


def save_space(space: EmbeddingSpace, path: str, config_hash: str = "") -> None:
    header = json.dumps({
        "year": space.year, "dim": space.dim, "count": len(space.tokens),
        "trained_on": space.trained_on, "config_hash": config_hash,
    }).encode("utf-8")
    table = "\n".join(space.tokens).encode("utf-8")
    mat = np.ascontiguousarray(space.matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<Q", len(table)))
        fh.write(table)
        fh.write(mat.tobytes())


def load_space(path: str) -> EmbeddingSpace:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path} is not an embedding space file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        (tlen,) = struct.unpack("<Q", fh.read(8))
        tokens = fh.read(tlen).decode("utf-8").split("\n") if tlen else []
        mat = np.frombuffer(fh.read(), dtype="<f4").reshape(
            header["count"], header["dim"]).copy()
    return EmbeddingSpace(header["year"], header["dim"], tokens, mat,
                          header.get("trained_on", ""))


def export_text(space: EmbeddingSpace, path: str) -> None:
    """Debug export: token TAB comma-separated floats (tokens may hold spaces)."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, tok in enumerate(space.tokens):
            vals = ",".join(repr(float(x)) for x in space.matrix[i])
            fh.write(f"{tok}\t{vals}\n")
