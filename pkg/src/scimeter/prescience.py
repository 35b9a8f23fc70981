"""Latent-factor propensity model, surprisal, and the 2-year prescience drop.

A combination (a paper's keywords, or the distinct venues it cites) is
scored by lambda_h = (sum_d prod_i theta_id) * prod_i r_i, the expected
number of papers realizing it. Surprisal drops the salience term:
novelty(h) = -log sum_d prod_i theta_id. Prescience is the surprisal at
publication minus the surprisal two years later; papers whose combinations
became routine score high.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from ._accel import kernels
from ._accel.rng import SplitMix64
from .corpus import Corpus, PaperRecord
from .embedding import _splitmix_uniform
from .ranking import tag_top_fraction

PROXIMITY_FLOOR = 1e-300
NOVELTY_CAP = -float(np.log(PROXIMITY_FLOOR))

MAGIC = b"SCMFAC01"

CONTENT = "content"
CONTEXT = "context"


class OutOfVocabulary(KeyError):
    """Raised when a combination member is not in the model's universe."""


@dataclass
class FitConfig:
    dims: int = 25
    epochs: int = 50
    negatives_per_positive: int = 5
    lr: float = 1.0
    step_decay: float = 0.02
    grad_clip: float = 10.0
    init_scale: float = 1.0
    warm_temper: float = 0.5  # softens a warm start: phi = temper * log theta
    learn_salience: bool = True
    salience_warmup: float = 0.5  # fraction of epochs with r frozen
    seed: int = 0
    mode: str = "deterministic"

    def __post_init__(self):
        if self.dims < 2:
            raise ValueError("dims must be >= 2")
        if self.epochs <= 0 or self.lr <= 0:
            raise ValueError("epochs and lr must be positive")


class FactorModel:
    """One year's fitted propensity model for one variant universe."""

    def __init__(self, year: int, variant: str, tokens: list[str],
                 theta: np.ndarray, salience: np.ndarray,
                 log_likelihood: np.ndarray | None = None):
        if variant not in (CONTENT, CONTEXT):
            raise ValueError(f"unknown variant {variant!r}")
        if theta.shape[0] != len(tokens) or salience.shape[0] != len(tokens):
            raise ValueError("parameter shapes do not match token table")
        row_err = np.abs(theta.sum(axis=1) - 1.0).max() if len(tokens) else 0.0
        if row_err > 1e-6:
            raise ValueError(f"theta rows off the simplex by {row_err:g}")
        if len(tokens) and salience.min() <= 0:
            raise ValueError("salience must be positive")
        self.year = year
        self.variant = variant
        self.tokens = tokens
        self.theta = theta
        self.salience = salience
        self.log_likelihood = log_likelihood
        self.token_index = {t: i for i, t in enumerate(tokens)}

    @property
    def dims(self) -> int:
        return self.theta.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.token_index

    def rows(self, members) -> np.ndarray:
        idx = []
        for m in members:
            i = self.token_index.get(m)
            if i is None:
                raise OutOfVocabulary(m)
            idx.append(i)
        return np.asarray(idx, dtype=np.int64)


@dataclass(frozen=True)
class Combination:
    members: tuple[str, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("combination needs at least one member")


@dataclass
class PrescienceScore:
    paper_id: str
    surprise_at_pub: float
    surprise_later: float
    capped: bool = False

    @property
    def prescience(self) -> float:
        return self.surprise_at_pub - self.surprise_later


def combination_of(p: PaperRecord, variant: str) -> Combination | None:
    """Paper p as a combination in the variant's universe, or None if <2 members."""
    if variant == CONTENT:
        members = p.keywords
    elif variant == CONTEXT:
        members = tuple(dict.fromkeys(p.ref_venues))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if len(members) < 2:
        return None
    return Combination(tuple(members))


def combinations_from_view(view: Corpus, variant: str) -> list[Combination]:
    out = []
    for rec in view:
        combo = combination_of(rec, variant)
        if combo is not None:
            out.append(combo)
    return out


def _proximity_sum(m: FactorModel, members) -> float:
    rows = m.rows(members)
    return float(np.prod(m.theta[rows], axis=0).sum())


def propensity(m: FactorModel, h: Combination) -> float:
    """Exact lambda_h = (sum_d prod_i theta_id) * prod_i r_i."""
    rows = m.rows(h.members)
    return _proximity_sum(m, h.members) * float(np.prod(m.salience[rows]))


def novelty(m: FactorModel, h: Combination) -> float:
    """Surprisal -log sum_d prod_i theta_id, floored at 1e-300 (~690.8 nats)."""
    return -float(np.log(max(_proximity_sum(m, h.members), PROXIMITY_FLOOR)))


def novelty_capped(m: FactorModel, h: Combination) -> tuple[float, bool]:
    s = _proximity_sum(m, h.members)
    return -float(np.log(max(s, PROXIMITY_FLOOR))), s <= PROXIMITY_FLOOR


def fit(combos: list[Combination], dims: int, cfg: FitConfig,
        year: int = 0, variant: str = CONTENT,
        backend: str | None = None,
        warm_start: FactorModel | None = None) -> FactorModel:
    """Fit theta and r on observed combinations plus sampled negatives.

    Observed hyperedges are aggregated into counts; each positive draws
    cfg.negatives_per_positive uniform non-observed same-cardinality
    combinations with count zero, fixed up front. The kernel then runs
    full-batch gradient ascent, deterministic under a fixed seed.

    warm_start seeds nodes shared with an earlier year's model at that
    model's parameters (the model is dynamic across years); surprisal
    differences between chained fits then reflect data change rather than
    independent-refit variance. Nodes new to this year's universe get the
    token-keyed random init.
    """
    if dims < 2:
        raise ValueError("dims must be >= 2")
    universe = sorted({m for c in combos for m in c.members})
    if not universe:
        raise ValueError("no combination with members in the universe")
    index = {t: i for i, t in enumerate(universe)}
    n = len(universe)

    observed: dict[tuple[int, ...], int] = {}
    for c in combos:
        if len(c.members) < 2:
            continue
        key = tuple(sorted(index[m] for m in c.members))
        observed[key] = observed.get(key, 0) + 1
    if not observed:
        raise ValueError("need at least one hyperedge with >= 2 members")

    rng = SplitMix64(cfg.seed, 101)
    sample: list[tuple[int, ...]] = []
    y: list[float] = []
    for key in sorted(observed):
        sample.append(key)
        y.append(float(observed[key]))
        size = len(key)
        for _ in range(cfg.negatives_per_positive):
            for _attempt in range(20):
                draw = set()
                while len(draw) < size:
                    draw.add(rng.next_below(n))
                cand = tuple(sorted(draw))
                if cand not in observed:
                    sample.append(cand)
                    y.append(0.0)
                    break

    members_flat = np.asarray([i for key in sample for i in key],
                              dtype=np.int64)
    offsets = np.zeros(len(sample) + 1, dtype=np.int64)
    np.cumsum([len(key) for key in sample], out=offsets[1:])
    y_arr = np.asarray(y, dtype=np.float64)

    degree = np.zeros(n, dtype=np.float64)
    for key, count in observed.items():
        for i in key:
            degree[i] += count
    degree[degree == 0] = 1.0
    rho = np.log(degree / degree.mean())
    # wide init: uniform rows are an exact saddle of the likelihood (at
    # uniform theta the per-dim weights are uniform and the softmax-chain
    # gradient vanishes), so symmetry must be broken at scale. Each row is
    # keyed to its node token, not its row index, so consecutive years'
    # models start from aligned modes and surprisal differences reflect
    # data changes rather than arbitrary refit variance.
    phi = np.empty((n, dims), dtype=np.float64)
    for i, token in enumerate(universe):
        prev = warm_start.token_index.get(token) if warm_start else None
        if prev is not None and warm_start.dims == dims:
            # tempering keeps the start rows aligned across twin fits while
            # leaving them soft enough for mass to reallocate
            phi[i] = cfg.warm_temper * np.log(
                np.maximum(warm_start.theta[prev], 1e-12))
            rho[i] = np.log(warm_start.salience[prev])
            continue
        tag = int(hashlib.sha256(token.encode("utf-8")).hexdigest()[:15], 16)
        phi[i] = (_splitmix_uniform(cfg.seed ^ tag, 7, dims) - 0.5) \
            * 2.0 * cfg.init_scale

    kern = kernels("factor", backend)
    salience_start = int(round(cfg.salience_warmup * cfg.epochs))
    ll = kern.fit_factor(members_flat, offsets, y_arr, phi, rho,
                         cfg.epochs, cfg.lr, cfg.step_decay, cfg.grad_clip,
                         cfg.learn_salience, salience_start)
    if not np.isfinite(ll[-1]):
        raise RuntimeError(
            f"factor fit diverged (ll={ll[-1]}); lower lr or raise decay")

    m = phi.max(axis=1, keepdims=True)
    theta = np.exp(phi - m)
    theta /= theta.sum(axis=1, keepdims=True)
    return FactorModel(year, variant, universe, theta, np.exp(rho), ll)


def surprise_pair(model_pub: FactorModel, model_later: FactorModel,
                  p: PaperRecord, variant: str) -> PrescienceScore | None:
    """Surprisal of p under both years' models, or None when excluded.

    Exclusion reasons: fewer than two members, or any member out of either
    year's vocabulary (the surprisal sums over the full member set, so
    silently dropping members would change the quantity).
    """
    combo = combination_of(p, variant)
    if combo is None:
        return None
    for member in combo.members:
        if member not in model_pub or member not in model_later:
            return None
    s_pub, cap_pub = novelty_capped(model_pub, combo)
    s_later, cap_later = novelty_capped(model_later, combo)
    return PrescienceScore(p.paper_id, s_pub, s_later, cap_pub or cap_later)


def prescience_score(pair: PrescienceScore) -> float:
    return pair.prescience


def score_papers(view: Corpus, model_pub: FactorModel,
                 model_later: FactorModel, variant: str
                 ) -> tuple[list[PrescienceScore], int]:
    """Score every paper in the view; returns (scores, excluded_count)."""
    scores = []
    excluded = 0
    for rec in view:
        pair = surprise_pair(model_pub, model_later, rec, variant)
        if pair is None:
            excluded += 1
        else:
            scores.append(pair)
    return scores, excluded


def tag_prescient(scores: dict[str, float], pct: float = 0.05) -> set[str]:
    """Top pct of papers by prescience, ties inclusive."""
    return tag_top_fraction(scores, pct, largest=True)


def tag_declining(scores: dict[str, float], pct: float = 0.05) -> set[str]:
    """Bottom pct by prescience: combinations that became less probable."""
    return tag_top_fraction(scores, pct, largest=False)


def save_model(m: FactorModel, path: str, config_hash: str = "") -> None:
    header = json.dumps({
        "year": m.year, "variant": m.variant, "dims": m.dims,
        "count": len(m.tokens), "config_hash": config_hash,
    }).encode("utf-8")
    table = "\n".join(m.tokens).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<Q", len(table)))
        fh.write(table)
        fh.write(np.ascontiguousarray(m.theta, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(m.salience, dtype="<f8").tobytes())


def load_model(path: str) -> FactorModel:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path} is not a factor model file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        (tlen,) = struct.unpack("<Q", fh.read(8))
        tokens = fh.read(tlen).decode("utf-8").split("\n") if tlen else []
        count, dims = header["count"], header["dims"]
        theta = np.frombuffer(fh.read(count * dims * 8),
                              dtype="<f8").reshape(count, dims).copy()
        salience = np.frombuffer(fh.read(count * 8), dtype="<f8").copy()
    return FactorModel(header["year"], header["variant"], tokens, theta,
                       salience)
