"""Stage-on-disk pipeline: each subcommand reads prior artifacts, writes its
own, and skips itself when inputs and config are unchanged (content-hash
staleness). Exclusion reruns and threshold sweeps reuse the expensive
stages through the same functions, pointed at a different corpus or
directory. Every artifact carries the config hash that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import corpus as corpus_mod
from . import disruption as disruption_mod
from . import emergence as emergence_mod
from . import hypergraph as hypergraph_mod
from . import prescience as prescience_mod
from . import report as report_mod
from ._accel.rng import stream_state
from .corpus import AttributionStrategy, Corpus
from .embedding import EmbeddingSpace, TrainConfig, load_space, save_space, train
from .hypergraph import Hypergraph, WalkConfig
from .presets import PRESETS
from .report import ReportConfig, SeriesRow

STAGES = ("synth", "ingest", "hypergraph", "walks", "embed", "emergence",
          "prescience", "disruption", "report", "sweep", "exclude", "all")

SWEEP_PCTS = (0.01, 0.05, 0.10)


class StageError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    corpus_path: str = ""
    workdir: str = "work"
    schema_version: str = "1"
    years: tuple[int, int] = (0, 0)
    window_span: int = 5
    disruption_window: int = 5
    prescience_lag: int = 2
    convergence_lookback: int = 3
    walk_length: int = 20
    walk_alpha: float = 1.0
    walks_per_keyword: int = 1
    embed_dim: int = 100
    embed_window: int = 5
    embed_negatives: int = 5
    embed_epochs: int = 5
    embed_lr_initial: float = 0.025
    embed_lr_final: float = 1e-4
    embed_min_count: int = 1
    factor_dims: int = 25
    factor_epochs: int = 50
    factor_refine_epochs: int = 50
    factor_negatives: int = 5
    factor_lr: float = 1.0
    factor_step_decay: float = 0.05
    factor_warm_temper: float = 0.5
    area_top_pct: float = 0.01
    paper_top_pct: float = 0.05
    area_neighbors: int = 24
    candidate_min_count: int = 2
    credit_k: int = 10
    attribution: str = "any"
    variants: tuple[str, ...] = ("content", "context")
    seed: int = 0
    mode: str = "deterministic"
    synth_preset: str = ""
    exclude_country: str = ""
    country_groups_path: str = ""

    def validate(self) -> None:
        if self.years[1] < self.years[0]:
            raise ValueError("years range is empty")
        for name in ("window_span", "disruption_window", "prescience_lag",
                     "convergence_lookback", "walk_length",
                     "walks_per_keyword", "embed_dim", "factor_dims",
                     "area_neighbors", "credit_k"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("area_top_pct", "paper_top_pct"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        AttributionStrategy.parse(self.attribution)
        if self.mode not in ("deterministic", "parallel"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for v in self.variants:
            if v not in ("content", "context"):
                raise ValueError(f"unknown variant {v!r}")
        if self.synth_preset and self.synth_preset not in PRESETS:
            raise ValueError(f"unknown synth preset {self.synth_preset!r}; "
                             f"known: {sorted(PRESETS)}")

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None
                  ) -> "PipelineConfig":
        values: dict = {}
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
        if overrides:
            values.update({k: v for k, v in overrides.items()
                           if v is not None})
        return cls.from_values(values)

    @classmethod
    def from_values(cls, values: dict) -> "PipelineConfig":
        kwargs: dict = {}
        typemap = {f.name: f for f in dc_fields(cls)}
        for key, value in values.items():
            if key not in typemap:
                raise ValueError(f"unknown config key {key!r}")
            default = getattr(cls, key, typemap[key].default)
            if isinstance(value, str):
                kwargs[key] = _coerce(key, value, default)
            else:
                kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def config_hash(self) -> str:
        """Hash of every parameter except filesystem locations, so two runs
        into different directories produce byte-identical artifacts."""
        skip = {"corpus_path", "workdir", "country_groups_path"}
        items = []
        for f in dc_fields(self):
            if f.name in skip:
                continue
            items.append(f"{f.name}={getattr(self, f.name)!r}")
        return hashlib.sha256(";".join(items).encode()).hexdigest()[:16]

    def analysis_years(self) -> list[int]:
        return list(range(self.years[0], self.years[1] + 1))

    def space_years(self) -> list[int]:
        return list(range(self.years[0] - self.convergence_lookback,
                          self.years[1] + 1))


def _coerce(key: str, text: str, default):
    if key == "years":
        a, _, b = text.partition("..")
        return (int(a), int(b)) if b else (int(a), int(a))
    if key == "variants":
        return tuple(v.strip() for v in text.split(",") if v.strip())
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


class Workspace:
    """Paths, staleness bookkeeping, and a per-run corpus cache."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = cfg.workdir
        self.hash = cfg.config_hash()
        self._corpus: Corpus | None = None
        self._filtered: Corpus | None = None
        os.makedirs(self.root, exist_ok=True)
        os.makedirs(os.path.join(self.root, ".state"), exist_ok=True)

    def path(self, *parts: str) -> str:
        p = os.path.join(self.root, *parts)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        return p

    def require(self, relpath: str, produced_by: str) -> str:
        p = os.path.join(self.root, relpath)
        if not os.path.exists(p):
            raise StageError(f"missing artifact {relpath}; "
                             f"run `scimeter {produced_by}` first")
        return p

    # staleness -----------------------------------------------------------
    def _signature(self, stage: str, inputs: list[str]) -> str:
        h = hashlib.sha256()
        h.update(stage.encode())
        h.update(self.hash.encode())
        for p in inputs:
            h.update(os.path.basename(p).encode())
            with open(p, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    h.update(chunk)
        return h.hexdigest()

    def fresh(self, stage: str, inputs: list[str]) -> bool:
        """True when the stage's recorded signature matches and outputs exist."""
        state_path = os.path.join(self.root, ".state", f"{stage}.json")
        if not os.path.exists(state_path):
            return False
        with open(state_path, encoding="utf-8") as fh:
            state = json.load(fh)
        if state.get("signature") != self._signature(stage, inputs):
            return False
        return all(os.path.exists(os.path.join(self.root, rel))
                   for rel in state.get("outputs", []))

    def record(self, stage: str, inputs: list[str],
               outputs: list[str]) -> None:
        rel = [os.path.relpath(p, self.root) for p in outputs]
        state_path = os.path.join(self.root, ".state", f"{stage}.json")
        with open(state_path, "w", encoding="utf-8") as fh:
            json.dump({"signature": self._signature(stage, inputs),
                       "outputs": rel}, fh)

    # corpus access --------------------------------------------------------
    def corpus_file(self) -> str:
        if self.cfg.synth_preset:
            return os.path.join(self.root, "corpus.jsonl")
        if not self.cfg.corpus_path:
            raise StageError("no corpus: set corpus_path or synth_preset")
        return self.cfg.corpus_path

    def parsed(self) -> Corpus:
        if self._corpus is None:
            path = self.require("parsed.jsonl", "ingest")
            self._corpus = corpus_mod.ingest(path)
        return self._corpus

    def filtered(self) -> Corpus:
        if self._filtered is None:
            self._filtered = corpus_mod.filter_articles(self.parsed())
        return self._filtered


def seed_for(cfg: PipelineConfig, purpose: str, year: int = 0) -> int:
    """Stable derived seed; purpose strings keep streams disjoint."""
    tag = int(hashlib.sha256(purpose.encode()).hexdigest()[:8], 16)
    return stream_state(cfg.seed ^ tag, year) & 0x7FFFFFFF


# --------------------------------------------------------------------------
# stages


def stage_synth(ws: Workspace) -> list[str]:
    from . import synthgen
    cfg = ws.cfg
    if not cfg.synth_preset:
        raise StageError("synth requires synth_preset in the config")
    out_corpus = ws.path("corpus.jsonl")
    inputs: list[str] = []
    if ws.fresh("synth", inputs):
        return [out_corpus]
    spec = PRESETS[cfg.synth_preset]()
    fmt = "openalex" if cfg.schema_version == "openalex" else "native"
    corpus_path, truth_path = synthgen.generate(spec, ws.root, fmt)
    ws.record("synth", inputs, [corpus_path, truth_path])
    return [corpus_path, truth_path]


def stage_ingest(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    src = ws.corpus_file()
    if not os.path.exists(src):
        if cfg.synth_preset:
            raise StageError("missing artifact corpus.jsonl; "
                             "run `scimeter synth` first")
        raise StageError(f"corpus file not found: {src}")
    out = ws.path("parsed.jsonl")
    rejects = ws.path("rejects.csv")
    if ws.fresh("ingest", [src]):
        return [out, rejects]
    corpus = corpus_mod.ingest(src, cfg.schema_version)
    corpus_mod.export(corpus, out)
    corpus_mod.write_rejections(corpus, rejects)
    ws._corpus = None
    ws._filtered = None
    ws.record("ingest", [src], [out, rejects])
    return [out, rejects]


def build_graph_arrays(g: Hypergraph) -> dict:
    return {
        "tokens": np.asarray(g.tokens, dtype=str),
        "n_authors": np.asarray([g.n_authors], dtype=np.int64),
        "edge_paper_ids": np.asarray(g.edge_paper_ids, dtype=str),
        "edge_node_indptr": g.edge_node_indptr,
        "edge_nodes": g.edge_nodes,
        "edge_author_counts": g.edge_author_counts,
    }


def load_graph(path: str) -> Hypergraph:
    with np.load(path, allow_pickle=False) as z:
        return Hypergraph(
            [str(t) for t in z["tokens"]], int(z["n_authors"][0]),
            [str(p) for p in z["edge_paper_ids"]],
            z["edge_node_indptr"].copy(), z["edge_nodes"].copy(),
            z["edge_author_counts"].copy())


def stage_hypergraph(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    parsed = ws.require("parsed.jsonl", "ingest")
    outs = [ws.path("graphs", f"graph_{y}.npz") for y in cfg.space_years()]
    if ws.fresh("hypergraph", [parsed]):
        return outs
    filtered = ws.filtered()
    for y, out in zip(cfg.space_years(), outs):
        view = corpus_mod.window(filtered, y, cfg.window_span)
        graph = hypergraph_mod.build(view)
        if graph.n_edges == 0:
            raise StageError(f"window ending {y} has no walkable papers; "
                             f"check years/corpus alignment")
        np.savez(out, **build_graph_arrays(graph))
    ws.record("hypergraph", [parsed], outs)
    return outs


def stage_walks(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    graphs = [ws.require(os.path.join("graphs", f"graph_{y}.npz"),
                         "hypergraph") for y in cfg.space_years()]
    outs = [ws.path("walks", f"walks_{y}.tsv") for y in cfg.space_years()]
    if ws.fresh("walks", graphs):
        return outs
    for y, gpath, out in zip(cfg.space_years(), graphs, outs):
        graph = load_graph(gpath)
        wcfg = WalkConfig(cfg.walk_length, cfg.walk_alpha,
                          seed_for(cfg, "walks", y))
        walks = hypergraph_mod.generate_walks(
            graph, wcfg, n_walks=graph.n_keywords * cfg.walks_per_keyword)
        hypergraph_mod.write_walks(walks, out, ws.hash)
    ws.record("walks", graphs, outs)
    return outs


def stage_embed(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    walk_files = [ws.require(os.path.join("walks", f"walks_{y}.tsv"),
                             "walks") for y in cfg.space_years()]
    outs = [ws.path("spaces", f"space_{y}.bin") for y in cfg.space_years()]
    if ws.fresh("embed", walk_files):
        return outs
    for y, wpath, out in zip(cfg.space_years(), walk_files, outs):
        walks = hypergraph_mod.read_walks(wpath)
        tcfg = TrainConfig(
            dim=cfg.embed_dim, context_window=cfg.embed_window,
            negatives_per_positive=cfg.embed_negatives,
            epochs=cfg.embed_epochs, lr_initial=cfg.embed_lr_initial,
            lr_final=cfg.embed_lr_final, min_count=cfg.embed_min_count,
            seed=seed_for(cfg, "embed", y), mode=cfg.mode)
        span = f"{y - cfg.window_span + 1}..{y}"
        space = train(walks, tcfg, year=y, trained_on=span)
        save_space(space, out, ws.hash)
    ws.record("embed", walk_files, outs)
    return outs


def _load_spaces(ws: Workspace, years: list[int]) -> dict[int, EmbeddingSpace]:
    return {y: load_space(ws.require(os.path.join("spaces",
                                                  f"space_{y}.bin"), "embed"))
            for y in years}


def _write_csv(path: str, header: list[str], rows: list[list],
               config_hash: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if config_hash:
            fh.write(f"# config={config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def stage_emergence(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    space_files = [ws.require(os.path.join("spaces", f"space_{y}.bin"),
                              "embed") for y in cfg.space_years()]
    parsed = ws.require("parsed.jsonl", "ingest")
    outs: list[str] = []
    expected: list[str] = []
    for t in cfg.analysis_years():
        expected += [ws.path("emergence", f"candidates_{t}.csv"),
                     ws.path("emergence", f"areas_{t}.csv"),
                     ws.path("emergence", f"distances_{t}.csv"),
                     ws.path("emergence", f"tags_{t}.csv"),
                     ws.path("emergence", f"credit_{t}.csv")]
    if ws.fresh("emergence", [parsed] + space_files):
        return expected
    filtered = ws.filtered()
    spaces = _load_spaces(ws, cfg.space_years())
    for t in cfg.analysis_years():
        run_emergence_year(ws, filtered, spaces, t, outs)
    ws.record("emergence", [parsed] + space_files, outs)
    return outs


def run_emergence_year(ws: Workspace, filtered: Corpus,
                       spaces: dict[int, EmbeddingSpace], t: int,
                       outs: list[str], stats_corpus: Corpus | None = None,
                       subdir: str = "emergence") -> None:
    """Score, rank, select, and tag one analysis year.

    stats_corpus (when given) supplies counts/candidates, e.g. the
    outside-world corpus of an exclusion rerun, while papers of `filtered`
    are still the ones scored and tagged.
    """
    cfg = ws.cfg
    stats = stats_corpus if stats_corpus is not None else filtered
    year_spaces = [spaces[y] for y in
                   range(t - cfg.convergence_lookback, t + 1)]
    cand_rows, area_rows, credit_rows = [], [], []
    emerging_sets: list[emergence_mod.EmergingSet] = []
    for fld in stats.fields():
        candidates = emergence_mod.score_candidates(
            stats, fld, t, year_spaces, cfg.area_neighbors,
            cfg.candidate_min_count)
        ranked = emergence_mod.rank_areas(candidates)
        emerging = emergence_mod.select_emerging(ranked, t, fld,
                                                 cfg.area_top_pct)
        emerging_sets.append(emerging)
        for area, sc in ranked:
            cand_rows.append([t, fld, area.central, sc.convergence,
                              sc.growth_b, sc.prevalence, sc.fit_r2,
                              sc.final_rank_score])
        view_t = corpus_mod.window(stats, t, cfg.window_span)
        for area, sc in emerging.areas:
            area_rows.append([t, fld, area.central,
                              "|".join(area.members), sc.convergence,
                              sc.growth_b, sc.prevalence, sc.fit_r2,
                              sc.final_rank_score])
            credit = emergence_mod.emergence_credit(area, year_spaces[-1],
                                                    view_t, cfg.credit_k)
            for country in sorted(credit.countries):
                credit_rows.append([t, fld, area.central, country,
                                    credit.countries[country],
                                    int(credit.short)])
    dist_rows, tag_rows = [], []
    dist_by_field: dict[str, dict[str, float]] = {}
    for rec in filtered.by_year.get(t, []):
        d = emergence_mod.paper_distance(rec, year_spaces[-1], emerging_sets)
        if d is None:
            continue
        for fld in rec.fields:
            if any(es.field == fld and es.areas for es in emerging_sets):
                dist_rows.append([rec.paper_id, t, fld, d])
                dist_by_field.setdefault(fld, {})[rec.paper_id] = d
    for fld in sorted(dist_by_field):
        tags = emergence_mod.tag_emergent_papers(dist_by_field[fld],
                                                 cfg.paper_top_pct)
        for pid in sorted(tags):
            tag_rows.append([pid, t, fld, dist_by_field[fld][pid]])

    h = ws.hash
    p = ws.path(subdir, f"candidates_{t}.csv")
    _write_csv(p, ["year", "field", "central", "convergence", "growth_b",
                   "prevalence", "fit_r2", "final_rank_score"],
               cand_rows, h)
    outs.append(p)
    p = ws.path(subdir, f"areas_{t}.csv")
    _write_csv(p, ["year", "field", "central", "members", "convergence",
                   "growth_b", "prevalence", "fit_r2", "final_rank_score"],
               area_rows, h)
    outs.append(p)
    p = ws.path(subdir, f"distances_{t}.csv")
    _write_csv(p, ["paper_id", "year", "field", "distance"], dist_rows, h)
    outs.append(p)
    p = ws.path(subdir, f"tags_{t}.csv")
    _write_csv(p, ["paper_id", "year", "field", "distance"], tag_rows, h)
    outs.append(p)
    p = ws.path(subdir, f"credit_{t}.csv")
    _write_csv(p, ["year", "field", "central", "country", "count", "short"],
               credit_rows, h)
    outs.append(p)


def prescience_model_years(cfg: PipelineConfig, corpus: Corpus) -> list[int]:
    max_year = max(corpus.by_year) if corpus.by_year else cfg.years[1]
    years = set()
    for t in cfg.analysis_years():
        if t + cfg.prescience_lag <= max_year:
            years.add(t)
            years.add(t + cfg.prescience_lag)
    return sorted(years)


def stage_prescience(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    parsed = ws.require("parsed.jsonl", "ingest")
    filtered = ws.filtered()
    model_years = prescience_model_years(cfg, filtered)
    if not model_years:
        raise StageError("no year in range has a +lag partner in the corpus")
    outs: list[str] = []
    expected = [ws.path("factors", f"factor_{v}_{y}.bin")
                for v in cfg.variants for y in model_years]
    expected += [ws.path("prescience", f"scores_{v}.csv")
                 for v in cfg.variants]
    if ws.fresh("prescience", [parsed]):
        return expected
    models = fit_factor_models(ws, filtered, model_years, outs)
    score_prescience(ws, filtered, filtered, models, outs)
    ws.record("prescience", [parsed], outs)
    return outs


def fit_factor_models(ws: Workspace, train_corpus: Corpus,
                      model_years: list[int], outs: list[str],
                      save: bool = True
                      ) -> dict[tuple[str, int], prescience_mod.FactorModel]:
    """Hub-and-spoke twin fits: one base model per variant on the earliest
    model year, then every year's model is a tempered refinement of that
    base with an identical training arc. Two refined years then differ only
    through their window's data, which is what the 2-year surprisal drop is
    supposed to measure; independently fit years would add refit variance
    comparable to the signal."""
    cfg = ws.cfg
    models = {}
    for variant in cfg.variants:
        seed = seed_for(cfg, f"factor_{variant}", 0)
        base_year = model_years[0]
        base_view = corpus_mod.window(train_corpus, base_year,
                                      cfg.window_span)
        base_combos = prescience_mod.combinations_from_view(base_view,
                                                            variant)
        base_cfg = prescience_mod.FitConfig(
            dims=cfg.factor_dims, epochs=cfg.factor_epochs,
            negatives_per_positive=cfg.factor_negatives,
            lr=cfg.factor_lr, step_decay=cfg.factor_step_decay,
            seed=seed, mode=cfg.mode)
        base = prescience_mod.fit(base_combos, cfg.factor_dims, base_cfg,
                                  year=base_year, variant=variant)
        refine_cfg = prescience_mod.FitConfig(
            dims=cfg.factor_dims, epochs=cfg.factor_refine_epochs,
            negatives_per_positive=cfg.factor_negatives,
            lr=cfg.factor_lr, step_decay=cfg.factor_step_decay,
            warm_temper=cfg.factor_warm_temper, salience_warmup=0.0,
            seed=seed, mode=cfg.mode)
        for y in model_years:
            view = corpus_mod.window(train_corpus, y, cfg.window_span)
            combos = prescience_mod.combinations_from_view(view, variant)
            model = prescience_mod.fit(combos, cfg.factor_dims, refine_cfg,
                                       year=y, variant=variant,
                                       warm_start=base)
            models[(variant, y)] = model
            if save:
                path = ws.path("factors", f"factor_{variant}_{y}.bin")
                prescience_mod.save_model(model, path, ws.hash)
                outs.append(path)
    return models


def score_prescience(ws: Workspace, score_corpus: Corpus,
                     train_corpus: Corpus,
                     models: dict[tuple[str, int], prescience_mod.FactorModel],
                     outs: list[str], subdir: str = "prescience") -> None:
    cfg = ws.cfg
    for variant in cfg.variants:
        rows = []
        for t in cfg.analysis_years():
            key_pub, key_later = (variant, t), (variant,
                                                t + cfg.prescience_lag)
            if key_pub not in models or key_later not in models:
                continue
            for rec in score_corpus.by_year.get(t, []):
                pair = prescience_mod.surprise_pair(
                    models[key_pub], models[key_later], rec, variant)
                if pair is None:
                    continue
                for fld in rec.fields:
                    rows.append([rec.paper_id, t, fld, variant,
                                 pair.surprise_at_pub, pair.surprise_later,
                                 pair.prescience, int(pair.capped)])
        path = ws.path(subdir, f"scores_{variant}.csv")
        _write_csv(path, ["paper_id", "year", "field", "variant", "s_pub",
                          "s_later", "prescience", "capped"], rows, ws.hash)
        outs.append(path)


def stage_disruption(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    parsed = ws.require("parsed.jsonl", "ingest")
    out = ws.path("disruption", "scores.csv")
    if ws.fresh("disruption", [parsed]):
        return [out]
    filtered = ws.filtered()
    scores = disruption_mod.score_all(filtered, cfg.disruption_window,
                                      cfg.years)
    rows = []
    for s in scores:
        rec = filtered.get(s.paper_id)
        for fld in rec.fields:
            rows.append([s.paper_id, rec.year, fld, s.n_f, s.n_b, s.n_r,
                         s.d_value])
    _write_csv(out, ["paper_id", "year", "field", "n_f", "n_b", "n_r",
                     "d_value"], rows, ws.hash)
    ws.record("disruption", [parsed], [out])
    return [out]


# --------------------------------------------------------------------------
# report plumbing


def emergence_score_pools(ws: Workspace, subdir: str = "emergence"
                          ) -> dict[tuple[str, int], dict[str, float]]:
    pools: dict[tuple[str, int], dict[str, float]] = {}
    for t in ws.cfg.analysis_years():
        rel = os.path.join(subdir, f"distances_{t}.csv")
        path = os.path.join(ws.root, rel)
        if not os.path.exists(path):
            continue
        for rec in read_csv(path):
            key = (rec["field"], int(rec["year"]))
            pools.setdefault(key, {})[rec["paper_id"]] = float(rec["distance"])
    return pools


def prescience_score_pools(ws: Workspace, variant: str,
                           subdir: str = "prescience"
                           ) -> dict[tuple[str, int], dict[str, float]]:
    path = os.path.join(ws.root, subdir, f"scores_{variant}.csv")
    pools: dict[tuple[str, int], dict[str, float]] = {}
    if not os.path.exists(path):
        return pools
    for rec in read_csv(path):
        key = (rec["field"], int(rec["year"]))
        pools.setdefault(key, {})[rec["paper_id"]] = float(rec["prescience"])
    return pools


def disruption_score_pools(ws: Workspace) -> dict[tuple[str, int],
                                                  dict[str, float]]:
    path = os.path.join(ws.root, "disruption", "scores.csv")
    pools: dict[tuple[str, int], dict[str, float]] = {}
    if not os.path.exists(path):
        return pools
    for rec in read_csv(path):
        key = (rec["field"], int(rec["year"]))
        pools.setdefault(key, {})[rec["paper_id"]] = float(rec["d_value"])
    return pools


def top_cited_pools(cfg: PipelineConfig, filtered: Corpus
                    ) -> dict[tuple[str, int], dict[str, float]]:
    pools: dict[tuple[str, int], dict[str, float]] = {}
    for t in cfg.analysis_years():
        for rec in filtered.by_year.get(t, []):
            if rec.citation_count is None:
                continue
            for fld in rec.fields:
                pools.setdefault((fld, t), {})[rec.paper_id] = float(
                    rec.citation_count)
    return pools


def measure_pools(ws: Workspace, filtered: Corpus,
                  emergence_dir: str = "emergence",
                  prescience_dir: str = "prescience"
                  ) -> dict[str, dict[tuple[str, int], dict[str, float]]]:
    """Per-measure {(field, year) -> {paper_id -> score}}; emergence scores
    are distances (smaller = better), noted by LARGEST_IS_BETTER."""
    pools = {"emergence": emergence_score_pools(ws, emergence_dir)}
    for variant in ws.cfg.variants:
        pools[f"{variant}_prescience"] = prescience_score_pools(
            ws, variant, prescience_dir)
    pools["disruption"] = disruption_score_pools(ws)
    pools["top_cited"] = top_cited_pools(ws.cfg, filtered)
    return pools


LARGEST_IS_BETTER = {"emergence": False, "content_prescience": True,
                     "context_prescience": True, "disruption": True,
                     "top_cited": True}


def report_config(cfg: PipelineConfig, pct: float | None = None
                  ) -> ReportConfig:
    groups = {}
    if cfg.country_groups_path:
        groups = report_mod.load_country_groups(cfg.country_groups_path)
    return ReportConfig(AttributionStrategy.parse(cfg.attribution),
                        pct if pct is not None else cfg.paper_top_pct,
                        cfg.exclude_country or None, (), groups)


def build_all_series(ws: Workspace, filtered: Corpus, rcfg: ReportConfig,
                     pools: dict) -> tuple[list[SeriesRow], dict[str, set]]:
    years = ws.cfg.analysis_years()
    view = Corpus([r for r in filtered
                   if years[0] <= r.year <= years[-1]])
    rows: list[SeriesRow] = []
    tags_by_measure: dict[str, set] = {}
    for measure in sorted(pools):
        tags = report_mod.tag_per_field_year(
            pools[measure], rcfg.top_pct,
            largest=LARGEST_IS_BETTER.get(measure, True))
        tags_by_measure[measure] = tags
        rows.extend(report_mod.build_series(measure, tags, view, rcfg))
    weights = {r.paper_id: r.citation_count for r in view
               if r.citation_count is not None}
    rows.extend(report_mod.volume_series("citations", view, rcfg, weights))
    rows.extend(report_mod.volume_series("publications", view, rcfg, None))
    return rows, tags_by_measure


def _score_inputs(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    inputs = [ws.require(os.path.join("emergence",
                                      f"distances_{cfg.years[0]}.csv"),
                         "emergence")]
    inputs += [ws.require(os.path.join("prescience", f"scores_{v}.csv"),
                          "prescience") for v in cfg.variants]
    inputs.append(ws.require(os.path.join("disruption", "scores.csv"),
                             "disruption"))
    return inputs


def stage_report(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    inputs = _score_inputs(ws)
    filtered = ws.filtered()
    expected = [ws.path("report", "series.csv"),
                ws.path("report", "credit_series.csv")]
    if ws.fresh("report", inputs):
        return expected
    pools = measure_pools(ws, filtered)
    rcfg = report_config(cfg)
    rows, _tags = build_all_series(ws, filtered, rcfg, pools)
    outs = []
    series_path = ws.path("report", "series.csv")
    report_mod.export(rows, series_path, "csv", ws.hash)
    outs.append(series_path)
    outs += report_mod.export(rows, ws.path("report", "plotdata"),
                              "plotdata", ws.hash)
    credit_rows = []
    for t in cfg.analysis_years():
        path = os.path.join(ws.root, "emergence", f"credit_{t}.csv")
        if not os.path.exists(path):
            continue
        per_year: dict[str, int] = {}
        for rec in read_csv(path):
            per_year[rec["country"]] = (per_year.get(rec["country"], 0)
                                        + int(rec["count"]))
        total = sum(per_year.values())
        for country in sorted(per_year):
            credit_rows.append([t, country, per_year[country],
                                per_year[country] / total if total else ""])
    credit_path = ws.path("report", "credit_series.csv")
    _write_csv(credit_path, ["year", "country", "credit", "credit_share"],
               credit_rows, ws.hash)
    outs.append(credit_path)
    ws.record("report", inputs, outs)
    return outs


def stage_sweep(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    inputs = _score_inputs(ws)
    expected = [ws.path("sweep", f"series_p{int(round(p * 100)):02d}.csv")
                for p in SWEEP_PCTS]
    if ws.fresh("sweep", inputs):
        return expected
    filtered = ws.filtered()
    pools = measure_pools(ws, filtered)
    years = cfg.analysis_years()
    view = Corpus([r for r in filtered
                   if years[0] <= r.year <= years[-1]])
    outs = []
    previous: dict[str, set] = {}
    for pct in SWEEP_PCTS:
        rcfg = report_config(cfg, pct)
        rows: list[SeriesRow] = []
        for measure in sorted(pools):
            tags = report_mod.tag_per_field_year(
                pools[measure], pct,
                largest=LARGEST_IS_BETTER.get(measure, True))
            if measure in previous and not previous[measure] <= tags:
                raise StageError(f"nestedness violated for {measure} at {pct}")
            previous[measure] = tags
            rows.extend(report_mod.build_series(measure, tags, view, rcfg))
        path = ws.path("sweep", f"series_p{int(round(pct * 100)):02d}.csv")
        report_mod.export(rows, path, "csv", ws.hash)
        outs.append(path)
    ws.record("sweep", inputs, outs)
    return outs


def run_exclusion(country: str, cfg: PipelineConfig,
                  measures: tuple[str, ...] | None = None
                  ) -> dict[str, list[SeriesRow]]:
    """Retrain models without `country`, rescore all papers, emit paired
    series under exclude_<country>/. Returns {"full": rows, "excluded": rows}."""
    ws = Workspace(cfg)
    chain = ["ingest", "hypergraph", "walks", "embed", "emergence",
             "prescience", "disruption", "report"]
    if cfg.synth_preset:
        chain.insert(0, "synth")
    for stage in chain:
        run_stage(stage, cfg, ws=ws)
    filtered = ws.filtered()
    outside = Corpus([
        r for r in filtered
        if country not in corpus_mod.attribute_countries(
            r, AttributionStrategy.ANY_AUTHOR)])
    if len(outside) == len(filtered):
        full_rows = report_mod.read_series_csv(
            os.path.join(ws.root, "report", "series.csv"))
        return {"full": full_rows, "excluded": full_rows}

    sub = f"exclude_{country}"
    outs: list[str] = []
    # retrain embeddings on the outside world
    spaces: dict[int, EmbeddingSpace] = {}
    for y in cfg.space_years():
        view = corpus_mod.window(outside, y, cfg.window_span)
        graph = hypergraph_mod.build(view)
        wcfg = WalkConfig(cfg.walk_length, cfg.walk_alpha,
                          seed_for(cfg, "walks", y))
        walks = hypergraph_mod.generate_walks(
            graph, wcfg, n_walks=graph.n_keywords * cfg.walks_per_keyword)
        tcfg = TrainConfig(
            dim=cfg.embed_dim, context_window=cfg.embed_window,
            negatives_per_positive=cfg.embed_negatives,
            epochs=cfg.embed_epochs, lr_initial=cfg.embed_lr_initial,
            lr_final=cfg.embed_lr_final, min_count=cfg.embed_min_count,
            seed=seed_for(cfg, "embed", y), mode=cfg.mode)
        spaces[y] = train(walks, tcfg, year=y)
    for t in cfg.analysis_years():
        run_emergence_year(ws, filtered, spaces, t, outs,
                           stats_corpus=outside,
                           subdir=os.path.join(sub, "emergence"))

    model_years = prescience_model_years(cfg, filtered)
    models = fit_factor_models(ws, outside, model_years, outs, save=False)
    score_prescience(ws, filtered, outside, models, outs,
                     subdir=os.path.join(sub, "prescience"))

    pools = measure_pools(ws, filtered, emergence_dir=os.path.join(
        sub, "emergence"), prescience_dir=os.path.join(sub, "prescience"))
    if measures is not None:
        pools = {m: p for m, p in pools.items() if m in measures}
    rcfg = report_config(cfg)
    rows, _tags = build_all_series(ws, filtered, rcfg, pools)
    excl_path = ws.path(sub, "series.csv")
    report_mod.export(rows, excl_path, "csv", ws.hash)
    full_rows = report_mod.read_series_csv(
        os.path.join(ws.root, "report", "series.csv"))
    return {"full": full_rows, "excluded": rows}


def stage_exclude(ws: Workspace) -> list[str]:
    cfg = ws.cfg
    if not cfg.exclude_country:
        raise StageError("exclude requires --exclude-country")
    run_exclusion(cfg.exclude_country, cfg)
    return [os.path.join(ws.root, f"exclude_{cfg.exclude_country}",
                         "series.csv")]


_STAGE_FUNCS = {
    "synth": stage_synth,
    "ingest": stage_ingest,
    "hypergraph": stage_hypergraph,
    "walks": stage_walks,
    "embed": stage_embed,
    "emergence": stage_emergence,
    "prescience": stage_prescience,
    "disruption": stage_disruption,
    "report": stage_report,
    "sweep": stage_sweep,
    "exclude": stage_exclude,
}


def run_stage(name: str, cfg: PipelineConfig,
              ws: Workspace | None = None) -> list[str]:
    if name == "all":
        ws = ws or Workspace(cfg)
        outs = []
        chain = ["ingest", "hypergraph", "walks", "embed", "emergence",
                 "prescience", "disruption", "report"]
        if cfg.synth_preset:
            chain.insert(0, "synth")
        for stage in chain:
            outs += _STAGE_FUNCS[stage](ws)
        return outs
    if name not in _STAGE_FUNCS:
        raise StageError(f"unknown subcommand {name!r}; "
                         f"expected one of {STAGES}")
    ws = ws or Workspace(cfg)
    return _STAGE_FUNCS[name](ws)
