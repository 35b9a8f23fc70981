"""scimeter: innovation measures for publication corpora.

Three forward- and backward-looking measures over publication records:
emerging-area detection on hypergraph walk embeddings, prescience as the
2-year surprisal drop under a latent-factor propensity model, and the CD5
citation disruption index, with per-country share/rate reporting and a
planted-signal synthetic corpus generator for validation.
"""

__version__ = "0.1.0"
