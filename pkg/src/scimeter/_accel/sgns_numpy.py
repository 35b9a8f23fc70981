"""Pure-numpy build of the skip-gram negative-sampling trainer.

Consumes the same splitmix64 stream in the same order as sgns_numba, with
row-level numpy ops instead of explicit dim loops. Sequential SGD has no
float-based branching, so the two builds stay within rounding of each other;
they are compared at tolerance, not bitwise.
"""

import math

import numpy as np

from .rng import GOLDEN, MASK64, TO_UNIT, mix64, stream_state

_MAX_EXP = 30.0


def train_sgns(sent_flat, sent_offsets, syn0, syn1, neg_cdf, window,
               negatives, epochs, lr_initial, lr_final, seed):
    n_tokens = sent_flat.shape[0]
    n_sent = sent_offsets.shape[0] - 1
    total = n_tokens * epochs
    losses = np.zeros(epochs, dtype=np.float64)
    state = stream_state(seed, 0)
    processed = 0
    for epoch in range(epochs):
        loss_sum = 0.0
        loss_n = 0
        for s in range(n_sent):
            lo = int(sent_offsets[s])
            hi = int(sent_offsets[s + 1])
            for i in range(lo, hi):
                lr = lr_initial + (lr_final - lr_initial) * (processed / total)
                processed += 1
                center = int(sent_flat[i])
                state = (state + GOLDEN) & MASK64
                shrink = mix64(state) % window
                span = window - shrink
                for j in range(i - span, i + span + 1):
                    if j == i or j < lo or j >= hi:
                        continue
                    ctx = int(sent_flat[j])
                    row = syn0[ctx]
                    neu1e = np.zeros_like(row)
                    for k in range(negatives + 1):
                        if k == 0:
                            target = center
                            label = 1.0
                        else:
                            state = (state + GOLDEN) & MASK64
                            u = (mix64(state) >> 11) * TO_UNIT
                            target = int(np.searchsorted(neg_cdf, u, side="right"))
                            if target == center:
                                continue
                            label = 0.0
                        f = float(np.dot(row.astype(np.float64),
                                         syn1[target].astype(np.float64)))
                        f = min(max(f, -_MAX_EXP), _MAX_EXP)
                        sig = 1.0 / (1.0 + math.exp(-f))
                        if label > 0.5:
                            loss_sum += -math.log(sig + 1e-12)
                        else:
                            loss_sum += -math.log(1.0 - sig + 1e-12)
                        loss_n += 1
                        g = np.float32((label - sig) * lr)
                        neu1e += g * syn1[target]
                        syn1[target] += g * row
                    row += neu1e
        losses[epoch] = loss_sum / max(loss_n, 1)
    return losses


def train_sgns_parallel(sent_flat, sent_offsets, syn0, syn1, neg_cdf, window,
                        negatives, epochs, lr_initial, lr_final, seed):
    # no thread pool on the fallback path; parallel mode degrades to the
    # deterministic schedule
    return train_sgns(sent_flat, sent_offsets, syn0, syn1, neg_cdf, window,
                      negatives, epochs, lr_initial, lr_final, seed)
