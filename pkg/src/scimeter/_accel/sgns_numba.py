"""Numba build of the skip-gram negative-sampling trainer.

Classic word2vec update order: for each center position the window is
shrunk by a random offset, then each (context, center) pair gets one
positive and `negatives` noise updates against the unigram^0.75 table.
The deterministic entry point consumes a single splitmix64 stream, so runs
with the same seed are bitwise reproducible. The parallel entry point uses
per-sentence streams with lock-free updates; its results vary run to run.
"""

import math

import numpy as np
from numba import njit, prange

_U = np.uint64
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53
_MAX_EXP = 30.0


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
def _cdf_draw(neg_cdf, u):
    lo = 0
    hi = neg_cdf.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if u < neg_cdf[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def _train_pair(syn0, syn1, neg_cdf, ctx, center, negatives, lr, state,
                neu1e, dim):
    """One positive + `negatives` noise updates for (ctx, center).

    Returns (new rng state, summed sample loss, sample count).
    """
    loss = 0.0
    n_samples = 0
    for d in range(dim):
        neu1e[d] = 0.0
    for k in range(negatives + 1):
        if k == 0:
            target = center
            label = 1.0
        else:
            state = state + _U(_GOLDEN)
            u = np.float64(_mix64(state) >> _U(11)) * _TO_UNIT
            target = _cdf_draw(neg_cdf, u)
            if target == center:
                continue
            label = 0.0
        f = 0.0
        for d in range(dim):
            f += np.float64(syn0[ctx, d]) * np.float64(syn1[target, d])
        if f > _MAX_EXP:
            f = _MAX_EXP
        elif f < -_MAX_EXP:
            f = -_MAX_EXP
        sig = 1.0 / (1.0 + math.exp(-f))
        if label > 0.5:
            loss += -math.log(sig + 1e-12)
        else:
            loss += -math.log(1.0 - sig + 1e-12)
        n_samples += 1
        g = np.float32((label - sig) * lr)
        for d in range(dim):
            neu1e[d] += g * syn1[target, d]
        for d in range(dim):
            syn1[target, d] += g * syn0[ctx, d]
    for d in range(dim):
        syn0[ctx, d] += neu1e[d]
    return state, loss, n_samples


@njit(cache=True)
def train_sgns(sent_flat, sent_offsets, syn0, syn1, neg_cdf, window,
               negatives, epochs, lr_initial, lr_final, seed):
    dim = syn0.shape[1]
    n_sent = sent_offsets.shape[0] - 1
    n_tokens = sent_flat.shape[0]
    total = n_tokens * epochs
    losses = np.zeros(epochs, dtype=np.float64)
    neu1e = np.zeros(dim, dtype=np.float32)
    state = _stream_state(seed, 0)
    processed = 0
    for epoch in range(epochs):
        loss_sum = 0.0
        loss_n = 0
        for s in range(n_sent):
            lo = sent_offsets[s]
            hi = sent_offsets[s + 1]
            for i in range(lo, hi):
                lr = lr_initial + (lr_final - lr_initial) * (processed / total)
                processed += 1
                center = sent_flat[i]
                state = state + _U(_GOLDEN)
                shrink = np.int64(_mix64(state) % _U(window))
                span = window - shrink
                for j in range(i - span, i + span + 1):
                    if j == i or j < lo or j >= hi:
                        continue
                    ctx = sent_flat[j]
                    state, loss, n = _train_pair(syn0, syn1, neg_cdf, ctx,
                                                 center, negatives, lr,
                                                 state, neu1e, dim)
                    loss_sum += loss
                    loss_n += n
        losses[epoch] = loss_sum / max(loss_n, 1)
    return losses


@njit(cache=True, parallel=True)
def train_sgns_parallel(sent_flat, sent_offsets, syn0, syn1, neg_cdf, window,
                        negatives, epochs, lr_initial, lr_final, seed):
    dim = syn0.shape[1]
    n_sent = sent_offsets.shape[0] - 1
    losses = np.zeros(epochs, dtype=np.float64)
    for epoch in range(epochs):
        lr = lr_initial + (lr_final - lr_initial) * (epoch / max(epochs, 1))
        loss_sum = 0.0
        loss_n = 0
        for s in prange(n_sent):
            neu1e = np.zeros(dim, dtype=np.float32)
            state = _stream_state(seed, _U(epoch) * _U(1000003) + _U(s))
            lo = sent_offsets[s]
            hi = sent_offsets[s + 1]
            for i in range(lo, hi):
                center = sent_flat[i]
                state = state + _U(_GOLDEN)
                shrink = np.int64(_mix64(state) % _U(window))
                span = window - shrink
                for j in range(i - span, i + span + 1):
                    if j == i or j < lo or j >= hi:
                        continue
                    state, loss, n = _train_pair(syn0, syn1, neg_cdf,
                                                 sent_flat[j], center,
                                                 negatives, lr, state,
                                                 neu1e, dim)
                    loss_sum += loss
                    loss_n += n
        losses[epoch] = loss_sum / max(loss_n, 1)
    return losses
