"""Numba build of the latent-factor fit.

Full-batch gradient ascent on the sampled Poisson log-likelihood
sum_h [y_h log lambda_h - lambda_h] with lambda_h = (sum_d prod_i theta_id)
* prod_i r_i. Rows of theta live on the simplex through a row softmax of
phi; salience r is exp(rho). The per-dim softmax weights p_hd =
exp(T_hd - lse(T_h)) keep every gradient term bounded, so no clipping
heroics are needed beyond a safety clamp.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _log_softmax_rows(phi, out_log, out_theta):
    n, d = phi.shape
    for i in range(n):
        m = phi[i, 0]
        for j in range(1, d):
            if phi[i, j] > m:
                m = phi[i, j]
        z = 0.0
        for j in range(d):
            z += math.exp(phi[i, j] - m)
        lz = math.log(z) + m
        for j in range(d):
            out_log[i, j] = phi[i, j] - lz
            out_theta[i, j] = math.exp(out_log[i, j])


@njit(cache=True)
def fit_factor(members_flat, offsets, y, phi, rho, epochs, lr0, decay, clip,
               learn_salience, salience_start):
    n_nodes, dims = phi.shape
    n_combos = offsets.shape[0] - 1
    ll_out = np.zeros(epochs, dtype=np.float64)
    log_theta = np.empty((n_nodes, dims), dtype=np.float64)
    theta = np.empty((n_nodes, dims), dtype=np.float64)
    grad = np.empty((n_nodes, dims), dtype=np.float64)
    grad_rho = np.empty(n_nodes, dtype=np.float64)
    t_buf = np.empty(dims, dtype=np.float64)
    p_buf = np.empty(dims, dtype=np.float64)
    # per-node occurrence counts precondition the step so the effective
    # per-node rate does not shrink with corpus size
    occ = np.zeros(n_nodes, dtype=np.float64)
    for k in range(members_flat.shape[0]):
        occ[members_flat[k]] += 1.0
    for i in range(n_nodes):
        if occ[i] < 1.0:
            occ[i] = 1.0
    for epoch in range(epochs):
        lr = lr0 / (1.0 + decay * epoch)
        _log_softmax_rows(phi, log_theta, theta)
        grad[:, :] = 0.0
        grad_rho[:] = 0.0
        ll = 0.0
        for h in range(n_combos):
            lo = offsets[h]
            hi = offsets[h + 1]
            for d in range(dims):
                t_buf[d] = 0.0
            log_r = 0.0
            for k in range(lo, hi):
                i = members_flat[k]
                log_r += rho[i]
                for d in range(dims):
                    t_buf[d] += log_theta[i, d]
            m = t_buf[0]
            for d in range(1, dims):
                if t_buf[d] > m:
                    m = t_buf[d]
            z = 0.0
            for d in range(dims):
                p_buf[d] = math.exp(t_buf[d] - m)
                z += p_buf[d]
            log_lam = m + math.log(z) + log_r
            lam = math.exp(log_lam)
            w = y[h] - lam
            ll += y[h] * log_lam - lam
            for d in range(dims):
                p_buf[d] /= z
            for k in range(lo, hi):
                i = members_flat[k]
                grad_rho[i] += w
                for d in range(dims):
                    grad[i, d] += w * p_buf[d]
        ll_out[epoch] = ll
        adjust_rho = learn_salience and epoch >= salience_start
        for i in range(n_nodes):
            inv = 1.0 / occ[i]
            row_sum = 0.0
            for d in range(dims):
                row_sum += grad[i, d]
            for d in range(dims):
                g = (grad[i, d] - theta[i, d] * row_sum) * inv
                if g > clip:
                    g = clip
                elif g < -clip:
                    g = -clip
                phi[i, d] += lr * g
            if adjust_rho:
                g = grad_rho[i] * inv
                if g > clip:
                    g = clip
                elif g < -clip:
                    g = -clip
                rho[i] += lr * g
                if rho[i] > 20.0:
                    rho[i] = 20.0
                elif rho[i] < -20.0:
                    rho[i] = -20.0
    return ll_out
