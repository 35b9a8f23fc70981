"""Pure-numpy build of the latent-factor fit.

Vectorized over combinations with reduceat/add.at; same full-batch updates
as factor_numba up to float summation order.
"""

import numpy as np


def fit_factor(members_flat, offsets, y, phi, rho, epochs, lr0, decay, clip,
               learn_salience, salience_start):
    n_nodes, dims = phi.shape
    starts = offsets[:-1]
    sizes = np.diff(offsets)
    ll_out = np.zeros(epochs, dtype=np.float64)
    occ = np.zeros(n_nodes, dtype=np.float64)
    np.add.at(occ, members_flat, 1.0)
    occ[occ < 1.0] = 1.0
    for epoch in range(epochs):
        lr = lr0 / (1.0 + decay * epoch)
        m = phi.max(axis=1, keepdims=True)
        log_theta = phi - m - np.log(np.exp(phi - m).sum(axis=1, keepdims=True))
        theta = np.exp(log_theta)

        t = np.add.reduceat(log_theta[members_flat], starts, axis=0)
        log_r = np.add.reduceat(rho[members_flat], starts)
        tm = t.max(axis=1)
        p = np.exp(t - tm[:, None])
        z = p.sum(axis=1)
        log_lam = tm + np.log(z) + log_r
        lam = np.exp(log_lam)
        w = y - lam
        ll_out[epoch] = float((y * log_lam - lam).sum())
        p /= z[:, None]

        grad = np.zeros((n_nodes, dims), dtype=np.float64)
        grad_rho = np.zeros(n_nodes, dtype=np.float64)
        np.add.at(grad, members_flat, np.repeat(w[:, None] * p, sizes, axis=0))
        np.add.at(grad_rho, members_flat, np.repeat(w, sizes))

        g_phi = (grad - theta * grad.sum(axis=1, keepdims=True)) / occ[:, None]
        np.clip(g_phi, -clip, clip, out=g_phi)
        phi += lr * g_phi
        if learn_salience and epoch >= salience_start:
            g_rho = grad_rho / occ
            np.clip(g_rho, -clip, clip, out=g_rho)
            rho += lr * g_rho
            np.clip(rho, -20.0, 20.0, out=rho)
    return ll_out
