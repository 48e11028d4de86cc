"""Compiled inner loop of the gamma integrands.

At a node with marginal ``py``, posteriors ``p0``, ``p1`` and for an overlap
with ``omg = 1 - gamma^2`` the pointwise terms are

    py g,    py g^2 / p0,    py g^2 / p1,      g = g(p0, gamma).

A term with a vanishing denominator is 0 (its limit, as ``g^2 / p -> 0``).
With ``folded=True`` the node ``y`` stands for the pair ``(y, -y)`` of a
symmetric distribution, whose posteriors are swapped, and the kernel emits
``2 py g`` and ``py g^2 (1/p0 + 1/p1)`` instead.

:func:`g_terms_contract` multiplies those terms by Kronrod and Gauss node
weights and sums them per interval (21 consecutive nodes) so no per-node
array of size ``n_nodes * n_gamma`` is ever allocated.
"""

import math

import numpy as np

_INV_LN2 = 1.0 / math.log(2.0)


def _g_terms_contract_numpy(py, p0, p1, omg, wk, wg, n_int, folded):
    t = np.minimum(4.0 * (p0 * p1)[:, None] * omg[None, :], 1.0)
    lam = t / (2.0 * (1.0 + np.sqrt(1.0 - t)))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(lam > 0, -(lam * np.log(lam) + (1.0 - lam) * np.log1p(-lam)) * _INV_LN2, 0.0)
        inv0 = np.where(p0 > 0, 1.0 / np.where(p0 > 0, p0, 1.0), 0.0)[:, None]
        inv1 = np.where(p1 > 0, 1.0 / np.where(p1 > 0, p1, 1.0), 0.0)[:, None]
    gp = py[:, None] * g
    if folded:
        terms = np.stack([2.0 * gp, gp * g * (inv0 + inv1)], axis=1)
    else:
        terms = np.stack([gp, gp * g * inv0, gp * g * inv1], axis=1)
    terms = terms.reshape(n_int, 21, terms.shape[1], terms.shape[2])
    k = np.einsum("in,inrm->irm", wk.reshape(n_int, 21), terms)
    gs = np.einsum("in,inrm->irm", wg.reshape(n_int, 21), terms)
    return k, gs


try:
    import numba
except ImportError:  # pragma: no cover
    g_terms_contract = _g_terms_contract_numpy
else:

    @numba.njit(cache=True)
    def g_terms_contract(py, p0, p1, omg, wk, wg, n_int, folded):
        m = omg.size
        rows = 2 if folded else 3
        k = np.zeros((n_int, rows, m))
        gs = np.zeros((n_int, rows, m))
        for i in range(py.size):
            if py[i] == 0.0:
                continue
            iv = i // 21
            a = wk[i]
            b = wg[i]
            four_pq = 4.0 * p0[i] * p1[i]
            inv0 = 1.0 / p0[i] if p0[i] > 0.0 else 0.0
            inv1 = 1.0 / p1[i] if p1[i] > 0.0 else 0.0
            for j in range(m):
                t = four_pq * omg[j]
                if t > 1.0:
                    t = 1.0
                lam = t / (2.0 * (1.0 + math.sqrt(1.0 - t)))
                if lam > 0.0:
                    g = -(lam * math.log(lam) + (1.0 - lam) * math.log1p(-lam)) * _INV_LN2
                else:
                    g = 0.0
                gp = py[i] * g
                if folded:
                    v0 = 2.0 * gp
                    v1 = gp * g * (inv0 + inv1)
                    k[iv, 0, j] += a * v0
                    k[iv, 1, j] += a * v1
                    gs[iv, 0, j] += b * v0
                    gs[iv, 1, j] += b * v1
                else:
                    v1 = gp * g * inv0
                    v2 = gp * g * inv1
                    k[iv, 0, j] += a * gp
                    k[iv, 1, j] += a * v1
                    k[iv, 2, j] += a * v2
                    gs[iv, 0, j] += b * gp
                    gs[iv, 1, j] += b * v1
                    gs[iv, 2, j] += b * v2
        return k, gs
