"""Optional numba-compiled elementwise jet kernels.

These mirror the reference numpy implementations in :mod:`vpnf.jets` op for
op; they exist purely to fuse the elementwise chains in the training hot
path.  Transcendental results may differ from numpy's libm in the last ulp,
which is irrelevant to every tolerance in the package; each path is
individually deterministic.  Set ``VPNF_DISABLE_KERNELS=1`` to force the
numpy path.
"""

from __future__ import annotations

import os

import numpy as np

AVAILABLE = False

if not os.environ.get("VPNF_DISABLE_KERNELS"):
    try:
        from numba import njit
        AVAILABLE = True
    except ImportError:  # pragma: no cover - numba is normally present
        AVAILABLE = False

if AVAILABLE:

    @njit(cache=True, fastmath=False)
    def sine_fwd(a, omega0, hi, hj):
        b_sz, k_sz, n_sz = a.shape
        y = np.empty_like(a)
        s = np.empty((b_sz, n_sz))
        c = np.empty((b_sz, n_sz))
        for b in range(b_sz):
            for n in range(n_sz):
                v = omega0 * a[b, 0, n]
                sv = np.sin(v)
                cv = np.cos(v)
                s[b, n] = sv
                c[b, n] = cv
                y[b, 0, n] = sv
                if k_sz > 1:
                    wc = omega0 * cv
                    for k in range(1, 5):
                        y[b, k, n] = wc * a[b, k, n]
                    if k_sz > 5:
                        w2s = omega0 * omega0 * sv
                        for m in range(10):
                            y[b, 5 + m, n] = (wc * a[b, 5 + m, n]
                                              - w2s * (a[b, 1 + hi[m], n] * a[b, 1 + hj[m], n]))
        return y, s, c

    @njit(cache=True, fastmath=False)
    def sine_bwd(ybar, a, s, c, omega0, hi, hj):
        b_sz, k_sz, n_sz = ybar.shape
        abar = np.empty_like(ybar)
        w3 = omega0 ** 3
        for b in range(b_sz):
            for n in range(n_sz):
                sv = s[b, n]
                cv = c[b, n]
                wc = omega0 * cv
                w2s = omega0 * omega0 * sv
                acc = wc * ybar[b, 0, n]
                if k_sz > 1:
                    for k in range(1, 5):
                        acc -= w2s * a[b, k, n] * ybar[b, k, n]
                        abar[b, k, n] = wc * ybar[b, k, n]
                    if k_sz > 5:
                        for m in range(10):
                            hb = ybar[b, 5 + m, n]
                            gi = a[b, 1 + hi[m], n]
                            gj = a[b, 1 + hj[m], n]
                            acc -= (w2s * a[b, 5 + m, n] + w3 * cv * gi * gj) * hb
                            abar[b, 1 + hi[m], n] -= w2s * gj * hb
                            abar[b, 1 + hj[m], n] -= w2s * gi * hb
                            abar[b, 5 + m, n] = wc * hb
                abar[b, 0, n] = acc
        return abar

    @njit(cache=True, fastmath=False)
    def mul_fwd(p, q, hi, hj):
        b_sz, k_sz, n_sz = p.shape
        r = np.empty_like(p)
        for b in range(b_sz):
            for n in range(n_sz):
                p0 = p[b, 0, n]
                q0 = q[b, 0, n]
                r[b, 0, n] = p0 * q0
                if k_sz > 1:
                    for k in range(1, 5):
                        r[b, k, n] = p[b, k, n] * q0 + p0 * q[b, k, n]
                    if k_sz > 5:
                        for m in range(10):
                            r[b, 5 + m, n] = (p[b, 5 + m, n] * q0 + p0 * q[b, 5 + m, n]
                                              + p[b, 1 + hi[m], n] * q[b, 1 + hj[m], n]
                                              + p[b, 1 + hj[m], n] * q[b, 1 + hi[m], n])
        return r

    @njit(cache=True, fastmath=False)
    def mul_bwd_one(rbar, other, hi, hj):
        b_sz, k_sz, n_sz = rbar.shape
        bar = np.zeros_like(rbar)
        for b in range(b_sz):
            for n in range(n_sz):
                o0 = other[b, 0, n]
                acc = rbar[b, 0, n] * o0
                if k_sz > 1:
                    for k in range(1, 5):
                        acc += rbar[b, k, n] * other[b, k, n]
                        bar[b, k, n] += rbar[b, k, n] * o0
                    if k_sz > 5:
                        for m in range(10):
                            hb = rbar[b, 5 + m, n]
                            acc += hb * other[b, 5 + m, n]
                            bar[b, 1 + hi[m], n] += hb * other[b, 1 + hj[m], n]
                            bar[b, 1 + hj[m], n] += hb * other[b, 1 + hi[m], n]
                            bar[b, 5 + m, n] = hb * o0
                bar[b, 0, n] = acc
        return bar
