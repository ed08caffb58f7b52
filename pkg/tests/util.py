"""Shared oracles and numeric helpers for the test suite.

Everything here is implemented independently of the package (numpy loops,
scipy reference routines) so the tests stay a genuine second route.
"""

import numpy as np


def max_rel_err(actual, expected):
    """Max absolute difference normalized by the largest expected magnitude."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(np.abs(expected).max(), 1e-12)
    return np.abs(actual - expected).max() / scale


def assert_close(actual, expected, rel, msg=""):
    err = max_rel_err(actual, expected)
    assert err <= rel, f"{msg} relative error {err:.3e} > {rel:.0e}"


def softmax_rows(sim):
    e = np.exp(sim - sim.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def time_attention_oracle(x, beta):
    """Brute-force frame attention: per channel, frame j aggregates frames i
    weighted by softmax over raw dot products."""
    n, c, t, h, w = x.shape
    out = np.empty_like(x)
    for ni in range(n):
        for ci in range(c):
            flat = x[ni, ci].reshape(t, h * w)
            sim = np.empty((t, t))
            for j in range(t):
                for i in range(t):
                    sim[j, i] = float(np.dot(flat[i], flat[j]))
            m = softmax_rows(sim)
            agg = np.zeros_like(flat)
            for j in range(t):
                for i in range(t):
                    agg[j] += m[j, i] * flat[i]
            out[ni, ci] = (beta * agg + flat).reshape(t, h, w)
    return out


def position_attention_oracle(x, beta):
    """Brute-force attention over all T*H*W positions."""
    n, c, t, h, w = x.shape
    s = t * h * w
    out = np.empty_like(x)
    for ni in range(n):
        flat = x[ni].reshape(c, s).T  # (S, C)
        sim = np.empty((s, s))
        for j in range(s):
            for i in range(s):
                sim[j, i] = float(np.dot(flat[i], flat[j]))
        m = softmax_rows(sim)
        agg = np.zeros_like(flat)
        for j in range(s):
            for i in range(s):
                agg[j] += m[j, i] * flat[i]
        out[ni] = (beta * agg + flat).T.reshape(c, t, h, w)
    return out


def channel_attention_oracle(x, beta):
    """Brute-force attention over channel maps."""
    n, c, t, h, w = x.shape
    out = np.empty_like(x)
    for ni in range(n):
        flat = x[ni].reshape(c, -1)  # (C, S)
        sim = np.empty((c, c))
        for j in range(c):
            for i in range(c):
                sim[j, i] = float(np.dot(flat[i], flat[j]))
        m = softmax_rows(sim)
        agg = np.zeros_like(flat)
        for j in range(c):
            for i in range(c):
                agg[j] += m[j, i] * flat[i]
        out[ni] = (beta * agg + flat).reshape(c, t, h, w)
    return out


def finite_difference_grad(fn, x, eps=1e-6):
    """Central finite differences of a scalar function w.r.t. a float64
    numpy array, one element at a time."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + eps
        fp = fn(x)
        flat[idx] = orig - eps
        fm = fn(x)
        flat[idx] = orig
        gflat[idx] = (fp - fm) / (2.0 * eps)
    return grad


def trilinear_oracle(vol, out_shape):
    """Independent trilinear resampling with the half-pixel (align-corners
    off) coordinate mapping, matching what the package is specified to use."""
    vol = np.asarray(vol, dtype=np.float64)
    dt, dh, dw = vol.shape
    ot, oh, ow = out_shape
    out = np.empty(out_shape)

    def src_coords(o_idx, o_len, i_len):
        x = (o_idx + 0.5) * i_len / o_len - 0.5
        x = min(max(x, 0.0), i_len - 1.0)
        lo = int(np.floor(x))
        hi = min(lo + 1, i_len - 1)
        return lo, hi, x - lo

    for a in range(ot):
        t0, t1, ft = src_coords(a, ot, dt)
        for b in range(oh):
            h0, h1, fh = src_coords(b, oh, dh)
            for c in range(ow):
                w0, w1, fw = src_coords(c, ow, dw)
                acc = 0.0
                for ti, wt in ((t0, 1 - ft), (t1, ft)):
                    for hi, wh in ((h0, 1 - fh), (h1, fh)):
                        for wi, ww in ((w0, 1 - fw), (w1, fw)):
                            acc += wt * wh * ww * vol[ti, hi, wi]
                out[a, b, c] = acc
    return out
