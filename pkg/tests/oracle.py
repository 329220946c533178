"""Brute-force reference implementations used as independent oracles.

Everything here is written as plain loops, deliberately sharing no code
with the library implementations it checks.
"""

import numpy as np


def conv1d_loops(x, w, b, stride=1, pad=0):
    bsz, cin, t = x.shape
    cout, _, k = w.shape
    xp = np.zeros((bsz, cin, t + 2 * pad))
    xp[:, :, pad : pad + t] = x
    t_out = (t + 2 * pad - k) // stride + 1
    out = np.zeros((bsz, cout, t_out))
    for n in range(bsz):
        for o in range(cout):
            for j in range(t_out):
                acc = b[o]
                for c in range(cin):
                    for kk in range(k):
                        acc += xp[n, c, j * stride + kk] * w[o, c, kk]
                out[n, o, j] = acc
    return out


def maxpool1d_loops(x, window, stride):
    bsz, c, t = x.shape
    t_out = (t - window) // stride + 1
    out = np.zeros((bsz, c, t_out))
    for n in range(bsz):
        for ch in range(c):
            for j in range(t_out):
                out[n, ch, j] = max(x[n, ch, j * stride : j * stride + window])
    return out


def avgpool1d_loops(x, window, stride):
    bsz, c, t = x.shape
    t_out = (t - window) // stride + 1
    out = np.zeros((bsz, c, t_out))
    for n in range(bsz):
        for ch in range(c):
            for j in range(t_out):
                out[n, ch, j] = sum(x[n, ch, j * stride : j * stride + window]) / window
    return out


def upsample1d_loops(x, factor):
    bsz, c, t = x.shape
    out = np.zeros((bsz, c, t * factor))
    for n in range(bsz):
        for ch in range(c):
            for j in range(t * factor):
                out[n, ch, j] = x[n, ch, j // factor]
    return out


def mode_smallest(values, num_classes=10):
    """Mode of an iterable of labels; ties break to the smallest label."""
    counts = [0] * num_classes
    for v in values:
        counts[v] += 1
    best = 0
    for lab in range(num_classes):
        if counts[lab] > counts[best]:
            best = lab
    return best


def mode_filter_loops(labels, window, num_classes=10):
    n = len(labels)
    left = window // 2
    right = (window - 1) // 2
    out = []
    for i in range(n):
        lo = max(0, i - left)
        hi = min(n, i + right + 1)
        out.append(mode_smallest(labels[lo:hi], num_classes))
    return np.array(out)
