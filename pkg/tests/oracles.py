"""Independent reference computations used by the tests.

Nothing here calls the code paths it is used to check: metric oracles are
plain Python loops, and the gradient oracle is central differences of the
objective evaluated in extended precision.
"""
import math

import numpy as np

from smxunmix.model import forward
from smxunmix.train import _objective_from_trace


def loop_rmse(A, Ah):
    R, N = len(A), len(A[0])
    tot = 0.0
    for i in range(N):
        for r in range(R):
            tot += (A[r][i] - Ah[r][i]) ** 2
    return math.sqrt(tot / (N * R))


def loop_sad(m, mh):
    dot = sum(a * b for a, b in zip(m, mh))
    n1 = math.sqrt(sum(a * a for a in m))
    n2 = math.sqrt(sum(b * b for b in mh))
    return math.degrees(math.acos(max(-1.0, min(1.0, dot / (n1 * n2)))))


def loop_sid(m, mh, floor=1e-12):
    def prof(v):
        s = sum(v)
        p = [max(x / s, floor) for x in v]
        t = sum(p)
        return [x / t for x in p]
    p, q = prof(m), prof(mh)
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q))


def loop_re(X, Xh, R):
    B, N = len(X), len(X[0])
    tot = 0.0
    for i in range(N):
        tot += math.sqrt(sum((X[b][i] - Xh[b][i]) ** 2 for b in range(B)))
    return math.sqrt(tot / (N * R))


def _kink_signature(p, t):
    sig = [np.signbit(z) for z in t.enc_pre[:3]]
    sig += [np.signbit(t.h_raw), t.h_raw == 0, np.signbit(t.y1)]
    sig += [np.signbit(q) for q in t.nl_pre]
    d = np.diff(p.V, axis=0)
    sig += [np.signbit(d), d == 0]
    return sig


def finite_difference_gradient(p, X, lam, gamma, step=1e-6, dtype=np.longdouble):
    """Central differences of j_total for every parameter.

    Returns ``(grads, masks)``: lists aligned with ``p.tensors()``.  A mask
    entry is False when the +/- step straddles a kink (any relu / lrelu /
    abs / TV argument changes sign), where the derivative is one-sided.
    """
    q = p.copy(dtype)
    Xq = np.asarray(X).astype(dtype)
    grads, masks = [], []
    for _, w in q.tensors():
        flat = w.reshape(-1)
        g = np.zeros(flat.size)
        ok = np.ones(flat.size, dtype=bool)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + step
            tp = forward(q, Xq)
            fp = _objective_from_trace(q, tp, lam, gamma)["j_total"]
            sp = _kink_signature(q, tp)
            flat[k] = old - step
            tm = forward(q, Xq)
            fm = _objective_from_trace(q, tm, lam, gamma)["j_total"]
            sm = _kink_signature(q, tm)
            flat[k] = old
            g[k] = float((fp - fm) / (2 * step))
            ok[k] = all(np.array_equal(a, b) for a, b in zip(sp, sm))
        grads.append(g.reshape(w.shape))
        masks.append(ok.reshape(w.shape))
    return grads, masks


def max_relative_error(analytic, numeric, masks, floor=1e-8):
    """Largest |a - n| / max(|a|, |n|) over unmasked entries with |a| > floor."""
    worst, checked = 0.0, 0
    for a, n, m in zip(analytic, numeric, masks):
        sel = m & (np.abs(a) > floor)
        if np.any(sel):
            rel = np.abs(a - n)[sel] / np.maximum(np.abs(a), np.abs(n))[sel]
            worst = max(worst, float(rel.max()))
            checked += int(sel.sum())
    return worst, checked


def tiny_problem(seed, B=6, R=2, n=3, activation="lrelu"):
    """Seeded tiny network and batch with nonzero biases."""
    from smxunmix.model import init_params
    rng = np.random.default_rng(1000 + seed)
    M = rng.uniform(0.1, 1.0, (B, R))
    X = rng.uniform(0.1, 1.0, (B, n))
    p = init_params(M, seed, activation)
    for b in p.enc_b + p.dec_b:
        b[:] = rng.normal(0.0, 0.1, b.shape)
    return p, X
