"""Structural operators of the constrained decoder plus activations and TV.

All arrays are float64.  Batched variants keep the batch as the trailing
axis, so a single vector is simply the ``n = 1`` case.
"""
import numpy as np

from .errors import ContractError

DEFAULT_LRELU_SLOPE = 0.01


def _as_f64(x):
    return np.asarray(x, dtype=np.float64)


def blkdiag_apply(columns, h):
    """Product of blkdiag{v_1, ..., v_R} with ``h``.

    ``columns`` is the B x R matrix whose i-th column is the block v_i; the
    BR x R block-diagonal matrix is never formed.  ``h`` may be a length-R
    vector or an R x n batch; the result is BR (or BR x n) with segment i
    equal to ``h[i] * v_i``.
    """
    columns = np.asarray(columns)
    h = np.asarray(h)
    if columns.ndim != 2:
        raise ContractError("block columns must be a B x R matrix")
    B, R = columns.shape
    if h.shape[0] != R or h.ndim > 2:
        raise ContractError(f"h has leading size {h.shape[0]}, expected R={R}")
    if h.ndim == 1:
        return (columns * h[None, :]).T.reshape(B * R)
    # (R, B, n) -> (BR, n), block i first
    return (columns.T[:, :, None] * h[:, None, :]).reshape(B * R, h.shape[1])


def blkdiag_dense(columns):
    """Explicit BR x R block-diagonal matrix (testing / small sizes only)."""
    columns = _as_f64(columns)
    B, R = columns.shape
    out = np.zeros((B * R, R))
    for i in range(R):
        out[i * B:(i + 1) * B, i] = columns[:, i]
    return out


def stepwise_sum(y, B, R):
    """Collapse a length-BR vector (or BR x n batch) to B entries by summing
    the R consecutive length-B segments, in ascending segment order."""
    y = np.asarray(y)
    if B < 1 or R < 1 or y.shape[0] != B * R:
        raise ContractError(f"length {y.shape[0]} is not B*R = {B}*{R}")
    out = y[0:B].copy()
    for i in range(1, R):
        out += y[i * B:(i + 1) * B]
    return out


def relu(x):
    return np.maximum(x, 0.0)


def lrelu(x, slope=DEFAULT_LRELU_SLOPE):
    if not 0.0 < slope < 1.0:
        raise ContractError("leaky relu slope must lie in (0, 1)")
    return np.where(x >= 0, x, slope * x)


def sigmoid(x):
    x = np.asarray(x)
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.result_type(x, np.float64))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else out[()]


def tv_norm(v):
    """First-order total variation sum_j |v[j+1] - v[j]| of one spectrum."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] < 2:
        raise ContractError("tv_norm needs a vector of length >= 2")
    return float(np.abs(np.diff(v)).sum())


def tv_norm_columns(M):
    """Sum of ``tv_norm`` over the columns of a B x R matrix."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] < 2:
        raise ContractError("need a B x R matrix with B >= 2")
    return float(np.abs(np.diff(M, axis=0)).sum())


def tv_subgradient(M):
    """Subgradient of ``tv_norm_columns`` with sign(0) = 0."""
    s = np.sign(np.diff(M, axis=0))
    g = np.zeros_like(M)
    g[1:] += s
    g[:-1] -= s
    return g
