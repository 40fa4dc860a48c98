"""Autoencoder with an abundance bottleneck and a two-branch decoder.

Encoder: B -> 32R -> 16R -> 4R -> R fully connected, activation ``phi`` on the
first three layers, affine last layer.  The R raw outputs go through
``abs_normalize`` to give abundances.  The decoder's first layer is the
block-diagonal matrix whose blocks are the endmembers; its rectified output
feeds both the step-wise summation (linear part) and a BR -> B -> B -> B
network (nonlinear part), whose sum is the reconstruction.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import numerics as nx
from .datagen import AbundanceMap, HsiCube, substream
from .errors import ContractError

ACTIVATIONS = ("lrelu", "relu", "sigmoid")
ABS_SUM_FLOOR = 1e-12
_STREAM_INIT = 21


def encoder_sizes(B, R):
    return [B, 32 * R, 16 * R, 4 * R, R]


def nonlinear_sizes(B, R):
    return [B * R, B, B, B]


@dataclass
class ModelParams:
    B: int
    R: int
    enc_W: list
    enc_b: list
    V: np.ndarray  # (B, R) block columns of the first decoder layer
    dec_W: list
    dec_b: list
    activation: str = "lrelu"
    slope: float = nx.DEFAULT_LRELU_SLOPE

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"unknown activation {self.activation!r}")
        es, ns = encoder_sizes(self.B, self.R), nonlinear_sizes(self.B, self.R)
        expect = [(es[i + 1], es[i]) for i in range(4)] + [(es[i + 1],) for i in range(4)]
        expect += [(self.B, self.R)]
        expect += [(ns[i + 1], ns[i]) for i in range(3)] + [(ns[i + 1],) for i in range(3)]
        got = [t.shape for t in self.enc_W + self.enc_b + [self.V] + self.dec_W + self.dec_b]
        if got != expect:
            raise ContractError(f"parameter shapes {got} do not match layout {expect}")

    def tensors(self):
        """(name, array) pairs in the canonical order used for I/O and Adam."""
        out = []
        for i in range(4):
            out += [(f"enc_W{i + 1}", self.enc_W[i]), (f"enc_b{i + 1}", self.enc_b[i])]
        out.append(("V", self.V))
        for i in range(3):
            out += [(f"dec_W{i + 1}", self.dec_W[i]), (f"dec_b{i + 1}", self.dec_b[i])]
        return out

    @classmethod
    def from_tensors(cls, B, R, arrays, activation="lrelu", slope=nx.DEFAULT_LRELU_SLOPE):
        a = list(arrays)
        return cls(B, R, enc_W=a[0:8:2], enc_b=a[1:8:2], V=a[8],
                   dec_W=a[9:15:2], dec_b=a[10:15:2], activation=activation, slope=slope)

    def copy(self, dtype=None):
        arrays = [np.array(t, dtype=dtype or t.dtype) for _, t in self.tensors()]
        return ModelParams.from_tensors(self.B, self.R, arrays, self.activation, self.slope)

    def phi(self, z):
        if self.activation == "lrelu":
            return nx.lrelu(z, self.slope)
        if self.activation == "relu":
            return nx.relu(z)
        return nx.sigmoid(z)

    def phi_prime(self, z, out):
        """Derivative of phi at ``z`` (``out`` = phi(z)); kink at 0 takes the
        positive-side slope."""
        if self.activation == "lrelu":
            return np.where(z >= 0, 1.0, self.slope).astype(z.dtype)
        if self.activation == "relu":
            return (z >= 0).astype(z.dtype)
        return out * (1.0 - out)


def _glorot(rng, fan_out, fan_in):
    s = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, (fan_out, fan_in))


def init_params(m_init, seed, activation="lrelu", slope=nx.DEFAULT_LRELU_SLOPE):
    """Decoder blocks copied from ``m_init`` (B x R); Glorot-uniform weights,
    zero biases elsewhere."""
    m_init = np.array(m_init, dtype=np.float64)
    if m_init.ndim != 2 or not np.all(np.isfinite(m_init)):
        raise ContractError("m_init must be a finite B x R matrix")
    if np.any(m_init < 0):
        raise ContractError("m_init must be nonnegative")
    B, R = m_init.shape
    rng = substream(seed, _STREAM_INIT)
    es, ns = encoder_sizes(B, R), nonlinear_sizes(B, R)
    enc_W = [_glorot(rng, es[i + 1], es[i]) for i in range(4)]
    dec_W = [_glorot(rng, ns[i + 1], ns[i]) for i in range(3)]
    return ModelParams(
        B, R,
        enc_W=enc_W, enc_b=[np.zeros(es[i + 1]) for i in range(4)],
        V=m_init,
        dec_W=dec_W, dec_b=[np.zeros(ns[i + 1]) for i in range(3)],
        activation=activation, slope=slope,
    )


@dataclass
class ForwardTrace:
    x: np.ndarray
    enc_pre: list = field(default_factory=list)  # z1..z4 (z4 is h_raw)
    enc_act: list = field(default_factory=list)  # h1..h3
    h_raw: np.ndarray = None
    abs_sum: np.ndarray = None
    a_hat: np.ndarray = None
    y1: np.ndarray = None  # V h before the rectifier
    o1: np.ndarray = None
    nl_pre: list = field(default_factory=list)  # q1..q3
    nl_act: list = field(default_factory=list)  # g1, g2
    x_lin: np.ndarray = None
    x_nlin: np.ndarray = None
    x_hat: np.ndarray = None


def _check_batch(p, x):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != p.B:
        raise ContractError(f"batch must be {p.B} x n, got {x.shape}")
    return x


def _encode(p, x, trace):
    h = x
    for i in range(4):
        z = p.enc_W[i] @ h + p.enc_b[i][:, None]
        trace.enc_pre.append(z)
        if i < 3:
            h = p.phi(z)
            trace.enc_act.append(h)
    trace.h_raw = z
    return z


def encoder_forward(p, x_batch):
    x = _check_batch(p, x_batch)
    return _encode(p, x, ForwardTrace(x))


def abs_normalize(h_raw, _return_sum=False):
    """Columnwise |h| / sum|h|; columns with sum|h| < 1e-12 become 1/R."""
    h_raw = np.asarray(h_raw)
    ah = np.abs(h_raw)
    s = ah.sum(axis=0)
    dead = s < ABS_SUM_FLOOR
    a = ah / np.where(dead, 1.0, s)
    if np.any(dead):
        a[:, dead] = 1.0 / h_raw.shape[0]
    return (a, s) if _return_sum else a


def _decode(p, a, trace):
    B, R = p.B, p.R
    y1 = nx.blkdiag_apply(p.V, a)
    o1 = nx.relu(y1)
    x_lin = nx.stepwise_sum(o1, B, R)
    g = o1
    for i in range(3):
        q = p.dec_W[i] @ g + p.dec_b[i][:, None]
        trace.nl_pre.append(q)
        if i < 2:
            g = p.phi(q)
            trace.nl_act.append(g)
    x_nlin = nx.relu(q)
    trace.y1, trace.o1 = y1, o1
    trace.x_lin, trace.x_nlin, trace.x_hat = x_lin, x_nlin, x_lin + x_nlin
    return trace


def decoder_forward(p, a_hat):
    """Returns ``(x_lin, x_nlin, x_hat)`` for an R x n abundance batch."""
    a_hat = np.asarray(a_hat)
    if a_hat.ndim != 2 or a_hat.shape[0] != p.R:
        raise ContractError(f"abundances must be {p.R} x n, got {a_hat.shape}")
    t = _decode(p, a_hat, ForwardTrace(None))
    return t.x_lin, t.x_nlin, t.x_hat


def forward(p, x_batch):
    """Full pass keeping every intermediate needed for backpropagation."""
    x = _check_batch(p, x_batch)
    trace = ForwardTrace(x)
    h_raw = _encode(p, x, trace)
    trace.a_hat, trace.abs_sum = abs_normalize(h_raw, _return_sum=True)
    return _decode(p, trace.a_hat, trace)


def extract_endmembers(p):
    """The rectified decoder blocks, i.e. the endmembers the forward pass uses."""
    return np.maximum(p.V, 0.0)


def unmix(p, X, batch_size=4096):
    """Abundances and linear / nonlinear / full reconstructions for a cube."""
    if X.bands != p.B:
        raise ContractError(f"cube has {X.bands} bands, model expects {p.B}")
    parts = {k: [] for k in ("a", "lin", "nlin", "hat")}
    for start in range(0, X.pixels, batch_size):
        t = forward(p, X.data[:, start:start + batch_size])
        parts["a"].append(t.a_hat)
        parts["lin"].append(t.x_lin)
        parts["nlin"].append(t.x_nlin)
        parts["hat"].append(t.x_hat)
    cat = {k: np.concatenate(v, axis=1) for k, v in parts.items()}
    return (AbundanceMap(cat["a"], X.layout), HsiCube(cat["lin"], X.layout),
            HsiCube(cat["nlin"], X.layout), HsiCube(cat["hat"], X.layout))
