"""Objective, reverse-mode gradients, Adam and the minibatch training loop."""
from dataclasses import dataclass, field, fields, asdict
import logging
import math
import time

import numpy as np

from . import numerics as nx
from .datagen import HsiCube, substream
from .errors import ContractError, NumericalError
from .model import ACTIVATIONS, ModelParams, forward, init_params

log = logging.getLogger(__name__)

_STREAM_SHUFFLE = 31


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 1024
    epochs: int = 30
    lam: float = 1e-3
    gamma: float = 1e-3
    seed: int = 0
    activation: str = "lrelu"
    lrelu_slope: float = nx.DEFAULT_LRELU_SLOPE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr < 0 or self.lam < 0 or self.gamma < 0:
            raise ContractError("lr, lambda and gamma must be nonnegative")
        if self.batch_size < 1 or self.epochs < 1:
            raise ContractError("batch_size and epochs must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"activation must be one of {ACTIVATIONS}")

    # JSON uses "lambda", which is a Python keyword
    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in fields(cls)} - {"lam"} | {"lambda"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ContractError(f"unknown config keys: {', '.join(unknown)}")
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        for k, typ in (("batch_size", int), ("epochs", int), ("seed", int)):
            if k in d and (isinstance(d[k], bool) or not isinstance(d[k], int)):
                raise ContractError(f"{k} must be an integer")
        return cls(**d)


@dataclass
class EpochRecord:
    epoch: int
    j_data: float
    j_reg: float
    j_smth: float
    j_total: float
    seconds: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("epoch,j_data,j_reg,j_smth,j_total,seconds\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.j_data!r},{r.j_reg!r},{r.j_smth!r},"
                         f"{r.j_total!r},{r.seconds:.6f}\n")


def objective(p, X_batch, lam, gamma):
    """Dict with j_data, j_reg, j_smth and j_total for one batch."""
    return _objective_from_trace(p, forward(p, X_batch), lam, gamma)


def _objective_from_trace(p, t, lam, gamma):
    n = t.x.shape[1]
    r = t.x_hat - t.x
    j_data = (r * r).sum() / n
    j_reg = sum((W * W).sum() for W in p.dec_W)
    j_smth = np.abs(np.diff(p.V, axis=0)).sum()
    return {"j_data": j_data, "j_reg": j_reg, "j_smth": j_smth,
            "j_total": j_data + lam * j_reg + gamma * j_smth}


def gradient(p, X_batch, lam, gamma, return_terms=False):
    """Exact gradient of j_total, as a ModelParams-shaped container.

    Kink conventions: relu'(0) = lrelu'(0) = 1; d|h|/dh and the TV
    subgradient use sign(0) = 0.
    """
    t = forward(p, X_batch)
    n = t.x.shape[1]
    B, R = p.B, p.R

    d_hat = (2.0 / n) * (t.x_hat - t.x)

    # nonlinear branch, output relu then two phi layers
    dW, db = [None] * 3, [None] * 3
    dq = d_hat * (t.nl_pre[2] >= 0)
    for i in (2, 1, 0):
        g_in = t.nl_act[i - 1] if i > 0 else t.o1
        dW[i] = dq @ g_in.T + (2.0 * lam) * p.dec_W[i]
        db[i] = dq.sum(axis=1)
        dg = p.dec_W[i].T @ dq
        if i > 0:
            dq = dg * p.phi_prime(t.nl_pre[i - 1], t.nl_act[i - 1])
    # dg is now the nonlinear branch's gradient w.r.t. o1; add the T-branch
    d_o1 = dg + np.tile(d_hat, (R, 1))
    d_y1 = (d_o1 * (t.y1 >= 0)).reshape(R, B, n)

    a = t.a_hat
    dV = np.einsum("rbn,rn->br", d_y1, a) + gamma * nx.tv_subgradient(p.V)
    d_a = np.einsum("rbn,br->rn", d_y1, p.V)

    # abs + normalize: a_i = |h_i| / s
    s = t.abs_sum
    live = s >= 1e-12
    safe = np.where(live, s, 1.0)
    centered = d_a - (d_a * a).sum(axis=0, keepdims=True)
    dz = np.sign(t.h_raw) * centered / safe * live

    eW, eb = [None] * 4, [None] * 4
    for i in (3, 2, 1, 0):
        h_in = t.enc_act[i - 1] if i > 0 else t.x
        eW[i] = dz @ h_in.T
        eb[i] = dz.sum(axis=1)
        if i > 0:
            dz = (p.enc_W[i].T @ dz) * p.phi_prime(t.enc_pre[i - 1], t.enc_act[i - 1])

    g = ModelParams(B, R, enc_W=eW, enc_b=eb, V=dV, dec_W=dW, dec_b=db,
                    activation=p.activation, slope=p.slope)
    if return_terms:
        return g, _objective_from_trace(p, t, lam, gamma)
    return g


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, p):
        return cls([np.zeros_like(a) for _, a in p.tensors()],
                   [np.zeros_like(a) for _, a in p.tensors()])


def adam_step(state, p, g, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update of ``p`` in place; returns (state, p)."""
    state.t += 1
    c1 = 1.0 - beta1 ** state.t
    c2 = 1.0 - beta2 ** state.t
    for k, ((_, w), (_, gw)) in enumerate(zip(p.tensors(), g.tensors())):
        m, v = state.m[k], state.v[k]
        m *= beta1
        m += (1.0 - beta1) * gw
        v *= beta2
        v += (1.0 - beta2) * gw * gw
        w -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state, p


def evaluate_full(p, X, lam, gamma, batch_size=4096):
    """Objective terms over the whole cube, accumulated in fixed order."""
    N = X.shape[1]
    sq = 0.0
    for start in range(0, N, batch_size):
        t = forward(p, X[:, start:start + batch_size])
        r = t.x_hat - t.x
        sq += float((r * r).sum())
    j_data = sq / N
    j_reg = float(sum((W * W).sum() for W in p.dec_W))
    j_smth = nx.tv_norm_columns(p.V)
    return j_data, j_reg, j_smth, j_data + lam * j_reg + gamma * j_smth


def train(X, m_init, cfg=None, callback=None):
    """Fit the autoencoder to the pixels of ``X`` starting from ``m_init``.

    Returns ``(params, history)``.  Results are a deterministic function of
    the inputs: initialization and shuffling use separate substreams of
    ``cfg.seed``.
    """
    cfg = cfg or TrainConfig()
    data = X.data if isinstance(X, HsiCube) else np.asarray(X, dtype=np.float64)
    m_init = np.asarray(m_init, dtype=np.float64)
    if data.shape[0] != m_init.shape[0]:
        raise ContractError(
            f"cube has {data.shape[0]} bands, initial endmembers have {m_init.shape[0]}")
    p = init_params(m_init, cfg.seed, cfg.activation, cfg.lrelu_slope)
    state = AdamState.zeros_like(p)
    shuffle_rng = substream(cfg.seed, _STREAM_SHUFFLE)
    N = data.shape[1]
    bs = min(cfg.batch_size, N)
    history = TrainHistory()
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(N)
        for b, start in enumerate(range(0, N, bs)):
            batch = data[:, order[start:start + bs]]
            g, terms = gradient(p, batch, cfg.lam, cfg.gamma, return_terms=True)
            if not math.isfinite(terms["j_total"]):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {b}: "
                    + ", ".join(f"{k}={v:.6g}" for k, v in terms.items()))
            adam_step(state, p, g, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
        j = evaluate_full(p, data, cfg.lam, cfg.gamma)
        if not all(math.isfinite(v) for v in j):
            raise NumericalError(f"non-finite full-data loss after epoch {epoch}: {j}")
        rec = EpochRecord(epoch, *j, seconds=time.perf_counter() - t0)
        history.records.append(rec)
        log.info("epoch %d  j_data=%.6g j_reg=%.6g j_smth=%.6g j_total=%.6g",
                 epoch, rec.j_data, rec.j_reg, rec.j_smth, rec.j_total)
        if callback is not None:
            callback(rec, p)
    return p, history
