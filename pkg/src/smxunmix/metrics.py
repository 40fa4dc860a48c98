"""Unmixing quality metrics, endmember alignment and diagnostic maps."""
from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractError

SID_FLOOR = 1e-12


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def sad(m, m_hat):
    """Spectral angle between two spectra, in degrees.

    Evaluated as 2*atan2(|u - v|, |u + v|) on the unit vectors, which equals
    arccos(u.v) but keeps full precision near 0 and 180 degrees.
    """
    m, m_hat = _pair(m, m_hat)
    n1, n2 = np.linalg.norm(m), np.linalg.norm(m_hat)
    if n1 == 0 or n2 == 0:
        raise ContractError("SAD is undefined for a zero spectrum")
    u, v = m / n1, m_hat / n2
    return math.degrees(2.0 * math.atan2(np.linalg.norm(u - v), np.linalg.norm(u + v)))


def sad_matrix(M_true, M_hat):
    """Entry (i, j): SAD between true column i and estimated column j."""
    M_true, M_hat = np.asarray(M_true, float), np.asarray(M_hat, float)
    return np.array([[sad(M_true[:, i], M_hat[:, j]) for j in range(M_hat.shape[1])]
                     for i in range(M_true.shape[1])])


def _profile(m):
    if np.any(m < 0):
        raise ContractError("SID needs nonnegative spectra")
    s = m.sum()
    if s <= 0:
        raise ContractError("SID needs a spectrum with positive sum")
    p = np.maximum(m / s, SID_FLOOR)
    return p / p.sum()


def sid(m, m_hat, symmetric=False):
    """Spectral information divergence sum_j p_j log(p_j / q_j), in nats.

    One-directional by default; ``symmetric=True`` adds the reverse term.
    """
    m, m_hat = _pair(m, m_hat)
    p, q = _profile(m), _profile(m_hat)
    d = float(np.sum(p * np.log(p / q)))
    if symmetric:
        d += float(np.sum(q * np.log(q / p)))
    return max(d, 0.0)


def rmse(A_true, A_hat):
    """sqrt(1/(NR) * sum_i ||a_i - a_hat_i||^2) over R x N abundance maps."""
    A_true, A_hat = _pair(A_true, A_hat)
    d = A_true - A_hat
    return math.sqrt(float((d * d).sum()) / d.size)


def re(X, X_hat, R):
    """Reconstruction error sqrt(1/(NR) * sum_i ||x_i - x_hat_i||_2).

    The per-pixel norm enters unsquared.
    """
    X, X_hat = _pair(X, X_hat)
    if X.ndim != 2 or R < 1:
        raise ContractError("need B x N cubes and R >= 1")
    norms = np.linalg.norm(X - X_hat, axis=0)
    return math.sqrt(float(norms.sum()) / (X.shape[1] * R))


def nonlinear_energy_map(x_nlin):
    """Per-pixel squared norm of the nonlinear reconstruction (B x N -> N)."""
    x_nlin = np.asarray(x_nlin, dtype=np.float64)
    return (x_nlin * x_nlin).sum(axis=0)


def align(M_hat, M_true):
    """Permutation ``perm`` minimizing total SAD: estimated column
    ``perm[i]`` is matched with true column ``i``."""
    M_hat, M_true = _pair(M_hat, M_true)
    cost = sad_matrix(M_true, M_hat)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(M_true.shape[1], dtype=int)
    perm[rows] = cols
    return perm


@dataclass
class EvalReport:
    rmse: float
    sad_deg: list
    sad_mean: float
    sid: list
    sid_mean: float
    re: float
    permutation: list

    def to_text(self):
        lines = [
            f"abundance RMSE      {self.rmse:.6f}",
            f"mean SAD (deg)      {self.sad_mean:.6f}",
            f"mean SID (nats)     {self.sid_mean:.6f}",
            f"RE                  {self.re:.6f}" if self.re is not None else "RE                  n/a",
            "permutation (true <- estimated) " + " ".join(str(p) for p in self.permutation),
            "",
            "endmember  SAD_deg     SID_nats",
        ]
        for i, (a, s) in enumerate(zip(self.sad_deg, self.sid)):
            lines.append(f"{i:9d}  {a:10.6f}  {s:10.6f}")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        rows = ["metric,endmember,value", f"rmse,,{self.rmse!r}"]
        for i, (a, s) in enumerate(zip(self.sad_deg, self.sid)):
            rows.append(f"sad_deg,{i},{a!r}")
            rows.append(f"sid,{i},{s!r}")
        rows += [f"sad_deg_mean,,{self.sad_mean!r}", f"sid_mean,,{self.sid_mean!r}",
                 f"re,,{'' if self.re is None else repr(self.re)}"]
        rows += [f"permutation,{i},{p}" for i, p in enumerate(self.permutation)]
        return "\n".join(rows) + "\n"


def evaluate(M_true, M_hat, A_true, A_hat, X=None, X_hat=None, symmetric_sid=False):
    """Align estimates to the truth and compute every metric."""
    M_true, M_hat = _pair(M_true, M_hat)
    perm = align(M_hat, M_true)
    M_al = M_hat[:, perm]
    sads = [sad(M_true[:, i], M_al[:, i]) for i in range(M_true.shape[1])]
    sids = [sid(M_true[:, i], M_al[:, i], symmetric_sid) for i in range(M_true.shape[1])]
    r = rmse(A_true, np.asarray(A_hat)[perm])
    e = re(X, X_hat, M_true.shape[1]) if X is not None and X_hat is not None else None
    return EvalReport(r, sads, float(np.mean(sads)), sids, float(np.mean(sids)), e,
                      [int(p) for p in perm])
