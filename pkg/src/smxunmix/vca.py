"""Vertex Component Analysis for endmember initialization."""
from dataclasses import dataclass

import numpy as np

from .datagen import HsiCube, substream
from .errors import ContractError, DegenerateDataError

_STREAM_VCA = 11
RANK_TOL = 1e-9


@dataclass
class VcaResult:
    endmembers: np.ndarray  # (B, R), columns copied from the cube
    selected_pixel_indices: list
    projection_dim: int


def _subspace(Y, R):
    """Orthonormal B x R basis of the linear span holding the data's affine hull.

    R-1 leading directions of the mean-removed data plus the mean itself.
    """
    mean = Y.mean(axis=1)
    U, s, _ = np.linalg.svd(Y - mean[:, None], full_matrices=False)
    if s.size < R - 1 or s[0] == 0.0 or s[R - 2] <= RANK_TOL * s[0]:
        raise DegenerateDataError(f"data spans fewer than {R - 1} affine dimensions")
    basis = np.column_stack([U[:, :R - 1], mean])
    Q, tri = np.linalg.qr(basis)
    if abs(tri[-1, -1]) <= RANK_TOL * np.linalg.norm(mean):
        raise DegenerateDataError("data mean lies in its own affine span; rank < R")
    return Q


def vca_extract(X, R, seed):
    """Pick R pixels of ``X`` that are vertices of the data simplex.

    Each iteration draws a random direction, removes its component in the
    span of the vertices chosen so far, and keeps the pixel with the largest
    absolute projection (ties go to the lowest index).
    """
    Y = X.data if isinstance(X, HsiCube) else np.asarray(X, dtype=np.float64)
    B, N = Y.shape
    if R < 2:
        raise ContractError("VCA needs R >= 2")
    if N < R:
        raise ContractError(f"{N} pixels cannot supply {R} endmembers")
    if not np.all(np.isfinite(Y)):
        raise ContractError("cube has non-finite entries")

    Q = _subspace(Y, R)
    xp = Q.T @ Y  # (R, N)
    u = xp.mean(axis=1)
    scale = u @ xp
    if np.any(scale <= 0):
        raise DegenerateDataError("projective projection undefined: pixels on the wrong side")
    yp = xp / scale  # projective projection onto the hyperplane u^T y = 1

    rng = substream(seed, _STREAM_VCA)
    E = np.zeros((R, R))
    E[-1, 0] = 1.0
    chosen = []
    for i in range(R):
        w = rng.standard_normal(R)
        f = w - E @ (np.linalg.pinv(E) @ w)
        f /= np.linalg.norm(f)
        v = np.abs(f @ yp)
        v[chosen] = -np.inf
        k = int(np.argmax(v))
        chosen.append(k)
        E[:, i] = yp[:, k]
    return VcaResult(Y[:, chosen].copy(), chosen, R)
