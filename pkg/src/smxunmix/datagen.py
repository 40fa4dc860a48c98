"""Synthetic scenes: smooth endmember spectra, Dirichlet abundances, the
linear / bilinear / PPNM mixing models and Gaussian noise at a fixed SNR."""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ContractError, GenerationError

WAVELENGTH_RANGE_NM = (400.0, 2500.0)
MIN_PAIRWISE_SAD_DEG = 5.0
MODELS = ("linear", "bilinear", "ppnm")

# named substreams of a scene seed
_STREAM_LIBRARY, _STREAM_ABUNDANCE, _STREAM_NOISE = 1, 2, 3


def substream(seed, *keys):
    """Independent generator for ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *keys]))


@dataclass
class SpectralLibrary:
    wavelengths: np.ndarray  # (B,) nm
    spectra: np.ndarray  # (B, R)
    names: list

    def __post_init__(self):
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        self.spectra = np.asarray(self.spectra, dtype=np.float64)
        B, R = self.spectra.shape
        if self.wavelengths.shape != (B,):
            raise ContractError("wavelength count does not match spectra rows")
        if len(self.names) != R:
            raise ContractError("need one name per spectrum")
        if B > 1 and not np.all(np.diff(self.wavelengths) > 0):
            raise ContractError("wavelengths must be strictly increasing")

    @property
    def bands(self):
        return self.spectra.shape[0]

    @property
    def count(self):
        return self.spectra.shape[1]


@dataclass
class AbundanceMap:
    values: np.ndarray  # (R, N)
    layout: tuple = None  # (height, width)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.layout is None:
            self.layout = default_layout(self.values.shape[1])
        self.layout = tuple(int(v) for v in self.layout)
        if self.layout[0] * self.layout[1] != self.values.shape[1]:
            raise ContractError("layout does not match pixel count")


@dataclass
class HsiCube:
    data: np.ndarray  # (B, N)
    layout: tuple = None
    provenance: dict = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ContractError("cube data must be a B x N matrix")
        if self.layout is None:
            self.layout = default_layout(self.data.shape[1])
        self.layout = tuple(int(v) for v in self.layout)
        if self.layout[0] * self.layout[1] != self.data.shape[1]:
            raise ContractError("layout does not match pixel count")

    @property
    def bands(self):
        return self.data.shape[0]

    @property
    def pixels(self):
        return self.data.shape[1]


def default_layout(n):
    """Most square (height, width) with height <= width and height*width = n."""
    h = int(math.isqrt(n))
    while h > 1 and n % h:
        h -= 1
    return (max(h, 1), n // max(h, 1))


def _sad_deg(u, v):
    c = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def synth_endmembers(R, B, seed, max_tries=100):
    """R smooth positive spectra built from 3-6 Gaussian bumps each.

    Values lie in (0, 1] and every pair is at least 5 degrees apart.
    """
    if R < 2 or B < 8:
        raise ContractError("need R >= 2 and B >= 8")
    lo, hi = WAVELENGTH_RANGE_NM
    wl = np.linspace(lo, hi, B)
    rng = substream(seed, _STREAM_LIBRARY)
    span = hi - lo
    for _ in range(max_tries):
        spectra = np.empty((B, R))
        for r in range(R):
            k = rng.integers(3, 7)
            centers = rng.uniform(lo, hi, k)
            widths = rng.uniform(0.04, 0.2, k) * span
            amps = rng.uniform(0.1, 1.0, k)
            s = 0.1 + (amps * np.exp(-0.5 * ((wl[:, None] - centers) / widths) ** 2)).sum(1)
            spectra[:, r] = s / s.max() * rng.uniform(0.6, 1.0)
        sads = [_sad_deg(spectra[:, i], spectra[:, j])
                for i in range(R) for j in range(i + 1, R)]
        if min(sads) >= MIN_PAIRWISE_SAD_DEG:
            return SpectralLibrary(wl, spectra, [f"em{r + 1}" for r in range(R)])
    raise GenerationError(
        f"no library with pairwise SAD >= {MIN_PAIRWISE_SAD_DEG} deg after {max_tries} tries")


def sample_abundances(N, R, seed, layout=None):
    """N i.i.d. draws from the flat Dirichlet on the (R-1)-simplex."""
    if N < 1 or R < 2:
        raise ContractError("need N >= 1 and R >= 2")
    rng = substream(seed, _STREAM_ABUNDANCE)
    # normalized unit exponentials == Dirichlet(1, ..., 1)
    e = rng.standard_exponential((R, N))
    return AbundanceMap(e / e.sum(axis=0, keepdims=True), layout)


def _check(M, A):
    spectra = M.spectra if isinstance(M, SpectralLibrary) else np.asarray(M, dtype=np.float64)
    values = A.values if isinstance(A, AbundanceMap) else np.asarray(A, dtype=np.float64)
    layout = A.layout if isinstance(A, AbundanceMap) else None
    if spectra.ndim != 2 or values.ndim != 2 or spectra.shape[1] != values.shape[0]:
        raise ContractError(
            f"endmembers {spectra.shape} and abundances {values.shape} do not conform")
    return spectra, values, layout


def mix_linear(M, A):
    spectra, values, layout = _check(M, A)
    return HsiCube(spectra @ values, layout)


def mix_bilinear(M, A):
    spectra, values, layout = _check(M, A)
    R = spectra.shape[1]
    x = spectra @ values
    for i in range(R - 1):
        for j in range(i + 1, R):
            x += (spectra[:, i] * spectra[:, j])[:, None] * (values[i] * values[j])[None, :]
    return HsiCube(x, layout)


def mix_ppnm(M, A):
    spectra, values, layout = _check(M, A)
    y = spectra @ values
    return HsiCube(y + y * y, layout)


MIXERS = {"linear": mix_linear, "bilinear": mix_bilinear, "ppnm": mix_ppnm}


def add_noise(X, snr_db, seed):
    """Add white Gaussian noise with variance P_signal / 10**(snr_db/10).

    P_signal is the mean squared entry of the noiseless cube.  ``snr_db =
    inf`` returns the cube unchanged.
    """
    data = X.data
    if not np.all(np.isfinite(data)):
        raise ContractError("cube has non-finite entries")
    if math.isinf(snr_db) and snr_db > 0:
        return HsiCube(data.copy(), X.layout, X.provenance)
    power = float(np.mean(data * data))
    if power == 0.0:
        raise ContractError("SNR is undefined for an all-zero cube")
    sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    noise = substream(seed, _STREAM_NOISE).standard_normal(data.shape) * sigma
    return HsiCube(data + noise, X.layout, X.provenance)


@dataclass
class Scene:
    library: SpectralLibrary
    abundances: AbundanceMap
    clean: HsiCube
    cube: HsiCube


def generate_scene(model, R, B, pixels, snr_db, seed, layout=None):
    """Full ground-truthed scene; the cube's provenance regenerates it."""
    if model not in MIXERS:
        raise ContractError(f"unknown mixing model {model!r}")
    lib = synth_endmembers(R, B, seed)
    A = sample_abundances(pixels, R, seed, layout)
    clean = MIXERS[model](lib, A)
    noisy = add_noise(clean, snr_db, seed)
    noisy.provenance = {
        "model": model, "snr_db": float(snr_db), "seed": int(seed),
        "r": int(R), "b": int(B), "pixels": int(pixels),
        "layout": list(A.layout),
    }
    return Scene(lib, A, clean, noisy)


def regenerate(provenance):
    p = provenance
    return generate_scene(p["model"], p["r"], p["b"], p["pixels"], p["snr_db"],
                          p["seed"], tuple(p["layout"]))
