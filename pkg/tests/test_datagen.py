import math

import numpy as np
import pytest

from smxunmix.datagen import (AbundanceMap, HsiCube, SpectralLibrary, add_noise,
                              generate_scene, mix_bilinear, mix_linear, mix_ppnm,
                              regenerate, sample_abundances, synth_endmembers)
from smxunmix.errors import ContractError
from oracles import loop_sad


def test_synth_endmembers_deterministic():
    a, b = synth_endmembers(4, 224, 7), synth_endmembers(4, 224, 7)
    np.testing.assert_array_equal(a.spectra, b.spectra)
    np.testing.assert_array_equal(a.wavelengths, b.wavelengths)


@pytest.mark.parametrize("seed", range(10))
def test_synth_endmembers_range_and_separation(seed):
    lib = synth_endmembers(5, 64, seed)
    S = lib.spectra
    assert np.all(np.isfinite(S)) and np.all(S > 0) and np.all(S <= 1)
    assert np.all(np.diff(lib.wavelengths) > 0)
    sads = [loop_sad(S[:, i], S[:, j]) for i in range(5) for j in range(i + 1, 5)]
    assert min(sads) >= 5.0


def test_synth_endmembers_preconditions():
    with pytest.raises(ContractError):
        synth_endmembers(1, 224, 0)
    with pytest.raises(ContractError):
        synth_endmembers(3, 7, 0)


def test_abundances_on_simplex():
    A = sample_abundances(1000, 4, 3).values
    assert np.all(A >= 0)
    assert np.max(np.abs(A.sum(axis=0) - 1)) <= 1e-12


def test_abundance_mean_is_uniform():
    A = sample_abundances(100_000, 4, 11).values
    np.testing.assert_allclose(A.mean(axis=1), 0.25, atol=0.01)


def test_abundances_deterministic():
    np.testing.assert_array_equal(sample_abundances(50, 3, 5).values,
                                  sample_abundances(50, 3, 5).values)


@pytest.mark.parametrize("mixer", [mix_linear, mix_bilinear, mix_ppnm])
def test_one_hot_abundance(mixer):
    lib = synth_endmembers(3, 16, 1)
    A = np.eye(3)
    X = mixer(lib, AbundanceMap(A, (1, 3))).data
    if mixer is mix_ppnm:
        np.testing.assert_array_equal(X, lib.spectra + lib.spectra ** 2)
    else:
        np.testing.assert_array_equal(X, lib.spectra)


def test_two_band_examples():
    M = np.array([[1.0, 0.0], [0.0, 1.0]])
    a = AbundanceMap(np.array([[0.5], [0.5]]))
    np.testing.assert_array_equal(mix_linear(M, a).data[:, 0], [0.5, 0.5])
    np.testing.assert_array_equal(mix_bilinear(M, a).data[:, 0], [0.5, 0.5])


def test_ppnm_examples():
    # columns of M give M a = 0.5 everywhere
    M = np.full((5, 2), 0.5)
    a = AbundanceMap(np.array([[0.3], [0.7]]))
    np.testing.assert_allclose(mix_ppnm(M, a).data[:, 0], 0.75, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(mix_ppnm(np.zeros((4, 2)), a).data, 0)


def _naive(M, A, model):
    B, R = M.shape
    out = np.zeros((B, A.shape[1]))
    for n in range(A.shape[1]):
        for b in range(B):
            y = sum(A[i, n] * M[b, i] for i in range(R))
            if model == "bilinear":
                for i in range(R - 1):
                    for j in range(i + 1, R):
                        y += A[i, n] * A[j, n] * M[b, i] * M[b, j]
            elif model == "ppnm":
                y = y + y * y
            out[b, n] = y
    return out


@pytest.mark.parametrize("model, mixer", [("linear", mix_linear), ("bilinear", mix_bilinear),
                                          ("ppnm", mix_ppnm)])
def test_mixers_match_naive_loops(model, mixer):
    lib = synth_endmembers(3, 12, 4)
    A = sample_abundances(40, 3, 4)
    np.testing.assert_allclose(mixer(lib, A).data, _naive(lib.spectra, A.values, model),
                               rtol=0, atol=1e-14)


def test_nonlinear_mixers_dominate_linear():
    lib = synth_endmembers(4, 32, 2)
    A = sample_abundances(300, 4, 2)
    lin = mix_linear(lib, A).data
    assert np.all(mix_bilinear(lib, A).data >= lin)
    assert np.all(mix_ppnm(lib, A).data >= lin)


def test_mixer_dimension_mismatch():
    with pytest.raises(ContractError):
        mix_linear(np.ones((5, 3)), AbundanceMap(np.ones((2, 4)) / 2))


def test_noise_infinite_snr_is_identity():
    X = HsiCube(np.arange(12.0).reshape(3, 4))
    np.testing.assert_array_equal(add_noise(X, math.inf, 1).data, X.data)


def test_noise_snr_recovered():
    lib = synth_endmembers(4, 100, 0)
    X = mix_linear(lib, sample_abundances(10_000, 4, 0))
    Y = add_noise(X, 25.0, 9)
    noise = Y.data - X.data
    snr = 10 * math.log10(np.mean(X.data ** 2) / np.mean(noise ** 2))
    assert abs(snr - 25.0) <= 0.2
    assert abs(noise.mean()) < 1e-3


def test_noise_deterministic_and_zero_cube():
    X = HsiCube(np.ones((3, 5)))
    np.testing.assert_array_equal(add_noise(X, 10, 4).data, add_noise(X, 10, 4).data)
    with pytest.raises(ContractError):
        add_noise(HsiCube(np.zeros((3, 5))), 10, 4)


def test_regenerate_from_provenance_bit_exact():
    sc = generate_scene("bilinear", 3, 20, 60, 30.0, 5)
    again = regenerate(sc.cube.provenance)
    assert again.cube.data.tobytes() == sc.cube.data.tobytes()
    assert again.abundances.values.tobytes() == sc.abundances.values.tobytes()


def test_library_validation():
    with pytest.raises(ContractError):
        SpectralLibrary([500.0, 400.0], np.ones((2, 2)), ["a", "b"])
