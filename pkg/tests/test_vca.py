import numpy as np
import pytest

from smxunmix.datagen import AbundanceMap, HsiCube, mix_linear, sample_abundances, synth_endmembers
from smxunmix.errors import ContractError, DegenerateDataError
from smxunmix.metrics import align
from smxunmix.vca import vca_extract
from smxunmix.metrics import sad


def pure_pixel_cube(R=4, B=50, N=400, seed=0):
    lib = synth_endmembers(R, B, seed)
    A = sample_abundances(N, R, seed).values
    pure = np.random.default_rng(seed).choice(N, R, replace=False)
    A[:, pure] = np.eye(R)
    return lib, mix_linear(lib, AbundanceMap(A)), set(pure.tolist())


@pytest.mark.parametrize("seed", range(5))
def test_recovers_pure_pixels(seed):
    lib, X, pure = pure_pixel_cube(seed=seed)
    res = vca_extract(X, 4, seed)
    assert set(res.selected_pixel_indices) == pure
    perm = align(res.endmembers, lib.spectra)
    for i in range(4):
        assert sad(lib.spectra[:, i], res.endmembers[:, perm[i]]) < 1e-6
        np.testing.assert_array_equal(res.endmembers[:, perm[i]], lib.spectra[:, i])


def test_endmembers_are_observed_pixels():
    lib, X, _ = pure_pixel_cube(seed=3)
    res = vca_extract(X, 4, 1)
    assert len(set(res.selected_pixel_indices)) == 4
    for k, idx in enumerate(res.selected_pixel_indices):
        np.testing.assert_array_equal(res.endmembers[:, k], X.data[:, idx])
    assert res.projection_dim == 4


def test_deterministic():
    _, X, _ = pure_pixel_cube(seed=2)
    assert vca_extract(X, 4, 9).selected_pixel_indices == vca_extract(X, 4, 9).selected_pixel_indices


def test_identical_pixels_are_degenerate():
    X = HsiCube(np.tile(np.linspace(0.1, 0.9, 20)[:, None], (1, 30)))
    with pytest.raises(DegenerateDataError):
        vca_extract(X, 3, 0)


def test_preconditions():
    with pytest.raises(ContractError):
        vca_extract(HsiCube(np.ones((5, 2))), 3, 0)
    with pytest.raises(ContractError):
        vca_extract(HsiCube(np.ones((5, 10))), 1, 0)
