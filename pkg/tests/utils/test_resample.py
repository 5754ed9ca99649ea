import numpy as np
import pytest

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError
from smqtk_attribute_embedding.utils.resample import bilinear_resize


def test_constant_map() -> None:
    out = bilinear_resize(np.full((3, 5), 0.25), 7, 2)
    assert out.shape == (7, 2)
    np.testing.assert_allclose(out, 0.25, atol=1e-15)


def test_same_size_is_identity() -> None:
    arr = np.random.default_rng(0).uniform(size=(2, 4, 4))
    out = bilinear_resize(arr, 4, 4)
    np.testing.assert_array_equal(out, arr)
    assert out is not arr


def test_corners_preserved() -> None:
    """ Align-corners sampling keeps the four corner values. """
    arr = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = bilinear_resize(arr, 4, 4)
    np.testing.assert_allclose([out[0, 0], out[0, -1], out[-1, 0], out[-1, -1]],
                               [1.0, 2.0, 3.0, 4.0], atol=1e-12)


def test_channels_resampled_independently() -> None:
    arr = np.stack([np.zeros((2, 2)), np.ones((2, 2))])
    out = bilinear_resize(Tensor(arr), 3, 5)
    assert out.shape == (2, 3, 5)
    np.testing.assert_allclose(out[0], 0.0, atol=1e-15)
    np.testing.assert_allclose(out[1], 1.0, atol=1e-15)


def test_invalid_sizes() -> None:
    with pytest.raises(ContractError):
        bilinear_resize(np.ones((2, 2)), 0, 3)
    with pytest.raises(ContractError):
        bilinear_resize(np.ones(4), 2, 2)
