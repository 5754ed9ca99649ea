from typing import Union

import numpy as np
from scipy import ndimage

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError


def bilinear_resize(values: Union[Tensor, np.ndarray], out_h: int, out_w: int) -> np.ndarray:
    """
    Align-corners bilinear resampling of a ``[h, w]`` or ``[c, h, w]`` map.

    Output pixel ``i`` samples input coordinate ``i * (h - 1) / (out_h - 1)``
    so the four corners are preserved exactly. Not differentiated.

    :param values: Map to resample.
    :param out_h: Output height.
    :param out_w: Output width.

    :raises ContractError: Non-positive extents or unsupported rank.

    >>> bilinear_resize(np.array([[0., 1.], [2., 3.]]), 3, 3).tolist()
    [[0.0, 0.5, 1.0], [1.0, 1.5, 2.0], [2.0, 2.5, 3.0]]
    """
    arr = values.data if isinstance(values, Tensor) else np.asarray(values, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ContractError(f"bilinear_resize expects a 2-D or 3-D map, got {arr.shape}")
    if out_h < 1 or out_w < 1 or min(arr.shape) < 1:
        raise ContractError(
            f"bilinear_resize: invalid sizes {arr.shape} -> ({out_h}, {out_w})"
        )
    h, w = arr.shape[-2:]
    if (h, w) == (out_h, out_w):
        return arr.astype(np.float64, copy=True)
    out_shape = arr.shape[:-2] + (out_h, out_w)
    factors = tuple(o / i for o, i in zip(out_shape, arr.shape))
    out = np.empty(out_shape, dtype=np.float64)
    ndimage.zoom(arr, factors, output=out, order=1, mode='nearest',
                 grid_mode=False, prefilter=False)
    return out
