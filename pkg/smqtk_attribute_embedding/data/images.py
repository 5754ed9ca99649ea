"""
Image and attention-map file I/O on top of the P6/P5 codec.
"""
import os
from typing import Optional, Union

import numpy as np
from smqtk_dataprovider.impls.data_element.file import DataFileElement
from smqtk_image_io.interfaces.image_reader import ImageReader

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError, DataError
from smqtk_attribute_embedding.impls.image_reader.pnm import PnmImageReader
from smqtk_attribute_embedding.utils.binary_io import save_bytes
from smqtk_attribute_embedding.utils.pnm import encode_pnm
from smqtk_attribute_embedding.utils.resample import bilinear_resize

ArrayLike = Union[Tensor, np.ndarray]


def _values(x: ArrayLike) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def quantize(values: np.ndarray) -> np.ndarray:
    """
    Map ``[0, 1]`` values onto the 256-level lattice.
    """
    return np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def pixels_to_tensor(pixels: np.ndarray, side: Optional[int] = None) -> Tensor:
    """
    Convert ``[h, w, 3]`` (or ``[h, w]`` gray) 8-bit pixels to a ``[3, s, s]``
    tensor in ``[0, 1]``.

    When the pixels are not already ``side x side`` the short edge is scaled
    to ``side`` and the centre ``side x side`` window is kept. Without
    ``side`` the image must be square and is kept as stored.
    """
    if pixels.ndim == 2:
        pixels = np.repeat(pixels[:, :, None], 3, axis=2)
    arr = pixels.transpose(2, 0, 1).astype(np.float64) / 255.0
    _, h, w = arr.shape
    if side is None:
        if h != w:
            raise ContractError(f"Image of {w}x{h} pixels is not square")
        return Tensor(arr)
    if (h, w) != (side, side):
        short = min(h, w)
        if short != side:
            new_h = max(side, int(round(h * side / short)))
            new_w = max(side, int(round(w * side / short)))
            arr = bilinear_resize(arr, new_h, new_w)
            h, w = new_h, new_w
        top = (h - side) // 2
        left = (w - side) // 2
        arr = arr[:, top:top + side, left:left + side]
    return Tensor(arr)


def read_image_matrix(path: str, reader: Optional[ImageReader] = None) -> np.ndarray:
    """
    Load an image file as a pixel matrix through an ``ImageReader``.

    :param path: Image file.
    :param reader: Decoder of the file, a :class:`PnmImageReader` by default.

    :raises DataError: Missing file, or content the reader does not accept.
    :raises FormatError: Malformed file, with the byte offset.
    """
    if not os.path.isfile(path):
        raise DataError(f"No such file: {path}")
    reader = PnmImageReader() if reader is None else reader
    element = DataFileElement(path, readonly=True)
    if not reader.is_valid_element(element):
        raise DataError(f"{path} is not readable by {reader.__class__.__name__}")
    return reader.load_as_matrix(element)


def load_image(path: str, side: Optional[int] = None,
               reader: Optional[ImageReader] = None) -> Tensor:
    """
    Read a P6 (or P5) file as a channels-first tensor in ``[0, 1]``.

    :param path: Image file.
    :param side: Configured input side; see :func:`pixels_to_tensor`.
    :param reader: See :func:`read_image_matrix`.

    :raises DataError: Missing file.
    :raises FormatError: Malformed file, with the byte offset.
    """
    return pixels_to_tensor(read_image_matrix(path, reader), side)


def tensor_to_pixels(image: ArrayLike) -> np.ndarray:
    arr = _values(image)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ContractError(f"Expected a [3, h, w] image, got {arr.shape}")
    return quantize(arr.transpose(1, 2, 0))


def save_image(image: ArrayLike, path: str) -> None:
    """
    Write a ``[3, h, w]`` image in ``[0, 1]`` as 8-bit P6.
    """
    save_bytes(path, encode_pnm(tensor_to_pixels(image)))


def normalize_map(values: ArrayLike) -> np.ndarray:
    """
    Min-max scale a map to ``[0, 1]``; constant maps become all zero.
    """
    arr = _values(values)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros(arr.shape)
    return (arr - lo) / (hi - lo)


def save_gray_map(values: ArrayLike, path: str) -> None:
    """
    Write a 2-D map as 8-bit P5 after min-max normalization.
    """
    arr = _values(values)
    if arr.ndim != 2:
        raise ContractError(f"Expected a 2-D map, got {arr.shape}")
    save_bytes(path, encode_pnm(quantize(normalize_map(arr))))


def load_gray_map(path: str) -> np.ndarray:
    """
    Read a P5 map back as values in ``[0, 1]``.
    """
    pixels = read_image_matrix(path)
    if pixels.ndim != 2:
        raise ContractError(f"{path} is not a graymap")
    return pixels.astype(np.float64) / 255.0
