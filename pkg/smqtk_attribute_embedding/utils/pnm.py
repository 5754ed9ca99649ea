"""
Binary portable pixmap / graymap (P6 / P5) codec, 8-bit samples only.
"""
from typing import List, Tuple

import numpy as np

from smqtk_attribute_embedding.exceptions import FormatError

PIXMAP_MAGIC = b'P6'
GRAYMAP_MAGIC = b'P5'

_WHITESPACE = b' \t\n\r\x0b\x0c'


def _header_tokens(data: bytes, count: int, base: int = 2) -> Tuple[List[Tuple[bytes, int]], int]:
    """
    Read ``count`` whitespace separated header tokens (skipping ``#``
    comments). Returns ``(token, offset)`` pairs and the raster offset, which
    follows exactly one whitespace byte after the last token.
    """
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and (data[i] in _WHITESPACE or data[i] == ord('#')):
            if data[i] == ord('#'):
                while i < n and data[i] not in b'\r\n':
                    i += 1
            else:
                i += 1
        if i >= n:
            raise FormatError("Truncated header", base + i)
        start = i
        while i < n and data[i] not in _WHITESPACE and data[i] != ord('#'):
            i += 1
        tokens.append((data[start:i], start))
    if i >= n or data[i] not in _WHITESPACE:
        raise FormatError("Missing whitespace before raster data", base + i)
    return tokens, i + 1


def decode_pnm(data: bytes) -> np.ndarray:
    """
    Decode P6 into a ``[h, w, 3]`` or P5 into a ``[h, w]`` uint8 array.

    :raises FormatError: Unknown magic, malformed or non-8-bit header, or a
        raster shorter than the header declares. The message carries the
        byte offset of the problem.
    """
    magic = data[:2]
    if magic not in (PIXMAP_MAGIC, GRAYMAP_MAGIC):
        raise FormatError(f"Unsupported magic number {magic!r}", 0)
    tokens, raster = _header_tokens(data[2:], 3)
    values = []
    for label, (tok, off) in zip(('width', 'height', 'maxval'), tokens):
        if not tok.isdigit():
            raise FormatError(f"Malformed {label} {tok!r}", off + 2)
        values.append((int(tok), off + 2))
    (width, w_off), (height, h_off), (maxval, m_off) = values
    if width < 1:
        raise FormatError("Width must be positive", w_off)
    if height < 1:
        raise FormatError("Height must be positive", h_off)
    if maxval != 255:
        raise FormatError(f"Only 8-bit samples (maxval 255) are supported, got {maxval}",
                          m_off)
    channels = 3 if magic == PIXMAP_MAGIC else 1
    start = raster + 2
    expected = width * height * channels
    if len(data) - start < expected:
        raise FormatError(
            f"Raster holds {len(data) - start} bytes, header declares {expected}",
            len(data)
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=start)
    if channels == 3:
        return pixels.reshape(height, width, 3).copy()
    return pixels.reshape(height, width).copy()


def encode_pnm(pixels: np.ndarray) -> bytes:
    """
    Encode a ``[h, w, 3]`` (P6) or ``[h, w]`` (P5) uint8 array.
    """
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise ValueError(f"Expected uint8 samples, got {pixels.dtype}")
    if pixels.ndim == 3 and pixels.shape[2] == 3:
        magic = PIXMAP_MAGIC
    elif pixels.ndim == 2:
        magic = GRAYMAP_MAGIC
    else:
        raise ValueError(f"Cannot encode array of shape {pixels.shape}")
    h, w = pixels.shape[:2]
    header = magic + f"\n{w} {h}\n255\n".encode('ascii')
    return header + np.ascontiguousarray(pixels).tobytes()
