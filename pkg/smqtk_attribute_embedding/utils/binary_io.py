"""
Little-endian container of named float64 arrays behind a magic string,
a format version and a JSON header. Shared by checkpoints and embedding
index files.

Layout::

    magic (8 bytes) | u32 version | u32 header length | header (UTF-8 JSON)
    | u32 array count | per array: u16 name length, name (UTF-8), u8 ndim,
      ndim x u32 extents, prod(extents) x f64
"""
import json
import os
import struct
from typing import Any, Dict, Mapping, Tuple

import numpy as np
from smqtk_dataprovider.impls.data_element.file import DataFileElement

from smqtk_attribute_embedding.exceptions import CompatibilityError, DataError, FormatError

MAGIC_SIZE = 8

NamedArrays = Dict[str, np.ndarray]


def encode_container(magic: bytes, version: int, header: Mapping[str, Any],
                     arrays: Mapping[str, np.ndarray]) -> bytes:
    """
    Serialize ``arrays`` in the given (insertion) order.
    """
    if len(magic) != MAGIC_SIZE:
        raise ValueError(f"Magic must be {MAGIC_SIZE} bytes, got {magic!r}")
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    parts = [magic, struct.pack('<II', version, len(header_bytes)), header_bytes,
             struct.pack('<I', len(arrays))]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype='<f8')
        name_bytes = name.encode('utf-8')
        parts.append(struct.pack('<H', len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack('<B', arr.ndim))
        parts.append(struct.pack(f'<{arr.ndim}I', *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b''.join(parts)


class _Reader (object):

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"Truncated input while reading {what}", self.offset)
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_container(data: bytes, magic: bytes, version: int) -> Tuple[Dict[str, Any], NamedArrays]:
    """
    Parse bytes produced by :func:`encode_container`.

    :raises FormatError: Wrong magic, malformed header, truncation or
        trailing bytes.
    :raises CompatibilityError: Unsupported format version.
    """
    reader = _Reader(data)
    found = reader.take(MAGIC_SIZE, 'magic')
    if found != magic:
        raise FormatError(f"Bad magic {found!r}, expected {magic!r}", 0)
    found_version, header_len = reader.unpack('<II', 'version')
    if found_version != version:
        raise CompatibilityError(
            f"Unsupported format version {found_version} (expected {version})"
        )
    header_offset = reader.offset
    try:
        header = json.loads(reader.take(header_len, 'header').decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as ex:
        raise FormatError(f"Malformed header: {ex}", header_offset) from ex
    count, = reader.unpack('<I', 'array count')
    arrays: NamedArrays = {}
    for _ in range(count):
        name_len, = reader.unpack('<H', 'array name length')
        name = reader.take(name_len, 'array name').decode('utf-8')
        ndim, = reader.unpack('<B', f"rank of '{name}'")
        shape = reader.unpack(f'<{ndim}I', f"shape of '{name}'")
        n = int(np.prod(shape)) if ndim else 1
        raw = reader.take(8 * n, f"values of '{name}'")
        arrays[name] = np.frombuffer(raw, dtype='<f8').astype(np.float64).reshape(shape)
    if reader.offset != len(data):
        raise FormatError("Trailing bytes after last array", reader.offset)
    return header, arrays


def save_bytes(path: str, data: bytes) -> None:
    DataFileElement(path, readonly=False).set_bytes(data)


def load_bytes(path: str) -> bytes:
    """
    :raises DataError: ``path`` is not a readable file.
    """
    if not os.path.isfile(path):
        raise DataError(f"No such file: {path}")
    return DataFileElement(path, readonly=True).get_bytes()
