import struct
from pathlib import Path

import numpy as np
import pytest

from smqtk_attribute_embedding.exceptions import CompatibilityError, DataError, FormatError
from smqtk_attribute_embedding.utils.binary_io import (
    decode_container,
    encode_container,
    load_bytes,
    save_bytes,
)

MAGIC = b'TESTMAGC'


def _sample() -> bytes:
    arrays = {
        'weights': np.arange(6, dtype=np.float64).reshape(2, 3) / 7.0,
        'scalar': np.array(2.5),
    }
    return encode_container(MAGIC, 3, {'name': 'sample', 'n': [1, 2]}, arrays)


def test_decode_encoded() -> None:
    header, arrays = decode_container(_sample(), MAGIC, 3)
    assert header == {'name': 'sample', 'n': [1, 2]}
    assert list(arrays) == ['weights', 'scalar']
    np.testing.assert_array_equal(arrays['weights'],
                                  np.arange(6, dtype=np.float64).reshape(2, 3) / 7.0)
    assert arrays['scalar'].shape == ()
    assert float(arrays['scalar']) == 2.5


def test_layout_prefix() -> None:
    """ Magic, then little-endian version and header length. """
    data = _sample()
    assert data[:8] == MAGIC
    version, header_len = struct.unpack('<II', data[8:16])
    assert version == 3
    assert data[16:16 + header_len] == b'{"n": [1, 2], "name": "sample"}'


def test_magic_must_be_eight_bytes() -> None:
    with pytest.raises(ValueError):
        encode_container(b'SHORT', 1, {}, {})


def test_bad_magic() -> None:
    with pytest.raises(FormatError, match=r"Bad magic") as ex:
        decode_container(_sample(), b'OTHERMGC', 3)
    assert ex.value.offset == 0


def test_unsupported_version() -> None:
    with pytest.raises(CompatibilityError, match=r"version 3"):
        decode_container(_sample(), MAGIC, 4)


def test_truncated() -> None:
    data = _sample()
    with pytest.raises(FormatError, match=r"Truncated input while reading values of 'scalar'"):
        decode_container(data[:-1], MAGIC, 3)


def test_trailing_bytes() -> None:
    with pytest.raises(FormatError, match=r"Trailing bytes"):
        decode_container(_sample() + b'\x00', MAGIC, 3)


def test_malformed_header() -> None:
    data = bytearray(_sample())
    data[16] = ord('!')
    with pytest.raises(FormatError, match=r"Malformed header") as ex:
        decode_container(bytes(data), MAGIC, 3)
    assert ex.value.offset == 16


def test_file_round_trip(tmp_path: Path) -> None:
    path = str(tmp_path / 'blob.bin')
    save_bytes(path, b'abc\x00')
    assert load_bytes(path) == b'abc\x00'


def test_load_missing_file(tmp_path: Path) -> None:
    with pytest.raises(DataError, match=r"No such file"):
        load_bytes(str(tmp_path / 'missing.bin'))
