import numpy as np
import pytest

from smqtk_attribute_embedding.exceptions import FormatError
from smqtk_attribute_embedding.utils.pnm import decode_pnm, encode_pnm


def test_pixmap_round_trip() -> None:
    pixels = np.random.default_rng(0).integers(0, 256, (5, 7, 3), dtype=np.uint8)
    data = encode_pnm(pixels)
    assert data.startswith(b'P6\n7 5\n255\n')
    np.testing.assert_array_equal(decode_pnm(data), pixels)


def test_graymap_round_trip() -> None:
    pixels = np.arange(12, dtype=np.uint8).reshape(3, 4)
    out = decode_pnm(encode_pnm(pixels))
    assert out.shape == (3, 4)
    np.testing.assert_array_equal(out, pixels)


def test_header_comments_and_whitespace() -> None:
    data = b'P5 # a comment\n 2\t1 # another\n255\n\x00\xff'
    assert decode_pnm(data).tolist() == [[0, 255]]


def test_raster_may_start_with_whitespace_byte() -> None:
    """ Exactly one whitespace byte separates header and raster. """
    data = b'P5\n2 1\n255\n\n\x20'
    assert decode_pnm(data).tolist() == [[10, 32]]


def test_bad_magic() -> None:
    with pytest.raises(FormatError, match=r"magic") as ex:
        decode_pnm(b'P3\n1 1\n255\n0 0 0')
    assert ex.value.offset == 0


def test_non_8bit_rejected() -> None:
    with pytest.raises(FormatError, match=r"maxval 255") as ex:
        decode_pnm(b'P5\n1 1\n65535\n\x00\x00')
    assert ex.value.offset == 7


def test_malformed_width() -> None:
    with pytest.raises(FormatError, match=r"width"):
        decode_pnm(b'P6\nx 1\n255\n\x00\x00\x00')


def test_truncated_raster() -> None:
    with pytest.raises(FormatError, match=r"header declares 12") as ex:
        decode_pnm(b'P6\n2 2\n255\n' + bytes(5))
    assert ex.value.offset == len(b'P6\n2 2\n255\n') + 5


def test_truncated_header() -> None:
    with pytest.raises(FormatError, match=r"Truncated header"):
        decode_pnm(b'P6\n2 2')


def test_encode_rejects_other_types() -> None:
    with pytest.raises(ValueError, match=r"uint8"):
        encode_pnm(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError, match=r"shape"):
        encode_pnm(np.zeros((2, 2, 4), dtype=np.uint8))
