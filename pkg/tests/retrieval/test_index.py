from pathlib import Path
from typing import List, Tuple
from unittest import mock

import numpy as np
import pytest
from smqtk_image_io.interfaces.image_reader import ImageReader

from smqtk_attribute_embedding.data.manifest import (
    CANDIDATE, NO_ROLE, QUERY, TEST, DatasetManifest
)
from smqtk_attribute_embedding.exceptions import DataError, FormatError, ShapeError
from smqtk_attribute_embedding.impls.embedding_element.memory import MemoryEmbeddingElement
from smqtk_attribute_embedding.retrieval.index import (
    MAGIC,
    VERSION,
    EmbeddingIndex,
    build_index,
    read_pixels,
)
from smqtk_attribute_embedding.utils.binary_io import decode_container, encode_container


def _index() -> EmbeddingIndex:
    index = EmbeddingIndex(2, TEST)
    index.add(0, 5, 1, np.array([1.0, 0.0]), np.array([0.0, 1.0]), QUERY)
    index.add(0, 3, 0, np.array([0.5, 0.5]), np.array([0.5, -0.5]), CANDIDATE)
    index.add(0, 4, 1, np.array([0.0, 2.0]), np.array([2.0, 0.0]), CANDIDATE)
    index.add(2, 3, 2, np.array([3.0, 3.0]), np.array([-1.0, 1.0]), CANDIDATE)
    return index


def test_add_and_get() -> None:
    index = _index()
    assert len(index) == 4
    assert index.attributes == [0, 2]
    assert index.images(0) == [3, 4, 5]
    assert index.images(1) == []
    assert index.contains(2, 3)
    assert not index.contains(2, 5)
    f_g, f_l = index.get(0, 4)
    np.testing.assert_array_equal(f_g, [0.0, 2.0])
    np.testing.assert_array_equal(f_l, [2.0, 0.0])
    assert index.value(2, 3) == 2
    assert index.role(5) == QUERY
    assert index.role(99) == NO_ROLE


def test_elements_from_factory() -> None:
    elem = EmbeddingIndex(2).add(0, 1, 0, np.ones(2), np.zeros(2))
    assert isinstance(elem, MemoryEmbeddingElement)
    assert elem.uuid == (0, 1)


def test_add_errors() -> None:
    index = _index()
    with pytest.raises(DataError, match=r"already indexed"):
        index.add(0, 5, 1, np.zeros(2), np.zeros(2))
    with pytest.raises(ShapeError, match=r"local vector"):
        index.add(0, 6, 1, np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError, match=r"finite"):
        index.add(0, 7, 1, np.array([np.nan, 0.0]), np.zeros(2))


def test_missing_entries() -> None:
    index = _index()
    with pytest.raises(DataError, match=r"not indexed"):
        index.get(2, 5)
    with pytest.raises(DataError):
        index.value(1, 3)


def test_roles() -> None:
    index = _index()
    assert index.queries(0) == [5]
    assert index.candidates(0) == [3, 4]
    assert index.queries(2) == []


def test_candidates_without_roles() -> None:
    index = EmbeddingIndex(1)
    for i in (2, 1):
        index.add(0, i, 0, np.ones(1), np.ones(1))
    assert index.candidates(0) == [1, 2]
    assert index.queries(0) == []


def test_matrices() -> None:
    g, loc = _index().matrices(0, [4, 3])
    np.testing.assert_array_equal(g, [[0.0, 2.0], [0.5, 0.5]])
    np.testing.assert_array_equal(loc, [[2.0, 0.0], [0.5, -0.5]])
    g, loc = _index().matrices(0, [])
    assert g.shape == loc.shape == (0, 2)


def test_bytes_round_trip() -> None:
    index = _index()
    data = index.to_bytes()
    again = EmbeddingIndex.from_bytes(data)
    assert again.split == TEST
    assert again.vector_dim == 2
    assert again.attributes == index.attributes
    for attr in index.attributes:
        assert again.images(attr) == index.images(attr)
        for i in index.images(attr):
            assert again.value(attr, i) == index.value(attr, i)
            assert again.role(i) == index.role(i)
            for a, b in zip(again.get(attr, i), index.get(attr, i)):
                np.testing.assert_array_equal(a, b)
    assert again.to_bytes() == data


def test_inconsistent_bytes() -> None:
    header, arrays = decode_container(_index().to_bytes(), MAGIC, VERSION)
    del arrays['l/2']
    with pytest.raises(FormatError, match=r"Inconsistent"):
        EmbeddingIndex.from_bytes(encode_container(MAGIC, VERSION, header, arrays))
    header, arrays = decode_container(_index().to_bytes(), MAGIC, VERSION)
    header['records'].append(header['records'][0])
    with pytest.raises(FormatError):
        EmbeddingIndex.from_bytes(encode_container(MAGIC, VERSION, header, arrays))


def test_other_magic() -> None:
    with pytest.raises(FormatError, match=r"Bad magic"):
        EmbeddingIndex.from_bytes(encode_container(b'ATTRCKPT', VERSION, {}, {}))


def test_files(tmp_path: Path) -> None:
    path = str(tmp_path / 'test.idx')
    _index().save(path)
    assert len(EmbeddingIndex.load(path)) == 4
    with pytest.raises(DataError):
        EmbeddingIndex.load(str(tmp_path / 'missing.idx'))


def test_read_pixels(tmp_path: Path, tiny_dataset: DatasetManifest) -> None:
    pixels = read_pixels(tiny_dataset.image_path(0))
    assert pixels.shape == (16, 16, 3)
    assert pixels.dtype == np.uint8
    bad = tmp_path / 'bad.ppm'
    bad.write_bytes(b'not an image')
    with pytest.raises(DataError, match=r"bad.ppm"):
        read_pixels(str(bad))


def _fake_embed(images: List[np.ndarray], attribute_id: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    return [(np.array([attribute_id + 1.0, img.mean()]), np.array([1.0, 0.0])) for img in images]


def test_build_index(tiny_dataset: DatasetManifest) -> None:
    embedder = mock.MagicMock(side_effect=_fake_embed)
    index = build_index(tiny_dataset, embedder, split=TEST)
    assert embedder.call_count == 2
    for call, attr in zip(embedder.call_args_list, (0, 1)):
        images, attribute_id = call[0]
        assert attribute_id == attr
        assert len(images) == 4
        assert all(img.shape == (16, 16, 3) for img in images)
    assert index.split == TEST
    assert index.vector_dim == 2
    for attr in (0, 1):
        records = tiny_dataset.select(TEST, attribute_id=attr)
        assert index.images(attr) == sorted(r.image_id for r in records)
        for r in records:
            assert index.value(attr, r.image_id) == r.labels[attr]
            assert index.role(r.image_id) == r.role
            assert index.get(attr, r.image_id)[0][0] == attr + 1.0
        assert len(index.queries(attr)) == 2


def test_build_index_subset(tiny_dataset: DatasetManifest) -> None:
    embedder = mock.MagicMock(side_effect=_fake_embed)
    index = build_index(tiny_dataset, embedder, attributes=[1], split=TEST)
    embedder.assert_called_once()
    assert index.attributes == [1]


def test_build_index_nothing_to_embed(tiny_dataset: DatasetManifest) -> None:
    with pytest.raises(DataError, match=r"No labeled images"):
        build_index(tiny_dataset, mock.MagicMock(side_effect=_fake_embed), attributes=[])


def test_build_index_image_reader(tiny_dataset: DatasetManifest) -> None:
    """ Pixels come from the given reader, once per distinct image. """
    reader = mock.MagicMock(spec=ImageReader)
    reader.is_valid_element.return_value = True
    reader.load_as_matrix.return_value = np.full((2, 2, 3), 7, dtype=np.uint8)
    embedder = mock.MagicMock(side_effect=_fake_embed)
    index = build_index(tiny_dataset, embedder, split=TEST, image_reader=reader)
    distinct = {r.image_id for r in tiny_dataset.select(TEST)}
    assert reader.load_as_matrix.call_count == len(distinct)
    for call in embedder.call_args_list:
        assert all(img.shape == (2, 2, 3) for img in call[0][0])
    assert index.get(0, index.images(0)[0])[0][1] == 7.0
