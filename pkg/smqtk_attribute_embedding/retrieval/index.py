"""
Per-attribute store of global and local vectors for a gallery of images.
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from smqtk_image_io.interfaces.image_reader import ImageReader

from smqtk_attribute_embedding._defaults import DFLT_EMBEDDING_FACTORY
from smqtk_attribute_embedding.data.images import read_image_matrix
from smqtk_attribute_embedding.data.manifest import CANDIDATE, NO_ROLE, QUERY, DatasetManifest
from smqtk_attribute_embedding.embedding_element_factory import EmbeddingElementFactory
from smqtk_attribute_embedding.exceptions import DataError, FormatError, ShapeError
from smqtk_attribute_embedding.interfaces.attribute_embedder import AttributeEmbedder
from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement
from smqtk_attribute_embedding.utils.binary_io import (
    decode_container,
    encode_container,
    load_bytes,
    save_bytes,
)

LOG = logging.getLogger(__name__)

MAGIC = b'ATTRINDX'
VERSION = 1


class EmbeddingIndex (object):
    """
    Embedding elements keyed by ``(attribute_id, image_id)``, with the
    attribute value of every entry and the query / candidate role of every
    image.

    :param vector_dim: Length ``c_o`` of every stored vector.
    :param split: Split tag the entries were drawn from, informational.
    :param factory: Produces the element holding each entry.
    """

    def __init__(self, vector_dim: int, split: Optional[str] = None,
                 factory: EmbeddingElementFactory = DFLT_EMBEDDING_FACTORY) -> None:
        self.vector_dim = vector_dim
        self.split = split
        self._factory = factory
        self._elements: Dict[int, Dict[int, EmbeddingElement]] = defaultdict(dict)
        self._values: Dict[int, Dict[int, int]] = defaultdict(dict)
        self._roles: Dict[int, str] = {}

    def __len__(self) -> int:
        return sum(len(e) for e in self._elements.values())

    def add(self, attribute_id: int, image_id: int, value: int,
            f_g: np.ndarray, f_l: np.ndarray, role: str = NO_ROLE) -> EmbeddingElement:
        """
        :raises DataError: The image is already indexed for the attribute.
        :raises ShapeError: A vector is not of length ``vector_dim``.
        :raises ValueError: A vector is not finite.
        """
        if image_id in self._elements[attribute_id]:
            raise DataError(f"Image {image_id} already indexed for attribute {attribute_id}")
        for name, f in (('global', f_g), ('local', f_l)):
            if np.shape(f) != (self.vector_dim,):
                raise ShapeError(f"Image {image_id}: {name} vector of shape {np.shape(f)}, "
                                 f"expected ({self.vector_dim},)")
        elem = self._factory.new_embedding((attribute_id, image_id)).set_embedding(f_g, f_l)
        self._elements[attribute_id][image_id] = elem
        self._values[attribute_id][image_id] = value
        self._roles[image_id] = role
        return elem

    @property
    def attributes(self) -> List[int]:
        return sorted(a for a, e in self._elements.items() if e)

    def images(self, attribute_id: int) -> List[int]:
        return sorted(self._elements.get(attribute_id, {}))

    def contains(self, attribute_id: int, image_id: int) -> bool:
        return image_id in self._elements.get(attribute_id, {})

    def get(self, attribute_id: int, image_id: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        :raises DataError: No entry for the pair.
        """
        try:
            return self._elements[attribute_id][image_id].get_embedding()
        except KeyError:
            raise DataError(f"Image {image_id} is not indexed for attribute {attribute_id}")

    def value(self, attribute_id: int, image_id: int) -> int:
        try:
            return self._values[attribute_id][image_id]
        except KeyError:
            raise DataError(f"Image {image_id} is not indexed for attribute {attribute_id}")

    def role(self, image_id: int) -> str:
        return self._roles.get(image_id, NO_ROLE)

    def queries(self, attribute_id: int) -> List[int]:
        return [i for i in self.images(attribute_id) if self._roles[i] == QUERY]

    def candidates(self, attribute_id: int) -> List[int]:
        """
        Candidate-role images of the attribute, or every indexed image when
        no roles were assigned.
        """
        ids = self.images(attribute_id)
        if all(self._roles[i] == NO_ROLE for i in ids):
            return ids
        return [i for i in ids if self._roles[i] == CANDIDATE]

    def matrices(self, attribute_id: int, image_ids: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Stacked ``[len(image_ids), c_o]`` global and local vectors.
        """
        pairs = [self.get(attribute_id, i) for i in image_ids]
        if not pairs:
            empty = np.zeros((0, self.vector_dim))
            return empty, empty.copy()
        return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])

    def to_bytes(self) -> bytes:
        records = []
        arrays = {}
        for attr in self.attributes:
            ids = self.images(attr)
            records.extend([attr, i, self._values[attr][i], self._roles[i]] for i in ids)
            g, loc = self.matrices(attr, ids)
            arrays[f'g/{attr}'] = g
            arrays[f'l/{attr}'] = loc
        header = {
            'c_o': self.vector_dim,
            'split': self.split,
            'attributes': self.attributes,
            'records': records,
        }
        return encode_container(MAGIC, VERSION, header, arrays)

    @classmethod
    def from_bytes(cls, data: bytes,
                   factory: EmbeddingElementFactory = DFLT_EMBEDDING_FACTORY) -> "EmbeddingIndex":
        """
        :raises FormatError: Malformed or inconsistent content.
        :raises CompatibilityError: Other magic or version.
        """
        header, arrays = decode_container(data, MAGIC, VERSION)
        try:
            index = cls(int(header['c_o']), header.get('split'), factory)
            rows: Dict[int, int] = defaultdict(int)
            for attr, image_id, value, role in header['records']:
                k = rows[attr]
                rows[attr] += 1
                index.add(int(attr), int(image_id), int(value),
                          arrays[f'g/{attr}'][k], arrays[f'l/{attr}'][k], role)
        except (KeyError, IndexError, TypeError, ValueError, DataError) as ex:
            raise FormatError(f"Inconsistent index content: {ex}") from ex
        return index

    def save(self, path: str) -> None:
        save_bytes(path, self.to_bytes())
        LOG.info(f"Wrote index of {len(self)} entries to {path}")

    @classmethod
    def load(cls, path: str,
             factory: EmbeddingElementFactory = DFLT_EMBEDDING_FACTORY) -> "EmbeddingIndex":
        return cls.from_bytes(load_bytes(path), factory)


def read_pixels(path: str, reader: Optional[ImageReader] = None) -> np.ndarray:
    """
    :param reader: Decoder of the file, a PNM reader by default.

    :raises DataError: Missing or undecodable file, naming the path.
    """
    try:
        return read_image_matrix(path, reader)
    except FormatError as ex:
        raise DataError(f"Unreadable image {path}: {ex}") from ex


def build_index(manifest: DatasetManifest, embedder: AttributeEmbedder,
                attributes: Optional[Iterable[int]] = None, split: Optional[str] = None,
                factory: EmbeddingElementFactory = DFLT_EMBEDDING_FACTORY,
                image_reader: Optional[ImageReader] = None) -> EmbeddingIndex:
    """
    Embed every image of ``split`` labeled for each requested attribute.

    :param manifest: Dataset to index.
    :param embedder: Maps pixels and an attribute id to ``(f_g, f_l)``.
    :param attributes: Attribute ids, all of them by default.
    :param split: Split tag, every split by default.
    :param factory: Element backend of the index.
    :param image_reader: Decoder of the image files, a PNM reader by default.

    :raises DataError: An image cannot be read.
    """
    attrs = list(range(manifest.num_attributes)) if attributes is None else list(attributes)
    pixels: Dict[int, np.ndarray] = {}
    index: Optional[EmbeddingIndex] = None
    for attr in attrs:
        records = sorted(manifest.select(split, attribute_id=attr), key=lambda r: r.image_id)
        for r in records:
            if r.image_id not in pixels:
                pixels[r.image_id] = read_pixels(manifest.image_path(r.image_id), image_reader)
        pairs = list(embedder([pixels[r.image_id] for r in records], attr))
        for r, (f_g, f_l) in zip(records, pairs):
            if index is None:
                index = EmbeddingIndex(len(f_g), split, factory)
            index.add(attr, r.image_id, r.labels[attr], f_g, f_l, r.role)
        LOG.info(f"Indexed {len(records)} image(s) for attribute {attr}")
    if index is None:
        raise DataError(f"No labeled images in split {split!r} for attributes {attrs}")
    return index
