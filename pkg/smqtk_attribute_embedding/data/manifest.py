"""
Dataset manifests.

A manifest is a line-oriented text file next to the images::

    # comment
    attribute <id> <name> <value_count>
    image <id> <relative path> <split> <role> <attribute>:<value> ...

``split`` is one of ``train``, ``val``, ``test``. ``role`` is ``query`` or
``candidate`` for val/test records and ``-`` for training records. An image
may carry labels for only some attributes.
"""
import logging
import os
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from smqtk_attribute_embedding.exceptions import DataError
from smqtk_attribute_embedding.utils.binary_io import load_bytes, save_bytes

LOG = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.txt'

TRAIN = 'train'
VAL = 'val'
TEST = 'test'
SPLITS = (TRAIN, VAL, TEST)

QUERY = 'query'
CANDIDATE = 'candidate'
NO_ROLE = '-'


class AttributeSchema (NamedTuple):
    attribute_id: int
    name: str
    value_count: int


class ImageRecord (NamedTuple):
    image_id: int
    path: str
    split: str
    role: str
    labels: Dict[int, int]


class DatasetManifest (object):
    """
    Attribute schema plus image records of one dataset.

    :param attributes: Attribute declarations, ids ``0 .. n - 1``.
    :param records: Image records.
    :param root: Directory that record paths are relative to.

    :raises DataError: Duplicate ids, unknown split or role tags, or labels
        outside the declared schema.
    """

    def __init__(self, attributes: Sequence[AttributeSchema],
                 records: Iterable[ImageRecord], root: str = '.') -> None:
        self.attributes = list(attributes)
        self.records = list(records)
        self.root = root
        self._by_id = {r.image_id: r for r in self.records}
        self.validate()

    def validate(self) -> None:
        ids = [a.attribute_id for a in self.attributes]
        if ids != list(range(len(ids))):
            raise DataError(f"Attribute ids must be 0..n-1 in order, got {ids}")
        for a in self.attributes:
            if a.value_count < 1:
                raise DataError(f"Attribute {a.attribute_id} declares no values")
        if len(self._by_id) != len(self.records):
            raise DataError("Duplicate image ids in manifest")
        for r in self.records:
            if r.split not in SPLITS:
                raise DataError(f"Image {r.image_id}: unknown split {r.split!r}")
            roles = (NO_ROLE,) if r.split == TRAIN else (QUERY, CANDIDATE)
            if r.role not in roles:
                raise DataError(f"Image {r.image_id}: role {r.role!r} invalid for split {r.split}")
            for attr, value in r.labels.items():
                if not 0 <= attr < len(self.attributes):
                    raise DataError(f"Image {r.image_id}: unknown attribute {attr}")
                if not 0 <= value < self.attributes[attr].value_count:
                    raise DataError(
                        f"Image {r.image_id}: value {value} outside the "
                        f"{self.attributes[attr].value_count} values of attribute {attr}"
                    )

    @property
    def num_attributes(self) -> int:
        return len(self.attributes)

    def record(self, image_id: int) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise DataError(f"No image with id {image_id}")

    def image_path(self, image_id: int) -> str:
        return os.path.join(self.root, self.record(image_id).path)

    def select(self, split: Optional[str] = None, role: Optional[str] = None,
               attribute_id: Optional[int] = None) -> List[ImageRecord]:
        """
        Records in ``split`` with ``role`` that are labeled for
        ``attribute_id``; ``None`` matches anything.
        """
        return [r for r in self.records
                if (split is None or r.split == split)
                and (role is None or r.role == role)
                and (attribute_id is None or attribute_id in r.labels)]

    def to_text(self) -> str:
        lines = [f"attribute {a.attribute_id} {a.name} {a.value_count}"
                 for a in self.attributes]
        for r in self.records:
            labels = ' '.join(f"{k}:{r.labels[k]}" for k in sorted(r.labels))
            lines.append(f"image {r.image_id} {r.path} {r.split} {r.role} {labels}".rstrip())
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str, root: str = '.') -> "DatasetManifest":
        """
        :raises DataError: Malformed line, reported with its line number.
        """
        attributes = []
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            fields = line.split()
            if not fields or fields[0].startswith('#'):
                continue
            try:
                if fields[0] == 'attribute' and len(fields) == 4:
                    attributes.append(AttributeSchema(int(fields[1]), fields[2], int(fields[3])))
                elif fields[0] == 'image' and len(fields) >= 5:
                    labels = {}
                    for pair in fields[5:]:
                        attr, value = pair.split(':')
                        labels[int(attr)] = int(value)
                    records.append(ImageRecord(int(fields[1]), fields[2], fields[3],
                                               fields[4], labels))
                else:
                    raise ValueError(f"unrecognized record {fields[0]!r}")
            except ValueError as ex:
                raise DataError(f"Manifest line {lineno}: {ex}") from ex
        return cls(attributes, records, root)

    def write(self, path: str) -> None:
        save_bytes(path, self.to_text().encode('utf-8'))

    @classmethod
    def read(cls, path: str) -> "DatasetManifest":
        return cls.from_text(load_bytes(path).decode('utf-8'),
                             os.path.dirname(os.path.abspath(path)))


def load_dataset(directory: str) -> DatasetManifest:
    """
    Read ``manifest.txt`` of a dataset directory.
    """
    manifest = DatasetManifest.read(os.path.join(directory, MANIFEST_NAME))
    LOG.info(f"Loaded {len(manifest.records)} records over "
             f"{manifest.num_attributes} attribute(s) from {directory}")
    return manifest


def assign_splits(image_ids: Sequence[int], rng: np.random.Generator) -> Dict[int, Tuple[str, str]]:
    """
    Shuffle a group of images and tag them train / val / test in the ratio
    8:1:1, with query:candidate 1:4 inside val and test.
    """
    order = [image_ids[i] for i in rng.permutation(len(image_ids))]
    n = len(order)
    n_train = int(round(0.8 * n))
    n_val = int(round(0.1 * n))
    tags = {i: (TRAIN, NO_ROLE) for i in order[:n_train]}
    for split, group in ((VAL, order[n_train:n_train + n_val]),
                         (TEST, order[n_train + n_val:])):
        n_query = len(group) // 5 if len(group) >= 5 else min(1, len(group) - 1)
        for k, image_id in enumerate(group):
            tags[image_id] = (split, QUERY if k < n_query else CANDIDATE)
    return tags
