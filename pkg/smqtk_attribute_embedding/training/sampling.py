"""
Triplet sampling: two images sharing the value of an attribute and one with
a different value.
"""
import logging
from collections import defaultdict
from typing import Dict, Iterator, List, NamedTuple, Sequence, Union

import numpy as np

from smqtk_attribute_embedding.data.manifest import TRAIN, DatasetManifest
from smqtk_attribute_embedding.exceptions import DataError

LOG = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int]]


class Triplet (NamedTuple):
    anchor_id: int
    positive_id: int
    negative_id: int
    attribute_id: int


def _rng(seed: SeedLike, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(s) for s in np.atleast_1d(seed)] + list(extra))


def value_groups(manifest: DatasetManifest, attribute_id: int,
                 split: str = TRAIN) -> Dict[int, List[int]]:
    """
    Image ids of ``split`` labeled for ``attribute_id``, by value, sorted.
    """
    groups: Dict[int, List[int]] = defaultdict(list)
    for r in manifest.select(split, attribute_id=attribute_id):
        groups[r.labels[attribute_id]].append(r.image_id)
    return {v: sorted(ids) for v, ids in sorted(groups.items())}


def sample_triplets(manifest: DatasetManifest, attribute_id: int, count: int,
                    seed: SeedLike, split: str = TRAIN) -> List[Triplet]:
    """
    Draw ``count`` triplets for one attribute: a value with at least two
    images is picked uniformly, anchor and positive are two distinct images
    of it, the negative is an image of another value.

    :raises DataError: The attribute lacks a value with two images or a
        second value.
    """
    groups = value_groups(manifest, attribute_id, split)
    pos_values = [v for v, ids in groups.items() if len(ids) >= 2]
    if not pos_values or len(groups) < 2:
        raise DataError(
            f"Attribute {attribute_id} needs a value with 2+ images and 2+ "
            f"distinct values in split '{split}' to form triplets"
        )
    values = list(groups)
    rng = _rng(seed, attribute_id)
    triplets = []
    for _ in range(count):
        v = pos_values[rng.integers(len(pos_values))]
        anchor, positive = rng.choice(groups[v], size=2, replace=False)
        others = [u for u in values if u != v]
        u = others[rng.integers(len(others))]
        negative = groups[u][rng.integers(len(groups[u]))]
        triplets.append(Triplet(int(anchor), int(positive), int(negative), attribute_id))
    return triplets


def sample_epoch(manifest: DatasetManifest, count: int, seed: SeedLike,
                 split: str = TRAIN) -> List[Triplet]:
    """
    ``count`` triplets spread evenly over every attribute, shuffled together.
    """
    n = manifest.num_attributes
    pool: List[Triplet] = []
    for attr in range(n):
        share = count // n + (1 if attr < count % n else 0)
        pool.extend(sample_triplets(manifest, attr, share, seed, split))
    order = _rng(seed, n).permutation(len(pool))
    return [pool[i] for i in order]


def batches(triplets: Sequence[Triplet], batch_size: int) -> Iterator[List[Triplet]]:
    for start in range(0, len(triplets), batch_size):
        yield list(triplets[start:start + batch_size])
