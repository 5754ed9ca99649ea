"""
Fine-grained similarity between indexed images, ranking and reranking.
"""
import logging
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from smqtk_core import Configurable

from smqtk_attribute_embedding.exceptions import ConfigError, ContractError, DataError
from smqtk_attribute_embedding.retrieval.index import EmbeddingIndex
from smqtk_attribute_embedding.utils.binary_io import load_bytes, save_bytes

LOG = logging.getLogger(__name__)

NORM_FLOOR = 1e-12

VectorPair = Tuple[np.ndarray, np.ndarray]


class FusionConfig (Configurable):
    """
    Weighting of the global against the local cosine similarity.

    :param global_weight: Weight of the global branch score; the local score
        gets ``1 - global_weight``.
    """

    def __init__(self, global_weight: float = 0.6) -> None:
        if not 0.0 <= global_weight <= 1.0:
            raise ConfigError(f"global_weight must lie in [0, 1], got {global_weight}")
        self.global_weight = float(global_weight)

    def get_config(self) -> Dict[str, Any]:
        return {'global_weight': self.global_weight}


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = max(float(np.linalg.norm(u)), NORM_FLOOR)
    nv = max(float(np.linalg.norm(v)), NORM_FLOOR)
    return float(np.dot(u, v)) / (nu * nv)


def fused_similarity(a: VectorPair, b: VectorPair, config: FusionConfig) -> float:
    """
    Convex combination of the global and local cosine similarities of two
    ``(f_g, f_l)`` pairs.
    """
    lam = config.global_weight
    return lam * cosine(a[0], b[0]) + (1.0 - lam) * cosine(a[1], b[1])


def multi_attribute_similarity(image_a: int, image_b: int, attribute_ids: Iterable[int],
                               index: EmbeddingIndex, config: FusionConfig) -> float:
    """
    Sum of fused similarities over several attributes.

    :raises ContractError: Empty attribute list.
    :raises DataError: An image is not indexed for one of the attributes.
    """
    attrs = sorted(attribute_ids)
    if not attrs:
        raise ContractError("At least one attribute is required")
    return float(sum(fused_similarity(index.get(a, image_a), index.get(a, image_b), config)
                     for a in attrs))


class RankedList (NamedTuple):
    """
    Gallery images ordered best first, query excluded.
    """
    query_id: int
    image_ids: Tuple[int, ...]
    scores: Tuple[float, ...]


def rank(query_id: int, scored: Iterable[Tuple[int, float]], k: Optional[int] = None) -> RankedList:
    """
    Order by descending score, then ascending image id, and keep ``k``.
    """
    order = sorted(scored, key=lambda p: (-p[1], p[0]))[:k]
    return RankedList(query_id, tuple(i for i, _ in order), tuple(s for _, s in order))


def retrieve(query_id: int, attribute_id: int, index: EmbeddingIndex, k: int,
             config: FusionConfig, candidates: Optional[Sequence[int]] = None) -> RankedList:
    """
    Top ``k`` gallery images for the query under one attribute.

    :param candidates: Gallery ids, the candidate-role images of the
        attribute by default.

    :raises ContractError: ``k < 1``.
    :raises DataError: The query is not indexed for the attribute.
    """
    if k < 1:
        raise ContractError(f"k must be positive, got {k}")
    query = index.get(attribute_id, query_id)
    if candidates is None:
        candidates = index.candidates(attribute_id)
    scored = [(i, fused_similarity(query, index.get(attribute_id, i), config))
              for i in candidates if i != query_id]
    return rank(query_id, scored, k)


def rerank(initial: RankedList, attribute_ids: Iterable[int], index: EmbeddingIndex,
           config: FusionConfig, top_n: int = 10) -> RankedList:
    """
    Reorder the first ``top_n`` entries of a baseline ranking by
    multi-attribute fine-grained similarity to its query. Equal scores keep
    their baseline order and entries past ``top_n`` are left in place with
    their original scores.

    :raises ContractError: ``top_n < 1`` or no attributes.
    """
    if top_n < 1:
        raise ContractError(f"top_n must be positive, got {top_n}")
    attrs = list(attribute_ids)
    n = len(initial.image_ids)
    if top_n > n:
        LOG.debug(f"Clamping rerank depth {top_n} to list length {n}")
        top_n = n
    head = [(i, multi_attribute_similarity(initial.query_id, i, attrs, index, config))
            for i in initial.image_ids[:top_n]]
    head.sort(key=lambda p: -p[1])
    ids = tuple(i for i, _ in head) + tuple(initial.image_ids[top_n:])
    scores = tuple(s for _, s in head) + tuple(initial.scores[top_n:])
    return RankedList(initial.query_id, ids, scores)


def format_rank_file(ranked: RankedList) -> str:
    lines = [f"# query {ranked.query_id}"]
    lines.extend(f"{i}\t{s!r}" for i, s in zip(ranked.image_ids, ranked.scores))
    return '\n'.join(lines) + '\n'


def parse_rank_file(text: str) -> RankedList:
    """
    :raises DataError: Missing query header or malformed entry, with its
        line number.
    """
    query_id: Optional[int] = None
    entries: List[Tuple[int, float]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        try:
            if fields[0] == '#':
                if len(fields) == 3 and fields[1] == 'query':
                    query_id = int(fields[2])
                continue
            if len(fields) != 2:
                raise ValueError(f"expected 2 fields, found {len(fields)}")
            entries.append((int(fields[0]), float(fields[1])))
        except ValueError as ex:
            raise DataError(f"Rank file line {lineno}: {ex}") from ex
    if query_id is None:
        raise DataError("Rank file lacks a '# query <id>' header")
    return RankedList(query_id, tuple(i for i, _ in entries), tuple(s for _, s in entries))


def write_rank_file(ranked: RankedList, path: str) -> None:
    save_bytes(path, format_rank_file(ranked).encode('utf-8'))


def read_rank_file(path: str) -> RankedList:
    return parse_rank_file(load_bytes(path).decode('utf-8'))
