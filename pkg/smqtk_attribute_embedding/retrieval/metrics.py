"""
Ranking quality measures over boolean relevance lists.
"""
from typing import NamedTuple, Sequence

import numpy as np

from smqtk_attribute_embedding.exceptions import ContractError

RECALL_HIT = 'hit'
RECALL_FRACTION = 'fraction'


class QueryRelevance (NamedTuple):
    """
    Relevance of a ranked candidate list, in rank order, and the number of
    relevant candidates in the whole pool.
    """
    relevance: Sequence[bool]
    total_relevant: int


def average_precision(relevance: Sequence[bool], total_relevant: int) -> float:
    """
    Mean of precision@k over the ranks k holding a relevant item, divided by
    ``total_relevant`` rather than by the hits in the list.

    >>> average_precision([True, False, True], 2)  # doctest: +ELLIPSIS
    0.8333...

    :raises ContractError: ``total_relevant`` is below one or below the
        number of relevant entries.
    """
    rel = np.asarray(relevance, dtype=bool)
    hits = int(rel.sum())
    if total_relevant < 1 or total_relevant < hits:
        raise ContractError(
            f"total_relevant={total_relevant} invalid for a list holding {hits} relevant item(s)"
        )
    if hits == 0:
        return 0.0
    ranks = np.flatnonzero(rel) + 1
    precision = np.arange(1, hits + 1) / ranks
    return float(precision.sum() / total_relevant)


def _require_queries(queries: Sequence[QueryRelevance]) -> None:
    if not queries:
        raise ContractError("No valid queries to average over")


def mean_average_precision(queries: Sequence[QueryRelevance]) -> float:
    """
    :raises ContractError: No queries.
    """
    _require_queries(queries)
    return float(np.mean([average_precision(q.relevance, q.total_relevant) for q in queries]))


def recall_at_k(queries: Sequence[QueryRelevance], k: int, mode: str = RECALL_HIT) -> float:
    """
    Recall@K averaged over queries.

    With ``mode='hit'`` a query scores one when its top ``k`` holds at least
    one relevant item. With ``mode='fraction'`` it scores the share of its
    relevant items found in the top ``k``.

    :raises ContractError: No queries, ``k < 1`` or an unknown mode.
    """
    _require_queries(queries)
    if k < 1:
        raise ContractError(f"Recall cutoff must be positive, got {k}")
    scores = []
    for q in queries:
        found = int(np.count_nonzero(np.asarray(q.relevance, dtype=bool)[:k]))
        if mode == RECALL_HIT:
            scores.append(1.0 if found else 0.0)
        elif mode == RECALL_FRACTION:
            if q.total_relevant < 1:
                raise ContractError("Query without relevant items")
            scores.append(found / q.total_relevant)
        else:
            raise ContractError(f"Unknown recall mode {mode!r}")
    return float(np.mean(scores))
