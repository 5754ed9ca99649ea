"""
Attribute-specific retrieval evaluation of an embedding index.
"""
import logging
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from smqtk_attribute_embedding.exceptions import ContractError
from smqtk_attribute_embedding.retrieval.index import EmbeddingIndex
from smqtk_attribute_embedding.retrieval.metrics import (
    RECALL_HIT,
    QueryRelevance,
    mean_average_precision,
    recall_at_k,
)
from smqtk_attribute_embedding.retrieval.similarity import FusionConfig, cosine

LOG = logging.getLogger(__name__)


class AttributeScores (NamedTuple):
    fused_map: float
    global_map: float
    local_map: float
    recall: float
    queries: int
    skipped: int
    # Per-query relevance lists of the fused ranking.
    relevance: Sequence[QueryRelevance]


class EvaluationReport (NamedTuple):
    """
    MAP and Recall@K per attribute and overall. ``overall_map`` averages the
    per-attribute MAPs; ``pooled_map`` averages over every query of every
    attribute.
    """
    split: Optional[str]
    global_weight: float
    k: int
    recall_mode: str
    per_attribute: Dict[int, AttributeScores]
    overall_map: float
    pooled_map: float
    global_map: float
    local_map: float
    recall: float
    queries: int
    skipped: int
    baseline_map: Optional[float] = None

    def to_text(self, names: Optional[Dict[int, str]] = None) -> str:
        names = names or {}
        lines = [f"# split {self.split or 'all'}  lambda {self.global_weight:g}  "
                 f"recall@{self.k} ({self.recall_mode})",
                 "attribute\tMAP\tMAP_global\tMAP_local\tRecall\tqueries\tskipped"]
        for attr, s in sorted(self.per_attribute.items()):
            label = names.get(attr, str(attr))
            lines.append(f"{label}\t{100 * s.fused_map:.2f}\t{100 * s.global_map:.2f}\t"
                         f"{100 * s.local_map:.2f}\t{100 * s.recall:.2f}\t"
                         f"{s.queries}\t{s.skipped}")
        lines.append(f"overall\t{100 * self.overall_map:.2f}\t{100 * self.global_map:.2f}\t"
                     f"{100 * self.local_map:.2f}\t{100 * self.recall:.2f}\t"
                     f"{self.queries}\t{self.skipped}")
        lines.append(f"pooled MAP\t{100 * self.pooled_map:.2f}")
        if self.baseline_map is not None:
            lines.append(f"random baseline MAP\t{100 * self.baseline_map:.2f}")
        return '\n'.join(lines) + '\n'


def _relevance(order: np.ndarray, relevant: np.ndarray) -> QueryRelevance:
    return QueryRelevance(relevant[order].tolist(), int(relevant.sum()))


def _ranking(scores: np.ndarray, ids: np.ndarray) -> np.ndarray:
    # Descending score, ascending id on ties.
    return np.lexsort((ids, -scores))


def evaluate_attribute(index: EmbeddingIndex, attribute_id: int, config: FusionConfig,
                       k: int = 100, recall_mode: str = RECALL_HIT) -> Optional[AttributeScores]:
    """
    Score every query image of one attribute against its candidate pool.
    Queries without a relevant candidate are skipped and counted.

    :return: None when no query of the attribute is valid.
    """
    queries = index.queries(attribute_id) or index.images(attribute_id)
    pool = index.candidates(attribute_id)
    lam = config.global_weight
    fused: List[QueryRelevance] = []
    glob: List[QueryRelevance] = []
    loc: List[QueryRelevance] = []
    skipped = 0
    for q in queries:
        ids = np.array([i for i in pool if i != q], dtype=np.int64)
        value = index.value(attribute_id, q)
        relevant = np.array([index.value(attribute_id, int(i)) == value for i in ids], dtype=bool)
        if not relevant.any():
            LOG.debug(f"Skipping query {q} of attribute {attribute_id}: no relevant candidate")
            skipped += 1
            continue
        qg, ql = index.get(attribute_id, q)
        s_g = np.array([cosine(qg, index.get(attribute_id, int(i))[0]) for i in ids])
        s_l = np.array([cosine(ql, index.get(attribute_id, int(i))[1]) for i in ids])
        fused.append(_relevance(_ranking(lam * s_g + (1.0 - lam) * s_l, ids), relevant))
        glob.append(_relevance(_ranking(s_g, ids), relevant))
        loc.append(_relevance(_ranking(s_l, ids), relevant))
    if not fused:
        LOG.warning(f"Attribute {attribute_id}: no valid query ({skipped} skipped)")
        return None
    return AttributeScores(
        fused_map=mean_average_precision(fused),
        global_map=mean_average_precision(glob),
        local_map=mean_average_precision(loc),
        recall=recall_at_k(fused, k, recall_mode),
        queries=len(fused),
        skipped=skipped,
        relevance=fused,
    )


def evaluate_index(index: EmbeddingIndex, config: FusionConfig, k: int = 100,
                   recall_mode: str = RECALL_HIT,
                   attributes: Optional[Iterable[int]] = None) -> EvaluationReport:
    """
    :raises ContractError: No attribute has a valid query.
    """
    if k < 1:
        raise ContractError(f"Recall cutoff must be positive, got {k}")
    attrs = index.attributes if attributes is None else sorted(attributes)
    per_attribute: Dict[int, AttributeScores] = {}
    skipped = 0
    for attr in attrs:
        scores = evaluate_attribute(index, attr, config, k, recall_mode)
        if scores is None:
            skipped += len(index.queries(attr) or index.images(attr))
            continue
        per_attribute[attr] = scores
        skipped += scores.skipped
    if not per_attribute:
        raise ContractError("No attribute has a query with a relevant candidate")
    pooled = [q for s in per_attribute.values() for q in s.relevance]
    report = EvaluationReport(
        split=index.split,
        global_weight=config.global_weight,
        k=k,
        recall_mode=recall_mode,
        per_attribute=per_attribute,
        overall_map=float(np.mean([s.fused_map for s in per_attribute.values()])),
        pooled_map=mean_average_precision(pooled),
        global_map=float(np.mean([s.global_map for s in per_attribute.values()])),
        local_map=float(np.mean([s.local_map for s in per_attribute.values()])),
        recall=float(np.mean([s.recall for s in per_attribute.values()])),
        queries=len(pooled),
        skipped=skipped,
    )
    LOG.info(f"MAP {100 * report.overall_map:.2f} over {report.queries} queries "
             f"({report.skipped} skipped)")
    return report


def random_embedding_index(index: EmbeddingIndex, seed: int) -> EmbeddingIndex:
    """
    Same entries as ``index`` with seeded standard-normal vectors in place of
    the learned ones.
    """
    rng = np.random.default_rng(seed)
    out = EmbeddingIndex(index.vector_dim, index.split)
    for attr in index.attributes:
        for i in index.images(attr):
            out.add(attr, i, index.value(attr, i),
                    rng.standard_normal(index.vector_dim),
                    rng.standard_normal(index.vector_dim), index.role(i))
    return out


def random_baseline_map(index: EmbeddingIndex, seed: int, config: FusionConfig,
                        k: int = 100) -> float:
    return evaluate_index(random_embedding_index(index, seed), config, k).overall_map
