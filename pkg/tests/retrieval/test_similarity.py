from pathlib import Path
from typing import Optional

import numpy as np
import pytest
from smqtk_core.configuration import configuration_test_helper

from smqtk_attribute_embedding.exceptions import ConfigError, ContractError, DataError
from smqtk_attribute_embedding.retrieval.index import EmbeddingIndex
from smqtk_attribute_embedding.retrieval.similarity import (
    FusionConfig,
    RankedList,
    cosine,
    format_rank_file,
    fused_similarity,
    multi_attribute_similarity,
    parse_rank_file,
    rank,
    read_rank_file,
    rerank,
    retrieve,
    write_rank_file,
)

GLOBAL_ONLY = FusionConfig(1.0)


def _index(vectors: dict, attribute_id: int = 0,
           index: Optional[EmbeddingIndex] = None) -> EmbeddingIndex:
    """ Entries whose global and local vectors coincide. """
    index = index or EmbeddingIndex(2)
    for image_id, v in vectors.items():
        index.add(attribute_id, image_id, 0, np.array(v, dtype=float), np.array(v, dtype=float))
    return index


def test_fusion_config() -> None:
    for i in configuration_test_helper(FusionConfig(0.25)):  # type: FusionConfig
        assert i.global_weight == 0.25
    assert FusionConfig().global_weight == 0.6
    for bad in (-0.1, 1.01):
        with pytest.raises(ConfigError):
            FusionConfig(bad)


def test_cosine() -> None:
    assert cosine(np.array([1.0, 0.0]), np.array([3.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(0.0)
    assert cosine(np.array([1.0, 1.0]), np.array([-1.0, -1.0])) == pytest.approx(-1.0)
    assert cosine(np.zeros(2), np.array([1.0, 0.0])) == 0.0


def test_fused_similarity() -> None:
    a = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    b = (np.array([0.5, np.sqrt(3) / 2]), np.array([0.0, 4.0]))
    assert fused_similarity(a, b, FusionConfig(0.6)) == pytest.approx(0.7)
    assert fused_similarity(a, b, FusionConfig(1.0)) == pytest.approx(0.5)
    assert fused_similarity(a, b, FusionConfig(0.0)) == pytest.approx(1.0)


def test_multi_attribute_similarity() -> None:
    index = _index({1: [1.0, 0.0], 2: [0.3, np.sqrt(1 - 0.09)]}, 0)
    _index({1: [1.0, 0.0], 2: [0.5, np.sqrt(0.75)]}, 1, index)
    assert multi_attribute_similarity(1, 2, [0], index, GLOBAL_ONLY) == pytest.approx(0.3)
    assert multi_attribute_similarity(1, 2, [1, 0], index, GLOBAL_ONLY) == pytest.approx(0.8)
    with pytest.raises(ContractError):
        multi_attribute_similarity(1, 2, [], index, GLOBAL_ONLY)
    with pytest.raises(DataError):
        multi_attribute_similarity(1, 2, [0, 4], index, GLOBAL_ONLY)


def test_rank_orders_ties_by_id() -> None:
    ranked = rank(0, [(5, 0.5), (2, 0.9), (3, 0.5), (1, 0.1)])
    assert ranked == RankedList(0, (2, 3, 5, 1), (0.9, 0.5, 0.5, 0.1))
    assert rank(0, [(5, 0.5), (2, 0.9)], k=1).image_ids == (2,)


class TestRetrieve:

    index = _index({0: [1.0, 0.0], 1: [1.0, 0.0], 2: [0.0, 1.0], 3: [1.0, 1.0]})

    def test_order_excludes_query(self) -> None:
        ranked = retrieve(0, 0, self.index, 10, GLOBAL_ONLY)
        assert ranked.query_id == 0
        assert ranked.image_ids == (1, 3, 2)
        assert ranked.scores == pytest.approx((1.0, np.sqrt(0.5), 0.0))

    def test_top_k(self) -> None:
        assert retrieve(0, 0, self.index, 2, GLOBAL_ONLY).image_ids == (1, 3)

    def test_explicit_candidates(self) -> None:
        assert retrieve(0, 0, self.index, 5, GLOBAL_ONLY, candidates=[2, 0]).image_ids == (2,)

    def test_errors(self) -> None:
        with pytest.raises(ContractError):
            retrieve(0, 0, self.index, 0, GLOBAL_ONLY)
        with pytest.raises(DataError):
            retrieve(9, 0, self.index, 5, GLOBAL_ONLY)


class TestRerank:

    index = _index({0: [1.0, 0.0], 4: [0.0, 1.0], 3: [1.0, 1.0], 2: [1.0, 0.0], 1: [1.0, 0.0]})
    initial = RankedList(0, (4, 3, 2, 1), (0.4, 0.3, 0.2, 0.1))

    def test_head_reordered(self) -> None:
        ranked = rerank(self.initial, [0], self.index, GLOBAL_ONLY, top_n=3)
        assert ranked.image_ids == (2, 3, 4, 1)
        assert ranked.scores[:3] == pytest.approx((1.0, np.sqrt(0.5), 0.0))
        # The tail keeps its baseline score.
        assert ranked.scores[3] == 0.1

    def test_full_depth_and_clamp(self) -> None:
        ranked = rerank(self.initial, [0], self.index, GLOBAL_ONLY, top_n=50)
        # 2 and 1 tie; the baseline order decides.
        assert ranked.image_ids == (2, 1, 3, 4)

    def test_stable_on_ties(self) -> None:
        index = _index({0: [1.0, 0.0], 5: [2.0, 0.0], 6: [3.0, 0.0]})
        ranked = rerank(RankedList(0, (6, 5), (0.2, 0.9)), [0], index, GLOBAL_ONLY)
        assert ranked.image_ids == (6, 5)

    def test_errors(self) -> None:
        with pytest.raises(ContractError):
            rerank(self.initial, [0], self.index, GLOBAL_ONLY, top_n=0)
        with pytest.raises(ContractError):
            rerank(self.initial, [], self.index, GLOBAL_ONLY)


def test_rank_file(tmp_path: Path) -> None:
    ranked = RankedList(7, (3, 1), (0.75, -0.1))
    assert format_rank_file(ranked) == "# query 7\n3\t0.75\n1\t-0.1\n"
    path = str(tmp_path / 'q7.rank')
    write_rank_file(ranked, path)
    assert read_rank_file(path) == ranked


def test_parse_rank_file() -> None:
    assert parse_rank_file("# comment\n# query 2\n\n5 0.5\n") == RankedList(2, (5,), (0.5,))
    assert parse_rank_file("# query 2\n") == RankedList(2, (), ())
    with pytest.raises(DataError, match=r"header"):
        parse_rank_file("5\t0.5\n")
    with pytest.raises(DataError, match=r"line 2"):
        parse_rank_file("# query 2\n5\n")
    with pytest.raises(DataError, match=r"line 3"):
        parse_rank_file("# query 2\n5\t0.5\nx\t0.1\n")


@pytest.mark.parametrize("seed", range(12))
def test_retrieve_matches_brute_force(seed: int) -> None:
    """
    Retrieval over small random galleries agrees with a stable sort of the
    ascending ids on descending fused similarity. Integer vectors make ties
    common.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    index = EmbeddingIndex(3)
    for i in range(n):
        index.add(0, i, 0, rng.integers(-2, 3, 3).astype(float),
                  rng.integers(-2, 3, 3).astype(float))
    config = FusionConfig(float(rng.uniform()))
    query = int(rng.integers(n))
    k = int(rng.integers(1, n + 1))

    ids = [i for i in range(n) if i != query]
    scores = np.array([fused_similarity(index.get(0, query), index.get(0, i), config)
                       for i in ids])
    expected = [ids[j] for j in np.argsort(-scores, kind='stable')][:k]

    ranked = retrieve(query, 0, index, k, config)
    assert list(ranked.image_ids) == expected
    assert all(a >= b for a, b in zip(ranked.scores, ranked.scores[1:]))


def test_full_depth_rerank_matches_retrieve() -> None:
    """ One attribute and a full-depth rerank reproduce plain retrieval. """
    rng = np.random.default_rng(5)
    index = EmbeddingIndex(4)
    for i in range(8):
        index.add(0, i, 0, rng.standard_normal(4), rng.standard_normal(4))
    config = FusionConfig()
    gallery = [int(i) for i in rng.permutation(np.arange(1, 8))]
    initial = RankedList(0, tuple(gallery), tuple(np.linspace(1.0, 0.0, len(gallery))))

    reranked = rerank(initial, [0], index, config, top_n=len(gallery))
    expected = retrieve(0, 0, index, len(gallery), config, candidates=gallery)
    assert reranked.image_ids == expected.image_ids
    assert reranked.scores == pytest.approx(expected.scores)
