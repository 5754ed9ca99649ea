import numpy as np
import pytest

from smqtk_attribute_embedding.autodiff.tensor import Tape, Tensor, backward
from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError
from smqtk_attribute_embedding.model.backbone import (
    TABLE_NAME,
    AttributeEmbeddingTable,
    backbone_shapes,
    embed_attribute,
    extract_features,
    glorot_uniform,
    init_backbone,
    mean_pool_features,
)
from smqtk_attribute_embedding.model.config import BackboneConfig


def test_glorot_bounds() -> None:
    w = glorot_uniform(np.random.default_rng(0), (50, 40), 10, 14)
    assert w.shape == (50, 40)
    assert np.abs(w).max() <= 0.5


class TestAttributeEmbeddingTable:

    def test_initialize(self) -> None:
        table = AttributeEmbeddingTable.initialize(3, 5, np.random.default_rng(0))
        assert table.num_attributes == 3
        assert table.attribute_dim == 5
        assert table.weights.requires_grad
        assert table.weights.name == TABLE_NAME

    def test_must_be_matrix(self) -> None:
        with pytest.raises(ShapeError):
            AttributeEmbeddingTable(Tensor(np.zeros(4)))

    def test_embed_selects_row(self) -> None:
        w = np.arange(6.0).reshape(3, 2)
        table = AttributeEmbeddingTable(Tensor(w))
        np.testing.assert_array_equal(embed_attribute(2, table).data, [4.0, 5.0])

    def test_gradient_reaches_only_selected_row(self) -> None:
        table = AttributeEmbeddingTable(Tensor(np.ones((3, 2)), requires_grad=True))
        with Tape() as tape:
            loss = ops.sum_all(embed_attribute(1, table))
        backward(loss, tape)
        np.testing.assert_array_equal(table.weights.grad, [[0, 0], [1, 1], [0, 0]])

    @pytest.mark.parametrize("attribute_id", [-1, 3])
    def test_out_of_range(self, attribute_id: int) -> None:
        table = AttributeEmbeddingTable(Tensor(np.ones((3, 2))))
        with pytest.raises(ContractError, match=r"outside \[0, 3\)"):
            embed_attribute(attribute_id, table)


class TestBackbone:

    config = BackboneConfig(8, [[4, 3, 2], [6, 1, 1]])

    def test_shapes(self) -> None:
        assert backbone_shapes(self.config) == {
            'backbone.0.weight': (4, 3, 3, 3),
            'backbone.0.bias': (4,),
            'backbone.1.weight': (6, 4, 1, 1),
            'backbone.1.bias': (6,),
        }

    def test_init(self) -> None:
        params = init_backbone(self.config, np.random.default_rng(0))
        assert set(params) == set(backbone_shapes(self.config))
        assert not params['backbone.0.bias'].data.any()
        assert all(p.requires_grad for p in params.values())

    def test_feature_map(self) -> None:
        params = init_backbone(self.config, np.random.default_rng(0))
        image = Tensor(np.random.default_rng(1).uniform(size=(3, 8, 8)))
        x = extract_features(image, self.config, params)
        assert x.shape == (6, 4, 4)
        assert (x.data >= 0).all()

    def test_wrong_image_side(self) -> None:
        params = init_backbone(self.config, np.random.default_rng(0))
        with pytest.raises(ShapeError, match=r"\[3, 8, 8\]"):
            extract_features(Tensor(np.zeros((3, 16, 16))), self.config, params)


def test_mean_pool() -> None:
    x = Tensor(np.stack([np.ones((2, 3)), np.arange(6.0).reshape(2, 3)]))
    np.testing.assert_allclose(mean_pool_features(x).data, [1.0, 2.5])
    with pytest.raises(ShapeError):
        mean_pool_features(Tensor(np.ones((2, 2))))
