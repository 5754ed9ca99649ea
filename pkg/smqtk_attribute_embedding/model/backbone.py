"""
Feature extraction and attribute embedding.
"""
from typing import Dict, Mapping, Sequence

import numpy as np

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError
from smqtk_attribute_embedding.model.config import BackboneConfig

TABLE_NAME = 'attribute_table'


def glorot_uniform(rng: np.random.Generator, shape: Sequence[int],
                   fan_in: int, fan_out: int) -> np.ndarray:
    """
    Uniform samples in ``[-sqrt(6 / (fan_in + fan_out)), +sqrt(...)]``.
    """
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=tuple(shape))


class AttributeEmbeddingTable (object):
    """
    Learnable ``[n, c_a]`` matrix holding one row per attribute. A single
    instance is shared by both branches of a network.

    :param weights: The ``[n, c_a]`` matrix.
    """

    __slots__ = ('weights',)

    def __init__(self, weights: Tensor) -> None:
        if weights.ndim != 2:
            raise ShapeError(f"Attribute table must be 2-D, got {weights.shape}")
        self.weights = weights

    @classmethod
    def initialize(cls, num_attributes: int, attribute_dim: int,
                   rng: np.random.Generator) -> "AttributeEmbeddingTable":
        w = glorot_uniform(rng, (num_attributes, attribute_dim),
                           num_attributes, attribute_dim)
        return cls(Tensor(w, requires_grad=True, name=TABLE_NAME))

    @property
    def num_attributes(self) -> int:
        return self.weights.shape[0]

    @property
    def attribute_dim(self) -> int:
        return self.weights.shape[1]


def embed_attribute(attribute_id: int, table: AttributeEmbeddingTable) -> Tensor:
    """
    Row ``attribute_id`` of the table, selected by a one-hot product so the
    gradient reaches only that row.

    :raises ContractError: Id outside ``[0, n)``.
    """
    n = table.num_attributes
    if not 0 <= attribute_id < n:
        raise ContractError(f"Attribute id {attribute_id} outside [0, {n})")
    one_hot = np.zeros(n)
    one_hot[attribute_id] = 1.0
    return ops.matmul(Tensor(one_hot), table.weights)


def backbone_shapes(config: BackboneConfig) -> Dict[str, tuple]:
    shapes = {}
    c_in = 3
    for i, (out_c, k, _) in enumerate(config.block_specs):
        shapes[f'backbone.{i}.weight'] = (out_c, c_in, k, k)
        shapes[f'backbone.{i}.bias'] = (out_c,)
        c_in = out_c
    return shapes


def init_backbone(config: BackboneConfig, rng: np.random.Generator) -> Dict[str, Tensor]:
    params = {}
    for name, shape in backbone_shapes(config).items():
        if name.endswith('.weight'):
            out_c, c_in, k, _ = shape
            w = glorot_uniform(rng, shape, c_in * k * k, out_c * k * k)
        else:
            w = np.zeros(shape)
        params[name] = Tensor(w, requires_grad=True, name=name)
    return params


def extract_features(image: Tensor, config: BackboneConfig,
                     params: Mapping[str, Tensor]) -> Tensor:
    """
    Run the convolution stack (conv + bias + relu per block) over a
    ``[3, s, s]`` image.

    :param image: Image with values in ``[0, 1]``.
    :param config: Backbone layout.
    :param params: Mapping holding every ``backbone.<i>.weight`` / ``.bias``.

    :raises ShapeError: Image is not ``[3, input_side, input_side]``.

    :return: ``[c, s / d, s / d]`` feature map.
    """
    side = config.input_side
    if image.shape != (3, side, side):
        raise ShapeError(
            f"Backbone expects a [3, {side}, {side}] image, got {image.shape}"
        )
    x = image
    for i, (_, k, stride) in enumerate(config.block_specs):
        x = ops.relu(ops.conv2d(x, params[f'backbone.{i}.weight'],
                                params[f'backbone.{i}.bias'],
                                stride=stride, padding=k // 2))
    return x


def mean_pool_features(x: Tensor) -> Tensor:
    """
    Per-channel spatial mean of a ``[c, h, w]`` map.

    >>> mean_pool_features(Tensor([[[0., 2.], [4., 6.]]])).data.tolist()
    [3.0]
    """
    if x.ndim != 3:
        raise ShapeError(f"Expected a [c, h, w] map, got {x.shape}")
    c, h, w = x.shape
    return ops.mean(ops.reshape(x, (c, h * w)), axis=1)
