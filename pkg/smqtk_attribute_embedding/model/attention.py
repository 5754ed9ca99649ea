"""
Attribute-aware spatial and channel attention and the projection head of a
branch.
"""
from collections.abc import Mapping
from typing import Dict, Iterator, NamedTuple, Optional, Tuple

import numpy as np

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError
from smqtk_attribute_embedding.model.backbone import (
    AttributeEmbeddingTable, backbone_shapes, embed_attribute, extract_features,
    glorot_uniform, init_backbone, mean_pool_features
)
from smqtk_attribute_embedding.model.config import BranchConfig


def branch_shapes(config: BranchConfig, attribute_dim: int) -> Dict[str, Tuple[int, ...]]:
    """
    Expected shape of every parameter of a branch. Disabled attention
    modules own no parameters.
    """
    c, c_a = config.c, attribute_dim
    shapes: Dict[str, Tuple[int, ...]] = dict(backbone_shapes(config.backbone))
    if config.spatial_attention:
        shapes.update({
            'asa.conv.weight': (config.c_1, c, 1, 1),
            'asa.conv.bias': (config.c_1,),
            'asa.W_s': (config.c_1, c_a),
        })
    if config.channel_attention:
        hidden = c // config.reduction
        shapes.update({
            'aca.W_c': (config.c_2, c_a),
            'aca.W_1': (hidden, c + config.c_2),
            'aca.b_1': (hidden,),
            'aca.W_2': (c, hidden),
            'aca.b_2': (c,),
        })
    shapes.update({
        'proj.W': (config.c_o, c),
        'proj.b': (config.c_o,),
    })
    return shapes


class BranchParams (Mapping):
    """
    Named learnable tensors of one branch together with its dimensions.

    Tensors are immutable; an optimizer step produces a new mapping which is
    swapped in with :meth:`replace`.

    :param config: Branch dimensions.
    :param attribute_dim: Width ``c_a`` of the attribute vectors fed in.
    :param tensors: Parameter tensors by name.

    :raises ShapeError: A tensor is missing, unexpected, or mis-shaped.
    """

    def __init__(self, config: BranchConfig, attribute_dim: int,
                 tensors: Dict[str, Tensor]) -> None:
        self.config = config
        self.attribute_dim = attribute_dim
        self._tensors: Dict[str, Tensor] = {}
        self.replace(tensors)

    @classmethod
    def initialize(cls, config: BranchConfig, attribute_dim: int,
                   rng: np.random.Generator) -> "BranchParams":
        tensors = init_backbone(config.backbone, rng)
        for name, shape in branch_shapes(config, attribute_dim).items():
            if name in tensors:
                continue
            if len(shape) == 1:
                value = np.zeros(shape)
            else:
                fan_out, fan_in = shape[0], int(np.prod(shape[1:]))
                value = glorot_uniform(rng, shape, fan_in, fan_out)
            tensors[name] = Tensor(value, requires_grad=True, name=name)
        return cls(config, attribute_dim, tensors)

    def replace(self, tensors: Dict[str, Tensor]) -> None:
        expected = branch_shapes(self.config, self.attribute_dim)
        if set(tensors) != set(expected):
            missing = sorted(set(expected) - set(tensors))
            extra = sorted(set(tensors) - set(expected))
            raise ShapeError(f"Branch parameters missing {missing}, unexpected {extra}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise ShapeError(
                    f"Parameter '{name}' has shape {tensors[name].shape}, expected {shape}"
                )
        self._tensors = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tensors))

    def __len__(self) -> int:
        return len(self._tensors)

    def arrays(self) -> Dict[str, np.ndarray]:
        return {k: self._tensors[k].data for k in self}


class AttentionOutputs (NamedTuple):
    alpha_s: Tensor
    x_s: Tensor
    alpha_c: Optional[Tensor]
    x_c: Tensor
    f: Tensor


def attend(x: Tensor, logits: Tensor) -> Tuple[Tensor, Tensor]:
    """
    Softmax the ``[h * w]`` logits over all positions and take the weighted
    sum of the ``[c, h, w]`` feature columns.

    :return: ``(x_s [c], alpha_s [h, w])``
    """
    c, h, w = x.shape
    if logits.shape != (h * w,):
        raise ShapeError(f"Expected {h * w} logits, got {logits.shape}")
    alpha = ops.softmax(logits, axis=0)
    x_s = ops.matmul(ops.reshape(x, (c, h * w)), alpha)
    return x_s, ops.reshape(alpha, (h, w))


def spatial_attention(x: Tensor, a: Tensor, params: BranchParams) -> Tuple[Tensor, Tensor]:
    """
    Attribute-aware spatial attention. Each location's compatibility with
    the attribute is the inner product of ``tanh(1x1 conv(x))`` and
    ``tanh(W_s a)`` scaled by ``1 / sqrt(c_1)``.

    :return: ``(x_s [c], alpha_s [h, w])``
    """
    c, h, w = x.shape
    if c != params.config.c or a.shape != (params.attribute_dim,):
        raise ShapeError(
            f"spatial_attention: got map {x.shape} and attribute {a.shape} for "
            f"c={params.config.c}, c_a={params.attribute_dim}"
        )
    c_1 = params.config.c_1
    p_x = ops.tanh(ops.conv2d(x, params['asa.conv.weight'], params['asa.conv.bias']))
    p_a = ops.tanh(ops.matmul(params['asa.W_s'], a))
    logits = ops.matmul(p_a, ops.reshape(p_x, (c_1, h * w))) / np.sqrt(c_1)
    return attend(x, logits)


def channel_attention(x_s: Tensor, a: Tensor, params: BranchParams) -> Tuple[Tensor, Tensor]:
    """
    Attribute-aware channel gating: ``sigmoid(W_2 relu(W_1 [q(a), x_s] + b_1)
    + b_2)`` with ``q(a) = relu(W_c a)``.

    Gates lie in ``[0, 1]``. They are strictly inside the interval only for
    moderate logits: in float64 a gate rounds to exactly 1 once its logit
    exceeds about 37, and to 0 below about -745.

    :return: ``(x_c [c], alpha_c [c])``
    """
    if x_s.shape != (params.config.c,) or a.shape != (params.attribute_dim,):
        raise ShapeError(
            f"channel_attention: got feature {x_s.shape} and attribute {a.shape} "
            f"for c={params.config.c}, c_a={params.attribute_dim}"
        )
    q_a = ops.relu(ops.matmul(params['aca.W_c'], a))
    hidden = ops.relu(ops.add(ops.matmul(params['aca.W_1'], ops.concat([q_a, x_s])),
                              params['aca.b_1']))
    alpha_c = ops.sigmoid(ops.add(ops.matmul(params['aca.W_2'], hidden), params['aca.b_2']))
    return ops.mul(x_s, alpha_c), alpha_c


def project_embedding(x_c: Tensor, params: BranchParams) -> Tensor:
    """
    ``f = W x_c + b``
    """
    if x_c.shape != (params.config.c,):
        raise ShapeError(f"project_embedding: expected ({params.config.c},), got {x_c.shape}")
    return ops.add(ops.matmul(params['proj.W'], x_c), params['proj.b'])


def uniform_attention(h: int, w: int) -> Tensor:
    return Tensor(np.full((h, w), 1.0 / (h * w)))


def branch_forward(image: Tensor, attribute_id: int, params: BranchParams,
                   table: Optional[AttributeEmbeddingTable]) -> AttentionOutputs:
    """
    Backbone, spatial attention, channel attention and projection for one
    image and attribute.

    A branch with spatial attention disabled mean pools its feature map (the
    reported ``alpha_s`` is then uniform); with channel attention disabled
    ``x_c`` is ``x_s``. With both disabled the attribute is not consulted
    and ``table`` may be None.
    """
    config = params.config
    x = extract_features(image, config.backbone, params)
    _, h, w = x.shape
    a = None
    if config.spatial_attention or config.channel_attention:
        if table is None:
            raise ContractError("An attribute table is required for attention")
        a = embed_attribute(attribute_id, table)
    if config.spatial_attention:
        x_s, alpha_s = spatial_attention(x, a, params)
    else:
        x_s, alpha_s = mean_pool_features(x), uniform_attention(h, w)
    alpha_c: Optional[Tensor] = None
    if config.channel_attention:
        x_c, alpha_c = channel_attention(x_s, a, params)
    else:
        x_c = x_s
    return AttentionOutputs(alpha_s, x_s, alpha_c, x_c, project_embedding(x_c, params))
