"""
Triplet ranking, alignment and joint losses. All take and return tensors so
they can be differentiated; plain numbers are accepted as constants.
"""
from typing import Sequence, Tuple, Union

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.tensor import Tensor, as_tensor
from smqtk_attribute_embedding.exceptions import ShapeError
from smqtk_attribute_embedding.training.config import LossWeights

Scalar = Union[Tensor, float]


def triplet_loss(s_pos: Scalar, s_neg: Scalar, margin: float) -> Tensor:
    """
    ``max(0, margin - s_pos + s_neg)``

    >>> triplet_loss(1.0, -1.0, 0.2).item()
    0.0
    """
    return ops.relu(ops.add(ops.sub(margin, as_tensor(s_pos)), as_tensor(s_neg)))


def triplet_similarities(anchor: Tensor, positive: Tensor,
                         negative: Tensor) -> Tuple[Tensor, Tensor]:
    return (ops.cosine_similarity(anchor, positive),
            ops.cosine_similarity(anchor, negative))


def alignment_loss(pairs: Sequence[Tuple[Tensor, Tensor]],
                   stop_gradient: bool = False) -> Tensor:
    """
    Sum of ``1 - cos(f_g, f_l)`` over the given (global, local) pairs.

    :param pairs: Paired vectors, typically of anchor, positive and
        negative.
    :param stop_gradient: Treat the global vectors as constants.

    :raises ShapeError: A pair has mismatched lengths.
    """
    terms = []
    for f_g, f_l in pairs:
        if f_g.shape != f_l.shape:
            raise ShapeError(f"alignment_loss: {f_g.shape} vs {f_l.shape}")
        if stop_gradient:
            f_g = ops.detach(f_g)
        terms.append(ops.sub(1.0, ops.cosine_similarity(f_g, f_l)))
    return ops.stack_sum(terms)


def joint_loss(l_g: Scalar, l_l: Scalar, l_a: Scalar, weights: LossWeights) -> Tensor:
    """
    ``alpha * L_g + beta * L_l + gamma * L_a``
    """
    return ops.stack_sum([
        ops.mul(as_tensor(l_g), weights.alpha),
        ops.mul(as_tensor(l_l), weights.beta),
        ops.mul(as_tensor(l_a), weights.gamma),
    ])
