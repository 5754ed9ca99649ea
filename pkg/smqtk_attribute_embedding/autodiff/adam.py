import logging
from typing import Dict, Mapping, Tuple

import numpy as np

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError

LOG = logging.getLogger(__name__)


class AdamState (object):
    """
    Optimizer state for a named group of parameters: first and second moment
    accumulators plus the step counter and hyperparameters.

    :param lr: Learning rate.
    :param beta1: First-moment decay.
    :param beta2: Second-moment decay.
    :param eps: Denominator stabilizer.
    """

    __slots__ = ('lr', 'beta1', 'beta2', 'eps', 'step', 'm', 'v')

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8) -> None:
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def moments(self) -> Dict[str, np.ndarray]:
        """
        :return: Flat mapping of ``m/<name>`` and ``v/<name>`` arrays, the
            form persisted in checkpoints.
        """
        out = {f"m/{k}": a for k, a in self.m.items()}
        out.update({f"v/{k}": a for k, a in self.v.items()})
        return out

    def load_moments(self, step: int, arrays: Mapping[str, np.ndarray]) -> None:
        self.step = step
        self.m = {k[2:]: np.array(a) for k, a in arrays.items() if k.startswith('m/')}
        self.v = {k[2:]: np.array(a) for k, a in arrays.items() if k.startswith('v/')}


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> Tuple[Dict[str, Tensor], AdamState]:
    """
    Apply one bias-corrected Adam update.

    Tensors are immutable, so updated parameters are returned as new tensors
    (flagged ``requires_grad``) in a new mapping; ``state`` is updated in
    place and returned for convenience. The gradients of the given
    parameters are cleared.

    :param params: Named parameters, each with a populated ``grad``.
    :param state: Optimizer state for this parameter group.

    :raises ContractError: A parameter has no gradient.
    :raises ShapeError: Stored moments do not match a parameter's shape.
    """
    for name, p in params.items():
        if p.grad is None:
            raise ContractError(f"Parameter '{name}' has no gradient for adam_step")

    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t

    updated: Dict[str, Tensor] = {}
    for name in sorted(params):
        p = params[name]
        g = p.grad
        assert g is not None
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros(p.shape)
            v = np.zeros(p.shape)
        elif m.shape != p.shape or v.shape != p.shape:
            raise ShapeError(
                f"Adam moments for '{name}' have shape {m.shape}, parameter "
                f"has {p.shape}"
            )
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        state.m[name] = m
        state.v[name] = v
        updated[name] = Tensor(p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps),
                               requires_grad=True, name=name)
        p.grad = None
    return updated, state
