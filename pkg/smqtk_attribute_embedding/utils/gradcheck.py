"""
Central finite-difference checking of tape gradients.
"""
from typing import Callable, List, Optional, Sequence

import numpy as np

from smqtk_attribute_embedding.autodiff.ops import mul, sum_all
from smqtk_attribute_embedding.autodiff.tensor import Tensor, Tape, backward

Function = Callable[[Sequence[Tensor]], Tensor]


def _scalarize(out: Tensor, weights: np.ndarray) -> Tensor:
    return sum_all(mul(out, Tensor(weights)))


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """
    ``|a - n| / (|a| + |n|)`` over whole arrays; 0 when both vanish.
    """
    denom = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    if denom < 1e-15:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / denom


def tape_gradients(fn: Function, inputs: Sequence[np.ndarray],
                   weights: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """
    Gradients of ``sum(fn(inputs) * weights)`` w.r.t. every input, by the
    tape.
    """
    tensors = [Tensor(x, requires_grad=True) for x in inputs]
    with Tape() as tape:
        out = fn(tensors)
        w = np.ones(out.shape) if weights is None else weights
        loss = _scalarize(out, w)
    backward(loss, tape)
    return [np.zeros(t.shape) if t.grad is None else t.grad for t in tensors]


def numeric_gradients(fn: Function, inputs: Sequence[np.ndarray],
                      weights: Optional[np.ndarray] = None,
                      step: float = 1e-5) -> List[np.ndarray]:
    """
    Central finite differences of ``sum(fn(inputs) * weights)``.
    """
    base = [np.array(x, dtype=np.float64) for x in inputs]

    def evaluate(arrays: Sequence[np.ndarray]) -> float:
        out = fn([Tensor(a) for a in arrays])
        w = np.ones(out.shape) if weights is None else weights
        return float((out.data * w).sum())

    grads = []
    for i, x in enumerate(base):
        g = np.zeros_like(x)
        for idx in np.ndindex(*x.shape):
            plus = [a.copy() for a in base]
            minus = [a.copy() for a in base]
            plus[i][idx] += step
            minus[i][idx] -= step
            g[idx] = (evaluate(plus) - evaluate(minus)) / (2.0 * step)
        grads.append(g)
    return grads


def max_gradient_error(fn: Function, inputs: Sequence[np.ndarray],
                       seed: int = 0, step: float = 1e-5) -> float:
    """
    Largest per-input relative error between tape and finite-difference
    gradients. Non-scalar outputs are reduced with seeded random weights so
    every output element is exercised.
    """
    reference = fn([Tensor(x) for x in inputs])
    weights = np.random.default_rng(seed).uniform(-1.0, 1.0, reference.shape)
    analytic = tape_gradients(fn, inputs, weights)
    numeric = numeric_gradients(fn, inputs, weights, step)
    return max(relative_error(a, n) for a, n in zip(analytic, numeric))
