"""
Differentiable operations over :class:`Tensor`.

Each operation computes its value with numpy and, when a tape is active and
an input requires a gradient, records a vector-Jacobian product closure.
Binary operations broadcast with numpy rules; gradients are summed back
to each operand's shape.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special

from smqtk_attribute_embedding.autodiff.tensor import Tensor, as_tensor, record
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError

ACTIVATIONS = ('tanh', 'relu', 'sigmoid')
#: Floor applied to vector norms before dividing in ``cosine_similarity``.
NORM_FLOOR = 1e-12

Operand = Union[Tensor, float, int, np.ndarray]


def _reduce_to(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """
    Sum a broadcast gradient back down to the operand's ``shape``.

    >>> _reduce_to(np.ones((3, 4)), (4,)).tolist()
    [3.0, 3.0, 3.0, 3.0]
    >>> _reduce_to(np.ones((3, 4)), (3, 1)).tolist()
    [[4.0], [4.0], [4.0]]
    """
    if g.shape == shape:
        return g
    lead = g.ndim - len(shape)
    g = g.sum(axis=tuple(range(lead))) if lead else g
    kept = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if kept:
        g = g.sum(axis=kept, keepdims=True)
    return g.reshape(shape)


def _binary_shapes(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def add(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _binary_shapes('add', ta, tb)
    out = Tensor(ta.data + tb.data)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return _reduce_to(g, ta.shape), _reduce_to(g, tb.shape)

    return record('add', (ta, tb), out, vjp)


def sub(a: Operand, b: Operand) -> Tensor:
    ta, tb = as_tensor(a), as_tensor(b)
    _binary_shapes('sub', ta, tb)
    out = Tensor(ta.data - tb.data)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return _reduce_to(g, ta.shape), _reduce_to(-g, tb.shape)

    return record('sub', (ta, tb), out, vjp)


def mul(a: Operand, b: Operand) -> Tensor:
    """
    Elementwise (Hadamard) product.
    """
    ta, tb = as_tensor(a), as_tensor(b)
    _binary_shapes('mul', ta, tb)
    out = Tensor(ta.data * tb.data)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return _reduce_to(g * tb.data, ta.shape), _reduce_to(g * ta.data, tb.shape)

    return record('mul', (ta, tb), out, vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product ``C[i][j] = sum_t A[i][t] * B[t][j]``.

    A one-dimensional operand is treated as a vector: ``A[m x k] @ v[k]``
    gives ``[m]`` and ``v[k] @ B[k x n]`` gives ``[n]``.

    :raises ShapeError: Inner dimensions disagree or an operand is not 1-D or
        2-D.

    >>> matmul(Tensor([[1, 2]]), Tensor([[3], [4]])).data.tolist()
    [[11.0]]
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
    out = Tensor(a.data @ b.data)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        ad, bd = a.data, b.data
        if a.ndim == 2 and b.ndim == 2:
            return g @ bd.T, ad.T @ g
        if a.ndim == 2:
            return np.outer(g, bd), ad.T @ g
        if b.ndim == 2:
            return bd @ g, np.outer(ad, g)
        return g * bd, g * ad

    return record('matmul', (a, b), out, vjp)


def conv2d(x: Tensor, kernels: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """
    Cross-correlation of a ``[c_in, h, w]`` map with ``[c_out, c_in, k, k]``
    kernels, giving ``[c_out, h', w']`` with
    ``h' = floor((h + 2 * padding - k) / stride) + 1`` (same for ``w'``).

    :param x: Input map.
    :param kernels: Convolution kernels.
    :param bias: Optional per-output-channel bias ``[c_out]``.
    :param stride: Positive step between windows.
    :param padding: Non-negative zero padding on every side.

    :raises ShapeError: Channel counts disagree, or the kernel is larger than
        the padded input.
    """
    if x.ndim != 3 or kernels.ndim != 4:
        raise ShapeError(
            f"conv2d: expected [c, h, w] input and [o, c, k, k] kernels, got "
            f"{x.shape} and {kernels.shape}"
        )
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d: invalid stride {stride} / padding {padding}")
    c_in, h, w = x.shape
    c_out, k_in, kh, kw = kernels.shape
    if k_in != c_in:
        raise ShapeError(
            f"conv2d: input has {c_in} channels but kernels {kernels.shape} "
            f"expect {k_in}"
        )
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ShapeError(
            f"conv2d: kernel {kh}x{kw} larger than padded input {x.shape} "
            f"(padding {padding})"
        )
    if bias is not None and bias.shape != (c_out,):
        raise ShapeError(f"conv2d: bias shape {bias.shape} != ({c_out},)")

    xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    _, oh, ow, _, _ = windows.shape
    # [oh * ow, c_in * kh * kw]
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(oh * ow, c_in * kh * kw)
    w_mat = kernels.data.reshape(c_out, -1)
    y = (cols @ w_mat.T).T.reshape(c_out, oh, ow)
    if bias is not None:
        y = y + bias.data[:, None, None]
    out = Tensor(y)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        g2 = g.reshape(c_out, oh * ow)
        g_kernels = (g2 @ cols).reshape(kernels.shape)
        g_cols = (g2.T @ w_mat).reshape(oh, ow, c_in, kh, kw)
        g_xp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                g_xp[:, i:i + stride * oh:stride, j:j + stride * ow:stride] += \
                    g_cols[:, :, :, i, j].transpose(2, 0, 1)
        g_x = g_xp[:, padding:padding + h, padding:padding + w]
        grads = [g_x, g_kernels]
        if bias is not None:
            grads.append(g.sum(axis=(1, 2)))
        return grads

    inputs = (x, kernels) if bias is None else (x, kernels, bias)
    return record('conv2d', inputs, out, vjp)


def activation(x: Tensor, kind: str) -> Tensor:
    """
    Elementwise nonlinearity, one of ``tanh``, ``relu`` or ``sigmoid``.

    >>> activation(Tensor([0.0]), 'sigmoid').data.tolist()
    [0.5]
    """
    x = as_tensor(x)
    if kind == 'tanh':
        y = np.tanh(x.data)

        def d(g: np.ndarray) -> np.ndarray:
            return g * (1.0 - y * y)
    elif kind == 'relu':
        y = np.maximum(x.data, 0.0)

        def d(g: np.ndarray) -> np.ndarray:
            return g * (x.data > 0.0)
    elif kind == 'sigmoid':
        y = special.expit(x.data)

        def d(g: np.ndarray) -> np.ndarray:
            return g * y * (1.0 - y)
    else:
        raise ContractError(
            f"Unknown activation '{kind}', expected one of {ACTIVATIONS}"
        )
    return record(kind, (x,), Tensor(y), lambda g: (d(g),))


def tanh(x: Tensor) -> Tensor:
    return activation(x, 'tanh')


def relu(x: Tensor) -> Tensor:
    return activation(x, 'relu')


def sigmoid(x: Tensor) -> Tensor:
    return activation(x, 'sigmoid')


def _check_axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"Axis {axis} is invalid for shape {x.shape}")
    return axis % x.ndim


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """
    Max-shifted softmax along ``axis``; outputs are positive and sum to one.

    >>> softmax(Tensor([0.0, np.log(3.0)]), 0).data.round(12).tolist()
    [0.25, 0.75]
    """
    axis = _check_axis(x, axis)
    y = special.softmax(x.data, axis=axis)

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return record('softmax', (x,), Tensor(y), vjp)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    y = x.data.reshape(tuple(shape))
    return record('reshape', (x,), Tensor(y), lambda g: (g.reshape(x.shape),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """
    Join tensors along an existing axis.
    """
    if not tensors:
        raise ContractError("concat requires at least one tensor")
    axis = _check_axis(tensors[0], axis)
    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as ex:
        raise ShapeError(
            f"concat: shapes {[t.shape for t in tensors]} along axis {axis}"
        ) from ex
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return np.split(g, bounds, axis=axis)

    return record('concat', tuple(tensors), Tensor(y), vjp)


def sum_all(x: Tensor) -> Tensor:
    """
    Sum of every element as a scalar tensor.
    """
    return record('sum', (x,), Tensor(x.data.sum()),
                  lambda g: (np.full(x.shape, float(g)),))


def mean(x: Tensor, axis: int) -> Tensor:
    axis = _check_axis(x, axis)
    n = x.shape[axis]

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        return (np.broadcast_to(np.expand_dims(g, axis) / n, x.shape).copy(),)

    return record('mean', (x,), Tensor(x.data.mean(axis=axis)), vjp)


def stack_sum(tensors: Sequence[Tensor]) -> Tensor:
    """
    Sum of same-shape tensors, recorded as a single node.
    """
    if not tensors:
        raise ContractError("stack_sum requires at least one tensor")
    shape = tensors[0].shape
    for t in tensors:
        if t.shape != shape:
            raise ShapeError(f"stack_sum: shape {t.shape} != {shape}")
    y = np.sum([t.data for t in tensors], axis=0)
    return record('stack_sum', tuple(tensors), Tensor(y),
                  lambda g: [g] * len(tensors))


def cosine_similarity(u: Tensor, v: Tensor, floor: float = NORM_FLOOR) -> Tensor:
    """
    ``u . v / (|u| |v|)`` with each norm floored at ``floor`` before
    dividing, so zero vectors give 0 rather than NaN.

    :raises ShapeError: Operands are not equal-length vectors.

    >>> cosine_similarity(Tensor([1.0, 0.0]), Tensor([0.0, 2.0])).item()
    0.0
    """
    u, v = as_tensor(u), as_tensor(v)
    if u.ndim != 1 or u.shape != v.shape or u.size < 1:
        raise ShapeError(
            f"cosine_similarity: expected equal-length vectors, got {u.shape} "
            f"and {v.shape}"
        )
    ru = float(np.linalg.norm(u.data))
    rv = float(np.linalg.norm(v.data))
    nu, nv = max(ru, floor), max(rv, floor)
    dot = float(u.data @ v.data)
    out = Tensor(dot / (nu * nv))

    def vjp(g: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        gs = float(g)
        gu = v.data / (nu * nv)
        gv = u.data / (nu * nv)
        if ru >= floor:
            gu = gu - dot * u.data / (nu ** 3 * nv)
        if rv >= floor:
            gv = gv - dot * v.data / (nu * nv ** 3)
        return gs * gu, gs * gv

    return record('cosine', (u, v), out, vjp)


def detach(x: Tensor) -> Tensor:
    """
    Constant copy of ``x`` that stops gradient flow.
    """
    return Tensor(x.data)
