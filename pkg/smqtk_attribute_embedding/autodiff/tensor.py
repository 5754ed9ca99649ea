"""
Dense float64 tensors and the tape that records operations on them for
reverse-mode differentiation.
"""
import threading
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from smqtk_attribute_embedding.exceptions import ContractError, ShapeError

#: Signature of a recorded vector-Jacobian product: maps the gradient of an
#: operation output to one gradient (or None) per operation input.
VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor (object):
    """
    Dense, row-major, 64-bit real array with an optional gradient.

    The value array is read-only once the tensor exists. Only ``grad`` is
    mutated, and only by :func:`backward` (accumulation) or by the optimizer
    clearing it.

    :param data: Array-like value. Always copied and cast to float64.
    :param requires_grad: Whether gradients should be computed for this
        tensor when it takes part in a recorded operation.
    :param name: Optional label used in error messages.
    """

    __slots__ = ('_data', 'requires_grad', 'grad', 'name')

    def __init__(self, data: Any, requires_grad: bool = False,
                 name: Optional[str] = None) -> None:
        arr = np.array(data, dtype=np.float64)
        arr.setflags(write=False)
        self._data = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    def item(self) -> float:
        """
        :raises ContractError: The tensor holds more than one value.
        :return: The single value of a scalar tensor.
        """
        if self._data.size != 1:
            raise ContractError(
                f"item() requires a single-valued tensor, got shape {self.shape}"
            )
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """
        :return: Writable copy of the values.
        """
        return self._data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return (f"{self.__class__.__name__}(shape={self.shape}, "
                f"requires_grad={self.requires_grad}{label})")

    # Arithmetic sugar. The implementations live in ``ops`` which imports
    # this module, hence the local imports.

    def __add__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.mul(other, self)

    def __truediv__(self, other: float) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.mul(self, 1.0 / float(other))

    def __neg__(self) -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from smqtk_attribute_embedding.autodiff import ops
        return ops.matmul(self, other)


def as_tensor(value: Any) -> Tensor:
    """
    Wrap non-tensor values as constant (non-differentiable) tensors.
    """
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class TapeNode (NamedTuple):
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VJP
    op: str


_ACTIVE = threading.local()


def _tape_stack() -> List["Tape"]:
    stack = getattr(_ACTIVE, 'stack', None)
    if stack is None:
        stack = _ACTIVE.stack = []
    return stack


class Tape (object):
    """
    Ordered record of the differentiable operations executed while the tape
    is active (``with Tape() as tape: ...``).

    Operations are appended in execution order, so every node's inputs are
    either leaves or outputs of earlier nodes. The active tape is tracked per
    thread; a tape and the tensors recorded on it belong to one execution
    stream.
    """

    __slots__ = ('_nodes',)

    def __init__(self) -> None:
        self._nodes: List[TapeNode] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *_: Any) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("Tape exited out of order.")
        stack.pop()

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def nodes(self) -> Tuple[TapeNode, ...]:
        return tuple(self._nodes)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor,
               vjp: VJP) -> None:
        self._nodes.append(TapeNode(tuple(inputs), output, vjp, op))


def active_tape() -> Optional[Tape]:
    """
    :return: The innermost tape active on this thread, if any.
    """
    stack = _tape_stack()
    return stack[-1] if stack else None


def record(op: str, inputs: Sequence[Tensor], output: Tensor, vjp: VJP) -> Tensor:
    """
    Record ``output = op(*inputs)`` on the active tape when any input needs
    a gradient. The output is then marked as requiring a gradient too.

    :return: ``output`` for chaining.
    """
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        output.requires_grad = True
        tape.record(op, inputs, output, vjp)
    return output


def backward(loss: Tensor, tape: Tape) -> None:
    """
    Propagate d(loss)/d(node) backwards through ``tape``.

    Every leaf tensor (one not produced by a recorded node) that requires a
    gradient and contributed to ``loss`` has the gradient added to its
    ``grad`` attribute. Uses of the same tensor accumulate additively.

    :param loss: Single-valued tensor produced through ``tape``.
    :param tape: Tape the loss was computed on.

    :raises ContractError: ``loss`` is not single-valued, or was not produced
        through the tape and is not itself a differentiable leaf.
    """
    if loss.size != 1:
        raise ContractError(
            f"backward() requires a scalar loss, got shape {loss.shape}"
        )
    nodes = tape.nodes
    produced = {id(n.output) for n in nodes}
    if id(loss) not in produced and not loss.requires_grad:
        raise ContractError("Loss was not computed through the given tape.")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones(loss.shape)}
    leaves: Dict[int, Tensor] = {}
    if id(loss) not in produced:
        leaves[id(loss)] = loss

    for node in reversed(nodes):
        g_out = grads.pop(id(node.output), None)
        if g_out is None:
            continue
        for t, g_in in zip(node.inputs, node.vjp(g_out)):
            if g_in is None or not t.requires_grad:
                continue
            if g_in.shape != t.shape:
                raise ShapeError(
                    f"Gradient of shape {g_in.shape} for input of shape "
                    f"{t.shape} in op '{node.op}'"
                )
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g_in
            else:
                grads[key] = g_in
            if key not in produced:
                leaves[key] = t

    for key, t in leaves.items():
        g = grads[key]
        t.grad = g.copy() if t.grad is None else t.grad + g
