import numpy as np
import pytest

from smqtk_attribute_embedding.autodiff import ops
from smqtk_attribute_embedding.autodiff.tensor import Tape, Tensor, active_tape, backward
from smqtk_attribute_embedding.exceptions import ContractError
from smqtk_attribute_embedding.utils.gradcheck import max_gradient_error


def test_data_read_only() -> None:
    """ Tensor values cannot be modified in place. """
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 3.0
    # numpy() hands out a writable copy.
    arr = t.numpy()
    arr[0] = 3.0
    assert t.data[0] == 1.0


def test_data_copied_and_cast() -> None:
    src = np.array([1, 2, 3], dtype=np.int32)
    t = Tensor(src)
    src[0] = 10
    assert t.data.dtype == np.float64
    assert t.data.tolist() == [1.0, 2.0, 3.0]


def test_item() -> None:
    assert Tensor(2.5).item() == 2.5
    assert Tensor([[4.0]]).item() == 4.0
    with pytest.raises(ContractError, match=r"single-valued"):
        Tensor([1.0, 2.0]).item()


def test_operator_sugar() -> None:
    t = Tensor([1.0, 2.0])
    assert (t + 1).data.tolist() == [2.0, 3.0]
    assert (1 + t).data.tolist() == [2.0, 3.0]
    assert (t - 1).data.tolist() == [0.0, 1.0]
    assert (3 - t).data.tolist() == [2.0, 1.0]
    assert (2 * t).data.tolist() == [2.0, 4.0]
    assert (t / 2).data.tolist() == [0.5, 1.0]
    assert (-t).data.tolist() == [-1.0, -2.0]
    assert (t @ t).item() == 5.0


def test_no_tape_records_nothing() -> None:
    """ Outside of a tape operations are plain numpy computations. """
    x = Tensor([1.0, 2.0], requires_grad=True)
    y = ops.mul(x, x)
    assert active_tape() is None
    assert y.requires_grad is False


def test_constants_not_recorded() -> None:
    """ Operations whose inputs need no gradient are not recorded. """
    with Tape() as tape:
        ops.add(Tensor([1.0]), Tensor([2.0]))
    assert len(tape) == 0


def test_backward_quadratic() -> None:
    """ Gradient of sum(x * x) is 2x. """
    x = Tensor([0.5, -1.5, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(x, x))
    backward(loss, tape)
    assert x.grad is not None
    np.testing.assert_allclose(x.grad, 2 * x.data)


def test_backward_accumulates_uses() -> None:
    """ A tensor used twice receives the sum of the per-use gradients. """
    x = Tensor([1.0, 2.0], requires_grad=True)
    w = Tensor([3.0, 4.0])
    v = Tensor([-1.0, 5.0])
    with Tape() as tape:
        loss = ops.add(ops.sum_all(ops.mul(x, w)), ops.sum_all(ops.mul(x, v)))
    backward(loss, tape)
    np.testing.assert_allclose(x.grad, w.data + v.data)


def test_backward_accumulates_across_calls() -> None:
    """ Existing gradients are added to, not replaced. """
    x = Tensor([1.0, 2.0], requires_grad=True)
    for _ in range(2):
        with Tape() as tape:
            loss = ops.sum_all(x)
        backward(loss, tape)
    np.testing.assert_allclose(x.grad, [2.0, 2.0])


def test_backward_constant_gets_no_grad() -> None:
    x = Tensor([1.0, 2.0], requires_grad=True)
    c = Tensor([3.0, 4.0])
    with Tape() as tape:
        loss = ops.sum_all(ops.mul(x, c))
    backward(loss, tape)
    assert c.grad is None


def test_backward_unused_parameter_gets_no_grad() -> None:
    x = Tensor([1.0], requires_grad=True)
    unused = Tensor([1.0], requires_grad=True)
    with Tape() as tape:
        loss = ops.sum_all(x)
    backward(loss, tape)
    assert unused.grad is None


def test_backward_non_scalar() -> None:
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.mul(x, 2.0)
    with pytest.raises(ContractError, match=r"scalar loss"):
        backward(y, tape)


def test_backward_loss_not_on_tape() -> None:
    with Tape() as tape:
        pass
    with pytest.raises(ContractError, match=r"not computed through"):
        backward(Tensor(1.0), tape)


def test_backward_tanh_finite_differences() -> None:
    """ Gradient of tanh(w . x) agrees with central finite differences. """
    rng = np.random.default_rng(3)
    err = max_gradient_error(lambda t: ops.tanh(ops.matmul(t[0], t[1])),
                             [rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5)])
    assert err < 1e-6


def test_tape_nesting() -> None:
    outer = Tape()
    inner = Tape()
    with outer:
        assert active_tape() is outer
        with inner:
            assert active_tape() is inner
        assert active_tape() is outer
    assert active_tape() is None


def test_tape_exit_out_of_order() -> None:
    t1 = Tape()
    t2 = Tape()
    t1.__enter__()
    t2.__enter__()
    try:
        with pytest.raises(ContractError, match=r"out of order"):
            t1.__exit__(None, None, None)
    finally:
        t2.__exit__(None, None, None)
        t1.__exit__(None, None, None)
    assert active_tape() is None
