import numpy as np
import pytest

from smqtk_attribute_embedding.autodiff.adam import AdamState, adam_step
from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ContractError, ShapeError


def _param(values: np.ndarray, grad: np.ndarray, name: str = 'w') -> Tensor:
    t = Tensor(values, requires_grad=True, name=name)
    t.grad = np.array(grad, dtype=np.float64)
    return t


def test_zero_gradient_fresh_state() -> None:
    """ A zero gradient on fresh moments leaves parameters unchanged. """
    values = np.array([1.0, -2.0, 3.0])
    updated, state = adam_step({'w': _param(values, np.zeros(3))}, AdamState(lr=0.1))
    np.testing.assert_array_equal(updated['w'].data, values)
    assert state.step == 1


def test_first_step_magnitude() -> None:
    """
    Bias correction makes the first step ``lr * g / (|g| + eps)`` per
    coordinate.
    """
    lr, eps = 0.1, 1e-8
    values = np.array([1.0, 1.0, 1.0])
    g = np.array([0.5, -2.0, 1e-3])
    updated, _ = adam_step({'w': _param(values, g)}, AdamState(lr=lr, eps=eps))
    np.testing.assert_allclose(updated['w'].data, values - lr * g / (np.abs(g) + eps),
                               rtol=1e-12)


def test_update_clears_gradients() -> None:
    p = _param(np.ones(2), np.ones(2))
    updated, _ = adam_step({'w': p}, AdamState())
    assert p.grad is None
    assert updated['w'].requires_grad
    assert updated['w'].name == 'w'


def test_missing_gradient() -> None:
    p = Tensor(np.ones(2), requires_grad=True)
    with pytest.raises(ContractError, match=r"'bias' has no gradient"):
        adam_step({'bias': p}, AdamState())


def test_moment_shape_mismatch() -> None:
    state = AdamState()
    state.m['w'] = np.zeros(3)
    state.v['w'] = np.zeros(3)
    with pytest.raises(ShapeError, match=r"'w'"):
        adam_step({'w': _param(np.ones(2), np.ones(2))}, state)


def test_determinism() -> None:
    """ Identical gradients and settings give bit-identical parameters. """
    rng = np.random.default_rng(0)
    values = rng.normal(size=(3, 2))
    grads = [rng.normal(size=(3, 2)) for _ in range(5)]

    def run() -> np.ndarray:
        state = AdamState(lr=0.01)
        p = values
        for g in grads:
            updated, state = adam_step({'w': _param(p, g)}, state)
            p = updated['w'].data
        return p

    np.testing.assert_array_equal(run(), run())


def test_moments_round_trip() -> None:
    state = AdamState()
    adam_step({'w': _param(np.ones(2), [0.5, -0.5]),
               'b': _param(np.zeros(1), [1.0])}, state)
    restored = AdamState()
    restored.load_moments(state.step, state.moments())
    assert restored.step == 1
    assert set(restored.m) == {'w', 'b'}
    for k in state.m:
        np.testing.assert_array_equal(restored.m[k], state.m[k])
        np.testing.assert_array_equal(restored.v[k], state.v[k])
