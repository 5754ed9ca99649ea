from typing import Any, Dict, Tuple
import unittest.mock as mock

import numpy as np
import pytest

from smqtk_attribute_embedding.exceptions import NoEmbeddingError
from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement


###############################################################################
# Helper classes and methods

class StubEmbeddingElement (EmbeddingElement):
    """
    Minimal concrete element for exercising the methods the abstract parent
    implements. Abstract methods are declared only.
    """

    @classmethod
    def is_usable(cls) -> bool:
        return True

    def get_config(self) -> Dict[str, Any]:
        raise NotImplementedError()

    def __getstate__(self) -> Dict[Any, Any]:
        raise NotImplementedError()

    def __setstate__(self, state: Dict[Any, Any]) -> None:
        raise NotImplementedError()

    def has_embedding(self) -> bool:
        raise NotImplementedError()

    def get_embedding(self) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError()

    def set_embedding(self, f_g: np.ndarray, f_l: np.ndarray) -> EmbeddingElement:
        raise NotImplementedError()


def _holding(uuid: Any, f_g: list, f_l: list) -> StubEmbeddingElement:
    e = StubEmbeddingElement(uuid)
    e.get_embedding = mock.MagicMock(  # type: ignore
        return_value=(np.array(f_g), np.array(f_l)))
    return e


def _empty(uuid: Any) -> StubEmbeddingElement:
    e = StubEmbeddingElement(uuid)
    e.get_embedding = mock.MagicMock(side_effect=NoEmbeddingError)  # type: ignore
    return e


###############################################################################
# Tests

def test_construction_sets_uuid() -> None:
    m = mock.MagicMock(spec_set=EmbeddingElement)
    # noinspection PyCallByClass
    EmbeddingElement.__init__(m, (2, 17))
    assert m._uuid == (2, 17)


def test_default_config_has_no_uuid() -> None:
    assert 'uuid' not in EmbeddingElement.get_default_config()


@pytest.mark.parametrize("merge_default", [False, True])
def test_from_config_injects_runtime_uuid(merge_default: bool) -> None:
    """
    The runtime UUID reaches the constructor and replaces any configured one.
    """
    with mock.patch('smqtk_core.configuration.Configurable.from_config') as m_from_config:
        EmbeddingElement.from_config({'uuid': 'from config'}, (0, 4),
                                     merge_default=merge_default)
        m_from_config.assert_called_once_with({'uuid': (0, 4)}, merge_default=False)


def test_unhashable() -> None:
    with pytest.raises(TypeError, match="unhashable type"):
        hash(StubEmbeddingElement(0))


def test_eq_requires_embeddings() -> None:
    a = _empty(0)
    b = _empty(1)
    c = _holding(2, [1.0], [2.0])
    assert (a == b) is False
    assert (a == c) is False
    assert (c == a) is False
    assert (c != a) is True
    assert (c == "not an element") is False


def test_eq_compares_both_vectors() -> None:
    base = _holding(0, [1.0, 2.0], [3.0, 4.0])
    assert base == _holding(1, [1.0, 2.0], [3.0, 4.0])
    assert base != _holding(1, [1.0, 2.5], [3.0, 4.0])
    assert base != _holding(1, [1.0, 2.0], [3.0, 4.5])


@pytest.mark.parametrize("has", [True, False])
def test_bool_delegates_to_has_embedding(has: bool) -> None:
    inst = StubEmbeddingElement(0)
    inst.has_embedding = mock.MagicMock(return_value=has)  # type: ignore
    assert bool(inst) is has
    inst.has_embedding.assert_called_once_with()


def test_global_and_local_accessors() -> None:
    e = _holding(0, [1.0], [2.0])
    np.testing.assert_array_equal(e.get_global(), [1.0])
    np.testing.assert_array_equal(e.get_local(), [2.0])
    with pytest.raises(NoEmbeddingError):
        _empty(0).get_global()


def test_repr_and_uuid() -> None:
    e = StubEmbeddingElement((1, 9))
    assert e.uuid == (1, 9)
    assert repr(e) == "StubEmbeddingElement{uuid: (1, 9)}"


def test_state_round_trip() -> None:
    m = mock.MagicMock(spec_set=EmbeddingElement)
    m._uuid = 'abc'
    state = EmbeddingElement.__getstate__(m)
    assert state == {'_uuid': 'abc'}
    other = mock.MagicMock(spec_set=EmbeddingElement)
    # noinspection PyCallByClass
    EmbeddingElement.__setstate__(other, state)
    assert other._uuid == 'abc'
