import unittest.mock as mock

from smqtk_attribute_embedding.embedding_element_factory import EmbeddingElementFactory
from smqtk_attribute_embedding.impls.embedding_element.memory import MemoryEmbeddingElement
from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement


def _stub_impls() -> tuple:
    """ Two fake implementations that appear to live in this module. """
    impls = []
    for name in ('A', 'B'):
        t = mock.MagicMock(spec=EmbeddingElement)
        t.__name__ = name
        t.__module__ = __name__
        impls.append(t)
    return tuple(impls)


def test_default_config_lists_memory_impl() -> None:
    c = EmbeddingElementFactory.get_default_config()
    assert 'type' in c
    key = f"{MemoryEmbeddingElement.__module__}.MemoryEmbeddingElement"
    assert c[key] == {}


def test_from_config_without_merge() -> None:
    a, b = _stub_impls()
    with mock.patch.object(EmbeddingElementFactory, '__init__', return_value=None) as m_init, \
            mock.patch.object(EmbeddingElementFactory, 'get_default_config') as m_default, \
            mock.patch.object(EmbeddingElement, 'get_impls', return_value={a, b}):
        EmbeddingElementFactory.from_config(
            {'type': f'{__name__}.B', f'{__name__}.B': {'k': 1}}, merge_default=False
        )
        m_default.assert_not_called()
        m_init.assert_called_once_with(b, {'k': 1})


def test_from_config_with_merge() -> None:
    a, b = _stub_impls()
    with mock.patch.object(EmbeddingElementFactory, '__init__', return_value=None) as m_init, \
            mock.patch.object(EmbeddingElementFactory, 'get_default_config') as m_default, \
            mock.patch.object(EmbeddingElement, 'get_impls', return_value={a, b}):
        m_default.return_value = {
            'type': None,
            f'{__name__}.A': {'z': 0},
            f'{__name__}.B': {'y': 2},
        }
        EmbeddingElementFactory.from_config(
            {'type': f'{__name__}.B', f'{__name__}.B': {'k': 1}}, merge_default=True
        )
        m_default.assert_called_once()
        m_init.assert_called_once_with(b, {'k': 1, 'y': 2})


def test_get_config() -> None:
    a, _ = _stub_impls()
    # noinspection PyTypeChecker
    factory = EmbeddingElementFactory(a, {'k': 1})
    assert factory.get_config() == {'type': f'{__name__}.A', f'{__name__}.A': {'k': 1}}


def test_new_embedding_and_call_hook() -> None:
    elem_type = mock.MagicMock(spec=EmbeddingElement)
    # noinspection PyTypeChecker
    factory = EmbeddingElementFactory(elem_type, {'k': 1})
    assert factory.new_embedding((0, 1)) is elem_type.from_config.return_value
    elem_type.from_config.assert_called_once_with({'k': 1}, (0, 1))
    # noinspection PyArgumentList
    assert factory((0, 2)) is elem_type.from_config.return_value
    elem_type.from_config.assert_called_with({'k': 1}, (0, 2))


def test_memory_elements_round_trip_through_config() -> None:
    factory = EmbeddingElementFactory(MemoryEmbeddingElement, {})
    rebuilt = EmbeddingElementFactory.from_config(factory.get_config())
    e = rebuilt.new_embedding((1, 4))
    assert isinstance(e, MemoryEmbeddingElement)
    assert e.uuid == (1, 4)
    assert not e.has_embedding()
