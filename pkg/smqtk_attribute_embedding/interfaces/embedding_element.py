import abc
from typing import Any, Dict, Hashable, Tuple, Type

import numpy as np
from smqtk_core import Plugfigurable
from smqtk_core.dict import merge_dict

from smqtk_attribute_embedding.exceptions import NoEmbeddingError


class EmbeddingElement (Plugfigurable):
    """
    Paired global and local attribute-specific vectors of one image under one
    attribute.
    """

    __slots__ = ('_uuid',)

    @classmethod
    def get_default_config(cls) -> Dict[str, Any]:
        # Override from Configurable.
        default = super(EmbeddingElement, cls).get_default_config()
        # Remove runtime positional argument(s).
        del default['uuid']
        return default

    # noinspection PyMethodOverriding
    @classmethod
    def from_config(  # type: ignore
            cls: Type["EmbeddingElement"],
            config_dict: Dict[Any, Any],
            uuid: Hashable,
            merge_default: bool = True
            ) -> "EmbeddingElement":
        """
        Override of :meth:`smqtk_core.Configurable.from_config` with the added
        runtime argument ``uuid``.

        :param config_dict: JSON compliant dictionary encapsulating
            a configuration.
        :param uuid: UUID to assign to the produced EmbeddingElement.
        :param merge_default: Merge the given configuration on top of the
            default provided by ``get_default_config``.

        :return: Constructed instance from the provided config.
        """
        if merge_default:
            config_dict = merge_dict(cls.get_default_config(), config_dict)
        config_dict['uuid'] = uuid
        return super(EmbeddingElement, cls).from_config(config_dict,
                                                        merge_default=False)

    def __init__(self, uuid: Hashable) -> None:
        """
        All EmbeddingElement classes take a ``uuid`` as the first positional
        argument. It is only specified at runtime and must not appear in
        ``get_config`` returns.

        :param uuid: Unique reference of the element, conventionally
            ``(attribute_id, image_id)``.
        """
        super(EmbeddingElement, self).__init__()
        self._uuid = uuid

    __hash__ = None  # type: ignore

    def __eq__(self, other: Any) -> bool:
        """
        Two elements are equal when both hold bit-equal vector pairs. Empty
        elements are never equal to anything.
        """
        try:
            s_g, s_l = self.get_embedding()
            o_g, o_l = other.get_embedding()
        except (NoEmbeddingError, AttributeError):
            return False
        return bool(np.array_equal(s_g, o_g) and np.array_equal(s_l, o_l))

    def __ne__(self, other: Any) -> bool:
        return not (self == other)

    def __repr__(self) -> str:
        return "{:s}{{uuid: {}}}".format(self.__class__.__name__, self._uuid)

    def __bool__(self) -> bool:
        return self.has_embedding()

    @property
    def uuid(self) -> Hashable:
        return self._uuid

    #
    # Abstract methods
    #

    @abc.abstractmethod
    def __getstate__(self) -> dict:
        return {
            '_uuid': self._uuid,
        }

    @abc.abstractmethod
    def __setstate__(self, state: dict) -> None:
        self._uuid = state['_uuid']

    @abc.abstractmethod
    def has_embedding(self) -> bool:
        """
        :return: Whether both vectors are set.
        """

    @abc.abstractmethod
    def get_embedding(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        :return: The ``(f_g, f_l)`` pair.

        :raises NoEmbeddingError: Nothing set yet.
        """

    @abc.abstractmethod
    def set_embedding(self, f_g: np.ndarray, f_l: np.ndarray) -> "EmbeddingElement":
        """
        Store a vector pair.

        :param f_g: Global attribute-specific vector.
        :param f_l: Local attribute-specific vector of the same length.

        :raises ValueError: Vectors are not finite, not 1-D, or differ in
            length.

        :return: Self
        """

    def get_global(self) -> np.ndarray:
        return self.get_embedding()[0]

    def get_local(self) -> np.ndarray:
        return self.get_embedding()[1]
