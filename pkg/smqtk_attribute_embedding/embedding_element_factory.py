from typing import Hashable, Type

from smqtk_core import Configurable
from smqtk_core.configuration import (
    cls_conf_from_config_dict,
    cls_conf_to_config_dict,
    make_default_config,
)
from smqtk_core.dict import merge_dict

from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement


class EmbeddingElementFactory (Configurable):
    """
    Factory class for producing EmbeddingElement instances of a specified
    type and configuration.
    """

    __slots__ = ('_elem_type', '_elem_config')

    @classmethod
    def get_default_config(cls) -> dict:
        # Override from Configurable
        return make_default_config(EmbeddingElement.get_impls())

    @classmethod
    def from_config(cls, config_dict: dict, merge_default: bool = True) -> "EmbeddingElementFactory":
        # Override from Configurable
        if merge_default:
            config_dict = merge_dict(cls.get_default_config(), config_dict)

        elem_type, elem_conf = cls_conf_from_config_dict(
            config_dict, EmbeddingElement.get_impls()
        )
        return EmbeddingElementFactory(elem_type, elem_conf)

    def __init__(self, elem_type: Type[EmbeddingElement], elem_config: dict) -> None:
        """
        :param elem_type: Instantiable type of EmbeddingElement to produce.
        :param elem_config: JSON-compliant configuration handed to the type's
            ``from_config``. A ``uuid`` key, if present, is ignored.
        """
        self._elem_type = elem_type
        self._elem_config = elem_config

    def get_config(self) -> dict:
        return cls_conf_to_config_dict(self._elem_type, self._elem_config)

    def new_embedding(self, uuid: Hashable) -> EmbeddingElement:
        """
        Create a new, empty EmbeddingElement of the configured implementation.

        :param uuid: UUID to assign the element.
        """
        # noinspection PyUnresolvedReferences
        return self._elem_type.from_config(self._elem_config, uuid)

    __call__ = new_embedding
