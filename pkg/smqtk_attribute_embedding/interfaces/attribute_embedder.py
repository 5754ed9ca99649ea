import abc
from typing import Iterable, Tuple

import numpy as np

from smqtk_core import Configurable, Pluggable


class AttributeEmbedder (Configurable, Pluggable):
    """
    Algorithm that maps input image matrices, as ``numpy.ndarray`` type
    arrays, to a pair of global and local vectors specific to one attribute.
    """

    @property
    @abc.abstractmethod
    def input_side(self) -> int:
        """
        Square side, in pixels, the model consumes. Larger or non-square
        images are scaled on their short edge and center-cropped.
        """

    @abc.abstractmethod
    def embed_images(
      self,
      img_iter: Iterable[np.ndarray],
      attribute_id: int
    ) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        """
        Generate paired ``(f_g, f_l)`` vectors under ``attribute_id`` for the
        given set of images.

        :param img_iter: Iterable of ``[h, w, 3]`` or ``[h, w]`` 8-bit images.
        :param attribute_id: Attribute the vectors are specific to.

        :return: One pair per input image, in input order.
        """

    def __call__(
      self,
      img_iter: Iterable[np.ndarray],
      attribute_id: int
    ) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        """
        Calls `embed_images()` with the given iterable set of images.
        """

        return self.embed_images(img_iter, attribute_id)
