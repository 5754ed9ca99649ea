from typing import Hashable, Optional, Tuple

import numpy as np

from smqtk_attribute_embedding.exceptions import NoEmbeddingError
from smqtk_attribute_embedding.interfaces.embedding_element import EmbeddingElement


class MemoryEmbeddingElement (EmbeddingElement):  # lgtm[py/missing-equals]
    """
    In-memory backend of the EmbeddingElement interface. No persistence;
    indices write their elements out themselves.
    """

    __slots__ = ('_f_g', '_f_l')

    @classmethod
    def is_usable(cls) -> bool:
        return True

    def __init__(self, uuid: Hashable) -> None:
        super(MemoryEmbeddingElement, self).__init__(uuid)
        self._f_g: Optional[np.ndarray] = None
        self._f_l: Optional[np.ndarray] = None

    def __getstate__(self) -> dict:
        return {
            'parent': super(MemoryEmbeddingElement, self).__getstate__(),
            'f_g': self._f_g,
            'f_l': self._f_l,
        }

    def __setstate__(self, state: dict) -> None:
        super(MemoryEmbeddingElement, self).__setstate__(state['parent'])
        self._f_g = state['f_g']
        self._f_l = state['f_l']

    def get_config(self) -> dict:
        # No additional constructor parameters for in-memory implementation.
        return {}

    def has_embedding(self) -> bool:
        return self._f_g is not None and self._f_l is not None

    def get_embedding(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._f_g is None or self._f_l is None:
            raise NoEmbeddingError("Missing embedding for in-memory element with UUID {}"
                                   .format(self.uuid))
        return self._f_g, self._f_l

    def set_embedding(self, f_g: np.ndarray, f_l: np.ndarray) -> "MemoryEmbeddingElement":
        f_g = np.array(f_g, dtype=np.float64)
        f_l = np.array(f_l, dtype=np.float64)
        if f_g.ndim != 1 or f_g.shape != f_l.shape or f_g.size < 1:
            raise ValueError("Global and local vectors must be equal-length 1-D "
                             "arrays. Given shapes {} and {}."
                             .format(f_g.shape, f_l.shape))
        if not (np.isfinite(f_g).all() and np.isfinite(f_l).all()):
            raise ValueError("Embedding vectors must be finite.")
        f_g.setflags(write=False)
        f_l.setflags(write=False)
        self._f_g = f_g
        self._f_l = f_l
        return self
