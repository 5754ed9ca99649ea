from typing import Optional, Set

import numpy as np
from smqtk_dataprovider import DataElement
from smqtk_image_io import AxisAlignedBoundingBox
from smqtk_image_io.interfaces.image_reader import ImageReader

from smqtk_attribute_embedding.utils.bbox import bbox_bounds
from smqtk_attribute_embedding.utils.pnm import GRAYMAP_MAGIC, PIXMAP_MAGIC, decode_pnm


class PnmImageReader (ImageReader):
    """
    ``ImageReader`` for binary 8-bit pixmaps and graymaps, decoded without
    any imaging library.

    Crop boxes follow this package's ``(row, col)`` inclusive convention.
    """

    @classmethod
    def is_usable(cls) -> bool:
        return True

    def get_config(self) -> dict:
        return {}

    def valid_content_types(self) -> Set[str]:
        return {
            'image/x-portable-pixmap',
            'image/x-portable-graymap',
            'image/x-portable-anymap',
        }

    def is_valid_element(self, data_element: DataElement) -> bool:
        """
        Accept a PNM content type, or content that opens with the P6 or P5
        magic when the element reports no usable type (for example a file
        path without a PNM extension).
        """
        if super().is_valid_element(data_element):
            return True
        return data_element.get_bytes()[:2] in (PIXMAP_MAGIC, GRAYMAP_MAGIC)

    def _load_as_matrix(
        self,
        data_element: DataElement,
        pixel_crop: Optional[AxisAlignedBoundingBox] = None
    ) -> np.ndarray:
        """
        :raises FormatError: Malformed file.
        """
        mat = decode_pnm(data_element.get_bytes())
        if pixel_crop is not None:
            r0, c0, r1, c1 = bbox_bounds(pixel_crop)
            mat = mat[r0:r1 + 1, c0:c1 + 1]
        return mat
