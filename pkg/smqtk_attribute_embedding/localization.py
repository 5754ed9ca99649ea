"""
Weakly-supervised region-of-interest extraction.

The global branch's spatial attention map is up-sampled to the image size,
thresholded relative to its maximum, split into connected regions, and the
minimal box around the selected regions is squared up, cropped and zoomed to
the local branch input size.
"""
import logging
from typing import Any, Dict, FrozenSet, List, NamedTuple, Tuple, Union

import numpy as np
from scipy import ndimage
from smqtk_core import Configurable

from smqtk_attribute_embedding.autodiff.tensor import Tensor
from smqtk_attribute_embedding.exceptions import ConfigError, ContractError
from smqtk_attribute_embedding.utils.bbox import (
    AxisAlignedBoundingBox, bbox_bounds, make_bbox
)
from smqtk_attribute_embedding.utils.resample import bilinear_resize

LOG = logging.getLogger(__name__)

Pixel = Tuple[int, int]
MapLike = Union[Tensor, np.ndarray]

REGION_MODES = ('all', 'top1', 'top2')


class Region (NamedTuple):
    pixels: FrozenSet[Pixel]
    area: int


class LocalizationConfig (Configurable):
    """
    :param tau: Relative threshold in (0, 1]; pixels at or above
        ``tau * max`` are kept.
    :param connectivity: 4 or 8 neighbourhood for connected regions.
    :param region_mode: ``all`` keeps every region, ``top1`` the largest,
        ``top2`` the two largest.
    :param min_side: Smallest RoI side in pixels.
    :param local_input_side: Side of the RoI handed to the local branch.
    """

    def __init__(self, tau: float = 0.5, connectivity: int = 8,
                 region_mode: str = 'all', min_side: int = 8,
                 local_input_side: int = 32) -> None:
        self.tau = float(tau)
        self.connectivity = int(connectivity)
        self.region_mode = region_mode
        self.min_side = int(min_side)
        self.local_input_side = int(local_input_side)
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {tau}")
        if self.connectivity not in (4, 8):
            raise ConfigError(f"connectivity must be 4 or 8, got {connectivity}")
        if region_mode not in REGION_MODES:
            raise ConfigError(
                f"region_mode must be one of {REGION_MODES}, got {region_mode!r}"
            )
        if self.min_side < 1 or self.local_input_side < self.min_side:
            raise ConfigError(
                f"Need 1 <= min_side ({min_side}) <= local_input_side "
                f"({local_input_side})"
            )

    def get_config(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "connectivity": self.connectivity,
            "region_mode": self.region_mode,
            "min_side": self.min_side,
            "local_input_side": self.local_input_side,
        }


def _as_array(values: MapLike) -> np.ndarray:
    return values.data if isinstance(values, Tensor) else np.asarray(values, dtype=np.float64)


def binarize(attention: MapLike, tau: float) -> np.ndarray:
    """
    Boolean map of the pixels at or above ``tau * max(attention)``. The
    maximum itself always qualifies.

    >>> binarize(np.array([[0.8, 0.3], [0.4, 0.1]]), 0.5).astype(int).tolist()
    [[1, 0], [1, 0]]
    """
    arr = _as_array(attention)
    peak = arr.max()
    binary = arr >= tau * peak
    # tau * max can exceed max for negative maps.
    binary[np.unravel_index(np.argmax(arr), arr.shape)] = True
    return binary


def connected_components(binary: np.ndarray, connectivity: int = 8) -> List[Region]:
    """
    Maximal connected regions of the true pixels, largest first; equal areas
    keep the raster order of their first pixel.
    """
    binary = np.asarray(binary, dtype=bool)
    if connectivity not in (4, 8):
        raise ContractError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = ndimage.generate_binary_structure(2, 1 if connectivity == 4 else 2)
    labels, count = ndimage.label(binary, structure=structure)
    regions = []
    # scipy numbers labels in raster order of first occurrence.
    for label in range(1, count + 1):
        rows, cols = np.nonzero(labels == label)
        pixels = frozenset(zip(rows.tolist(), cols.tolist()))
        regions.append(Region(pixels, len(pixels)))
    regions.sort(key=lambda r: -r.area)
    return regions


def region_bbox(pixels: Any) -> AxisAlignedBoundingBox:
    """
    Tightest inclusive box around a set of ``(row, col)`` pixels.

    :raises ContractError: Empty pixel set.

    >>> bbox_bounds(region_bbox({(1, 2), (3, 5)}))
    (1, 2, 3, 5)
    """
    if not pixels:
        raise ContractError("region_bbox requires a non-empty pixel set")
    arr = np.asarray(list(pixels), dtype=int)
    r0, c0 = arr.min(axis=0)
    r1, c1 = arr.max(axis=0)
    return make_bbox(r0, c0, r1, c1)


def _extend(lo: int, hi: int, side: int, image_side: int) -> Tuple[int, int]:
    extra = side - (hi - lo + 1)
    lo -= extra // 2
    hi += extra - extra // 2
    if lo < 0:
        hi -= lo
        lo = 0
    if hi > image_side - 1:
        lo -= hi - (image_side - 1)
        hi = image_side - 1
    return lo, hi


def squarify(box: AxisAlignedBoundingBox, image_side: int, min_side: int) -> AxisAlignedBoundingBox:
    """
    Square box of side ``max(height, width, min_side)`` (at most
    ``image_side``) centred on ``box``. The odd leftover pixel goes to the
    high-index side; a square leaving the image is shifted back inside.

    >>> bbox_bounds(squarify(make_bbox(4, 2, 5, 7), 10, 1))
    (2, 2, 7, 7)
    >>> bbox_bounds(squarify(make_bbox(0, 0, 1, 5), 8, 1))
    (0, 0, 5, 5)
    """
    r0, c0, r1, c1 = bbox_bounds(box)
    side = min(max(r1 - r0 + 1, c1 - c0 + 1, min_side), image_side)
    r0, r1 = _extend(r0, r1, side, image_side)
    c0, c1 = _extend(c0, c1, side, image_side)
    return make_bbox(r0, c0, r1, c1)


def crop_resize(image: MapLike, box: AxisAlignedBoundingBox, out_side: int) -> Tensor:
    """
    Crop a ``[3, s, s]`` image to a square box and resample it bilinearly to
    ``[3, out_side, out_side]``. The result is a fresh constant tensor.

    :raises ContractError: Box not square or not inside the image.
    """
    arr = _as_array(image)
    r0, c0, r1, c1 = bbox_bounds(box)
    if r1 - r0 != c1 - c0:
        raise ContractError(f"crop_resize requires a square box, got {(r0, c0, r1, c1)}")
    if r0 < 0 or c0 < 0 or r1 >= arr.shape[-2] or c1 >= arr.shape[-1]:
        raise ContractError(
            f"Box {(r0, c0, r1, c1)} exceeds image of shape {arr.shape}"
        )
    crop = arr[..., r0:r1 + 1, c0:c1 + 1]
    return Tensor(bilinear_resize(crop, out_side, out_side))


def select_pixels(regions: List[Region], region_mode: str) -> FrozenSet[Pixel]:
    if region_mode == 'top1':
        chosen = regions[:1]
    elif region_mode == 'top2':
        chosen = regions[:2]
    elif region_mode == 'all':
        chosen = regions
    else:
        raise ContractError(f"Unknown region_mode {region_mode!r}")
    return frozenset().union(*(r.pixels for r in chosen))


def localize_box(alpha_s: MapLike, image_side: int,
                 config: LocalizationConfig) -> AxisAlignedBoundingBox:
    """
    Square RoI box in image coordinates derived from a spatial attention
    map.
    """
    upsampled = bilinear_resize(alpha_s, image_side, image_side)
    binary = binarize(upsampled, config.tau)
    regions = connected_components(binary, config.connectivity)
    box = squarify(region_bbox(select_pixels(regions, config.region_mode)),
                   image_side, config.min_side)
    LOG.debug(f"RoI {bbox_bounds(box)} from {len(regions)} region(s)")
    return box


def localize(image: MapLike, alpha_s: MapLike, config: LocalizationConfig) -> Tensor:
    """
    Zoomed ``[3, L, L]`` RoI of ``image`` where ``L`` is
    ``config.local_input_side``.
    """
    side = _as_array(image).shape[-1]
    box = localize_box(alpha_s, side, config)
    return crop_resize(image, box, config.local_input_side)
