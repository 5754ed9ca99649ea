"""
Pixel-box helpers over ``smqtk_image_io.AxisAlignedBoundingBox``.

Boxes in this package use ``(row, col)`` vertex order with *inclusive* max
vertices, i.e. ``min_vertex = (row0, col0)`` and ``max_vertex = (row1, col1)``
both name pixels that belong to the box.
"""
from typing import Tuple

from smqtk_image_io import AxisAlignedBoundingBox  # noqa: F401

Bounds = Tuple[int, int, int, int]


def make_bbox(row0: int, col0: int, row1: int, col1: int) -> AxisAlignedBoundingBox:
    """
    :raises ValueError: ``row1 < row0`` or ``col1 < col0``.
    """
    return AxisAlignedBoundingBox([int(row0), int(col0)], [int(row1), int(col1)])


def bbox_bounds(bbox: AxisAlignedBoundingBox) -> Bounds:
    """
    :return: ``(row0, col0, row1, col1)`` as plain ints.
    """
    r0, c0 = (int(round(v)) for v in bbox.min_vertex)
    r1, c1 = (int(round(v)) for v in bbox.max_vertex)
    return r0, c0, r1, c1


def bbox_height(bbox: AxisAlignedBoundingBox) -> int:
    r0, _, r1, _ = bbox_bounds(bbox)
    return r1 - r0 + 1


def bbox_width(bbox: AxisAlignedBoundingBox) -> int:
    _, c0, _, c1 = bbox_bounds(bbox)
    return c1 - c0 + 1


def bbox_within(bbox: AxisAlignedBoundingBox, side: int) -> bool:
    """
    Whether the box lies inside a ``side x side`` image.
    """
    r0, c0, r1, c1 = bbox_bounds(bbox)
    return 0 <= r0 and 0 <= c0 and r1 < side and c1 < side


def bbox_contains(outer: AxisAlignedBoundingBox, inner: AxisAlignedBoundingBox) -> bool:
    o = bbox_bounds(outer)
    i = bbox_bounds(inner)
    return o[0] <= i[0] and o[1] <= i[1] and i[2] <= o[2] and i[3] <= o[3]
