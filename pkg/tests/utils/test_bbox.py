import pytest

from smqtk_attribute_embedding.utils.bbox import (
    bbox_bounds,
    bbox_contains,
    bbox_height,
    bbox_width,
    bbox_within,
    make_bbox,
)


def test_inclusive_extents() -> None:
    box = make_bbox(2, 3, 4, 8)
    assert bbox_bounds(box) == (2, 3, 4, 8)
    assert bbox_height(box) == 3
    assert bbox_width(box) == 6


def test_point_box() -> None:
    box = make_bbox(5, 5, 5, 5)
    assert bbox_height(box) == bbox_width(box) == 1


def test_inverted_box() -> None:
    with pytest.raises(ValueError):
        make_bbox(3, 0, 2, 0)


def test_within_and_contains() -> None:
    outer = make_bbox(0, 0, 7, 7)
    assert bbox_within(outer, 8)
    assert not bbox_within(outer, 7)
    assert bbox_contains(outer, make_bbox(1, 2, 7, 3))
    assert not bbox_contains(make_bbox(1, 2, 7, 3), outer)
