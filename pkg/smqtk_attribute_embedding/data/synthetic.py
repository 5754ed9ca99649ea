"""
Procedural attribute dataset.

The image is divided into one horizontal band per attribute. Each band
shows a motif whose appearance encodes that attribute's value: a glyph, a
stripe pattern or a checkerboard depending on the attribute, in a colour and
shape picked by the value, placed with seeded jitter. Every image is labeled
for one attribute only; the other bands hold random values that are not
labeled, so an embedding for an attribute has to attend to its band.
"""
import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from smqtk_core import Configurable

from smqtk_attribute_embedding.data.images import save_image
from smqtk_attribute_embedding.data.manifest import (
    MANIFEST_NAME, AttributeSchema, DatasetManifest, ImageRecord, assign_splits
)
from smqtk_attribute_embedding.exceptions import ConfigError

LOG = logging.getLogger(__name__)

MAX_VALUES = 6
MOTIFS = ('glyph', 'stripes', 'checker')
BACKGROUND = 0.5

#: One colour per attribute value.
PALETTE = np.array([
    [0.95, 0.15, 0.10],
    [0.10, 0.80, 0.20],
    [0.15, 0.25, 0.95],
    [0.95, 0.90, 0.10],
    [0.90, 0.20, 0.90],
    [0.05, 0.05, 0.05],
])


def parse_attribute_spec(text: str) -> Tuple[List[str], List[int]]:
    """
    Parse ``name:count`` (or bare ``count``) entries separated by commas.

    >>> parse_attribute_spec('collar:3,4')
    (['collar', 'attr1'], [3, 4])
    """
    names, counts = [], []
    for i, entry in enumerate(e.strip() for e in text.split(',') if e.strip()):
        name, _, count = entry.rpartition(':')
        try:
            counts.append(int(count))
        except ValueError as ex:
            raise ConfigError(f"Bad attribute entry {entry!r}") from ex
        names.append(name or f"attr{i}")
    if not counts:
        raise ConfigError(f"No attributes in {text!r}")
    return names, counts


class SyntheticSpec (Configurable):
    """
    :param value_counts: Number of values of each attribute (2 to 6).
    :param names: Attribute names; defaults to ``attr<i>``.
    :param per_value: Images generated per attribute value.
    :param side: Image side in pixels.
    :param noise: Standard deviation of additive Gaussian pixel noise.
    :param seed: Generator seed.
    """

    def __init__(self, value_counts: Sequence[int] = (3, 3),
                 names: Optional[Sequence[str]] = None, per_value: int = 100,
                 side: int = 64, noise: float = 0.05, seed: int = 0) -> None:
        self.value_counts = [int(v) for v in value_counts]
        self.names = list(names) if names else [f"attr{i}" for i in range(len(self.value_counts))]
        self.per_value = int(per_value)
        self.side = int(side)
        self.noise = float(noise)
        self.seed = int(seed)
        if not self.value_counts or len(self.names) != len(self.value_counts):
            raise ConfigError("Need one name per attribute and at least one attribute")
        for name in self.names:
            if not name or any(ch.isspace() for ch in name):
                raise ConfigError(f"Attribute name {name!r} must be a non-empty word")
        if any(not 2 <= v <= MAX_VALUES for v in self.value_counts):
            raise ConfigError(
                f"Every attribute needs 2 to {MAX_VALUES} values, got {self.value_counts}"
            )
        if self.per_value < 2:
            raise ConfigError(f"Need at least 2 images per value, got {per_value}")
        if self.side < 8 * len(self.value_counts):
            raise ConfigError(f"Side {side} too small for {len(self.value_counts)} bands")
        if self.noise < 0:
            raise ConfigError(f"Noise level must be non-negative, got {noise}")

    def get_config(self) -> Dict[str, Any]:
        return {
            "value_counts": list(self.value_counts),
            "names": list(self.names),
            "per_value": self.per_value,
            "side": self.side,
            "noise": self.noise,
            "seed": self.seed,
        }

    @property
    def num_images(self) -> int:
        return self.per_value * sum(self.value_counts)


def band_rows(attribute_id: int, num_attributes: int, side: int) -> Tuple[int, int]:
    """
    ``[start, stop)`` rows of an attribute's band.
    """
    h = side // num_attributes
    start = attribute_id * h
    stop = side if attribute_id == num_attributes - 1 else start + h
    return start, stop


def _glyph_mask(value: int, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    t = max(1, size // 4)
    if value == 0:
        return np.ones((size, size), dtype=bool)
    if value == 1:
        return (yy < t) | (yy >= size - t) | (xx < t) | (xx >= size - t)
    if value == 2:
        mid = size // 2
        return (abs(yy - mid) < t / 2 + 0.5) | (abs(xx - mid) < t / 2 + 0.5)
    if value == 3:
        return abs(yy - xx) < t
    if value == 4:
        return (yy + xx) < size
    return ((yy - size / 2 + 0.5) ** 2 + (xx - size / 2 + 0.5) ** 2) <= (size / 2) ** 2


def render_band(canvas: np.ndarray, motif: str, value: int, rows: Tuple[int, int],
                rng: np.random.Generator) -> None:
    """
    Draw one attribute's motif into its band of a ``[3, s, s]`` canvas.
    Always consumes two jitter draws from ``rng``.
    """
    r0, r1 = rows
    band_h, side = r1 - r0, canvas.shape[2]
    dy, dx = rng.integers(0, 1 << 16, size=2)
    colour = PALETTE[value][:, None, None]
    if motif == 'glyph':
        size = max(4, band_h // 2)
        top = r0 + int(dy % (band_h - size + 1))
        left = int(dx % (side - size + 1))
        mask = _glyph_mask(value, size)
        region = canvas[:, top:top + size, left:left + size]
        region[:] = np.where(mask[None], colour, region)
        return
    yy, xx = np.mgrid[0:band_h, 0:side]
    if motif == 'stripes':
        period = 2 + 2 * (value % 3)
        coord = xx if value < 3 else yy
        mask = ((coord + int(dx % period)) // (period // 2)) % 2 == 0
    else:
        cell = 2 + value
        mask = (((yy + int(dy % cell)) // cell + (xx + int(dx % cell)) // cell) % 2) == 0
    region = canvas[:, r0:r1, :]
    region[:] = np.where(mask[None], colour, region)


def render_image(values: Sequence[int], side: int, noise: float,
                 rng: np.random.Generator) -> np.ndarray:
    """
    ``[3, side, side]`` image in ``[0, 1]`` showing ``values[a]`` in the band
    of attribute ``a``.
    """
    n = len(values)
    canvas = np.full((3, side, side), BACKGROUND)
    for attr, value in enumerate(values):
        render_band(canvas, MOTIFS[attr % len(MOTIFS)], int(value),
                    band_rows(attr, n, side), rng)
    if noise > 0:
        canvas = canvas + rng.normal(0.0, noise, canvas.shape)
    return np.clip(canvas, 0.0, 1.0)


def generate_synthetic_dataset(spec: SyntheticSpec, out_dir: str) -> DatasetManifest:
    """
    Render ``spec.num_images`` images under ``out_dir/images`` and write
    ``out_dir/manifest.txt``. Output is a pure function of ``spec``.
    """
    os.makedirs(os.path.join(out_dir, 'images'), exist_ok=True)
    n = len(spec.value_counts)
    split_rng = np.random.default_rng(spec.seed)
    records = []
    image_id = 0
    for attr, count in enumerate(spec.value_counts):
        for value in range(count):
            group = list(range(image_id, image_id + spec.per_value))
            tags = assign_splits(group, split_rng)
            for gid in group:
                rng = np.random.default_rng([spec.seed, gid])
                values = [int(rng.integers(0, c)) for c in spec.value_counts]
                values[attr] = value
                image = render_image(values, spec.side, spec.noise, rng)
                rel = f"images/{gid:05d}.ppm"
                save_image(image, os.path.join(out_dir, rel))
                split, role = tags[gid]
                records.append(ImageRecord(gid, rel, split, role, {attr: value}))
            image_id += spec.per_value
    attributes = [AttributeSchema(i, spec.names[i], spec.value_counts[i]) for i in range(n)]
    manifest = DatasetManifest(attributes, records, out_dir)
    manifest.write(os.path.join(out_dir, MANIFEST_NAME))
    LOG.info(f"Generated {len(records)} images over {n} attribute(s) in {out_dir}")
    return manifest
