"""
Brute-force reference implementations used to cross-check the vectorized
code paths (test suite and ``selftest``).
"""
from collections import deque
from typing import FrozenSet, List, Sequence, Set, Tuple

import numpy as np

Pixel = Tuple[int, int]

_NEIGHBORS = {
    4: ((-1, 0), (1, 0), (0, -1), (0, 1)),
    8: ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)),
}


def flood_fill_components(binary: np.ndarray, connectivity: int) -> List[FrozenSet[Pixel]]:
    """
    Breadth-first labelling of the 1-pixels, seeded in raster order.
    """
    h, w = binary.shape
    seen: Set[Pixel] = set()
    regions = []
    for r in range(h):
        for c in range(w):
            if not binary[r, c] or (r, c) in seen:
                continue
            region = {(r, c)}
            seen.add((r, c))
            queue = deque([(r, c)])
            while queue:
                y, x = queue.popleft()
                for dy, dx in _NEIGHBORS[connectivity]:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and binary[ny, nx] \
                            and (ny, nx) not in seen:
                        seen.add((ny, nx))
                        region.add((ny, nx))
                        queue.append((ny, nx))
            regions.append(frozenset(region))
    return regions


def brute_force_bbox(pixels: Sequence[Pixel]) -> Tuple[int, int, int, int]:
    rows = [p[0] for p in pixels]
    cols = [p[1] for p in pixels]
    return min(rows), min(cols), max(rows), max(cols)


def average_precision_terms(relevance: Sequence[bool], total_relevant: int) -> float:
    """
    Average precision summed term by term from its definition.
    """
    total = 0.0
    for k in range(1, len(relevance) + 1):
        if relevance[k - 1]:
            hits = 0
            for j in range(k):
                if relevance[j]:
                    hits += 1
            total += hits / k
    return total / total_relevant


def hit_at_k(relevance: Sequence[bool], k: int) -> bool:
    for j in range(min(k, len(relevance))):
        if relevance[j]:
            return True
    return False
