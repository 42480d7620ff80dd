"""Static STR-packed R-tree over axis-aligned boxes."""
from __future__ import annotations

import math

import numpy as np


def _boxes_overlap(boxes, box):
    return ((boxes[:, 0] <= box[2]) & (boxes[:, 2] >= box[0])
            & (boxes[:, 1] <= box[3]) & (boxes[:, 3] >= box[1]))


class SpatialIndex:
    """Bulk-loaded (Sort-Tile-Recursive) bounding-volume tree.

    ``boxes`` is an ``(n, 4)`` array of ``minx, miny, maxx, maxy``. Queries
    return the sorted ids of every box whose closed extent meets the query
    box, each id once.
    """

    def __init__(self, boxes, node_capacity: int = 16):
        boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
        if node_capacity < 2:
            raise ValueError("node_capacity must be >= 2")
        self.boxes = boxes
        self.node_capacity = M = node_capacity
        self._order = _str_order(boxes, M)
        level = boxes[self._order]
        self._levels = [level]  # level 0 holds the items in leaf order
        while len(level) > M:
            starts = np.arange(0, len(level), M)
            mins = np.minimum.reduceat(level[:, :2], starts, axis=0)
            maxs = np.maximum.reduceat(level[:, 2:], starts, axis=0)
            level = np.hstack([mins, maxs])
            self._levels.append(level)

    def __len__(self):
        return len(self.boxes)

    @property
    def depth(self) -> int:
        return len(self._levels)

    def query(self, box) -> np.ndarray:
        if len(self.boxes) == 0:
            return np.empty(0, dtype=np.int64)
        box = np.asarray(box, dtype=float)
        M = self.node_capacity
        top = self._levels[-1]
        nodes = np.flatnonzero(_boxes_overlap(top, box))
        for level in reversed(self._levels[:-1]):
            if nodes.size == 0:
                break
            children = (nodes[:, None] * M + np.arange(M)[None, :]).ravel()
            children = children[children < len(level)]
            nodes = children[_boxes_overlap(level[children], box)]
        return np.sort(self._order[nodes])

    def query_brute(self, box) -> np.ndarray:
        """Exhaustive reference query."""
        return np.flatnonzero(_boxes_overlap(self.boxes, np.asarray(box, dtype=float)))


def _str_order(boxes, M):
    n = len(boxes)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    cx = 0.5 * (boxes[:, 0] + boxes[:, 2])
    cy = 0.5 * (boxes[:, 1] + boxes[:, 3])
    leaves = math.ceil(n / M)
    slabs = math.ceil(math.sqrt(leaves))
    per_slab = slabs * M
    by_x = np.lexsort((np.arange(n), cx))
    parts = []
    for s in range(0, n, per_slab):
        slab = by_x[s:s + per_slab]
        parts.append(slab[np.lexsort((slab, cy[slab]))])
    return np.concatenate(parts)
