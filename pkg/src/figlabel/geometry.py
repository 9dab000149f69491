"""Boxes, overlap measures and the linear assignment solver.

Coordinates are page pixels with the origin at the top-left corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite box coordinates {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def within(self, width: float, height: float) -> bool:
        return self.x1 >= 0 and self.y1 >= 0 and self.x2 <= width and self.y2 <= height

    def contains(self, other: "BBox") -> bool:
        return (
            self.x1 <= other.x1
            and self.y1 <= other.y1
            and self.x2 >= other.x2
            and self.y2 >= other.y2
        )


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def distance(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Assignment:
    """Chosen (row, col) pairs, sorted by row, and the sum of their costs."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes; 0 for disjoint boxes."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def center(b: BBox) -> Point:
    return Point((b.x1 + b.x2) / 2, (b.y1 + b.y2) / 2)


def enclosing_box(items: Iterable[Union[BBox, Point]]) -> BBox:
    """Smallest axis-aligned box containing every box or point given.

    Raises:
        ValueError: if ``items`` is empty, or if the items span zero area
            (e.g. a single point).
    """
    xs1, ys1, xs2, ys2 = [], [], [], []
    for item in items:
        if isinstance(item, Point):
            xs1.append(item.x)
            ys1.append(item.y)
            xs2.append(item.x)
            ys2.append(item.y)
        else:
            xs1.append(item.x1)
            ys1.append(item.y1)
            xs2.append(item.x2)
            ys2.append(item.y2)
    if not xs1:
        raise ValueError("empty geometry set")
    return BBox(min(xs1), min(ys1), max(xs2), max(ys2))


# ---------------------------------------------------------------------------
# Linear assignment


def _hungarian_square(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shortest-augmenting-path Hungarian method on a square matrix.

    Returns ``(col_of_row, u, v)`` where ``u``/``v`` are optimal dual
    potentials: ``cost[i, j] - u[i] - v[j] >= 0`` everywhere, with equality
    on the returned matching.
    """
    n = cost.shape[0]
    inf = math.inf
    # 1-based internals; index 0 is the virtual root column.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_of_col = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(n + 1, inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[row_of_col[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row, u[1:], v[1:]


def _augment(tight: np.ndarray, row_of_col: list, col_of_row: list,
             start_row: int, target_col: int, banned_rows: set, banned_cols: set) -> bool:
    """Find an alternating path from a free row to a free column and flip it."""
    prev_row_of_col = {}
    frontier = [start_row]
    seen_cols = set()
    while frontier:
        nxt = []
        for r in frontier:
            for c in np.flatnonzero(tight[r]):
                c = int(c)
                if c in seen_cols or c in banned_cols:
                    continue
                seen_cols.add(c)
                prev_row_of_col[c] = r
                if c == target_col:
                    # flip the path back to start_row
                    while True:
                        r_prev = prev_row_of_col[c]
                        c_prev = col_of_row[r_prev]
                        col_of_row[r_prev] = c
                        row_of_col[c] = r_prev
                        if r_prev == start_row:
                            return True
                        c = c_prev
                r2 = row_of_col[c]
                if r2 is not None and r2 not in banned_rows:
                    nxt.append(r2)
        frontier = nxt
    return False


def solve_assignment(cost: Sequence[Sequence[float]]) -> Assignment:
    """Minimum-cost injective assignment of ``min(R, C)`` rows to columns.

    Among all optimal assignments the one whose row-sorted pair list is
    lexicographically smallest is returned.

    Raises:
        ValueError: on an empty matrix or any non-finite entry.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise ValueError("cost matrix must be 2-D and nonempty")
    if not np.all(np.isfinite(c)):
        raise ValueError("invalid cost")
    rows, cols = c.shape
    n = max(rows, cols)
    square = np.zeros((n, n))
    square[:rows, :cols] = c
    col_of_row_arr, u, v = _hungarian_square(square)

    # Every optimal matching lives on the edges with zero reduced cost, so the
    # lexicographic tie-break is a constrained perfect matching search there.
    reduced = square - u[:, None] - v[None, :]
    eps = 64 * n * np.finfo(np.float64).eps * max(1.0, float(np.abs(square).max()))
    tight = reduced <= eps
    col_of_row = [int(x) for x in col_of_row_arr]
    row_of_col: list = [None] * n
    for r, cc in enumerate(col_of_row):
        row_of_col[cc] = r
        tight[r, cc] = True

    fixed_rows: set = set()
    fixed_cols: set = set()
    for r in range(rows):
        # real columns first, then any dummy column (= row left unassigned)
        options = [j for j in range(cols) if tight[r, j]]
        options += [j for j in range(cols, n) if tight[r, j]]
        for j in options:
            if j in fixed_cols:
                continue
            cur = col_of_row[r]
            if cur == j:
                ok = True
            elif j >= cols and cur >= cols:
                ok = True
            else:
                # Pull (r, j) into the matching: the row holding j and the
                # column held by r become free and must be re-matched.
                r_other = row_of_col[j]
                snapshot = (list(col_of_row), list(row_of_col))
                col_of_row[r] = j
                row_of_col[j] = r
                col_of_row[r_other] = None
                row_of_col[cur] = None
                ok = _augment(tight, row_of_col, col_of_row, r_other, cur,
                              fixed_rows | {r}, fixed_cols | {j})
                if not ok:
                    col_of_row[:], row_of_col[:] = snapshot
            if ok:
                fixed_rows.add(r)
                fixed_cols.add(col_of_row[r])
                break

    pairs = tuple((r, col_of_row[r]) for r in range(rows) if col_of_row[r] < cols)
    total = 0.0
    for r, j in pairs:
        total += float(c[r, j])
    return Assignment(pairs=pairs, total_cost=total)
