"""Grayscale rasters as tourist maps, with thresholded 8-connected neighborhoods."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Literal, Union

import numpy as np

Rule = Literal["min", "max"]
RULES: tuple[Rule, ...] = ("min", "max")

MIN_STEP = 10
MAX_STEP = 20

# Clockwise from north, as (dx, dy) with y growing downwards.
OFFSETS: tuple[tuple[int, int], ...] = (
    (0, -1),   # N
    (1, -1),   # NE
    (1, 0),    # E
    (1, 1),    # SE
    (0, 1),    # S
    (-1, 1),   # SW
    (-1, 0),   # W
    (-1, -1),  # NW
)
DIRECTIONS = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")


@dataclass(frozen=True, eq=False)
class Raster:
    """An 8-bit grayscale image. Pixel ``i`` sits at ``(i % width, i // width)``."""

    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"raster must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"raster intensities must be integers, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("raster intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_values(cls, width: int, height: int, values: Iterable[int]) -> "Raster":
        vals = np.fromiter(values, dtype=np.int64)
        if vals.size != width * height:
            raise ValueError(f"expected {width * height} intensities, got {vals.size}")
        return cls(vals.reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def size(self) -> int:
        return self.pixels.size

    @property
    def intensities(self) -> np.ndarray:
        """Row-major flat view."""
        return self.pixels.reshape(-1)

    def index(self, x: int, y: int) -> int:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError(f"pixel ({x}, {y}) outside {self.width}x{self.height} raster")
        return y * self.width + x

    def coords(self, p: int) -> tuple[int, int]:
        self._check(p)
        return p % self.width, p // self.width

    def _check(self, p: int) -> None:
        if not (0 <= p < self.size):
            raise IndexError(f"pixel index {p} outside raster of {self.size} pixels")

    def __eq__(self, other):
        if not isinstance(other, Raster):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


def geometric_neighbors(raster: Raster, p: int) -> list[int]:
    """8-connected neighbors of ``p`` in clockwise order N..NW; off-raster ones are dropped."""
    x, y = raster.coords(p)
    out = []
    for dx, dy in OFFSETS:
        qx, qy = x + dx, y + dy
        if 0 <= qx < raster.width and 0 <= qy < raster.height:
            out.append(qy * raster.width + qx)
    return out


@dataclass(frozen=True)
class WalkMap:
    """A raster seen through one movement rule at threshold index ``k``.

    ``min_step`` and ``max_step`` are the threshold increments, so the min rule
    keeps weights ``>= k * min_step`` and the max rule keeps weights
    ``<= max(0, 255 - k * max_step)``. With ``k = 0`` both rules see the full
    8-connected map.
    """

    raster: Raster
    rule: Rule = "min"
    k: int = 0
    min_step: int = MIN_STEP
    max_step: int = MAX_STEP

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be 'min' or 'max', got {self.rule!r}")
        if self.k < 0:
            raise ValueError(f"threshold index must be >= 0, got {self.k}")

    @property
    def threshold(self) -> int:
        if self.rule == "min":
            return self.k * self.min_step
        return max(0, 255 - self.k * self.max_step)

    def admits(self, w: int) -> bool:
        return w >= self.threshold if self.rule == "min" else w <= self.threshold

    @cached_property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``(N, 8)`` neighbor and weight tables in clockwise slot order.

        Slots holding a missing or ineligible neighbor carry index -1.
        """
        img = self.raster.pixels.astype(np.int32)
        h, w = img.shape
        idx = np.arange(h * w, dtype=np.int32).reshape(h, w)
        nbr = np.full((h, w, 8), -1, dtype=np.int32)
        wts = np.zeros((h, w, 8), dtype=np.int32)
        for s, (dx, dy) in enumerate(OFFSETS):
            # destination window inside the raster
            y0, y1 = max(0, -dy), h - max(0, dy)
            x0, x1 = max(0, -dx), w - max(0, dx)
            if y0 >= y1 or x0 >= x1:
                continue
            src = img[y0:y1, x0:x1]
            dst = img[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
            wt = np.abs(src - dst)
            ok = wt >= self.threshold if self.rule == "min" else wt <= self.threshold
            nbr[y0:y1, x0:x1, s] = np.where(ok, idx[y0 + dy:y1 + dy, x0 + dx:x1 + dx], -1)
            wts[y0:y1, x0:x1, s] = wt
        nbr = nbr.reshape(h * w, 8)
        wts = wts.reshape(h * w, 8)
        nbr.setflags(write=False)
        wts.setflags(write=False)
        return nbr, wts


def weight(walk_map: WalkMap, a: int, b: int) -> int:
    """Absolute gray-level difference between pixels ``a`` and ``b``."""
    r = walk_map.raster if isinstance(walk_map, WalkMap) else walk_map
    r._check(a)
    r._check(b)
    return abs(int(r.intensities[a]) - int(r.intensities[b]))


def eligible_neighbors(walk_map: WalkMap, p: int) -> list[int]:
    walk_map.raster._check(p)
    row = walk_map.tables[0][p]
    return [int(q) for q in row if q >= 0]


def iter_edges(walk_map: WalkMap) -> Iterator[tuple[int, int, int]]:
    """Yield ``(p, q, w)`` once per unordered eligible pair, ``p < q``."""
    nbr, wts = walk_map.tables
    for p in range(nbr.shape[0]):
        for s in range(8):
            q = int(nbr[p, s])
            if q > p:
                yield p, q, int(wts[p, s])


def export_edge_list(walk_map: WalkMap, out: Union[str, os.PathLike, io.TextIOBase, None] = None) -> list[tuple[int, int, int, int, int]]:
    """Edge records ``(x1, y1, x2, y2, w)`` sorted by coordinates.

    The endpoint with the smaller ``(x, y)`` comes first. When ``out`` is given
    the records are also written there as ``x1,y1,x2,y2,w`` lines.
    """
    width = walk_map.raster.width
    records = []
    for p, q, w in iter_edges(walk_map):
        a = (p % width, p // width)
        b = (q % width, q // width)
        if b < a:
            a, b = b, a
        records.append((a[0], a[1], b[0], b[1], w))
    records.sort()
    if out is not None:
        text = "".join(f"{x1},{y1},{x2},{y2},{w}\n" for x1, y1, x2, y2, w in records)
        if isinstance(out, (str, os.PathLike)):
            with open(out, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        else:
            out.write(text)
    return records


def full_connectivity_edge_count(width: int, height: int) -> int:
    return 4 * width * height - 3 * width - 3 * height + 2
