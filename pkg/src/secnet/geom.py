"""Network regions, Poisson node placement and cell grids.

Two cell layouts are provided.  :class:`Grid` is the plain axis-aligned
partition into squares of side ``c``.  :class:`TiltedGrid` is the partition
used by the percolation mapping: squares rotated by 45 degrees whose
diagonals are the edges of an axis-aligned square lattice with ``m`` edges
per side, so every lattice edge owns exactly one cell.

Both layouts expose the same small surface (``shape``, ``cell_size``,
``cell_indices``) so the openness and routing code can work on either.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import substream


class OutOfRegionError(ValueError):
    """A point lies outside the network region."""


class NetworkModel(enum.Enum):
    EXTENDED = "extended"
    DENSE = "dense"


@dataclass(frozen=True)
class Region:
    """Square deployment region ``[0, side_length]^2``.

    Extended networks have area ``n``; dense networks have unit area.
    """

    model: NetworkModel
    side_length: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.side_length <= 0:
            raise ValueError("side_length must be positive")
        if self.model is NetworkModel.EXTENDED and not math.isclose(self.side_length**2, self.n):
            raise ValueError("extended region must have side_length**2 == n")
        if self.model is NetworkModel.DENSE and self.side_length != 1.0:
            raise ValueError("dense region must have unit side")

    @classmethod
    def extended(cls, n: int) -> "Region":
        return cls(NetworkModel.EXTENDED, math.sqrt(n), int(n))

    @classmethod
    def dense(cls, n: int) -> "Region":
        return cls(NetworkModel.DENSE, 1.0, int(n))

    @property
    def area(self) -> float:
        return self.side_length**2

    @property
    def legit_intensity(self) -> float:
        """Intensity giving ``n`` expected legitimate nodes."""
        return self.n / self.area

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.all((pts >= 0.0) & (pts <= self.side_length), axis=1)


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    intensity: float
    seed: int
    side_length: float = field(default=math.inf)

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            self.intensity == other.intensity
            and self.seed == other.seed
            and self.points.shape == other.points.shape
            and self.points.tobytes() == other.points.tobytes()
        )

    def to_csv(self, path=None) -> str:
        """Serialize as ``x,y`` rows under a ``#`` header carrying intensity and seed.

        Coordinates are written with ``repr`` precision so the round trip is exact.
        """
        buf = io.StringIO()
        buf.write(f"# intensity={self.intensity!r} seed={self.seed} side_length={self.side_length!r}\n")
        buf.write("x,y\n")
        for x, y in self.points:
            buf.write(f"{float(x)!r},{float(y)!r}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "PointSet":
        return cls.from_csv(Path(path).read_text())

    @classmethod
    def from_csv(cls, text: str) -> "PointSet":
        lines = text.splitlines()
        meta = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
        rows = [tuple(map(float, ln.split(","))) for ln in lines[2:] if ln.strip()]
        pts = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(pts, float(meta["intensity"]), int(meta["seed"]), float(meta["side_length"]))


def sample_ppp(region: Region, intensity: float, seed: int) -> PointSet:
    """Homogeneous Poisson point process on ``region``.

    The total count is drawn from ``Poisson(intensity * area)`` and the points
    are then placed i.i.d. uniformly, which is an exact construction.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    rng = substream(seed)
    count = int(rng.poisson(intensity * region.area)) if intensity > 0 else 0
    pts = rng.uniform(0.0, region.side_length, size=(count, 2))
    return PointSet(pts, float(intensity), int(seed), region.side_length)


@dataclass(frozen=True)
class CellIndex:
    i: int
    j: int


@dataclass(frozen=True)
class Grid:
    """Axis-aligned partition of ``[0, side_length]^2`` into squares of side ``c``.

    Cells are half-open ``[i c, (i+1) c)``; points on the top/right boundary are
    clamped into the last cell.
    """

    c: float
    cols: int
    rows: int
    side_length: float

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("cell size must be positive")

    @classmethod
    def for_region(cls, region: Region, c: float) -> "Grid":
        k = math.ceil(region.side_length / c - 1e-12)
        return cls(float(c), k, k, region.side_length)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.cols, self.rows)

    @property
    def cell_size(self) -> float:
        return self.c

    def cell_indices(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        bad = np.any((pts < 0.0) | (pts > self.side_length), axis=1)
        if bad.any():
            raise OutOfRegionError(f"{int(bad.sum())} point(s) outside [0, {self.side_length}]^2")
        idx = np.floor(pts / self.c).astype(np.int64)
        idx[:, 0] = np.clip(idx[:, 0], 0, self.cols - 1)
        idx[:, 1] = np.clip(idx[:, 1], 0, self.rows - 1)
        return idx

    def cell_centers(self, idx: np.ndarray) -> np.ndarray:
        return (np.asarray(idx, dtype=float) + 0.5) * self.c


@dataclass(frozen=True)
class TiltedGrid:
    """Cells rotated by 45 degrees, one per edge of an ``m``-edge square lattice.

    Lattice vertices sit at ``(a s, b s)`` with spacing ``s = side_length / m``.
    A cell is indexed by ``(u, v)`` with ``u = floor((x + y) / s)`` and
    ``v = floor((x - y) / s) + m``, both in ``[0, 2m)``.  The cell side is
    ``s / sqrt(2)``; Chebyshev distance in ``(u, v)`` is the cell-hop distance.
    Cells of the ``2m x 2m`` index box that do not meet the region are
    flagged by :meth:`valid_mask`.
    """

    m: int
    side_length: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")

    @classmethod
    def for_region(cls, region: Region, c: float) -> "TiltedGrid":
        """Lattice of ``m = floor(side / (c sqrt 2))`` edges per side.

        The spacing is stretched to ``side / m`` so the cells tile the region
        exactly; the effective cell side is therefore in ``[c, c (1 + 1/m))``.
        """
        m = int(math.floor(region.side_length / (c * math.sqrt(2)) + 1e-9))
        if m < 1:
            raise ValueError("cell size too large for region")
        return cls(m, region.side_length)

    @property
    def spacing(self) -> float:
        return self.side_length / self.m

    @property
    def cell_size(self) -> float:
        return self.spacing / math.sqrt(2)

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.m, 2 * self.m)

    def cell_indices(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        bad = np.any((pts < 0.0) | (pts > self.side_length), axis=1)
        if bad.any():
            raise OutOfRegionError(f"{int(bad.sum())} point(s) outside [0, {self.side_length}]^2")
        s = self.spacing
        u = np.floor((pts[:, 0] + pts[:, 1]) / s).astype(np.int64)
        v = np.floor((pts[:, 0] - pts[:, 1]) / s).astype(np.int64) + self.m
        top = 2 * self.m - 1
        return np.stack([np.clip(u, 0, top), np.clip(v, 0, top)], axis=1)

    def cell_centers(self, idx: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=float).reshape(-1, 2)
        s, m = self.spacing, self.m
        u, v = idx[:, 0], idx[:, 1]
        return np.stack([s * (u + v + 1 - m) / 2, s * (u - v + m) / 2], axis=1)

    def valid_mask(self) -> np.ndarray:
        m = self.m
        u, v = np.meshgrid(np.arange(2 * m), np.arange(2 * m), indexing="ij")
        par = (u + v - m) % 2
        # horizontal-edge cells: i = (u+v-m)/2 in [0, m-1], j = (u-v+m)/2 in [0, m]
        hi, hj = (u + v - m) // 2, (u - v + m) // 2
        horiz = (par == 0) & (hi >= 0) & (hi <= m - 1) & (hj >= 0) & (hj <= m)
        # vertical-edge cells: i = (u+v-m+1)/2 in [0, m], j = (u-v+m-1)/2 in [0, m-1]
        vi, vj = (u + v - m + 1) // 2, (u - v + m - 1) // 2
        vert = (par == 1) & (vi >= 0) & (vi <= m) & (vj >= 0) & (vj <= m - 1)
        return horiz | vert


def cell_of(grid, point) -> CellIndex:
    """Cell containing a single point; raises :class:`OutOfRegionError` outside the region."""
    i, j = grid.cell_indices(np.asarray(point, dtype=float))[0]
    return CellIndex(int(i), int(j))


def cell_counts(grid, points: PointSet | np.ndarray) -> np.ndarray:
    """Per-cell point counts, shape ``grid.shape``."""
    pts = points.points if isinstance(points, PointSet) else np.asarray(points)
    out = np.zeros(grid.shape, dtype=np.int64)
    if len(pts):
        idx = grid.cell_indices(pts)
        np.add.at(out, (idx[:, 0], idx[:, 1]), 1)
    return out


def occupancy_probability(intensity: float, c: float) -> float:
    """Probability that a cell of side ``c`` holds at least one node, ``1 - exp(-intensity c^2)``."""
    return -math.expm1(-intensity * c * c)
