"""Open cells, bond-percolation lattices and highway extraction.

A cell is *open* when it holds at least one legitimate node and no
eavesdropper sits within its secrecy zone (Chebyshev cell distance
``floor(f_e d)``).  On a :class:`~secnet.geom.TiltedGrid` every cell is the
diagonal of exactly one lattice edge, so the open map converts directly into
a :class:`PercLattice`.

Lattice conventions (``m`` edges per side, vertices ``(i, j)`` with
``0 <= i, j <= m``):

* ``h[j, i]`` is the horizontal edge ``(i, j) -- (i+1, j)``, shape ``(m+1, m)``;
  it owns tilted cell ``(u, v) = (i + j, i - j + m)``.
* ``v[j, i]`` is the vertical edge ``(i, j) -- (i, j+1)``, shape ``(m, m+1)``;
  it owns tilted cell ``(i + j, i - j - 1 + m)``.

Edge-disjoint crossings are counted with unit-capacity max-flow (Menger).
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import maximum_flow

from .geom import Grid, PointSet, TiltedGrid, cell_counts
from .rng import derive_seed, substream

_BIG = 1 << 20


# ---------------------------------------------------------------------------
# open map


@dataclass(frozen=True, eq=False)
class OpenMap:
    grid: Grid | TiltedGrid
    open: np.ndarray
    occupied: np.ndarray
    zone_hit: np.ndarray
    zone_radius: int


def box_any(mask_counts: np.ndarray, radius: int) -> np.ndarray:
    """True where any cell within Chebyshev ``radius`` has a non-zero count.

    The window is clipped at the array boundary.
    """
    a = np.asarray(mask_counts, dtype=np.int64)
    if radius <= 0:
        return a > 0
    nx, ny = a.shape
    cs = np.zeros((nx + 1, ny + 1), dtype=np.int64)
    cs[1:, 1:] = a.cumsum(0).cumsum(1)
    ix = np.arange(nx)
    iy = np.arange(ny)
    x0 = np.clip(ix - radius, 0, nx)[:, None]
    x1 = np.clip(ix + radius + 1, 0, nx)[:, None]
    y0 = np.clip(iy - radius, 0, ny)[None, :]
    y1 = np.clip(iy + radius + 1, 0, ny)[None, :]
    total = cs[x1, y1] - cs[x0, y1] - cs[x1, y0] + cs[x0, y0]
    return total > 0


def zone_radius(f_e: float, d: int) -> int:
    return int(math.floor(f_e * d + 1e-9))


def mark_open(grid, legit: PointSet, eaves: PointSet, f_e: float, d: int) -> OpenMap:
    """Apply the openness predicate to every cell of ``grid``."""
    if f_e < 1:
        raise ValueError("f_e must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    r = zone_radius(f_e, d)
    occupied = cell_counts(grid, legit) > 0
    hit = box_any(cell_counts(grid, eaves), r)
    is_open = occupied & ~hit
    if isinstance(grid, TiltedGrid):
        is_open &= grid.valid_mask()
    return OpenMap(grid, is_open, occupied, hit, r)


# ---------------------------------------------------------------------------
# lattice


@dataclass(frozen=True, eq=False)
class PercLattice:
    m: int
    h: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.h.shape != (self.m + 1, self.m) or self.v.shape != (self.m, self.m + 1):
            raise ValueError("edge arrays have the wrong shape for m")

    @property
    def edge_count(self) -> int:
        return 2 * self.m * (self.m + 1)

    @property
    def open_fraction(self) -> float:
        return (int(self.h.sum()) + int(self.v.sum())) / self.edge_count

    def transpose(self) -> "PercLattice":
        """Swap axes so vertical crossings become horizontal ones."""
        return PercLattice(self.m, self.v.T.copy(), self.h.T.copy())

    def with_edges_opened(self, h_extra: np.ndarray, v_extra: np.ndarray) -> "PercLattice":
        return PercLattice(self.m, self.h | h_extra, self.v | v_extra)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PercLattice):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.h, other.h) and np.array_equal(self.v, other.v)

    def to_json(self) -> str:
        return json.dumps(
            {"m": self.m, "h": _pack(self.h), "v": _pack(self.v)}, separators=(",", ":")
        )

    @classmethod
    def from_json(cls, text: str) -> "PercLattice":
        obj = json.loads(text)
        m = int(obj["m"])
        return cls(m, _unpack(obj["h"], (m + 1, m)), _unpack(obj["v"], (m, m + 1)))


def _pack(a: np.ndarray) -> str:
    return base64.b64encode(np.packbits(a.astype(bool).ravel()).tobytes()).decode("ascii")


def _unpack(s: str, shape) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(base64.b64decode(s), dtype=np.uint8))
    return bits[: shape[0] * shape[1]].reshape(shape).astype(bool)


def horizontal_edge_cell(i, j, m):
    return i + j, i - j + m


def vertical_edge_cell(i, j, m):
    return i + j, i - j - 1 + m


def to_lattice(open_map: OpenMap) -> PercLattice:
    """Read edge states off a tilted open map (one edge per cell)."""
    grid = open_map.grid
    if not isinstance(grid, TiltedGrid):
        raise TypeError("to_lattice needs an open map over a TiltedGrid")
    m = grid.m
    if m < 2:
        raise ValueError("degenerate lattice: m < 2")
    o = open_map.open
    j, i = np.meshgrid(np.arange(m + 1), np.arange(m), indexing="ij")
    h = o[horizontal_edge_cell(i, j, m)]
    j, i = np.meshgrid(np.arange(m), np.arange(m + 1), indexing="ij")
    v = o[vertical_edge_cell(i, j, m)]
    return PercLattice(m, h, v)


def sample_independent_lattice(m: int, p_prime: float, seed: int) -> PercLattice:
    """Every edge open independently with probability ``p_prime``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if not 0.0 <= p_prime <= 1.0:
        raise ValueError("p_prime must lie in [0, 1]")
    rng = substream(seed)
    h = rng.random((m + 1, m)) < p_prime
    v = rng.random((m, m + 1)) < p_prime
    return PercLattice(m, h, v)


# ---------------------------------------------------------------------------
# crossings


def _band_graph(lat: PercLattice, lo: int, hi: int):
    m = lat.m
    if not 0 <= lo < hi <= m + 1:
        raise ValueError(f"band ({lo}, {hi}) outside lattice rows 0..{m}")
    rows = hi - lo
    nv = rows * (m + 1)
    src, dst = nv, nv + 1

    def vid(i, j):
        return (j - lo) * (m + 1) + i

    jj, ii = np.nonzero(lat.h[lo:hi])
    jj = jj + lo
    a_h, b_h = vid(ii, jj), vid(ii + 1, jj)
    jj, ii = np.nonzero(lat.v[lo : hi - 1])
    jj = jj + lo
    a_v, b_v = vid(ii, jj), vid(ii, jj + 1)
    left = vid(0, np.arange(lo, hi))
    right = vid(m, np.arange(lo, hi))

    a = np.concatenate([a_h, a_v])
    b = np.concatenate([b_h, b_v])
    r = np.concatenate([a, b, np.full(rows, src), right])
    c = np.concatenate([b, a, left, np.full(rows, dst)])
    cap = np.concatenate(
        [np.ones(2 * len(a), dtype=np.int32), np.full(2 * rows, _BIG, dtype=np.int32)]
    )
    g = csr_array((cap, (r, c)), shape=(nv + 2, nv + 2))
    g.sum_duplicates()
    return g, src, dst


def count_disjoint_crossings(lattice: PercLattice, row_band: tuple[int, int]) -> int:
    """Maximum number of edge-disjoint open left-right paths inside vertex rows ``[lo, hi)``."""
    lo, hi = row_band
    g, s, t = _band_graph(lattice, lo, hi)
    return int(maximum_flow(g, s, t, method="dinic").flow_value)


def disjoint_crossings(lattice: PercLattice, row_band: tuple[int, int]) -> list[np.ndarray]:
    """A maximum family of edge-disjoint left-right crossings in the band.

    Each crossing is an ``(L, 2)`` integer array of vertices ``(i, j)`` running
    from column 0 to column ``m``.  The decomposition visits outgoing flow
    edges in vertex-id order, so the result is deterministic.
    """
    lo, hi = row_band
    m = lattice.m
    g, s, t = _band_graph(lattice, lo, hi)
    res = maximum_flow(g, s, t, method="dinic")
    flow = res.flow.tocoo()
    pos = flow.data > 0
    rr, cc = flow.row[pos], flow.col[pos]
    order = np.lexsort((cc, rr))
    out: dict[int, list[int]] = {}
    for u, w in zip(rr[order].tolist(), cc[order].tolist()):
        out.setdefault(u, []).append(w)
    for lst in out.values():
        lst.reverse()  # pop() from the end yields ascending order

    paths = []
    for _ in range(int(res.flow_value)):
        walk = [s]
        while walk[-1] != t:
            walk.append(out[walk[-1]].pop())
        # drop cycles so each crossing is a simple path
        simple: list[int] = []
        seen: dict[int, int] = {}
        for x in walk[1:-1]:
            if x in seen:
                cut = seen[x]
                for y in simple[cut + 1 :]:
                    seen.pop(y, None)
                del simple[cut + 1 :]
            else:
                seen[x] = len(simple)
                simple.append(x)
        ids = np.asarray(simple, dtype=np.int64)
        ii = ids % (m + 1)
        jj = ids // (m + 1) + lo
        start = int(np.nonzero(ii == 0)[0].max())
        stop = start + int(np.nonzero(ii[start:] == m)[0].min())
        paths.append(np.stack([ii[start : stop + 1], jj[start : stop + 1]], axis=1))
    return paths


def path_edge_ids(path: np.ndarray, m: int) -> np.ndarray:
    """Integer ids of the lattice edges used by a vertex path."""
    a, b = path[:-1], path[1:]
    i0 = np.minimum(a[:, 0], b[:, 0])
    j0 = np.minimum(a[:, 1], b[:, 1])
    horiz = a[:, 1] == b[:, 1]
    return np.where(horiz, j0 * m + i0, (m + 1) * m + j0 * (m + 1) + i0)


def path_cells(path: np.ndarray, m: int) -> np.ndarray:
    """Tilted-grid cells ``(u, v)`` owned by the edges of a vertex path."""
    a, b = path[:-1], path[1:]
    i0 = np.minimum(a[:, 0], b[:, 0])
    j0 = np.minimum(a[:, 1], b[:, 1])
    horiz = a[:, 1] == b[:, 1]
    u = i0 + j0
    vv = np.where(horiz, i0 - j0 + m, i0 - j0 - 1 + m)
    return np.stack([u, vv], axis=1)


def path_is_open(lattice: PercLattice, path: np.ndarray) -> bool:
    a, b = path[:-1], path[1:]
    step = np.abs(a - b).sum(axis=1)
    if not np.all(step == 1):
        return False
    i0 = np.minimum(a[:, 0], b[:, 0])
    j0 = np.minimum(a[:, 1], b[:, 1])
    horiz = a[:, 1] == b[:, 1]
    ok_h = lattice.h[j0[horiz], i0[horiz]]
    ok_v = lattice.v[j0[~horiz], i0[~horiz]]
    return bool(ok_h.all() and ok_v.all())


def edge_disjoint(paths: list[np.ndarray], m: int) -> bool:
    ids = [path_edge_ids(p, m) for p in paths]
    if not ids:
        return True
    allids = np.concatenate(ids)
    return len(np.unique(allids)) == len(allids)


# ---------------------------------------------------------------------------
# rectangles and highways


@dataclass(frozen=True)
class RectanglePartition:
    height: float
    eps_m: float
    bands: tuple[tuple[int, int], ...]


def rectangle_partition(m: int, kappa: float) -> RectanglePartition:
    """Split the ``m`` x ``m`` lattice into rectangles of height ``kappa ln m - eps_m``.

    ``eps_m >= 0`` is the smallest value giving an integer rectangle count.
    Vertex rows ``0..m`` are assigned to bands by ``floor(j R / m)``.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    target = kappa * math.log(m)
    count = max(1, math.ceil(m / target - 1e-12))
    height = m / count
    eps = max(0.0, target - height)
    bounds = [math.ceil(b * m / count - 1e-12) for b in range(count)] + [m + 1]
    bands = tuple((bounds[b], bounds[b + 1]) for b in range(count))
    return RectanglePartition(height, eps, bands)


def crossing_counts(lattice: PercLattice, kappa: float) -> np.ndarray:
    """Edge-disjoint crossing count of every rectangle (``N_m`` is the minimum)."""
    part = rectangle_partition(lattice.m, kappa)
    return np.array([count_disjoint_crossings(lattice, b) for b in part.bands], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class HighwayGroup:
    band: tuple[int, int]
    available: int
    crossings: list[np.ndarray]
    deficit: int


@dataclass(frozen=True, eq=False)
class HighwaySet:
    m: int
    kappa: float
    delta: float
    n: int
    group_size: int
    rectangle_height: float
    eps_m: float
    horizontal: list[HighwayGroup]
    vertical: list[HighwayGroup] = field(default_factory=list)

    @property
    def deficits(self) -> list[tuple[str, int, int]]:
        """``(orientation, rectangle index, missing highways)`` for every short rectangle."""
        out = []
        for name, groups in (("horizontal", self.horizontal), ("vertical", self.vertical)):
            out.extend((name, k, g.deficit) for k, g in enumerate(groups) if g.deficit > 0)
        return out

    @property
    def deficit_fraction(self) -> float:
        total = len(self.horizontal) + len(self.vertical)
        return len(self.deficits) / total if total else 0.0

    def to_json(self) -> str:
        def enc(groups):
            return [
                {
                    "band": list(g.band),
                    "available": g.available,
                    "deficit": g.deficit,
                    "crossings": [p.tolist() for p in g.crossings],
                }
                for g in groups
            ]

        return json.dumps(
            {
                "m": self.m,
                "kappa": self.kappa,
                "delta": self.delta,
                "n": self.n,
                "group_size": self.group_size,
                "rectangle_height": self.rectangle_height,
                "eps_m": self.eps_m,
                "horizontal": enc(self.horizontal),
                "vertical": enc(self.vertical),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "HighwaySet":
        obj = json.loads(text)

        def dec(groups):
            return [
                HighwayGroup(
                    tuple(g["band"]),
                    g["available"],
                    [np.asarray(p, dtype=np.int64).reshape(-1, 2) for p in g["crossings"]],
                    g["deficit"],
                )
                for g in groups
            ]

        return cls(
            obj["m"], obj["kappa"], obj["delta"], obj["n"], obj["group_size"],
            obj["rectangle_height"], obj["eps_m"], dec(obj["horizontal"]), dec(obj["vertical"]),
        )


def group_size(delta: float, n: int) -> int:
    return max(1, math.ceil(delta * math.log(n) - 1e-12))


def _spread(paths: list[np.ndarray], k: int) -> list[np.ndarray]:
    """Pick ``k`` crossings spread evenly by mean row, returned bottom to top."""
    ranked = sorted(paths, key=lambda p: (float(p[:, 1].mean()), p[0, 1]))
    if k >= len(ranked):
        return ranked
    if k == 1:
        return [ranked[len(ranked) // 2]]
    picks = np.round(np.linspace(0, len(ranked) - 1, k)).astype(int)
    return [ranked[i] for i in picks]


def _groups(lattice: PercLattice, part: RectanglePartition, size: int) -> list[HighwayGroup]:
    groups = []
    for band in part.bands:
        paths = disjoint_crossings(lattice, band)
        chosen = _spread(paths, size)
        groups.append(HighwayGroup(band, len(paths), chosen, max(0, size - len(paths))))
    return groups


def build_highways(lattice: PercLattice, kappa: float, delta: float, n: int) -> HighwaySet:
    """Extract up to ``ceil(delta ln n)`` disjoint crossings per rectangle, both orientations.

    Rectangles with fewer crossings keep what they have and report the deficit.
    Vertical crossings are returned in original lattice coordinates.
    """
    if kappa <= 0 or delta <= 0:
        raise ValueError("kappa and delta must be positive")
    part = rectangle_partition(lattice.m, kappa)
    size = group_size(delta, n)
    horiz = _groups(lattice, part, size)
    vert = _groups(lattice.transpose(), part, size)
    vert = [
        HighwayGroup(g.band, g.available, [p[:, ::-1].copy() for p in g.crossings], g.deficit)
        for g in vert
    ]
    return HighwaySet(lattice.m, kappa, delta, n, size, part.height, part.eps_m, horiz, vert)


def min_crossings(m: int, p_prime: float, kappa: float, seed: int) -> int:
    """``N_m``: the smallest rectangle crossing count of one independent lattice."""
    return int(crossing_counts(sample_independent_lattice(m, p_prime, seed), kappa).min())


def calibrate_delta(p_prime: float, kappa: float, m: int = 32, seeds: int = 200, seed: int = 0) -> float:
    """Largest ``delta`` with ``N_m >= delta ln m`` on every calibration lattice.

    Calibration lattices use the streams ``(seed, 1, k)``, disjoint from the
    ``(seed, 0, m, k)`` streams used by the crossing-law experiment.
    """
    worst = min(min_crossings(m, p_prime, kappa, derive_seed(seed, 1, k)) for k in range(seeds))
    return worst / math.log(m) * (1 - 1e-9)
