"""Four-phase secure routing over percolation highways.

A source first reaches the horizontal highway serving its slab (access),
rides it to the vertical highway serving its destination's slab, rides that
one (vertical phase) and is delivered in a final access hop.  Per-node
throughput is a quarter of the slowest phase rate.

A node is *blocked* when it cannot take part securely:

* ``zone``     an eavesdropper sits inside its access secrecy zone;
* ``deficit``  its rectangle holds fewer highways than the group size;
* ``distance`` its highway entry cell is more than ``d_access`` cells away.

Only the first cause is covered by the analytic blocked-fraction bound; the
other two are reported separately so the total can be compared honestly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geom import PointSet, Region, TiltedGrid, cell_counts, sample_ppp
from .percolation import HighwaySet, box_any, build_highways, mark_open, path_cells, to_lattice
from .rates import PathLossParams, min_feasible_f_e, secure_rate_per_hop
from .rng import derive_seed, substream

PHASES = ("access", "horizontal", "vertical", "delivery")


# ---------------------------------------------------------------------------
# slabs and loads


@dataclass(frozen=True, eq=False)
class LoadReport:
    """Node-to-highway assignment for one orientation pair.

    ``h_id`` / ``v_id`` give each node's highway as ``(rectangle, slot)``
    flattened to ``rectangle * group_size + slot``; ``-1`` means the node's
    rectangle is deficient.
    """

    highways: HighwaySet
    grid: TiltedGrid
    points: np.ndarray
    h_id: np.ndarray
    v_id: np.ndarray
    slab_width: float
    h_load: np.ndarray
    v_load: np.ndarray

    @property
    def max_load(self) -> int:
        return int(max(self.h_load.max(initial=0), self.v_load.max(initial=0)))

    @property
    def deficit_blocked(self) -> np.ndarray:
        return (self.h_id < 0) | (self.v_id < 0)

    def load_bound(self, n: int) -> float:
        """``2 w sqrt(n)`` with ``w`` in length units."""
        return 2.0 * self.slab_width * self.grid.spacing * math.sqrt(n)


def _slab_ids(coord: np.ndarray, groups, m: int, height: float, size: int) -> np.ndarray:
    """Highway id for each lattice coordinate along the cross axis."""
    R = len(groups)
    rect = np.clip(np.floor(coord * R / m).astype(np.int64), 0, R - 1)
    w = height / size
    slot = np.clip(np.floor((coord - rect * height) / w).astype(np.int64), 0, size - 1)
    full = np.array([g.deficit == 0 and len(g.crossings) == size for g in groups])
    return np.where(full[rect], rect * size + slot, -1)


def assign_slabs(highways: HighwaySet, region: Region, points, grid: TiltedGrid | None = None) -> LoadReport:
    """Assign every node to the highway of its slab in each orientation.

    Each rectangle of height ``h`` is cut into ``group_size`` slabs of width
    ``w = h / group_size``, bottom to top, matched to the rectangle's
    highways in the same order.  Nodes in deficient rectangles get id ``-1``.
    """
    if not highways.horizontal or all(len(g.crossings) == 0 for g in highways.horizontal):
        raise ValueError("highway set is empty")
    return _assign(highways, region, points, grid)


def _assign(highways: HighwaySet, region: Region, points, grid: TiltedGrid | None) -> LoadReport:
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float).reshape(-1, 2)
    m = highways.m
    grid = grid or TiltedGrid(m, region.side_length)
    s = region.side_length / m
    size, height = highways.group_size, highways.rectangle_height
    h_id = _slab_ids(pts[:, 1] / s, highways.horizontal, m, height, size)
    v_id = _slab_ids(pts[:, 0] / s, highways.vertical, m, height, size)
    total = len(highways.horizontal) * size
    ok = (h_id >= 0) & (v_id >= 0)
    h_load = np.bincount(h_id[ok], minlength=total)
    v_load = np.bincount(v_id[ok], minlength=len(highways.vertical) * size)
    return LoadReport(highways, grid, pts, h_id, v_id, height / size, h_load, v_load)


def _highway_path(hw: HighwaySet, orient: str, hid: int) -> np.ndarray:
    groups = hw.horizontal if orient == "h" else hw.vertical
    return groups[hid // hw.group_size].crossings[hid % hw.group_size]


# ---------------------------------------------------------------------------
# routes


@dataclass(frozen=True, eq=False)
class RoutePlan:
    """Per-pair route summary; arrays are indexed by pair.

    ``entry`` / ``exit`` are tilted cells on the source's horizontal and the
    destination's vertical highway.  ``access_dist`` / ``delivery_dist`` are
    Chebyshev cell distances from the node to those cells.
    """

    src: np.ndarray
    dst: np.ndarray
    h_id: np.ndarray
    v_id: np.ndarray
    entry: np.ndarray
    exit: np.ndarray
    access_dist: np.ndarray
    delivery_dist: np.ndarray
    hops: np.ndarray  # (P, 4) per phase
    blocked: np.ndarray
    node_blocked: np.ndarray

    @property
    def total_hops(self) -> np.ndarray:
        return self.hops.sum(axis=1)


def _nearest_cell(cells_xy: np.ndarray, pts: np.ndarray) -> np.ndarray:
    d2 = ((pts[:, None, :] - cells_xy[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)  # first minimum = lowest index along the path


def _cheb(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b).max(axis=-1)


def plan_routes(pairs, loads: LoadReport, node_blocked: np.ndarray | None = None) -> RoutePlan:
    """Route every (source, destination) pair through its two highways.

    Parameters
    ----------
    pairs : array_like of shape (P, 2)
        Node indices into ``loads.points``.
    loads : LoadReport
        Slab assignment.
    node_blocked : array of bool, optional
        Nodes already blocked for other reasons; their routes are marked
        blocked but hop counts are still filled in where possible.

    Notes
    -----
    Along a highway, cells ``0 .. L-1`` follow the vertex path and vertex
    ``k`` sits between cells ``k-1`` and ``k``.  The switch happens at the
    common vertex of the two highways minimizing total highway hops; the
    step from the horizontal to the vertical cell there is counted in the
    horizontal phase.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    hw, grid = loads.highways, loads.grid
    m = hw.m
    pts = loads.points
    node_cells = grid.cell_indices(pts) if len(pts) else np.zeros((0, 2), dtype=np.int64)
    P = len(pairs)
    src, dst = pairs[:, 0], pairs[:, 1]
    h_id, v_id = loads.h_id[src], loads.v_id[dst]
    entry = np.full((P, 2), -1, dtype=np.int64)
    exit_ = np.full((P, 2), -1, dtype=np.int64)
    acc = np.full(P, -1, dtype=np.int64)
    dlv = np.full(P, -1, dtype=np.int64)
    hops = np.zeros((P, 4), dtype=np.int64)
    nb = (loads.h_id < 0) | (loads.v_id < 0)
    if node_blocked is not None:
        nb = nb | node_blocked
    blocked = nb[src] | nb[dst]

    # entry cell per source, grouped by horizontal highway
    e_idx = np.full(P, -1, dtype=np.int64)
    x_idx = np.full(P, -1, dtype=np.int64)
    cache: dict[tuple[str, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def geometry(orient, hid):
        key = (orient, hid)
        if key not in cache:
            path = _highway_path(hw, orient, hid)
            cells = path_cells(path, m)
            vid = path[:, 1] * (m + 1) + path[:, 0]
            cache[key] = (cells, grid.cell_centers(cells), vid)
        return cache[key]

    for orient, ids, nodes, e_out, c_out, d_out in (
        ("h", h_id, src, e_idx, entry, acc),
        ("v", v_id, dst, x_idx, exit_, dlv),
    ):
        for hid in np.unique(ids[ids >= 0]):
            sel = np.nonzero(ids == hid)[0]
            cells, centers, _ = geometry(orient, int(hid))
            k = _nearest_cell(centers, pts[nodes[sel]])
            e_out[sel] = k
            c_out[sel] = cells[k]
            d_out[sel] = _cheb(node_cells[nodes[sel]], cells[k])

    for p in np.nonzero((h_id >= 0) & (v_id >= 0))[0]:
        _, _, hv = geometry("h", int(h_id[p]))
        _, _, vv = geometry("v", int(v_id[p]))
        kh_all = np.nonzero(np.isin(hv, vv))[0]
        if len(kh_all) == 0:
            blocked[p] = True
            continue
        best = None
        e, x = e_idx[p], x_idx[p]
        for kh in kh_all:
            kv_all = np.nonzero(vv == hv[kh])[0]
            sw_h = kh - 1 if e < kh else min(kh, len(hv) - 2)
            for kv in kv_all:
                sw_v = kv - 1 if x < kv else min(kv, len(vv) - 2)
                a = abs(e - sw_h) + 1
                b = abs(x - sw_v)
                if best is None or a + b < best[0] + best[1]:
                    best = (a, b)
        hops[p, 1], hops[p, 2] = best
    hops[:, 0] = np.maximum(acc, 0)
    hops[:, 3] = np.maximum(dlv, 0)
    return RoutePlan(src, dst, h_id, v_id, entry, exit_, acc, dlv, hops, blocked, nb)


# ---------------------------------------------------------------------------
# blocking and access


@dataclass(frozen=True, eq=False)
class BlockedReport:
    blocked: np.ndarray
    F: float
    bound: float
    zone_radius: int


def blocked_fraction(
    legit: PointSet, eaves: PointSet, p: PathLossParams, d_access: int, epsilon: float = 0.1, grid=None
) -> BlockedReport:
    """Nodes with an eavesdropper inside their access secrecy zone.

    The zone is every cell within Chebyshev distance ``floor(f_e d_access)``
    of the node's cell.  Also returns the analytic bound
    ``(1+eps)^2 (2 f_e d + 1)^2 c^2 lambda_e / (1-eps)``.
    """
    if d_access < 1:
        raise ValueError("d_access must be >= 1")
    if grid is None:
        grid = TiltedGrid.for_region(Region.extended(round(legit.side_length**2)), p.c)
    r = int(math.floor(p.f_e * d_access + 1e-9))
    if len(legit) == 0:
        blocked = np.zeros(0, dtype=bool)
    else:
        hit = box_any(cell_counts(grid, eaves), r)
        idx = grid.cell_indices(legit.points)
        blocked = hit[idx[:, 0], idx[:, 1]]
    F = float(blocked.mean()) if len(blocked) else 0.0
    bound = (1 + epsilon) ** 2 * (2 * p.f_e * d_access + 1) ** 2 * p.c**2 * eaves.intensity / (1 - epsilon)
    return BlockedReport(blocked, F, bound, r)


def access_rate(n: int, p: PathLossParams, occupancy: int) -> float:
    """Per-node access rate: the hop rate at ``p.d`` shared by ``occupancy`` nodes."""
    if occupancy < 1:
        raise ValueError("occupancy must be >= 1")
    return secure_rate_per_hop(p).rate_bits / occupancy


def access_distance(n: float, kappa_prime: float, c: float) -> int:
    """``d = kappa'' ln n`` in cells, with ``kappa''`` the least value >= kappa'/c giving an integer."""
    return max(1, math.ceil(kappa_prime * math.log(n) / c - 1e-9))


# ---------------------------------------------------------------------------
# throughput


@dataclass(frozen=True, eq=False)
class ThroughputReport:
    """Per-node results, indexed by node as source.

    ``rate`` is zero for blocked nodes; ``bottleneck`` is the index into
    :data:`PHASES` of the slowest phase, ``-1`` when blocked.
    """

    rate: np.ndarray
    blocked: np.ndarray
    blocked_src: np.ndarray
    blocked_dst: np.ndarray
    bottleneck: np.ndarray
    F: float
    components: dict = field(default_factory=dict)
    loads: dict = field(default_factory=dict)

    @property
    def routed(self) -> np.ndarray:
        return ~self.blocked_src & ~self.blocked_dst

    @property
    def median_rate(self) -> float:
        r = self.rate[self.routed]
        return float(np.median(r)) if len(r) else 0.0

    @property
    def highway_bottleneck_fraction(self) -> float:
        b = self.bottleneck[self.routed]
        return float(np.isin(b, (1, 2)).mean()) if len(b) else 0.0

    def to_csv(self, config_hash: str | None = None) -> str:
        buf = io.StringIO()
        if config_hash:
            buf.write(f"# config_sha256={config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "rate", "blocked", "bottleneck"])
        for i, (r, b, k) in enumerate(zip(self.rate, self.blocked, self.bottleneck)):
            w.writerow([i, repr(float(r)), int(b), PHASES[k] if k >= 0 else ""])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "median_rate": self.median_rate,
            "F": self.F,
            "components": self.components,
            "highway_bottleneck_fraction": self.highway_bottleneck_fraction,
            "loads": self.loads,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def end_to_end_throughput(plan: RoutePlan, rates: np.ndarray) -> ThroughputReport:
    """Combine per-pair phase rates, shape ``(P, 4)``, into per-node throughput.

    The rate of pair ``p`` is credited to its source node.  ``F`` is the
    fraction of nodes blocked in their own right (as source or destination).
    """
    rates = np.asarray(rates, dtype=float).reshape(-1, 4)
    nb = plan.node_blocked
    n_nodes = len(nb)
    rate = np.zeros(n_nodes)
    bott = np.full(n_nodes, -1, dtype=np.int64)
    ok = ~plan.blocked
    rate[plan.src[ok]] = rates[ok].min(axis=1) / 4.0
    bott[plan.src[ok]] = np.argmin(rates[ok], axis=1)
    bsrc = nb.copy()
    bdst = np.zeros(n_nodes, dtype=bool)
    bdst[plan.src] = nb[plan.dst]
    F = float(nb.mean()) if n_nodes else 0.0
    return ThroughputReport(rate, nb.copy(), bsrc, bdst, bott, F)


# ---------------------------------------------------------------------------
# full network simulation


@dataclass(frozen=True)
class ScaleConfig:
    """Parameters of one extended-network throughput simulation.

    Highway hops span ``d_hw`` cells with zone factor ``f_e_hw``; access hops
    span ``access_distance(n, kappa_prime, c)`` cells with zone factor
    ``access_margin`` times the feasibility infimum.
    """

    alpha: float = 3.0
    P: float = 1.0
    N0: float = 1.0
    c: float = 1.2
    d_hw: int = 1
    f_t_hw: float = 8.0
    f_e_hw: float = 3.0
    f_t_access: float = 4.0
    access_margin: float = 1.02
    kappa: float = 5.0
    delta: float = 0.1
    kappa_prime: float = 0.5
    epsilon: float = 0.1
    lambda_e_exponent: float = -3.0
    lambda_e_scale: float = 1.0

    def lambda_e(self, n: float) -> float:
        return self.lambda_e_scale * math.log(n) ** self.lambda_e_exponent

    def highway_params(self) -> PathLossParams:
        return PathLossParams(self.alpha, self.P, self.N0, self.c, self.d_hw, self.f_t_hw, self.f_e_hw)

    def access_params(self, n: float) -> PathLossParams:
        d = access_distance(n, self.kappa_prime, self.c)
        f_t = max(self.f_t_access, 2.0 * (d + 1) / d)
        base = PathLossParams(self.alpha, self.P, self.N0, self.c, d, f_t, 1.0)
        return base.with_(f_e=max(1.0, self.access_margin * min_feasible_f_e(base)))


def random_matching(count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random perfect matching as ``(count, 2)`` (source, destination) rows.

    Each matched couple contributes both directions; with an odd count the
    leftover node is paired with a uniformly chosen other node.
    """
    perm = rng.permutation(count)
    half = count // 2
    a, b = perm[:half], perm[half : 2 * half]
    pairs = [np.stack([a, b], 1), np.stack([b, a], 1)]
    if count % 2 and count > 1:
        last = perm[-1]
        other = perm[rng.integers(count - 1)]
        pairs.append(np.array([[last, other]]))
    return np.concatenate(pairs) if count > 1 else np.zeros((0, 2), dtype=np.int64)


@dataclass(frozen=True, eq=False)
class NetworkRun:
    n: int
    seed: int
    report: ThroughputReport
    plan: RoutePlan
    loads: LoadReport
    highways: HighwaySet
    zone: BlockedReport
    d_access: int
    hw_rate: float
    grid: TiltedGrid


def simulate_network(n: int, seed: int, cfg: ScaleConfig = ScaleConfig(), lambda_e=None) -> NetworkRun:
    """Sample one extended network and compute per-node secure throughput.

    ``lambda_e`` optionally overrides the config's intensity law with any
    callable of ``n``.
    """
    region = Region.extended(n)
    lam = lambda_e(n) if lambda_e is not None else cfg.lambda_e(n)
    legit = sample_ppp(region, 1.0, derive_seed(seed, n, 0))
    eaves = sample_ppp(region, lam, derive_seed(seed, n, 1))
    grid = TiltedGrid.for_region(region, cfg.c)
    hw_p = cfg.highway_params()
    om = mark_open(grid, legit, eaves, hw_p.f_e, hw_p.d)
    hw = build_highways(to_lattice(om), cfg.kappa, cfg.delta, n)
    loads0 = _assign(hw, region, legit, grid)

    acc_p = cfg.access_params(n)
    zone = blocked_fraction(legit, eaves, acc_p, acc_p.d, cfg.epsilon, grid)
    pairs = random_matching(len(legit), substream(seed, n, 2))
    deficit = loads0.deficit_blocked
    plan0 = plan_routes(pairs, loads0)
    # node-level distance test, in both roles
    far = np.zeros(len(legit), dtype=bool)
    far[plan0.src] |= plan0.access_dist > acc_p.d
    far[plan0.dst] |= plan0.delivery_dist > acc_p.d
    node_blocked = zone.blocked | deficit | far

    # loads count only nodes that take part
    loads = LoadReport(
        hw, grid, loads0.points,
        np.where(node_blocked, -1, loads0.h_id), np.where(node_blocked, -1, loads0.v_id),
        loads0.slab_width,
        np.bincount(loads0.h_id[~node_blocked], minlength=len(loads0.h_load)),
        np.bincount(loads0.v_id[~node_blocked], minlength=len(loads0.v_load)),
    )
    plan = plan_routes(pairs, loads, node_blocked)

    hw_rate = secure_rate_per_hop(hw_p).rate_bits
    acc_rate = secure_rate_per_hop(acc_p).rate_bits
    occ = cell_counts(grid, legit)
    cells = grid.cell_indices(legit.points) if len(legit) else np.zeros((0, 2), dtype=np.int64)
    node_occ = occ[cells[:, 0], cells[:, 1]] if len(legit) else np.zeros(0, dtype=np.int64)
    rates = np.zeros((len(pairs), 4))
    ok = ~plan.blocked
    s, d = plan.src[ok], plan.dst[ok]
    rates[ok, 0] = acc_rate / node_occ[s]
    rates[ok, 1] = hw_rate / np.maximum(loads.h_load[plan.h_id[ok]], 1)
    rates[ok, 2] = hw_rate / np.maximum(loads.v_load[plan.v_id[ok]], 1)
    rates[ok, 3] = acc_rate / node_occ[d]
    report = end_to_end_throughput(plan, rates)
    components = {
        "zone": float(zone.blocked.mean()) if len(legit) else 0.0,
        "deficit": float(deficit.mean()) if len(legit) else 0.0,
        "distance": float(far.mean()) if len(legit) else 0.0,
        "zone_bound": zone.bound,
        "rect_deficit_fraction": hw.deficit_fraction,
    }
    loads_summary = {
        "max": loads.max_load,
        "bound": loads.load_bound(n),
        "mean_h": float(loads.h_load.mean()) if len(loads.h_load) else 0.0,
    }
    report = ThroughputReport(
        report.rate, report.blocked, report.blocked_src, report.blocked_dst, report.bottleneck,
        report.F, components, loads_summary,
    )
    return NetworkRun(n, seed, report, plan, loads, hw, zone, acc_p.d, hw_rate, grid)


def config_dict(cfg: ScaleConfig) -> dict:
    return asdict(cfg)
