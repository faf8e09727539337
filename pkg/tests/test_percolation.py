import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from secnet.geom import Grid, PointSet, Region, TiltedGrid, occupancy_probability, sample_ppp
from secnet.percolation import (
    OpenMap,
    PercLattice,
    box_any,
    build_highways,
    calibrate_delta,
    count_disjoint_crossings,
    disjoint_crossings,
    edge_disjoint,
    mark_open,
    path_is_open,
    rectangle_partition,
    sample_independent_lattice,
    to_lattice,
)
from secnet.rng import derive_seed


def _centers(grid):
    k = grid.shape[0]
    ij = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2)
    return PointSet(grid.cell_centers(ij), 1.0, 0, grid.side_length)


def _points(xy, side):
    return PointSet(np.asarray(xy, dtype=float).reshape(-1, 2), 1.0, 0, side)


def _lattice(m, h, v):
    return PercLattice(m, np.asarray(h, dtype=bool), np.asarray(v, dtype=bool))


def _full(m, value):
    return _lattice(m, np.full((m + 1, m), value), np.full((m, m + 1), value))


lattices = st.integers(2, 7).flatmap(
    lambda m: st.tuples(
        st.just(m),
        st.lists(st.booleans(), min_size=(m + 1) * m, max_size=(m + 1) * m),
        st.lists(st.booleans(), min_size=m * (m + 1), max_size=m * (m + 1)),
    )
).map(lambda t: _lattice(t[0], np.reshape(t[1], (t[0] + 1, t[0])), np.reshape(t[2], (t[0], t[0] + 1))))


# -- open map -------------------------------------------------------------


def test_no_eavesdroppers_all_open():
    grid = Grid.for_region(Region.extended(100), 1.0)
    om = mark_open(grid, _centers(grid), _points([], 10.0), 2.0, 1)
    assert om.open.all()


def test_single_eavesdropper_closes_25_cells():
    grid = Grid.for_region(Region.extended(100), 1.0)
    om = mark_open(grid, _centers(grid), _points([[5.5, 5.5]], 10.0), 2.0, 1)
    closed = np.argwhere(~om.open)
    assert len(closed) == 25
    assert np.array_equal(np.unique(closed[:, 0]), np.arange(3, 8))


def test_zone_is_clipped_at_boundary():
    grid = Grid.for_region(Region.extended(100), 1.0)
    om = mark_open(grid, _centers(grid), _points([[0.5, 0.5]], 10.0), 2.0, 1)
    assert (~om.open).sum() == 9


def test_mark_open_preconditions():
    grid = Grid.for_region(Region.extended(100), 1.0)
    with pytest.raises(ValueError):
        mark_open(grid, _centers(grid), _points([], 10.0), 0.5, 1)
    with pytest.raises(ValueError):
        mark_open(grid, _centers(grid), _points([], 10.0), 1.0, 0)


@given(st.integers(0, 3), st.integers(0, 1000))
def test_box_any_matches_brute_force(radius, seed):
    rng = np.random.default_rng(seed)
    a = (rng.random((9, 7)) < 0.1).astype(int)
    got = box_any(a, radius)
    want = np.zeros_like(got)
    for i, j in np.argwhere(a > 0):
        want[max(0, i - radius) : i + radius + 1, max(0, j - radius) : j + radius + 1] = True
    assert np.array_equal(got, want)


def test_open_fraction_matches_product_form():
    # interior cells only, so the zone is never clipped
    c, lam_e, f_e, d = 1.0, 0.01, 2.0, 1
    region = Region.extended(30 * 30)
    grid = Grid.for_region(region, c)
    r = 2
    p = occupancy_probability(1.0, c)
    q = math.exp(-lam_e * (2 * f_e * d + 1) ** 2 * c * c)
    fr = []
    for s in range(500):
        om = mark_open(grid, sample_ppp(region, 1.0, derive_seed(s, 0)), sample_ppp(region, lam_e, derive_seed(s, 1)), f_e, d)
        fr.append(om.open[r:-r, r:-r].mean())
    fr = np.asarray(fr)
    se = fr.std(ddof=1) / math.sqrt(len(fr))
    assert abs(fr.mean() - p * q) <= 5 * se


# -- lattice mapping --------------------------------------------------------


@pytest.mark.parametrize("value", [True, False])
def test_uniform_open_map_maps_to_uniform_lattice(value):
    region = Region.extended(400)
    grid = TiltedGrid.for_region(region, 1.0)
    legit = _points(grid.cell_centers(np.argwhere(grid.valid_mask())), grid.side_length) if value else _points([], grid.side_length)
    lat = to_lattice(mark_open(grid, legit, _points([], grid.side_length), 1.0, 1))
    assert lat.h.all() == value and lat.v.all() == value and lat.h.any() == value


def test_edges_and_cells_are_in_bijection():
    grid = TiltedGrid(10, 10.0)
    assert grid.valid_mask().sum() == PercLattice(10, np.zeros((11, 10), bool), np.zeros((10, 11), bool)).edge_count


def test_each_edge_reads_its_own_cell():
    grid = TiltedGrid(6, 6.0)
    cells = np.argwhere(grid.valid_mask())
    for k in (0, 7, 30, len(cells) - 1):
        one = np.zeros(grid.shape, bool)
        one[tuple(cells[k])] = True
        lat = to_lattice(OpenMap(grid, one, one, ~one, 0))
        assert lat.h.sum() + lat.v.sum() == 1


def test_to_lattice_rejects_plain_grid_and_tiny_m():
    grid = Grid.for_region(Region.extended(100), 1.0)
    with pytest.raises(TypeError):
        to_lattice(mark_open(grid, _centers(grid), _points([], 10.0), 1.0, 1))
    tiny = TiltedGrid(1, 1.0)
    with pytest.raises(ValueError):
        to_lattice(mark_open(tiny, _points([], 1.0), _points([], 1.0), 1.0, 1))


@pytest.mark.parametrize("p, expect", [(1.0, True), (0.0, False)])
def test_independent_extremes(p, expect):
    lat = sample_independent_lattice(16, p, 1)
    assert lat.h.all() == expect and lat.v.all() == expect and lat.h.any() == expect


def test_independent_half_open_fraction():
    lat = sample_independent_lattice(128, 0.5, 3)
    assert abs(lat.open_fraction - 0.5) <= 3 * math.sqrt(0.25 / lat.edge_count)


@given(lattices)
def test_json_round_trip(lat):
    assert PercLattice.from_json(lat.to_json()) == lat


@given(lattices)
def test_transpose_is_involution(lat):
    assert lat.transpose().transpose() == lat


# -- crossings ------------------------------------------------------------------


def _nx_crossings(lat, lo, hi):
    g = nx.DiGraph()
    m = lat.m

    def add(a, b):
        g.add_edge(a, b, capacity=1)
        g.add_edge(b, a, capacity=1)

    for j in range(lo, hi):
        for i in range(m):
            if lat.h[j, i]:
                add((i, j), (i + 1, j))
    for j in range(lo, hi - 1):
        for i in range(m + 1):
            if lat.v[j, i]:
                add((i, j), (i, j + 1))
    for j in range(lo, hi):
        g.add_edge("s", (0, j), capacity=10**6)
        g.add_edge((m, j), "t", capacity=10**6)
    return int(nx.maximum_flow_value(g, "s", "t"))


@given(lattices, st.data())
def test_crossing_count_matches_networkx(lat, data):
    lo = data.draw(st.integers(0, lat.m))
    hi = data.draw(st.integers(lo + 1, lat.m + 1))
    assert count_disjoint_crossings(lat, (lo, hi)) == _nx_crossings(lat, lo, hi)


@given(lattices)
def test_crossings_are_open_disjoint_and_complete(lat):
    band = (0, lat.m + 1)
    paths = disjoint_crossings(lat, band)
    assert len(paths) == count_disjoint_crossings(lat, band)
    assert edge_disjoint(paths, lat.m)
    for p in paths:
        assert path_is_open(lat, p)
        assert p[0, 0] == 0 and p[-1, 0] == lat.m
        assert len({tuple(x) for x in p}) == len(p)


@given(lattices, st.integers(0, 10_000))
def test_opening_edges_never_reduces_crossings(lat, seed):
    rng = np.random.default_rng(seed)
    more = lat.with_edges_opened(rng.random(lat.h.shape) < 0.2, rng.random(lat.v.shape) < 0.2)
    band = (0, lat.m + 1)
    assert count_disjoint_crossings(more, band) >= count_disjoint_crossings(lat, band)


@pytest.mark.parametrize("h", [1, 4, 9])
def test_full_band_has_one_crossing_per_row(h):
    assert count_disjoint_crossings(_full(12, True), (0, h)) == h
    assert count_disjoint_crossings(_full(12, False), (0, h)) == 0


def test_band_bounds_are_checked():
    with pytest.raises(ValueError):
        count_disjoint_crossings(_full(4, True), (3, 7))


def test_crossing_law_at_m128():
    m, kappa = 128, 2.0
    delta = calibrate_delta(0.95, kappa, 32, 200, 0)
    band = (0, round(kappa * math.log(m)))
    ok = [
        count_disjoint_crossings(sample_independent_lattice(m, 0.95, derive_seed(9, k)), band) >= delta * math.log(m)
        for k in range(100)
    ]
    assert np.mean(ok) >= 0.95


def test_dependent_model_dominates_independent():
    # geometric model with p q ~ 0.73 against an independent lattice at p' = 0.65
    region = Region.extended(2304)
    grid = TiltedGrid.for_region(region, 1.2)
    cs = grid.cell_size
    lam_e = -math.log(0.95) / (9 * cs * cs)
    rho = occupancy_probability(1.0, cs) * 0.95
    p_ind = 0.65
    assert p_ind < rho
    band = (0, 13)
    dep, ind = [], []
    for s in range(200):
        om = mark_open(grid, sample_ppp(region, 1.0, derive_seed(77, s, 0)), sample_ppp(region, lam_e, derive_seed(77, s, 1)), 1.0, 1)
        dep.append(count_disjoint_crossings(to_lattice(om), band))
        ind.append(count_disjoint_crossings(sample_independent_lattice(grid.m, p_ind, derive_seed(78, s)), band))
    dep, ind = np.asarray(dep), np.asarray(ind)
    # one-sided DKW band for two samples of 200 at level 1%
    eps = 2 * math.sqrt(math.log(1 / 0.01) / (2 * 200))
    for k in range(0, max(dep.max(), ind.max()) + 1):
        assert (dep >= k).mean() >= (ind >= k).mean() - eps


# -- rectangles and highways ---------------------------------------------------


@given(st.integers(2, 400), st.floats(0.5, 8.0))
def test_rectangle_partition_covers_rows(m, kappa):
    part = rectangle_partition(m, kappa)
    assert part.bands[0][0] == 0 and part.bands[-1][1] == m + 1
    assert all(a[1] == b[0] for a, b in zip(part.bands, part.bands[1:]))
    assert part.eps_m >= 0
    assert math.isclose(part.height, m / len(part.bands))


def test_all_open_lattice_has_no_deficits():
    hw = build_highways(_full(40, True), 2.0, 0.3, 10_000)
    assert hw.group_size <= hw.rectangle_height
    assert hw.deficits == [] and hw.deficit_fraction == 0.0
    for g in hw.horizontal + hw.vertical:
        assert len(g.crossings) == hw.group_size


def test_all_closed_lattice_is_all_deficient():
    hw = build_highways(_full(40, False), 2.0, 0.3, 10_000)
    assert hw.deficit_fraction == 1.0
    assert all(d == hw.group_size for _, _, d in hw.deficits)


def test_vertical_highways_cross_bottom_to_top():
    lat = sample_independent_lattice(24, 0.9, 5)
    hw = build_highways(lat, 2.0, 0.3, 4096)
    for g in hw.vertical:
        for p in g.crossings:
            assert p[0, 1] == 0 and p[-1, 1] == lat.m
            assert path_is_open(lat, p)


def test_highway_json_round_trip():
    hw = build_highways(sample_independent_lattice(20, 0.9, 2), 2.0, 0.3, 2048)
    back = type(hw).from_json(hw.to_json())
    assert back.to_json() == hw.to_json()


def test_realistic_map_has_few_deficient_rectangles():
    # calibrated geometry: c = 1.2, kappa = 5, delta = 0.1, highway zone factor 3 at d = 1
    n = 2**14
    region = Region.extended(n)
    grid = TiltedGrid.for_region(region, 1.2)
    fr = []
    for s in range(5):
        legit = sample_ppp(region, 1.0, derive_seed(s, n, 0))
        eaves = sample_ppp(region, math.log(n) ** -3, derive_seed(s, n, 1))
        hw = build_highways(to_lattice(mark_open(grid, legit, eaves, 3.0, 1)), 5.0, 0.1, n)
        fr.append(hw.deficit_fraction)
    assert np.mean(fr) < 0.05
