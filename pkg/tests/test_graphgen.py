import json
import math

import numpy as np
import pytest

from hypgrowth.graphs import (
    EmbeddedGraph,
    GenerationCapError,
    GuardBandError,
    LatticeFamily,
    TilingFamily,
    check_coverage,
    clip_to_slab,
    edge_span,
    height_ratio_bound,
    height_ratio_empirical,
    slab_lattice,
    tiling_edge_length,
    tiling_graph,
    tiling_graph_with_frames,
    tiling_slab_component,
)
from hypgrowth.hypgeom import (
    Isometry,
    Point,
    hyperbolic_distance,
    origin,
    segment_height_range,
)

ELL_54 = tiling_edge_length(5, 4)


class TestTiling:
    def test_first_shell_of_54(self):
        g = tiling_graph(5, 4, ELL_54 + 1e-9)
        assert g.n_vertices == 5
        assert g.n_edges == 4
        assert g.origin_index == 0
        for i in range(1, 5):
            d = hyperbolic_distance(g.origin_point, g.point(i))
            assert d == pytest.approx(ELL_54, abs=1e-9)

    def test_degree_bounds(self):
        g = tiling_graph(5, 4, 3.0)
        degs = g.degrees()
        assert degs.max() <= 4
        dist = g.origin_distances()
        interior = dist <= 3.0 - g.l_max
        assert np.all(degs[interior] == 4)

    def test_37_connected_simple(self):
        g = tiling_graph(3, 7, 3.0)
        g.validate()
        assert g.n_vertices > 7

    def test_non_hyperbolic_rejected(self):
        for p, q in ((4, 4), (3, 6), (5, 3)):
            with pytest.raises(ValueError):
                tiling_graph(p, q, 1.0)

    def test_vertex_cap(self):
        with pytest.raises(GenerationCapError):
            tiling_graph(5, 4, 6.0, vertex_cap=30)

    def test_edge_lengths_constant(self):
        g = tiling_graph(5, 4, 2.5)
        lens = g.edge_lengths()
        assert np.max(np.abs(lens - ELL_54)) < 1e-7

    def test_transitivity_smoke(self):
        from scipy.spatial import cKDTree

        radius = 5.0
        g, frames = tiling_graph_with_frames(5, 4, radius)
        dist = g.origin_distances()
        edge_set = {tuple(sorted(e)) for e in g.edges.tolist()}
        tree = cKDTree(g.coords)
        candidates = np.nonzero((dist > 0.1) & (dist <= 1.5))[0][:4]
        assert candidates.size > 0
        checked = matched = 0
        for v in candidates:
            phi = Isometry(frames[v])
            img = phi.apply_coords(g.coords)
            safe = radius - dist[v] - g.l_max
            mapped = {}
            for k in range(g.n_vertices):
                p = Point.from_coords(img[k])
                if hyperbolic_distance(origin(2), p) <= safe:
                    dd, idx = tree.query(img[k])
                    mapped[k] = int(idx) if dd < 1e-6 else -1
            for a, b in g.edges:
                ia = mapped.get(int(a))
                ib = mapped.get(int(b))
                if ia is None or ib is None:
                    continue
                checked += 1
                if ia >= 0 and ib >= 0 and tuple(sorted((ia, ib))) in edge_set:
                    matched += 1
        assert checked >= 50
        assert matched / checked >= 0.99


class TestLattice:
    def test_path_d2(self):
        g = slab_lattice(2, 1.0, 2.0)
        assert g.n_vertices == 5
        assert g.n_edges == 4
        assert g.degrees().max() == 2

    def test_grid_d3(self):
        g = slab_lattice(3, 1.0, 2.0)
        assert g.n_vertices == 25
        assert g.n_edges == 40

    @pytest.mark.parametrize("d,spacing,extent", [(2, 1.0, 3.0), (3, 0.5, 2.0), (4, 1.0, 1.0)])
    def test_degree_cap(self, d, spacing, extent):
        g = slab_lattice(d, spacing, extent)
        assert g.degrees().max() <= 2 * (d - 1)

    def test_extent_below_spacing(self):
        with pytest.raises(ValueError):
            slab_lattice(2, 1.0, 0.5)

    def test_all_at_height_one(self):
        g = slab_lattice(3, 1.0, 2.0)
        assert np.all(g.coords[:, -1] == 1.0)


class TestClip:
    def test_graph_below_h_unchanged(self):
        g = tiling_graph(5, 4, 2.0)
        scale = Isometry.scaling(0.05, 2)
        clip = clip_to_slab(g, scale, h=1.0)
        assert clip.n_vertices == g.n_vertices
        assert clip.n_fragments == g.n_edges
        assert np.all(clip.orig_vertex >= 0)
        parent_counts = np.bincount(clip.parent, minlength=g.n_edges)
        assert np.all(parent_counts == 1)

    def test_single_vertical_edge(self):
        g = EmbeddedGraph(
            coords=np.array([[0.0, 0.5], [0.0, 2.0]]),
            edges=np.array([[0, 1]]),
            origin_index=0,
            meta={"geodesic": True, "l_max": math.log(4.0), "coverage_radius": 0.0},
        )
        clip = clip_to_slab(g, None, h=1.0)
        assert clip.n_fragments == 1
        assert clip.n_vertices == 2
        lo = clip.coords[:, -1].min()
        hi = clip.coords[:, -1].max()
        assert lo == pytest.approx(0.5, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-9)
        cut = clip.orig_vertex < 0
        assert cut.sum() == 1
        assert clip.coords[cut, -1][0] == pytest.approx(1.0, abs=1e-9)

    def test_semicircle_double_crossing(self):
        # endpoints below the cut plane, apex above: the clip leaves two
        # fragments of one parent, cut at x = c +- sqrt(rho^2 - h^2)
        a = np.array([-1.2, 0.4])
        b = np.array([1.2, 0.4])
        g = EmbeddedGraph(
            coords=np.array([a, b]),
            edges=np.array([[0, 1]]),
            origin_index=0,
            meta={"geodesic": True, "l_max": 10.0, "coverage_radius": 0.0},
        )
        h = 1.0
        clip = clip_to_slab(g, None, h=h)
        assert clip.n_fragments == 2
        assert clip.n_parent_edges == 1
        assert np.all(clip.parent == 0)
        rho = math.hypot(1.2, 0.4)
        x_cut = math.sqrt(rho * rho - h * h)
        cut_x = sorted(clip.coords[clip.orig_vertex < 0][:, 0])
        assert cut_x[0] == pytest.approx(-x_cut, abs=1e-9)
        assert cut_x[1] == pytest.approx(x_cut, abs=1e-9)
        assert np.all(np.abs(clip.coords[clip.orig_vertex < 0][:, 1] - h) < 1e-9)

    def test_degenerate_touch_dropped(self):
        # vertical edge touching the slab roof at a single point: the
        # zero-length intersection leaves no fragment
        g = EmbeddedGraph(
            coords=np.array([[0.0, 1.0], [0.0, 2.0]]),
            edges=np.array([[0, 1]]),
            origin_index=0,
            meta={"geodesic": True, "l_max": 10.0, "coverage_radius": 0.0},
        )
        clip = clip_to_slab(g, None, h=1.0)
        assert clip.n_fragments == 0
        assert clip.n_vertices == 1

    def test_apex_touch_keeps_edge_whole(self):
        # semicircle apex exactly at the roof: entirely inside, one fragment
        a = np.array([-0.6, 0.2])
        b = np.array([0.6, 0.2])
        rho = math.hypot(0.6, 0.2)
        g = EmbeddedGraph(
            coords=np.array([a, b]),
            edges=np.array([[0, 1]]),
            origin_index=0,
            meta={"geodesic": True, "l_max": 10.0, "coverage_radius": 0.0},
        )
        clip = clip_to_slab(g, None, h=rho)
        assert clip.n_fragments == 1

    def test_idempotence(self):
        g = tiling_graph(5, 4, 2.5)
        clip = clip_to_slab(g, Isometry.scaling(0.6, 2), h=1.0)
        again = clip_to_slab(clip.as_embedded(), None, h=1.0)
        assert again.n_vertices == clip.n_vertices
        assert again.n_fragments == clip.n_fragments
        assert np.allclose(
            np.sort(again.coords, axis=0), np.sort(clip.coords, axis=0), atol=1e-12
        )

    def test_fragment_endpoints_on_parent_geodesic(self):
        g = tiling_graph(5, 4, 2.5)
        phi = Isometry.position(0.7, np.eye(2)) @ Isometry.translation([0.1])
        clip = clip_to_slab(g, phi, h=1.0, delta=0.3)
        base = phi.apply_coords(g.coords)
        for f, (pa, pb) in enumerate(clip.fragments):
            i, j = g.edges[clip.parent[f]]
            a, b = base[i], base[j]
            # the parent geodesic is the circle through a and b centered on
            # the boundary axis (or the vertical line when aligned)
            for endpoint in (clip.coords[pa], clip.coords[pb]):
                if abs(a[0] - b[0]) < 1e-12:
                    assert abs(endpoint[0] - a[0]) < 1e-9
                else:
                    c = 0.5 * (a[0] + b[0]) + (b[1] ** 2 - a[1] ** 2) / (
                        2.0 * (b[0] - a[0])
                    )
                    rho = math.hypot(a[0] - c, a[1])
                    assert math.hypot(endpoint[0] - c, endpoint[1]) == pytest.approx(
                        rho, abs=1e-9
                    )

    def test_fragment_height_band(self):
        g = tiling_graph(5, 4, 2.5)
        clip = clip_to_slab(g, Isometry.scaling(0.8, 2), h=1.0, delta=0.25)
        assert np.all(clip.coords[:, -1] <= 1.0 + 1e-9)
        assert np.all(clip.coords[:, -1] >= 0.25 - 1e-9)
        assert np.all(clip.frag_max_height <= 1.0 + 1e-9)


class TestEdgeSpanAndHeights:
    def test_lattice_span_equals_spacing(self):
        assert edge_span(slab_lattice(3, 1.0, 2.0)) == 1.0

    def test_vertical_edges_span_zero(self):
        g = EmbeddedGraph(
            coords=np.array([[0.0, 0.5], [0.0, 0.9]]),
            edges=np.array([[0, 1]]),
            origin_index=0,
            meta={"geodesic": True, "l_max": 1.0, "coverage_radius": 0.0},
        )
        assert edge_span(g) == 0.0

    def test_height_ratio_bound(self):
        g = tiling_graph(5, 4, 2.5)
        emp = height_ratio_empirical(g)
        assert emp <= height_ratio_bound(g) + 1e-9
        assert emp >= 1.0

    def test_span_excludes_edges_above_slab(self):
        g = EmbeddedGraph(
            coords=np.array([[0.0, 3.0], [5.0, 3.0], [0.0, 0.5], [0.25, 0.5]]),
            edges=np.array([[0, 1], [2, 3]]),
            origin_index=2,
            meta={"geodesic": True, "l_max": 10.0, "coverage_radius": 0.0},
        )
        assert edge_span(g, h=1.0) == pytest.approx(0.25)


class TestSerialization:
    def test_round_trip_bit_stable(self):
        g = tiling_graph(5, 4, 2.5)
        text = g.to_json()
        g2 = EmbeddedGraph.from_json(text)
        assert g2.to_json() == text
        assert np.array_equal(g2.coords, g.coords)
        assert np.array_equal(g2.edges, g.edges)
        assert g2.origin_index == g.origin_index

    def test_format_fields(self):
        g = slab_lattice(2, 1.0, 2.0)
        doc = json.loads(g.to_json())
        assert set(doc) >= {"dimension", "vertices", "edges", "origin_index", "meta"}
        assert doc["dimension"] == 2

    def test_content_hash_stable(self):
        g = slab_lattice(2, 1.0, 2.0)
        assert g.content_hash() == EmbeddedGraph.from_json(g.to_json()).content_hash()


class TestRegionGenerator:
    def test_event_box_meta(self):
        phi = Isometry.position(0.5, np.eye(2))
        g = tiling_slab_component(5, 4, phi, r=2.0, delta=0.25, top=1.0)
        box = g.meta["event_box"]
        assert box["r"] == 2.0
        assert box["delta"] == 0.25
        assert box["top"] == 1.0
        g.validate()

    def test_component_within_ball_region(self):
        # every region vertex inside the window is also a ball vertex
        phi = Isometry.position(0.5, np.eye(2))
        region = tiling_slab_component(5, 4, phi, r=1.5, delta=0.25, top=1.0)
        ball = tiling_graph(5, 4, 6.0)
        ball_pts = phi.apply_coords(ball.coords)
        keys = {tuple(np.round(c, 6)) for c in ball_pts}
        hit = sum(tuple(np.round(c, 6)) in keys for c in region.coords)
        assert hit == region.n_vertices

    def test_origin_height_outside_band_rejected(self):
        phi = Isometry.position(0.1, np.eye(2))
        with pytest.raises(ValueError):
            tiling_slab_component(5, 4, phi, r=1.0, delta=0.25, top=1.0)

    def test_coverage_guard(self):
        g = tiling_graph(5, 4, 2.0)
        with pytest.raises(GuardBandError):
            check_coverage(g, 5.0)
        check_coverage(g, 1.5)


class TestFamilies:
    def test_labels(self):
        assert "5" in TilingFamily(5, 4).label()
        assert "lattice" in LatticeFamily(3).label().lower() or LatticeFamily(3).label()

    def test_tiling_family_ball(self):
        fam = TilingFamily(5, 4)
        g = fam.ball(2.0)
        assert g.n_vertices >= 5
        assert fam.edge_length == pytest.approx(ELL_54)

    def test_lattice_family_graph(self):
        fam = LatticeFamily(3, 1.0)
        g = fam.graph(2.0)
        assert g.n_vertices == 25
