import numpy as np
import pytest

from hypgrowth.gadgets import (
    bk_pairs,
    corpus_events,
    gadget,
    gadget_from_json,
    gadget_names,
    gadget_to_json,
    increasing_events,
    primary_event,
    slab_gadget_names,
)
from hypgrowth.oracle import event_table, exact_prob


class TestCorpus:
    def test_at_least_twenty(self):
        assert len(gadget_names()) >= 20

    def test_all_within_unit_cap(self):
        for name in gadget_names():
            G = gadget(name)
            assert G.n_units <= 12, name
            assert G.n_edges >= 1, name

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            gadget("no-such-gadget")

    def test_deterministic(self):
        a = gadget("random-8")
        b = gadget("random-8")
        assert a is b or np.array_equal(a.edges, b.edges)

    def test_slab_gadgets_exist(self):
        names = slab_gadget_names()
        assert len(names) == 3
        for name in names:
            G = gadget(name)
            # the slab members exercise shared-unit dependence or cut
            # vertices, which the abstract gadgets cannot
            assert G.coords is not None

    def test_arch_shares_a_unit(self):
        G = gadget("slab-arch")
        counts = np.bincount(G.unit)
        assert counts.max() >= 2
        assert G.n_edges > G.n_units

    def test_seed_vertex_valid(self):
        for name in gadget_names():
            G = gadget(name)
            assert 0 <= G.seed < G.n_vertices


class TestEvents:
    def test_primary_event_nontrivial(self):
        for name in gadget_names():
            G = gadget(name)
            f = exact_prob(G, primary_event(G))
            assert f(1) == 1
            assert f(0) == 0 or G.n_vertices == 1

    def test_battery_size(self):
        assert len(corpus_events()) >= 30

    def test_battery_events_monotone(self):
        for name, ev in corpus_events():
            G = gadget(name)
            assert ev.monotone_flag
            event_table(G, ev)

    def test_increasing_events_per_gadget(self):
        G = gadget("theta")
        events = increasing_events(G)
        assert len(events) >= 3


class TestBkPairs:
    def test_count_and_caps(self):
        pairs = list(bk_pairs(count=25))
        assert len(pairs) == 25
        for name, A, B in pairs:
            G = gadget(name)
            assert G.n_units <= 10
            assert A.monotone_flag and B.monotone_flag

    def test_deterministic(self):
        a = [(n, A.label, B.label) for n, A, B in bk_pairs(count=10)]
        b = [(n, A.label, B.label) for n, A, B in bk_pairs(count=10)]
        assert a == b


class TestSerialization:
    def test_round_trip(self):
        for name in ("path-2", "slab-arch", "grid-3x3"):
            G = gadget(name)
            text = gadget_to_json(G)
            G2 = gadget_from_json(text)
            assert np.array_equal(G2.edges, G.edges)
            assert np.array_equal(G2.unit, G.unit)
            assert np.array_equal(G2.coords, G.coords)
            assert G2.seed == G.seed
            assert gadget_to_json(G2) == text
