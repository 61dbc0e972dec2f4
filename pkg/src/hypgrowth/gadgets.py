"""Bundled gadget corpus for the exact verification machinery.

Small multigraphs with known structure: paths, cycles, grids, trees, a
couple of seeded random graphs, and three slab gadgets cut from the {5,4}
tiling (one of which has a parent edge arching out of the slab and back,
so two of its links share a coin).  Every gadget stays at or below twelve
sampling units so exhaustive enumeration is instant.
"""

from __future__ import annotations

import json
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .graphs import EmbeddedGraph, clip_to_slab, tiling_graph
from .hypgeom import Isometry
from .oracle import EventSpec, OracleGraph, increasing_event_from_witnesses
from .seeds import derive_seed

__all__ = [
    "bk_pairs",
    "gadget",
    "gadget_from_json",
    "gadget_names",
    "gadget_to_json",
    "increasing_events",
    "corpus_events",
    "primary_event",
    "slab_gadget_names",
]


# ---------------------------------------------------------------------------
# abstract gadgets


def _random_connected(n: int, m: int, seed: int, name: str) -> OracleGraph:
    rng = np.random.default_rng(derive_seed(seed, "gadget", name))
    edges = []
    order = rng.permutation(n)
    for i in range(1, n):
        j = order[rng.integers(0, i)]
        edges.append((int(order[i]), int(j)))
    seen = {tuple(sorted(e)) for e in edges}
    while len(edges) < m:
        i, j = rng.integers(0, n, size=2)
        if i == j or tuple(sorted((int(i), int(j)))) in seen:
            continue
        seen.add(tuple(sorted((int(i), int(j)))))
        edges.append((int(i), int(j)))
    pos = rng.uniform(-2.0, 2.0, size=(n, 2))
    pos[0] = 0.0
    return OracleGraph.from_edges(edges, positions=pos, name=name)


def _grid(nx: int, ny: int, name: str) -> OracleGraph:
    def vid(i, j):
        return i * ny + j

    edges = []
    for i in range(nx):
        for j in range(ny):
            if i + 1 < nx:
                edges.append((vid(i, j), vid(i + 1, j)))
            if j + 1 < ny:
                edges.append((vid(i, j), vid(i, j + 1)))
    pos = [[float(i), float(j)] for i in range(nx) for j in range(ny)]
    return OracleGraph.from_edges(edges, positions=pos, name=name)


def _cycle(n: int, name: str) -> OracleGraph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    ang = 2 * np.pi * np.arange(n) / n
    pos = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pos -= pos[0]
    return OracleGraph.from_edges(edges, positions=pos, name=name)


def _builders() -> dict[str, Callable[[], OracleGraph]]:
    b: dict[str, Callable[[], OracleGraph]] = {}
    b["path-2"] = lambda: OracleGraph.from_edges([(0, 1), (1, 2)], name="path-2")
    b["path-4"] = lambda: OracleGraph.from_edges(
        [(0, 1), (1, 2), (2, 3), (3, 4)], name="path-4"
    )
    b["parallel-2"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 1)], name="parallel-2"
    )
    b["parallel-3"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 1), (0, 1)], name="parallel-3"
    )
    b["series-parallel"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 1), (1, 2)], name="series-parallel"
    )
    b["doubled-path"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 1), (1, 2), (1, 2)], name="doubled-path"
    )
    b["theta"] = lambda: OracleGraph.from_edges(
        [(0, 1), (1, 3), (0, 2), (2, 3), (3, 4)],
        positions=[[0.0, 0.0], [1.0, 0.5], [1.0, -0.5], [2.0, 0.0], [3.0, 0.0]],
        name="theta",
    )
    b["star-4"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 2), (0, 3), (0, 4)],
        positions=[[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
        name="star-4",
    )
    b["cycle-4"] = lambda: _cycle(4, "cycle-4")
    b["cycle-6"] = lambda: _cycle(6, "cycle-6")
    b["ladder-2x3"] = lambda: _grid(2, 3, "ladder-2x3")
    b["grid-3x3"] = lambda: _grid(3, 3, "grid-3x3")
    b["tree-depth-2"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)],
        positions=[
            [0.0, 0.0],
            [-1.0, 1.0],
            [1.0, 1.0],
            [-1.5, 2.0],
            [-0.5, 2.0],
            [0.5, 2.0],
            [1.5, 2.0],
        ],
        name="tree-depth-2",
    )
    b["k4"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        positions=[[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, 0.4]],
        name="k4",
    )
    b["bowtie"] = lambda: OracleGraph.from_edges(
        [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)],
        positions=[[0.0, 0.0], [0.0, 1.0], [1.0, 0.5], [2.0, 0.0], [2.0, 1.0]],
        name="bowtie",
    )
    b["pentagon-chord"] = lambda: OracleGraph.from_edges(
        [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 4)],
        positions=[
            [0.0, 0.0],
            [1.0, 0.7],
            [2.0, 0.0],
            [1.6, -1.0],
            [0.4, -1.0],
        ],
        name="pentagon-chord",
    )
    b["wheel-5"] = lambda: OracleGraph.from_edges(
        [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4), (4, 1)],
        positions=[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
        name="wheel-5",
    )
    b["cube"] = lambda: OracleGraph.from_edges(
        [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
            (0, 4),
            (1, 5),
            (2, 6),
            (3, 7),
        ],
        positions=[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.3, 0.3],
            [1.3, 0.3],
            [1.3, 1.3],
            [0.3, 1.3],
        ],
        name="cube",
    )
    b["random-8"] = lambda: _random_connected(6, 8, 1811, "random-8")
    b["random-10"] = lambda: _random_connected(7, 10, 2903, "random-10")
    b["slab-pentagon"] = _slab_pentagon
    b["slab-arch"] = _slab_arch
    b["slab-window"] = _slab_window
    return b


# ---------------------------------------------------------------------------
# slab gadgets from the {5,4} tiling


@lru_cache(maxsize=1)
def _tiling_patch() -> EmbeddedGraph:
    return tiling_graph(5, 4, radius=1.8)


def _find_pentagon(g: EmbeddedGraph) -> list[int]:
    """A 5-cycle of tiling vertices through the origin."""
    nbrs: dict[int, set[int]] = {}
    for i, j in g.edges:
        nbrs.setdefault(int(i), set()).add(int(j))
        nbrs.setdefault(int(j), set()).add(int(i))
    o = g.origin_index
    for a in sorted(nbrs[o]):
        for b in sorted(nbrs[o]):
            if a == b:
                continue
            for x in sorted(nbrs[a] - {o}):
                for y in sorted(nbrs[b] - {o}):
                    if x != y and y in nbrs.get(x, set()):
                        return [o, a, x, y, b]
    raise RuntimeError("no pentagon found in the tiling patch")


def _induce(g: EmbeddedGraph, keep_vertices: list[int]) -> EmbeddedGraph:
    mask = np.zeros(g.n_vertices, dtype=bool)
    mask[keep_vertices] = True
    return g._induced(mask, coverage=0.0)


def _seed_component(og: OracleGraph) -> OracleGraph:
    """Restrict a gadget to the seed's component of the fully open graph."""
    adj: dict[int, set[int]] = {}
    for i, j in og.edges:
        adj.setdefault(int(i), set()).add(int(j))
        adj.setdefault(int(j), set()).add(int(i))
    seen = {og.seed}
    stack = [og.seed]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    vkeep = sorted(seen)
    vmap = {v: i for i, v in enumerate(vkeep)}
    emask = [vmap.get(int(i)) is not None and vmap.get(int(j)) is not None
             for i, j in og.edges]
    edges = [(vmap[int(i)], vmap[int(j)])
             for (i, j), k in zip(og.edges, emask) if k]
    units_old = og.unit[np.asarray(emask, dtype=bool)]
    uniq, inv = np.unique(units_old, return_inverse=True)
    return OracleGraph(
        coords=og.coords[vkeep],
        edges=np.asarray(edges, dtype=np.int64),
        unit=inv,
        seed=vmap[og.seed],
        name=og.name,
    )


def _clipped_gadget(
    patch: EmbeddedGraph, h0: float, theta: float, top: float, delta: float, name: str
) -> OracleGraph:
    rot = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    phi = Isometry.position(h0, rot)
    clip = clip_to_slab(patch, phi, h=top, delta=delta)
    og = OracleGraph.from_slab(clip, seed_original=patch.origin_index, name=name)
    return _seed_component(og)


def _slab_pentagon() -> OracleGraph:
    """Pentagon of the {5,4} tiling clipped to a slab; roof cuts trim it."""
    patch = _induce(_tiling_patch(), _find_pentagon(_tiling_patch()))
    og = _clipped_gadget(patch, h0=0.8, theta=0.3, top=1.0, delta=0.05,
                         name="slab-pentagon")
    if not 3 <= og.n_units <= 12:
        raise RuntimeError(f"slab-pentagon ended with {og.n_units} units")
    return og


def _slab_arch() -> OracleGraph:
    """Slab gadget where one parent edge leaves the slab roof and returns.

    The arching parent contributes two fragments that share a sampling
    unit; the builder scans positions until that shape appears.
    """
    patch = _induce(_tiling_patch(), _find_pentagon(_tiling_patch()))
    for h0 in (0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9):
        for k in range(48):
            theta = 2 * np.pi * k / 48
            og = _clipped_gadget(patch, h0, theta, top=1.0, delta=0.02,
                                 name="slab-arch")
            if og.n_units > 12 or og.n_edges <= og.n_units:
                continue
            counts = np.bincount(og.unit)
            if counts.max() >= 2 and og.n_units >= 4:
                return og
    raise RuntimeError("no arching clip found over the scanned positions")


def _slab_window() -> OracleGraph:
    """Wider {5,4} patch clipped top and bottom, close to the unit cap."""
    patch = _tiling_patch()
    best = None
    for h0 in (0.5, 0.55, 0.6, 0.65, 0.7):
        for k in range(24):
            theta = 2 * np.pi * k / 24
            og = _clipped_gadget(patch, h0, theta, top=1.0, delta=0.3,
                                 name="slab-window")
            if 8 <= og.n_units <= 12:
                return og
            if og.n_units <= 12 and (
                best is None or og.n_units > best.n_units
            ):
                best = og
    if best is None:
        raise RuntimeError("no slab window within the unit cap")
    return best


# ---------------------------------------------------------------------------
# registry


_REGISTRY = _builders()


def gadget_names() -> list[str]:
    return sorted(_REGISTRY)


def slab_gadget_names() -> list[str]:
    return ["slab-pentagon", "slab-arch", "slab-window"]


@lru_cache(maxsize=None)
def gadget(name: str) -> OracleGraph:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown gadget {name!r}; see gadget_names()") from None
    g = builder()
    if g.n_edges > 12:
        raise RuntimeError(f"gadget {name} has {g.n_edges} edges, above the corpus cap")
    return g


# ---------------------------------------------------------------------------
# event batteries


def primary_event(G: OracleGraph) -> EventSpec:
    """Canonical increasing event of a gadget: seed reaches the far vertex."""
    scores = G.proj_scores(G.seed)
    far = int(np.argmax(scores))
    if far == G.seed:
        far = (G.seed + 1) % G.n_vertices
    return EventSpec.connects([G.seed], [far], label=f"reach-far[{G.name}]")


def increasing_events(G: OracleGraph) -> list[EventSpec]:
    """Small battery of increasing events exercising one gadget."""
    scores = G.proj_scores(G.seed)
    far = int(np.argmax(scores))
    events = [primary_event(G)]
    if scores[far] > 0:
        events.append(EventSpec.size_ge(float(scores[far]), seed=G.seed))
        events.append(EventSpec.size_ge(float(scores[far]) / 2, seed=G.seed))
    k = max(1, G.n_units // 2)
    events.append(
        EventSpec.custom(
            lambda ou, k=k: int(np.sum(ou)) >= k,
            monotone_flag=True,
            label=f"at-least-{k}-open",
        )
    )
    return events


def corpus_events() -> list[tuple[str, EventSpec]]:
    """Every (gadget, increasing event) pair in the bundled battery."""
    out = []
    for name in gadget_names():
        G = gadget(name)
        for ev in increasing_events(G):
            out.append((name, ev))
    return out


def bk_pairs(count: int = 100, seed: int = 4242) -> Iterator[tuple[str, EventSpec, EventSpec]]:
    """Seeded random pairs of increasing events on gadgets of <= 10 units.

    Events are upward closures of a few random witness states, so they are
    increasing by construction and vary wildly in shape.
    """
    small = [n for n in gadget_names() if gadget(n).n_units <= 10]
    rng = np.random.default_rng(derive_seed(seed, "bk-pairs"))
    for i in range(count):
        name = small[int(rng.integers(0, len(small)))]
        G = gadget(name)
        M = G.n_units
        events = []
        for side in range(2):
            n_wit = int(rng.integers(1, 4))
            masks = rng.integers(1, 1 << M, size=n_wit)
            events.append(
                increasing_event_from_witnesses(
                    [int(m) for m in masks], M, label=f"bk{i}-{side}"
                )
            )
        yield name, events[0], events[1]


# ---------------------------------------------------------------------------
# serialization: graph file format plus gadget fields


def gadget_to_json(G: OracleGraph) -> str:
    obj = {
        "dimension": G.dim,
        "vertices": [[float(v) for v in row] for row in G.coords],
        "edges": [[int(i), int(j)] for i, j in G.edges],
        "origin_index": int(G.seed),
        "meta": {"units": [int(u) for u in G.unit]},
        "gadget_name": G.name,
    }
    return json.dumps(obj, indent=1, sort_keys=True)


def gadget_from_json(text: str) -> OracleGraph:
    obj = json.loads(text)
    coords = np.asarray(obj["vertices"], dtype=float).reshape(-1, obj["dimension"])
    edges = np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2)
    units = obj.get("meta", {}).get("units")
    unit = (
        np.asarray(units, dtype=np.int64)
        if units is not None
        else np.arange(len(edges))
    )
    return OracleGraph(
        coords=coords,
        edges=edges,
        unit=unit,
        seed=int(obj["origin_index"]),
        name=obj.get("gadget_name", ""),
    )
