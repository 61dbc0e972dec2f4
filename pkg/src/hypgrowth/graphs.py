"""Embedded graphs: regular tilings of the hyperbolic plane, a flat control
lattice, slab clipping, and the graph file format.

A generated graph records the hyperbolic radius out to which the vertex set
is complete ("coverage"), so downstream estimators can refuse experiments
whose events could see past the generated region (guard band) instead of
silently truncating them.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .hypgeom import (
    Isometry,
    Point,
    Slab,
    clip_geodesic,
    hyperbolic_distance_many,
    proj_distance_many,
    segment_height_range,
    segment_proj_min,
)


class GuardBandError(RuntimeError):
    """The generated region is too small for the requested event."""


class GenerationCapError(RuntimeError):
    """Vertex generation exceeded the configured cap."""


# ---------------------------------------------------------------------------
# embedded graphs


@dataclass(eq=False)
class EmbeddedGraph:
    """A locally finite graph embedded in hyperbolic half-space.

    coords holds one row per vertex (horizontal..., height); edges is an
    (m, 2) integer array.  Edges of tiling graphs are geodesic segments;
    the flat control lattice flags itself non-geodesic in meta and its
    edges are horizontal Euclidean segments.
    """

    coords: np.ndarray
    edges: np.ndarray
    origin_index: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.coords.ndim != 2:
            raise ValueError("coords must be a 2-d array")
        if np.any(self.coords[:, -1] <= 0):
            raise ValueError("all vertex heights must be positive")
        if not (0 <= self.origin_index < len(self.coords)):
            raise ValueError("origin index out of range")

    # -- basic accessors ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def point(self, i: int) -> Point:
        return Point.from_coords(self.coords[i])

    @property
    def origin_point(self) -> Point:
        return self.point(self.origin_index)

    def is_geodesic(self) -> bool:
        return bool(self.meta.get("geodesic", True))

    @property
    def coverage_radius(self) -> float:
        """Hyperbolic radius around the origin where the graph is complete."""
        return float(self.meta.get("coverage_radius", 0.0))

    def edge_lengths(self) -> np.ndarray:
        a = self.coords[self.edges[:, 0]]
        b = self.coords[self.edges[:, 1]]
        if self.is_geodesic():
            return hyperbolic_distance_many(a, b)
        return np.linalg.norm(a - b, axis=1)

    @property
    def l_max(self) -> float:
        if "l_max" in self.meta:
            return float(self.meta["l_max"])
        return float(np.max(self.edge_lengths())) if self.n_edges else 0.0

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def validate(self):
        """Check simplicity and connectedness; raise on violation."""
        e = np.sort(self.edges, axis=1)
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("graph has a loop edge")
        if len(np.unique(e, axis=0)) != len(e):
            raise ValueError("graph has duplicate edges")
        if self.n_vertices and not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        n = self.n_vertices
        if self.n_edges == 0:
            return n <= 1
        m = coo_matrix(
            (np.ones(self.n_edges), (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)
        )
        ncomp, _ = connected_components(m, directed=False)
        return ncomp == 1

    def origin_distances(self) -> np.ndarray:
        o = np.broadcast_to(self.coords[self.origin_index], self.coords.shape)
        return hyperbolic_distance_many(self.coords, o)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return _graph_json(self.dim, self.coords, self.edges, self.origin_index, self.meta)

    def save(self, path: str):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "EmbeddedGraph":
        obj = json.loads(text)
        return cls(
            coords=np.asarray(obj["vertices"], dtype=float).reshape(-1, obj["dimension"]),
            edges=np.asarray(obj["edges"], dtype=np.int64).reshape(-1, 2),
            origin_index=int(obj["origin_index"]),
            meta=obj.get("meta", {}),
        )

    @classmethod
    def load(cls, path: str) -> "EmbeddedGraph":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf8")).hexdigest()

    # -- derived subsets ----------------------------------------------------

    def ball_subgraph(self, radius: float) -> "EmbeddedGraph":
        """Induced subgraph on vertices within hyperbolic radius of the origin."""
        keep = self.origin_distances() <= radius + 1e-12
        return self._induced(keep, coverage=min(self.coverage_radius, radius))

    def _induced(self, keep_mask: np.ndarray, coverage: float) -> "EmbeddedGraph":
        if not keep_mask[self.origin_index]:
            raise ValueError("induced subgraph must keep the origin")
        new_index = -np.ones(self.n_vertices, dtype=np.int64)
        new_index[keep_mask] = np.arange(int(keep_mask.sum()))
        emask = keep_mask[self.edges[:, 0]] & keep_mask[self.edges[:, 1]]
        meta = dict(self.meta)
        meta["coverage_radius"] = coverage
        return EmbeddedGraph(
            coords=self.coords[keep_mask],
            edges=new_index[self.edges[emask]],
            origin_index=int(new_index[self.origin_index]),
            meta=meta,
        )


def _fmt17(x: float) -> str:
    # 17 significant digits uniquely round-trip an IEEE double
    return format(float(x), ".17g")


def _graph_json(dim, coords, edges, origin_index, meta) -> str:
    buf = io.StringIO()
    buf.write("{\n")
    buf.write(f'"dimension": {int(dim)},\n')
    buf.write('"vertices": [\n')
    rows = ["[" + ", ".join(_fmt17(v) for v in row) + "]" for row in np.asarray(coords, dtype=float)]
    buf.write(",\n".join(rows))
    buf.write("\n],\n")
    buf.write('"edges": [')
    buf.write(", ".join(f"[{int(i)}, {int(j)}]" for i, j in np.asarray(edges).reshape(-1, 2)))
    buf.write("],\n")
    buf.write(f'"origin_index": {int(origin_index)},\n')
    buf.write(f'"meta": {json.dumps(meta, sort_keys=True)}\n')
    buf.write("}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# regular tilings of the hyperbolic plane


def tiling_edge_length(p: int, q: int) -> float:
    """Edge length of the regular {p, q} tiling of the hyperbolic plane."""
    return 2.0 * math.acosh(math.cos(math.pi / p) / math.sin(math.pi / q))


def tiling_face_circumradius(p: int, q: int) -> float:
    return math.acosh(1.0 / (math.tan(math.pi / p) * math.tan(math.pi / q)))


def tiling_graph(
    p: int,
    q: int,
    radius: float,
    vertex_cap: int = 2_000_000,
    cache_dir: str | None = None,
) -> EmbeddedGraph:
    """Generate the {p, q} tiling graph out to hyperbolic radius `radius`.

    Requires (p - 2)(q - 2) > 4.  The returned graph contains every tiling
    vertex within `radius` of the origin and all tiling edges among them;
    one vertex sits at the origin (index 0) with its q edges at equal chart
    angles.

    Vertices are the orbit of the origin under compositions of point
    reflections about edge midpoints, found by breadth-first expansion with
    spatial deduplication.  Expansion overshoots the kept radius by one edge
    length plus one face diameter so no kept vertex or edge is reachable
    only through dropped ones.
    """
    g, _ = tiling_graph_with_frames(p, q, radius, vertex_cap=vertex_cap, cache_dir=cache_dir)
    return g


def tiling_graph_with_frames(
    p: int,
    q: int,
    radius: float,
    vertex_cap: int = 2_000_000,
    cache_dir: str | None = None,
):
    """As tiling_graph, also returning per-vertex symmetries of the tiling.

    The second return value is an (n, 3, 3) array of Lorentz matrices; the
    i-th maps the origin vertex to vertex i and is a symmetry of the full
    ideal tiling (used by the transitivity smoke test).
    """
    if (p - 2) * (q - 2) <= 4:
        raise ValueError("{%d, %d} is not a hyperbolic tiling" % (p, q))
    if radius <= 0:
        raise ValueError("radius must be positive")

    cache_path = None
    if cache_dir is None:
        cache_dir = os.environ.get("HYPGROWTH_CACHE")
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        key = f"tiling_p{p}_q{q}_r{radius:.12g}_v1"
        cache_path = os.path.join(cache_dir, key + ".npz")
        if os.path.exists(cache_path):
            data = np.load(cache_path)
            g = EmbeddedGraph(
                coords=data["coords"],
                edges=data["edges"],
                origin_index=int(data["origin_index"]),
                meta=json.loads(str(data["meta"])),
            )
            return g, data["frames"]

    ell = tiling_edge_length(p, q)
    margin = ell + 2.0 * tiling_face_circumradius(p, q)
    explore_radius = radius + margin

    # generator matrices: point reflections about the q edge midpoints at
    # the origin, sigma = -(I + 2 m m^T eta) for a hyperboloid point m
    eta = np.eye(3)
    eta[0, 0] = -1.0
    gens = []
    half = 0.5 * ell
    for j in range(q):
        th = 2.0 * math.pi * j / q
        mid = np.array(
            [math.cosh(half), math.sinh(half) * math.cos(th), math.sinh(half) * math.sin(th)]
        )
        gens.append(-(np.eye(3) + 2.0 * np.outer(mid, eta @ mid)))

    frames = [np.eye(3)]
    X = [np.array([1.0, 0.0, 0.0])]
    dedup: dict[tuple, list[int]] = {(0, 0): [0]}
    edges: set[tuple[int, int]] = set()

    def bucket_of(x) -> tuple:
        return (int(math.floor(x[1] / 0.125)), int(math.floor(x[2] / 0.125)))

    def find_existing(x) -> int:
        # distinct tiling vertices are >= 0.5 apart in the (X1, X2) plane,
        # far beyond both this tolerance and the accumulated float error
        bx, by = bucket_of(x)
        tol = 1e-7 * max(1.0, abs(x[0]))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in dedup.get((bx + dx, by + dy), ()):
                    y = X[idx]
                    if (
                        abs(y[0] - x[0]) <= tol
                        and abs(y[1] - x[1]) <= tol
                        and abs(y[2] - x[2]) <= tol
                    ):
                        return idx
        return -1

    cosh_explore = math.cosh(explore_radius)
    frontier = [0]
    while frontier:
        next_frontier: list[int] = []
        mats = np.stack([frames[i] for i in frontier])
        for gen in gens:
            cand = mats @ gen
            pos = cand[:, :, 0]  # image of the origin is the first column
            for fi, src in enumerate(frontier):
                x = pos[fi]
                j = find_existing(x)
                if j < 0:
                    # cosh of the distance to the origin is the X0 coordinate
                    if x[0] > cosh_explore:
                        continue
                    j = len(X)
                    if j >= vertex_cap:
                        raise GenerationCapError(
                            f"tiling generation exceeded {vertex_cap} vertices"
                        )
                    X.append(x)
                    frames.append(cand[fi])
                    dedup.setdefault(bucket_of(x), []).append(j)
                    next_frontier.append(j)
                if j != src:
                    edges.add((min(src, j), max(src, j)))
        frontier = next_frontier

    X = np.array(X)
    frames_arr = np.array(frames)
    dist = np.arccosh(np.maximum(X[:, 0], 1.0))
    keep = dist <= radius + 1e-9

    new_index = -np.ones(len(X), dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    kept_edges = np.array(
        sorted(
            (int(new_index[i]), int(new_index[j]))
            for i, j in edges
            if keep[i] and keep[j]
        ),
        dtype=np.int64,
    ).reshape(-1, 2)

    # hyperboloid -> half-space coordinates
    w = X[keep, 0] - X[keep, 2]
    coords = np.column_stack([X[keep, 1] / w, 1.0 / w])

    meta = {
        "family": "tiling",
        "p": p,
        "q": q,
        "radius": radius,
        "coverage_radius": radius,
        "l_max": ell,
        "geodesic": True,
    }
    graph = EmbeddedGraph(coords=coords, edges=kept_edges, origin_index=0, meta=meta)
    frames_kept = frames_arr[keep]
    if cache_path:
        np.savez_compressed(
            cache_path,
            coords=graph.coords,
            edges=graph.edges,
            origin_index=graph.origin_index,
            meta=json.dumps(meta, sort_keys=True),
            frames=frames_kept,
        )
    return graph, frames_kept


def tiling_slab_component(
    p: int,
    q: int,
    phi: Isometry | None = None,
    r: float = 8.0,
    delta: float = 1.0 / 128.0,
    top: float = 1.0,
    vertex_cap: int = 2_000_000,
    cache_dir: str | None = None,
) -> EmbeddedGraph:
    """Generate the part of a repositioned {p, q} tiling that cluster-of-
    origin events inside a truncated slab can see.

    The breadth-first walk expands only through vertices with height in
    [delta, top] and projection distance at most r from the repositioned
    origin, keeping the one-step shell around them.  Any fragment path out
    of the origin passes through parent-edge endpoints inside that window
    (fragments of distinct parents meet only at shared tiling vertices),
    so reach events up to threshold r on the slab [delta, top] computed on
    this graph agree exactly with the infinite tiling.  Edges that merely
    arch through the slab with both endpoints outside the window can never
    join the origin's cluster and are deliberately absent.
    """
    if (p - 2) * (q - 2) <= 4:
        raise ValueError("{%d, %d} is not a hyperbolic tiling" % (p, q))
    if not 0.0 < delta <= top:
        raise ValueError("need 0 < delta <= top")
    if r <= 0:
        raise ValueError("r must be positive")

    start = np.eye(3) if phi is None else np.asarray(phi.matrix, dtype=float)
    origin_pos = start[:, 0]
    w0 = origin_pos[0] - origin_pos[2]
    h0 = 1.0 / w0
    u0 = origin_pos[1] / w0
    if not (delta * (1 - 1e-9) <= h0 <= top * (1 + 1e-9)):
        raise ValueError(
            f"repositioned origin at height {h0:.6g} lies outside [{delta}, {top}]"
        )

    cache_path = None
    if cache_dir is None:
        cache_dir = os.environ.get("HYPGROWTH_CACHE")
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        tag = hashlib.sha256(
            np.ascontiguousarray(start).tobytes()
            + f"|{p}|{q}|{r:.12g}|{delta:.12g}|{top:.12g}".encode()
        ).hexdigest()[:16]
        cache_path = os.path.join(cache_dir, f"slabcomp_{tag}_v1.npz")
        if os.path.exists(cache_path):
            data = np.load(cache_path)
            return EmbeddedGraph(
                coords=data["coords"],
                edges=data["edges"],
                origin_index=int(data["origin_index"]),
                meta=json.loads(str(data["meta"])),
            )

    ell = tiling_edge_length(p, q)
    eta = np.eye(3)
    eta[0, 0] = -1.0
    gens = []
    half = 0.5 * ell
    for j in range(q):
        th = 2.0 * math.pi * j / q
        mid = np.array(
            [math.cosh(half), math.sinh(half) * math.cos(th), math.sinh(half) * math.sin(th)]
        )
        gens.append(-(np.eye(3) + 2.0 * np.outer(mid, eta @ mid)))

    t_lo = delta * (1.0 - 1e-9) - 1e-15
    t_hi = top * (1.0 + 1e-9)
    u_cap = r * (1.0 + 1e-9) + 1e-12

    def expandable(x: np.ndarray) -> bool:
        w = x[0] - x[2]
        if w <= 0.0:
            return False
        t = 1.0 / w
        if t < t_lo or t > t_hi:
            return False
        return abs(x[1] / w - u0) <= u_cap

    frames = [start]
    X = [origin_pos.copy()]
    dedup: dict[tuple, list[int]] = {}
    edges: set[tuple[int, int]] = set()

    def bucket_of(x) -> tuple:
        return (int(math.floor(x[1] / 0.125)), int(math.floor(x[2] / 0.125)))

    dedup[bucket_of(origin_pos)] = [0]

    def find_existing(x) -> int:
        bx, by = bucket_of(x)
        tol = 1e-7 * max(1.0, abs(x[0]))
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for idx in dedup.get((bx + dx, by + dy), ()):
                    y = X[idx]
                    if (
                        abs(y[0] - x[0]) <= tol
                        and abs(y[1] - x[1]) <= tol
                        and abs(y[2] - x[2]) <= tol
                    ):
                        return idx
        return -1

    # note: no mid-walk re-orthonormalization.  Gram-Schmidt in the fixed
    # origin basis is ill-conditioned for frames centered far from the
    # origin (condition grows like e^{2 dist}) and perturbs positions by
    # more than the dedup tolerance; raw drift over thousands of layers
    # stays orders of magnitude below it instead.
    frontier = [0]
    while frontier:
        next_frontier: list[int] = []
        mats = np.stack([frames[i] for i in frontier])
        for gen in gens:
            cand = mats @ gen
            pos = cand[:, :, 0]
            for fi, src in enumerate(frontier):
                x = pos[fi]
                j = find_existing(x)
                if j < 0:
                    j = len(X)
                    if j >= vertex_cap:
                        raise GenerationCapError(
                            f"slab component generation exceeded {vertex_cap} vertices"
                        )
                    X.append(x)
                    frames.append(cand[fi])
                    dedup.setdefault(bucket_of(x), []).append(j)
                    if expandable(x):
                        next_frontier.append(j)
                if j != src:
                    edges.add((min(src, j), max(src, j)))
        frontier = next_frontier

    X = np.array(X)
    arr_edges = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    w = X[:, 0] - X[:, 2]
    coords = np.column_stack([X[:, 1] / w, 1.0 / w])
    meta = {
        "family": "tiling_slab_component",
        "p": p,
        "q": q,
        "coverage_radius": 0.0,
        "event_box": {"r": r, "delta": delta, "top": top, "center": u0},
        "l_max": ell,
        "geodesic": True,
    }
    graph = EmbeddedGraph(coords=coords, edges=arr_edges, origin_index=0, meta=meta)
    if cache_path:
        np.savez_compressed(
            cache_path,
            coords=graph.coords,
            edges=graph.edges,
            origin_index=graph.origin_index,
            meta=json.dumps(meta, sort_keys=True),
        )
    return graph


# ---------------------------------------------------------------------------
# flat control lattice


def slab_lattice(d: int, spacing: float, extent: float) -> EmbeddedGraph:
    """Nearest-neighbor grid at height one, a flat control model.

    Vertices sit at (spacing * z, 1) for integer vectors z with
    ``|spacing * z|_inf <= extent``; edges join nearest neighbors and are
    straight horizontal segments (meta flags the graph non-geodesic).
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if spacing <= 0 or extent <= 0:
        raise ValueError("spacing and extent must be positive")
    n = int(math.floor(extent / spacing + 1e-9))
    if n < 1:
        raise ValueError("extent too small: lattice has no neighbors")
    axes = [range(-n, n + 1)] * (d - 1)
    pts = list(product(*axes))
    index = {z: i for i, z in enumerate(pts)}
    coords = np.array([[spacing * zi for zi in z] + [1.0] for z in pts])
    edges = []
    for z, i in index.items():
        for axis in range(d - 1):
            nb = list(z)
            nb[axis] += 1
            j = index.get(tuple(nb))
            if j is not None:
                edges.append((min(i, j), max(i, j)))
    meta = {
        "family": "lattice",
        "spacing": spacing,
        "extent": extent,
        "extent_sites": n,
        "coverage_radius": 0.0,
        "l_max": spacing,
        "geodesic": False,
    }
    return EmbeddedGraph(
        coords=coords,
        edges=np.array(sorted(edges), dtype=np.int64),
        origin_index=index[tuple([0] * (d - 1))],
        meta=meta,
    )


# ---------------------------------------------------------------------------
# slab clipping


@dataclass(eq=False)
class SlabGraph:
    """A graph clipped to a slab of heights [lo, h].

    Vertices are the surviving original vertices plus cut vertices where an
    edge meets a cut plane (their height equals the cut height exactly).
    Fragments are the non-degenerate pieces of original edges; a fragment
    remembers its parent edge, and all fragments of one parent share that
    parent's open/closed state under percolation.
    """

    base: EmbeddedGraph
    h: float
    delta: float | None
    coords: np.ndarray                 # (n_sv, d) clipped-space coordinates
    orig_vertex: np.ndarray            # (n_sv,) original index, -1 for cuts
    fragments: np.ndarray              # (n_f, 2) slab-vertex index pairs
    parent: np.ndarray                 # (n_f,) original edge index
    frag_max_height: np.ndarray        # (n_f,) max height along the fragment
    position_tag: str = ""

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_fragments(self) -> int:
        return len(self.fragments)

    @property
    def n_parent_edges(self) -> int:
        return self.base.n_edges

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def lo(self) -> float:
        return 0.0 if self.delta is None else self.delta

    def vertex_index_of_original(self, orig_i: int) -> int:
        hits = np.nonzero(self.orig_vertex == orig_i)[0]
        if len(hits) == 0:
            raise KeyError(f"original vertex {orig_i} not inside the slab")
        return int(hits[0])

    def vertex_proj_distances(self, center_horizontal) -> np.ndarray:
        """Sup-norm distance of each slab vertex projection from a center."""
        c = np.asarray(center_horizontal, dtype=float)
        return proj_distance_many(self.coords[:, :-1], c)

    def frag_proj_extrema(self, center_horizontal, which=None):
        """Per fragment, min and max sup-norm distance of its horizontal
        projection from the given center.

        The projection of a fragment is the straight segment between its
        endpoint projections, so the max is attained at an endpoint and the
        min is the exact convex minimum over the segment.  `which` selects
        a subset of fragment indices; default is all of them.
        """
        c = np.asarray(center_horizontal, dtype=float)
        frags = self.fragments if which is None else self.fragments[which]
        ua = self.coords[frags[:, 0], :-1]
        ub = self.coords[frags[:, 1], :-1]
        da = proj_distance_many(ua, c)
        db = proj_distance_many(ub, c)
        fmax = np.maximum(da, db)
        if self.dim == 2:
            a = ua[:, 0] - c[0]
            b = ub[:, 0] - c[0]
            straddle = ((a <= 0) & (b >= 0)) | ((a >= 0) & (b <= 0))
            fmin = np.where(straddle, 0.0, np.minimum(np.abs(a), np.abs(b)))
        else:
            fmin = np.array(
                [segment_proj_min(ua[i], ub[i], c) for i in range(len(ua))]
            )
        return fmin, fmax

    def as_embedded(self) -> EmbeddedGraph:
        """Reinterpret the clipped graph as a plain embedded graph
        (fragments become edges).  Used for idempotence checks."""
        meta = {
            "family": "clipped",
            "geodesic": self.base.is_geodesic(),
            "coverage_radius": 0.0,
        }
        origin = 0
        hits = np.nonzero(self.orig_vertex == self.base.origin_index)[0]
        if len(hits):
            origin = int(hits[0])
        return EmbeddedGraph(
            coords=self.coords.copy(),
            edges=self.fragments.copy(),
            origin_index=origin,
            meta=meta,
        )


def clip_to_slab(
    graph: EmbeddedGraph,
    phi: Isometry | None = None,
    h: float = 1.0,
    delta: float | None = None,
) -> SlabGraph:
    """Clip the image of a graph under an isometry to the slab [delta, h].

    Geodesic edges are cut where their height crosses a cut plane; a
    non-vertical geodesic can cross the top plane twice, leaving two
    fragments that share one parent edge.  Straight-edge (non-geodesic)
    graphs are clipped linearly.  Degenerate single-point intersections
    are dropped.
    """
    slab = Slab(h, delta)
    lo = slab.lo
    coords = graph.coords
    if phi is not None:
        if phi.dim != graph.dim:
            raise ValueError("isometry dimension does not match the graph")
        coords = phi.apply_coords(coords)

    heights = coords[:, -1]
    inside = (heights >= lo) & (heights <= h)
    sv_index = -np.ones(graph.n_vertices, dtype=np.int64)
    sv_coords: list[np.ndarray] = []
    sv_orig: list[int] = []
    for i in np.nonzero(inside)[0]:
        sv_index[i] = len(sv_coords)
        sv_coords.append(coords[i])
        sv_orig.append(int(i))

    fragments: list[tuple[int, int]] = []
    parents: list[int] = []
    fmax_h: list[float] = []
    geodesic = graph.is_geodesic()

    for eid, (i, j) in enumerate(graph.edges):
        a = coords[i]
        b = coords[j]
        if geodesic:
            pieces = clip_geodesic(a, b, lo, h)
        else:
            pieces = _clip_linear(a, b, lo, h)
        for pa, pb in pieces:
            ends = []
            for c in (pa, pb):
                # a piece endpoint inherited unchanged from a surviving
                # original vertex reuses that slab vertex; anything else
                # is a fresh cut vertex
                idx = -1
                for v in (int(i), int(j)):
                    if sv_index[v] >= 0 and np.array_equal(c, coords[v]):
                        idx = int(sv_index[v])
                        break
                if idx < 0:
                    idx = len(sv_coords)
                    sv_coords.append(np.asarray(c, dtype=float))
                    sv_orig.append(-1)
                ends.append(idx)
            if ends[0] == ends[1]:
                continue
            fragments.append((ends[0], ends[1]))
            parents.append(eid)
            if geodesic:
                fmax_h.append(segment_height_range(pa, pb)[1])
            else:
                fmax_h.append(max(pa[-1], pb[-1]))

    return SlabGraph(
        base=graph,
        h=h,
        delta=delta,
        coords=np.array(sv_coords, dtype=float).reshape(-1, graph.dim),
        orig_vertex=np.array(sv_orig, dtype=np.int64),
        fragments=np.array(fragments, dtype=np.int64).reshape(-1, 2),
        parent=np.array(parents, dtype=np.int64),
        frag_max_height=np.array(fmax_h, dtype=float),
        position_tag=phi.tag if phi is not None else "",
    )


def _clip_linear(a: np.ndarray, b: np.ndarray, lo: float, hi: float):
    """Clip a straight segment to the height band [lo, hi]."""
    ta, tb = a[-1], b[-1]
    if ta == tb:
        if lo <= ta <= hi:
            return [(a.copy(), b.copy())]
        return []
    s0, s1 = 0.0, 1.0
    dt = tb - ta
    if dt > 0:
        if ta < lo:
            s0 = max(s0, (lo - ta) / dt)
        if tb > hi:
            s1 = min(s1, (hi - ta) / dt)
    else:
        if tb < lo:
            s1 = min(s1, (lo - ta) / dt)
        if ta > hi:
            s0 = max(s0, (hi - ta) / dt)
    if s1 - s0 <= 1e-12:
        return []
    p = a + s0 * (b - a)
    q = a + s1 * (b - a)
    p[-1] = min(max(p[-1], lo), hi)
    q[-1] = min(max(q[-1], lo), hi)
    return [(p, q)]


# ---------------------------------------------------------------------------
# slab constants and guard bands


def edge_span(graph: EmbeddedGraph, h: float = 1.0) -> float:
    """Largest horizontal sup-norm span of an edge meeting the slab of
    height h.

    The horizontal projection of an edge is the straight segment between
    its endpoint projections, so the span is the projected endpoint
    distance.  Geodesic edges attain their minimum height at an endpoint,
    so an edge meets the slab exactly when its lower endpoint does.
    """
    if graph.n_edges == 0:
        return 0.0
    a = graph.coords[graph.edges[:, 0]]
    b = graph.coords[graph.edges[:, 1]]
    meets = np.minimum(a[:, -1], b[:, -1]) <= h
    if not np.any(meets):
        return 0.0
    spans = np.max(np.abs(a[:, :-1] - b[:, :-1]), axis=-1)
    return float(np.max(spans[meets]))


def height_ratio_bound(graph: EmbeddedGraph) -> float:
    """Upper bound on the height ratio across any edge: exp(longest edge).

    Along a unit-speed geodesic in the half-space metric |dt/ds| <= t, so
    log-height is 1-Lipschitz and the ratio of heights over an edge of
    length L is at most e^L.  For the flat control lattice edge heights
    are constant and the bound holds trivially.
    """
    return math.exp(graph.l_max)


def height_ratio_empirical(graph: EmbeddedGraph) -> float:
    """Largest ratio of max to min height attained along any single edge."""
    best = 1.0
    coords = graph.coords
    geodesic = graph.is_geodesic()
    for i, j in graph.edges:
        a, b = coords[i], coords[j]
        if geodesic:
            lo, hi = segment_height_range(a, b)
        else:
            lo, hi = min(a[-1], b[-1]), max(a[-1], b[-1])
        best = max(best, hi / lo)
    return best


def required_ball_radius(
    r: float,
    heights,
    d: int,
    delta: float,
    top: float = 1.0,
    l_max: float = 0.0,
) -> float:
    """Hyperbolic coverage radius needed for box events of sup-norm radius
    r around positioned origins.

    A position at height h in `heights` looks at points (u, t) with
    |u|_inf <= r and t in [delta, top]; the hyperbolic distance from
    (0, h) to the box corner is convex in both t and h, so the max is over
    the height extremes.  One edge length is added so every parent edge
    with a fragment meeting the box lies inside the generated ball.
    """
    hs = np.atleast_1d(np.asarray(heights, dtype=float))
    worst = 0.0
    corner2 = (d - 1) * r * r
    for hv in (float(np.min(hs)), float(np.max(hs))):
        for t in (delta, top):
            arg = 1.0 + (corner2 + (hv - t) ** 2) / (2.0 * hv * t)
            worst = max(worst, math.acosh(arg))
    return worst + l_max


def check_coverage(graph: EmbeddedGraph, needed: float):
    """Raise GuardBandError when the generated region cannot contain the
    requested event."""
    have = graph.coverage_radius
    if have + 1e-9 < needed:
        raise GuardBandError(
            f"event needs coverage radius {needed:.3f} but the graph only "
            f"guarantees {have:.3f}; regenerate with a larger radius"
        )


# ---------------------------------------------------------------------------
# graph families, the unit experiments are parametrized over


@dataclass(frozen=True)
class TilingFamily:
    """A {p, q} tiling of the hyperbolic plane as a reusable generator."""

    p: int
    q: int

    def label(self) -> str:
        return f"tiling-{self.p}-{self.q}"

    @property
    def edge_length(self) -> float:
        return tiling_edge_length(self.p, self.q)

    def ball(self, radius: float, cache_dir: str | None = None) -> EmbeddedGraph:
        return tiling_graph(self.p, self.q, radius, cache_dir=cache_dir)

    def slab_component(
        self,
        phi: Isometry | None,
        r: float,
        delta: float,
        top: float = 1.0,
        cache_dir: str | None = None,
    ) -> EmbeddedGraph:
        return tiling_slab_component(
            self.p, self.q, phi, r=r, delta=delta, top=top, cache_dir=cache_dir
        )


@dataclass(frozen=True)
class LatticeFamily:
    """Grid at height one, the flat control model, parametrized by extent."""

    d: int
    spacing: float = 1.0

    def label(self) -> str:
        return f"lattice-d{self.d}-s{self.spacing:g}"

    def graph(self, extent: float) -> EmbeddedGraph:
        return slab_lattice(self.d, self.spacing, extent)
