"""Bond percolation on clipped graphs with reproducible coupled sampling.

The sampling unit is the parent edge of the unclipped graph: every fragment
of one parent shares a single open/closed state.  Uniforms come from a
counter-based generator keyed on (seed, unit id), so configurations are
independent of evaluation order and monotone in p under a shared seed.

Two execution styles coexist.  The lazy single-trial path opens edges on
demand during a BFS and suits one-off cluster reports.  The bit-parallel
path packs one trial per bit into uint64 words and sweeps whole batches to
a fixpoint at once; estimators that need 1e4+ trials per cell use it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .graphs import SlabGraph
from .hypgeom import Box
from .seeds import edge_uniform, edge_uniforms, uniforms_matrix

__all__ = [
    "Adjacency",
    "BitPropagator",
    "ClusterReport",
    "Configuration",
    "Sphere",
    "box_vertices",
    "build_adjacency",
    "adjacency_of",
    "cluster_labels",
    "cluster_of",
    "cluster_report",
    "connects",
    "count_bits",
    "descending_or",
    "is_subset_bits",
    "lazy_reach",
    "open_fraction_bits",
    "sample_open_bits",
    "sphere_reach_event",
    "thick_origin",
    "two_point_event",
]


# ---------------------------------------------------------------------------
# configurations


@dataclass(frozen=True)
class Configuration:
    """One sampled bond configuration on a fixed set of sampling units."""

    seed: int
    p: float
    open_units: np.ndarray

    @classmethod
    def sample(cls, n_units: int, seed: int, p: float) -> "Configuration":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        u = edge_uniforms(seed, np.arange(n_units, dtype=np.uint64))
        return cls(seed=int(seed), p=float(p), open_units=u < p)

    @property
    def n_units(self) -> int:
        return int(self.open_units.size)

    def coupling_uniforms(self) -> np.ndarray:
        """Underlying uniforms; open_units equals (uniforms < p) elementwise."""
        return edge_uniforms(self.seed, np.arange(self.n_units, dtype=np.uint64))

    def open_links(self, unit_of_link: np.ndarray) -> np.ndarray:
        """Per-link states, with fragments inheriting their parent's state."""
        return self.open_units[np.asarray(unit_of_link, dtype=np.int64)]


# ---------------------------------------------------------------------------
# adjacency


@dataclass(frozen=True)
class Adjacency:
    """CSR neighbor lists plus the sampling unit of each incidence."""

    n_vertices: int
    indptr: np.ndarray
    nbr: np.ndarray
    unit: np.ndarray

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = int(self.indptr[v]), int(self.indptr[v + 1])
        return self.nbr[s:e], self.unit[s:e]


def build_adjacency(
    n_vertices: int,
    links: np.ndarray,
    units: np.ndarray | None = None,
) -> Adjacency:
    links = np.asarray(links, dtype=np.int64).reshape(-1, 2)
    if units is None:
        units = np.arange(len(links), dtype=np.int64)
    else:
        units = np.asarray(units, dtype=np.int64)
    src = np.concatenate([links[:, 0], links[:, 1]])
    dst = np.concatenate([links[:, 1], links[:, 0]])
    uni = np.concatenate([units, units])
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=n_vertices)
    indptr = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Adjacency(n_vertices, indptr, dst[order], uni[order])


def adjacency_of(clip: SlabGraph) -> Adjacency:
    return build_adjacency(clip.n_vertices, clip.fragments, clip.parent)


# ---------------------------------------------------------------------------
# clusters, single configuration


def cluster_labels(
    n_vertices: int, links: np.ndarray, link_open: np.ndarray
) -> np.ndarray:
    """Component label per vertex keeping only the open links."""
    links = np.asarray(links, dtype=np.int64).reshape(-1, 2)
    keep = links[np.asarray(link_open, dtype=bool)]
    mat = coo_matrix(
        (np.ones(len(keep), dtype=np.int8), (keep[:, 0], keep[:, 1])),
        shape=(n_vertices, n_vertices),
    )
    _, labels = connected_components(mat, directed=False)
    return labels


def cluster_of(
    adj: Adjacency, starts: Union[int, Sequence[int]], open_units: np.ndarray
) -> np.ndarray:
    """Sorted vertices of the union of open clusters of the start vertices."""
    if np.isscalar(starts):
        starts = [int(starts)]
    seen = np.zeros(adj.n_vertices, dtype=bool)
    stack = [int(s) for s in starts]
    for s in stack:
        seen[s] = True
    while stack:
        v = stack.pop()
        nbr, unit = adj.neighbors(v)
        for w, u in zip(nbr, unit):
            if open_units[u] and not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return np.nonzero(seen)[0]


def lazy_reach(
    adj: Adjacency,
    starts: Union[int, Sequence[int]],
    seed: int,
    p: float,
    score: np.ndarray,
    stop: float | None = None,
) -> float:
    """Best vertex score reachable from the seed set, opening edges on demand.

    Edge states are drawn lazily and memoized, so an early `stop` threshold
    never changes which configuration is being explored, only how much of it
    is looked at.
    """
    if np.isscalar(starts):
        starts = [int(starts)]
    seen = np.zeros(adj.n_vertices, dtype=bool)
    state: dict[int, bool] = {}
    best = -math.inf
    stack = []
    for s in starts:
        s = int(s)
        if not seen[s]:
            seen[s] = True
            stack.append(s)
            best = max(best, float(score[s]))
    while stack:
        if stop is not None and best >= stop:
            return best
        v = stack.pop()
        nbr, unit = adj.neighbors(v)
        for w, u in zip(nbr, unit):
            if seen[w]:
                continue
            u = int(u)
            st = state.get(u)
            if st is None:
                st = bool(edge_uniform(seed, u) < p)
                state[u] = st
            if st:
                seen[w] = True
                best = max(best, float(score[w]))
                stack.append(int(w))
    return best


# ---------------------------------------------------------------------------
# probe sets


@dataclass(frozen=True)
class Sphere:
    """Points at exact projection distance r from a horizontal center."""

    center: np.ndarray
    r: float


def box_vertices(clip: SlabGraph, box: Box) -> np.ndarray:
    """Slab vertices inside the box (projection distance and height cut)."""
    ctr = np.asarray(box.center.horizontal, dtype=float)
    proj = np.max(np.abs(clip.coords[:, :-1] - ctr), axis=1)
    ok = proj <= box.r
    if box.h is not None:
        ok &= clip.coords[:, -1] <= box.h
    return np.nonzero(ok)[0]


def thick_origin(
    clip: SlabGraph, r0: float, center: np.ndarray | None = None
) -> np.ndarray:
    """Slab vertices within projection distance r0 of the center.

    Includes cut vertices introduced by clipping; only heights above 1 are
    excluded.  May be empty.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    if center is None:
        center = np.zeros(clip.dim - 1)
    proj = np.max(np.abs(clip.coords[:, :-1] - center), axis=1)
    ok = (proj <= r0) & (clip.coords[:, -1] <= 1.0 + 1e-12)
    return np.nonzero(ok)[0]


def _resolve_vertex_set(clip: SlabGraph, spec) -> np.ndarray:
    if isinstance(spec, Box):
        return box_vertices(clip, spec)
    return np.asarray(spec, dtype=np.int64).reshape(-1)


# ---------------------------------------------------------------------------
# cluster reports


@dataclass(frozen=True)
class ClusterReport:
    """Exact geometry summary of one open cluster (or union of clusters).

    size_r is the supremum of projection distance to the center over all
    cluster points.  Fragment projections are straight segments, so both
    the supremum and the two diameters are attained at fragment endpoints,
    which are slab vertices; no sampling is involved.
    """

    vertices: np.ndarray
    open_fragments: np.ndarray
    size_r: float
    proj_diameter: float
    proj_diameter_sup: float
    max_height: float
    touches: tuple[str, ...]
    center: np.ndarray

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.size)

    def check_invariants(self, seed_radius: float = 0.0) -> None:
        d_horiz = int(self.center.size)
        tol = 1e-9
        if self.proj_diameter_sup > 2.0 * self.size_r + 2.0 * seed_radius + tol:
            raise ValueError("sup-norm diameter exceeds twice the reach")
        if self.proj_diameter_sup > self.proj_diameter + tol:
            raise ValueError("sup-norm diameter exceeds the Euclidean one")
        if self.proj_diameter > math.sqrt(d_horiz) * self.proj_diameter_sup + tol:
            raise ValueError("Euclidean diameter above the norm-equivalence bound")


def _pairwise_l2_diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    if len(pts) > 2000:
        # the diameter is attained on the convex hull; fall through on
        # degenerate inputs where qhull rejects the point set
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass
    best = 0.0
    for i in range(len(pts) - 1):
        d = np.linalg.norm(pts[i + 1 :] - pts[i], axis=1).max()
        if d > best:
            best = float(d)
    return best


def cluster_report(
    clip: SlabGraph,
    conf: Configuration,
    starts: Union[int, Sequence[int]],
    center: np.ndarray | None = None,
    probes: Mapping[str, Union[Box, Sphere]] | None = None,
    adj: Adjacency | None = None,
) -> ClusterReport:
    if adj is None:
        adj = adjacency_of(clip)
    if center is None:
        center = np.zeros(clip.dim - 1)
    center = np.asarray(center, dtype=float)
    verts = cluster_of(adj, starts, conf.open_units)
    member = np.zeros(clip.n_vertices, dtype=bool)
    member[verts] = True
    frag_open = conf.open_links(clip.parent)
    # an open fragment has both endpoints in the same cluster, so testing
    # one endpoint suffices
    in_cluster = frag_open & member[clip.fragments[:, 0]]
    open_frags = np.nonzero(in_cluster)[0]

    proj = clip.coords[verts, :-1] - center
    dists = np.max(np.abs(proj), axis=1)
    size_r = float(dists.max())
    sup_diam = float(np.max(proj.max(axis=0) - proj.min(axis=0)))
    l2_diam = _pairwise_l2_diameter(proj)

    max_height = float(clip.coords[verts, -1].max())
    if open_frags.size:
        max_height = max(max_height, float(clip.frag_max_height[open_frags].max()))

    touched: list[str] = []
    if probes:
        for tag, probe in probes.items():
            if isinstance(probe, Sphere):
                if _cluster_straddles(clip, verts, open_frags, probe):
                    touched.append(tag)
            else:
                hit = box_vertices(clip, probe)
                if np.any(member[hit]):
                    touched.append(tag)
    return ClusterReport(
        vertices=verts,
        open_fragments=open_frags,
        size_r=size_r,
        proj_diameter=l2_diam,
        proj_diameter_sup=sup_diam,
        max_height=max_height,
        touches=tuple(touched),
        center=center,
    )


def _cluster_straddles(
    clip: SlabGraph, verts: np.ndarray, open_frags: np.ndarray, sphere: Sphere
) -> bool:
    """Exact test that the cluster meets the cylinder at distance r.

    The projection of the cluster is a connected union of segments, so its
    distance-to-center ranges over an interval; the cluster meets the
    sphere iff that interval contains r.  The max is attained at vertices,
    the min needs the exact per-fragment minimum.
    """
    ctr = np.asarray(sphere.center, dtype=float)
    vd = np.max(np.abs(clip.coords[verts, :-1] - ctr), axis=1)
    hi = float(vd.max())
    lo = float(vd.min())
    if open_frags.size:
        fmin, _ = clip.frag_proj_extrema(ctr, open_frags)
        lo = min(lo, float(fmin.min()))
    return lo <= sphere.r <= hi


# ---------------------------------------------------------------------------
# connectivity events


def connects(
    clip: SlabGraph,
    conf: Configuration,
    set_a,
    set_b,
    adj: Adjacency | None = None,
) -> bool:
    """Whether some open cluster joins set A to set B.

    A is a vertex-index set or a Box; B is the same or a Sphere.  A vertex
    belongs to its own cluster even when isolated.  The Sphere test is the
    exact interval-straddle criterion, not a sampled approximation.
    """
    a_idx = _resolve_vertex_set(clip, set_a)
    if a_idx.size == 0:
        return False
    frag_open = conf.open_links(clip.parent)
    labels = cluster_labels(clip.n_vertices, clip.fragments, frag_open)
    a_labels = np.unique(labels[a_idx])

    if not isinstance(set_b, Sphere):
        b_idx = _resolve_vertex_set(clip, set_b)
        if b_idx.size == 0:
            return False
        return bool(np.isin(labels[b_idx], a_labels).any())

    member = np.isin(labels, a_labels)
    verts = np.nonzero(member)[0]
    open_in = frag_open & member[clip.fragments[:, 0]]
    open_frags = np.nonzero(open_in)[0]
    # clusters of distinct A-vertices are tested together: the union of
    # intervals straddles r iff some cluster interval does, because every
    # interval's top end belongs to the same connected cluster as its low end
    ctr = np.asarray(set_b.center, dtype=float)
    vd = np.max(np.abs(clip.coords[:, :-1] - ctr), axis=1)
    for lab in a_labels:
        vsel = verts[labels[verts] == lab]
        lo = float(vd[vsel].min())
        hi = float(vd[vsel].max())
        if open_frags.size:
            fsel = open_frags[labels[clip.fragments[open_frags, 0]] == lab]
            if fsel.size:
                fmin, _ = clip.frag_proj_extrema(ctr, fsel)
                lo = min(lo, float(fmin.min()))
        if lo <= set_b.r <= hi:
            return True
    return False


def sphere_reach_event(
    clip: SlabGraph,
    seed: int,
    p: float,
    sources: Union[int, Sequence[int]],
    r: float,
    center: np.ndarray | None = None,
    adj: Adjacency | None = None,
) -> bool:
    """Whether the union of source clusters reaches projection distance r.

    Sources sit inside the cylinder, so crossing the sphere from inside is
    exactly "some cluster point at distance >= r", and that sup is attained
    at a vertex.  Evaluated lazily with early stopping.
    """
    if adj is None:
        adj = adjacency_of(clip)
    if center is None:
        center = np.zeros(clip.dim - 1)
    score = np.max(np.abs(clip.coords[:, :-1] - center), axis=1)
    return lazy_reach(adj, sources, seed, p, score, stop=r) >= r


def two_point_event(
    clip: SlabGraph,
    seed: int,
    p: float,
    sv_a: int,
    sv_b: int,
    adj: Adjacency | None = None,
) -> bool:
    if adj is None:
        adj = adjacency_of(clip)
    score = np.zeros(clip.n_vertices)
    score[sv_b] = 1.0
    return lazy_reach(adj, sv_a, seed, p, score, stop=1.0) >= 1.0


# ---------------------------------------------------------------------------
# bit-parallel batches: one trial per bit


def _tail_mask(n_trials: int) -> np.uint64:
    rem = n_trials % 64
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def sample_open_bits(
    trial_seeds: np.ndarray, n_units: int, p: float, chunk: int | None = None
) -> np.ndarray:
    """Pack open/closed states for a batch of trials into uint64 words.

    Returns shape (n_units, ceil(T/64)); bit t of a unit's row is the state
    under trial_seeds[t], identical to Configuration.sample at that seed.
    Padding bits beyond T are zero (closed).
    """
    trial_seeds = np.asarray(trial_seeds, dtype=np.uint64)
    n = trial_seeds.size
    n_words = (n + 63) // 64
    if chunk is None:
        chunk = max(64, min(2048, (1 << 26) // max(n_units, 1)))
        chunk = (chunk // 64) * 64 or 64
    ids = np.arange(n_units, dtype=np.uint64)
    out = np.zeros((n_units, n_words), dtype=np.uint64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        u = uniforms_matrix(trial_seeds[lo:hi], ids)
        opened = np.ascontiguousarray((u < p).T)  # (n_units, t)
        t = hi - lo
        pad = (-t) % 64
        if pad:
            opened = np.concatenate(
                [opened, np.zeros((n_units, pad), dtype=bool)], axis=1
            )
        packed = np.ascontiguousarray(np.packbits(opened, axis=1, bitorder="little"))
        words = packed.reshape(n_units, -1).view(np.uint64)
        out[:, lo // 64 : lo // 64 + words.shape[1]] = words
    return out


class BitPropagator:
    """Fixpoint reachability sweeps over all packed trials at once."""

    def __init__(self, n_vertices: int, links: np.ndarray, unit_of_link: np.ndarray):
        links = np.asarray(links, dtype=np.int64).reshape(-1, 2)
        unit_of_link = np.asarray(unit_of_link, dtype=np.int64)
        src = np.concatenate([links[:, 0], links[:, 1]])
        dst = np.concatenate([links[:, 1], links[:, 0]])
        uni = np.concatenate([unit_of_link, unit_of_link])
        order = np.argsort(dst, kind="stable")
        self.n_vertices = int(n_vertices)
        self.src = src[order]
        self.unit = uni[order]
        self.tgt, self.starts = np.unique(dst[order], return_index=True)

    def closure(self, open_bits: np.ndarray, sources: Sequence[int]) -> np.ndarray:
        """Per-vertex reached-bit rows from the source set, all trials."""
        n_words = open_bits.shape[1]
        visited = np.zeros((self.n_vertices, n_words), dtype=np.uint64)
        visited[np.asarray(sources, dtype=np.int64)] = np.uint64(
            0xFFFFFFFFFFFFFFFF
        )
        total = int(np.bitwise_count(visited).sum())
        while True:
            flow = visited[self.src] & open_bits[self.unit]
            agg = np.bitwise_or.reduceat(flow, self.starts, axis=0)
            visited[self.tgt] |= agg
            new_total = int(np.bitwise_count(visited).sum())
            if new_total == total:
                return visited
            total = new_total


def descending_or(
    visited: np.ndarray, scores: np.ndarray, thresholds: np.ndarray
) -> np.ndarray:
    """Event-bit rows for "some reached vertex has score >= threshold".

    Computed as cumulative ORs down the score ordering, so the rows are
    nested: the bits at a higher threshold are a subset of those at a
    lower one, which is the per-trial monotonicity estimators rely on.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    order = np.argsort(-scores, kind="stable")
    cum = np.bitwise_or.accumulate(visited[order], axis=0)
    sorted_desc = scores[order]
    out = np.zeros((thresholds.size, visited.shape[1]), dtype=np.uint64)
    for i, r in enumerate(thresholds):
        k = int(np.searchsorted(-sorted_desc, -r, side="right"))
        if k > 0:
            out[i] = cum[k - 1]
    return out


def count_bits(bits: np.ndarray, n_trials: int) -> np.ndarray:
    """Popcount of packed trial bits, ignoring the padding tail."""
    bits = np.atleast_2d(bits).copy()
    bits[:, -1] &= _tail_mask(n_trials)
    return np.bitwise_count(bits).sum(axis=1)


def is_subset_bits(a: np.ndarray, b: np.ndarray, n_trials: int) -> bool:
    """True when every trial bit set in a is also set in b."""
    extra = np.atleast_2d(a & ~b).copy()
    extra[:, -1] &= _tail_mask(n_trials)
    return not bool(np.any(extra))


def open_fraction_bits(open_bits: np.ndarray, n_trials: int) -> float:
    """Fraction of open states across all units and trials."""
    total = int(count_bits(open_bits, n_trials).sum())
    return total / (open_bits.shape[0] * n_trials)
