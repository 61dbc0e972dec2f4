"""Slab-tower surveys of wide open clusters near the boundary plane.

The tower clips one bond configuration to slabs of roof height 1/2^k for
k = 0..k_max and reports, per level, the open clusters that meet a probe
ball of graph vertices, together with the Euclidean diameter of each
cluster's horizontal projection.  Deeper slab clusters are point subsets
of shallower ones, so the per-level flag "some probe cluster is wider
than delta" can only switch off as k grows; the survey exploits that
coupling sample by sample.  Everything rests on the fact that scaling
all coordinates by 2^k is an isometry exchanging the level-k slab with
the unit slab, which scaling_equivariance_check verifies fragment by
fragment.

The one-point character of end boundaries is not decidable from finite
samples; the wide-cluster frequencies reported here are the finite proxy
for it, never a verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decay import FitResult, estimate_gp, fit_decay
from .graphs import (
    EmbeddedGraph,
    GuardBandError,
    LatticeFamily,
    SlabGraph,
    TilingFamily,
    clip_to_slab,
    edge_span,
)
from .hypgeom import hyperbolic_distance
from .percolate import Configuration, _pairwise_l2_diameter, cluster_labels
from .seeds import derive_seed

__all__ = [
    "EndsSurvey",
    "ScalingReport",
    "SlabTowerReport",
    "SurveyRow",
    "TowerCluster",
    "TowerLevel",
    "end_boundary_survey",
    "scaling_equivariance_check",
    "slab_tower",
    "survey_to_csv",
]


# ---------------------------------------------------------------------------
# tower of deepening slabs, one configuration


@dataclass(frozen=True)
class TowerCluster:
    """Summary of one open cluster meeting the probe at one tower level."""

    n_vertices: int
    proj_diameter: float
    proj_diameter_sup: float
    size_r: float

    def check_invariants(self, d_horiz: int) -> None:
        tol = 1e-9
        if self.proj_diameter_sup > 2.0 * self.size_r + tol:
            raise ValueError("sup-norm diameter exceeds twice the radial size")
        if self.proj_diameter_sup > self.proj_diameter + tol:
            raise ValueError("sup-norm diameter exceeds the Euclidean one")
        if self.proj_diameter > math.sqrt(d_horiz) * self.proj_diameter_sup + tol:
            raise ValueError("Euclidean diameter above the norm-equivalence bound")


@dataclass(frozen=True)
class TowerLevel:
    k: int
    roof: float
    clusters: tuple[TowerCluster, ...]
    has_wide_cluster: bool
    widest: float


@dataclass(frozen=True)
class SlabTowerReport:
    """Per-level wide-cluster summaries for one configuration."""

    r: float
    delta: float
    k_levels: tuple[int, ...]
    levels: tuple[TowerLevel, ...]

    @property
    def flags(self) -> tuple[bool, ...]:
        return tuple(lv.has_wide_cluster for lv in self.levels)

    def flags_non_increasing(self) -> bool:
        f = self.flags
        return all(f[i] or not f[i + 1] for i in range(len(f) - 1))


def _probe_mask(clip: SlabGraph, center: np.ndarray, r: float) -> np.ndarray:
    own = clip.orig_vertex >= 0
    return own & (clip.vertex_proj_distances(center) <= r + 1e-12)


def _probe_cluster_stats(
    clip: SlabGraph,
    frag_open: np.ndarray,
    probe: np.ndarray,
    center: np.ndarray,
    keep_singletons: bool,
) -> list[TowerCluster]:
    """Summaries of the open clusters containing a probe vertex.

    Isolated probe vertices are width-0 clusters; they are skipped unless
    keep_singletons is set, since they can never trip a delta > 0 flag.
    """
    labels = cluster_labels(clip.n_vertices, clip.fragments, frag_open)
    probe_labels = np.unique(labels[probe])
    if probe_labels.size == 0:
        return []
    counts = np.bincount(labels, minlength=int(labels.max()) + 1)
    order = np.argsort(labels, kind="stable")
    starts = np.searchsorted(labels[order], probe_labels, side="left")
    stops = np.searchsorted(labels[order], probe_labels, side="right")

    out = []
    for lab, s, e in zip(probe_labels, starts, stops):
        if counts[lab] < 2 and not keep_singletons:
            continue
        verts = order[s:e]
        proj = clip.coords[verts, :-1] - center
        dists = np.max(np.abs(proj), axis=1)
        c = TowerCluster(
            n_vertices=int(verts.size),
            proj_diameter=_pairwise_l2_diameter(proj),
            proj_diameter_sup=float(np.max(proj.max(axis=0) - proj.min(axis=0))),
            size_r=float(dists.max()),
        )
        c.check_invariants(clip.dim - 1)
        out.append(c)
    return out


def _tower_guard(graph: EmbeddedGraph, r: float, delta: float, k_max: int) -> None:
    """The generated region must cover the probe ball plus one wide cluster
    at every level; the deepest roof needs a couple of spare halvings of
    depth below it so its clusters are not generation artifacts."""
    span = edge_span(graph, 1.0)
    need_w = r + delta + span
    floor_need = 2.0 ** (-k_max) / 4.0
    box = graph.meta.get("event_box") if isinstance(graph.meta, dict) else None
    if box is not None:
        if box["top"] < 1.0 - 1e-9:
            raise GuardBandError(
                f"generated slab top {box['top']} is below the unit roof"
            )
        if box["r"] < need_w - 1e-9:
            raise GuardBandError(
                f"window radius {box['r']:.4g} is below the needed {need_w:.4g}"
            )
        if box["delta"] > floor_need * (1.0 + 1e-9):
            raise GuardBandError(
                f"generation floor {box['delta']:.4g} is too shallow for "
                f"k_max={k_max}; need at most {floor_need:.4g}"
            )
        return
    corner = np.zeros(graph.dim)
    corner[0] = need_w
    corner[-1] = max(floor_need, 1e-12)
    need = hyperbolic_distance(graph.origin_point, corner) + graph.l_max
    if graph.coverage_radius < need:
        raise GuardBandError(
            f"coverage radius {graph.coverage_radius:.4g} is below the "
            f"needed {need:.4g} for r={r}, delta={delta}, k_max={k_max}"
        )


class TowerFrame:
    """Precomputed level clips and probe masks, reusable across samples."""

    def __init__(
        self,
        graph: EmbeddedGraph,
        r: float,
        k_max: int,
        center: np.ndarray | None = None,
    ):
        if k_max < 0:
            raise ValueError("k_max must be nonnegative")
        if center is None:
            center = graph.coords[graph.origin_index, :-1]
        self.graph = graph
        self.r = float(r)
        self.k_max = int(k_max)
        self.center = np.asarray(center, dtype=float)
        self.levels: list[tuple[SlabGraph, np.ndarray]] = []
        for k in range(k_max + 1):
            clip = clip_to_slab(graph, None, h=2.0 ** (-k), delta=None)
            self.levels.append((clip, _probe_mask(clip, self.center, self.r)))

    def widest_per_level(self, conf: Configuration) -> np.ndarray:
        """Max probe-cluster width at each level for one configuration."""
        out = np.zeros(self.k_max + 1)
        for k, (clip, probe) in enumerate(self.levels):
            stats = _probe_cluster_stats(
                clip, conf.open_links(clip.parent), probe, self.center, False
            )
            out[k] = max((c.proj_diameter for c in stats), default=0.0)
        return out


def slab_tower(
    graph: EmbeddedGraph,
    conf: Configuration,
    r: float,
    delta: float,
    k_max: int,
    center: np.ndarray | None = None,
    frame: TowerFrame | None = None,
) -> SlabTowerReport:
    """Clip one configuration to roofs 1/2^k and summarize probe clusters.

    The probe is the set of graph vertices within projection distance r of
    the center.  Cluster width is the Euclidean diameter of the horizontal
    projection; the per-level flag records whether some probe cluster is
    at least delta wide.  Passing a prebuilt frame skips the clipping.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if conf.n_units != graph.n_edges:
        raise ValueError("configuration does not match the graph's edge count")
    _tower_guard(graph, r, delta, k_max)
    if frame is None:
        frame = TowerFrame(graph, r, k_max, center)
    elif frame.k_max < k_max or frame.r != float(r):
        raise ValueError("frame does not cover the requested tower")

    levels = []
    for k in range(k_max + 1):
        clip, probe = frame.levels[k]
        frag_open = conf.open_links(clip.parent)
        stats = _probe_cluster_stats(clip, frag_open, probe, frame.center,
                                     keep_singletons=True)
        widest = max((c.proj_diameter for c in stats), default=0.0)
        levels.append(
            TowerLevel(
                k=k,
                roof=2.0 ** (-k),
                clusters=tuple(stats),
                has_wide_cluster=widest >= delta,
                widest=widest,
            )
        )
    return SlabTowerReport(
        r=float(r),
        delta=float(delta),
        k_levels=tuple(range(k_max + 1)),
        levels=tuple(levels),
    )


# ---------------------------------------------------------------------------
# scaling equivariance


@dataclass(frozen=True)
class ScalingReport:
    """Fragment bijection and cluster-report scaling between the level-k
    clip scaled up by 2^k and the clip of the pre-scaled graph."""

    k: int
    n_fragments: int
    fragment_mismatches: int
    max_coord_rel_err: float
    clusters_checked: int
    cluster_mismatches: int
    max_report_rel_err: float

    @property
    def ok(self) -> bool:
        return (
            self.fragment_mismatches == 0
            and self.cluster_mismatches == 0
            and self.max_coord_rel_err <= 1e-9
            and self.max_report_rel_err <= 1e-9
        )


def _fragment_key_order(clip: SlabGraph) -> np.ndarray:
    """Stable ordering of fragments by (parent, rounded low-endpoint)."""
    lo_end = np.minimum(
        clip.coords[clip.fragments[:, 0], -1], clip.coords[clip.fragments[:, 1], -1]
    )
    mid = 0.5 * (
        clip.coords[clip.fragments[:, 0], 0] + clip.coords[clip.fragments[:, 1], 0]
    )
    return np.lexsort((np.round(mid, 6), np.round(lo_end, 6), clip.parent))


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / scale))


def scaling_equivariance_check(
    graph: EmbeddedGraph, k: int, seed: int
) -> ScalingReport:
    """Check that clipping to roof 1/2^k commutes with scaling by 2^k.

    Scaling every coordinate by 2^k is an isometry of the half-space, so
    the clip of the scaled graph to the unit slab must reproduce the
    scaled level-k clip fragment for fragment, and with shared edge
    states every cluster summary must scale by exactly 2^k.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    s = float(2**k)
    clip_a = clip_to_slab(graph, None, h=1.0 / s, delta=None)
    scaled = EmbeddedGraph(
        coords=graph.coords * s,
        edges=graph.edges,
        origin_index=graph.origin_index,
        meta=dict(graph.meta),
    )
    clip_b = clip_to_slab(scaled, None, h=1.0, delta=None)

    mism = abs(clip_a.n_fragments - clip_b.n_fragments)
    coord_err = 0.0
    if mism == 0 and clip_a.n_fragments:
        oa = _fragment_key_order(clip_a)
        ob = _fragment_key_order(clip_b)
        if np.any(clip_a.parent[oa] != clip_b.parent[ob]):
            mism = int(np.sum(clip_a.parent[oa] != clip_b.parent[ob]))
        else:
            # endpoints may be stored in either order within a fragment
            pa = clip_a.coords[clip_a.fragments[oa]] * s
            pb = clip_b.coords[clip_b.fragments[ob]]
            direct = np.abs(pa - pb).max(axis=(1, 2))
            flipped = np.abs(pa - pb[:, ::-1, :]).max(axis=(1, 2))
            use_flip = flipped < direct
            pb_m = np.where(use_flip[:, None, None], pb[:, ::-1, :], pb)
            coord_err = _rel_err(pa, pb_m)

    conf = Configuration.sample(graph.n_edges, derive_seed(seed, "scalecheck"), 0.5)
    frag_open_a = conf.open_links(clip_a.parent)
    frag_open_b = conf.open_links(clip_b.parent)
    center = np.zeros(graph.dim - 1)
    all_a = np.ones(clip_a.n_vertices, dtype=bool)
    all_b = np.ones(clip_b.n_vertices, dtype=bool)
    stats_a = _probe_cluster_stats(clip_a, frag_open_a, all_a, center, True)
    stats_b = _probe_cluster_stats(clip_b, frag_open_b, all_b, center, True)

    cluster_mism = abs(len(stats_a) - len(stats_b))
    report_err = 0.0
    if cluster_mism == 0 and stats_a:
        def key(c, f):
            return (c.n_vertices, round(c.proj_diameter * f, 6),
                    round(c.size_r * f, 6))

        sa = sorted(stats_a, key=lambda c: key(c, s))
        sb = sorted(stats_b, key=lambda c: key(c, 1.0))
        for ca, cb in zip(sa, sb):
            if ca.n_vertices != cb.n_vertices:
                cluster_mism += 1
                continue
            va = np.array([ca.proj_diameter * s, ca.proj_diameter_sup * s,
                           ca.size_r * s])
            vb = np.array([cb.proj_diameter, cb.proj_diameter_sup, cb.size_r])
            report_err = max(report_err, _rel_err(va, vb))

    return ScalingReport(
        k=k,
        n_fragments=int(clip_a.n_fragments),
        fragment_mismatches=mism,
        max_coord_rel_err=coord_err,
        clusters_checked=len(stats_a),
        cluster_mismatches=cluster_mism,
        max_report_rel_err=report_err,
    )


# ---------------------------------------------------------------------------
# Monte Carlo survey over deepening slabs


@dataclass(frozen=True)
class SurveyRow:
    p: float
    delta: float
    k: int
    frequency: float
    ci: float
    bound_from_fit: float


@dataclass(frozen=True)
class EndsSurvey:
    rows: tuple[SurveyRow, ...]
    monotone_violations: int
    fit: FitResult
    alpha: float
    phi_rate: float
    r: float
    trials: int
    seed: int
    family_label: str
    graph_hash: str

    def frequency(self, delta: float, k: int) -> float:
        for row in self.rows:
            if row.k == k and abs(row.delta - delta) < 1e-12:
                return row.frequency
        raise KeyError(f"no survey row for delta={delta}, k={k}")

    def row(self, delta: float, k: int) -> SurveyRow:
        for r_ in self.rows:
            if r_.k == k and abs(r_.delta - delta) < 1e-12:
                return r_
        raise KeyError(f"no survey row for delta={delta}, k={k}")


def end_boundary_survey(
    family: TilingFamily | LatticeFamily,
    p: float,
    deltas,
    r: float,
    k_max: int,
    trials: int,
    seed: int,
    fit: FitResult | None = None,
    fit_trials: int = 4096,
    fit_hr_samples: int = 8,
    cache_dir: str | None = None,
) -> EndsSurvey:
    """Frequency of a wide probe cluster per slab level, with a fitted
    decay bound alongside.

    Per trial the same edge states feed every level, so the flag sequence
    is non-increasing in k sample by sample; the survey counts violations
    of that (zero expected) while accumulating frequencies.  The bound
    column is (2^k)^(d-1) * alpha * exp(-phi * delta * 2^(k-1)) with
    (alpha, phi) fitted on this family at the same p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    deltas = sorted(float(d) for d in deltas)
    if not deltas or deltas[0] <= 0:
        raise ValueError("need a positive delta grid")
    if trials <= 0 or k_max < 0:
        raise ValueError("need trials > 0 and k_max >= 0")

    dmax = deltas[-1]
    graph = _survey_graph(family, r, dmax, k_max, cache_dir)
    _tower_guard(graph, r, dmax, k_max)

    if fit is None:
        fit = _survey_fit(family, p, seed, fit_trials, fit_hr_samples, cache_dir)
    alpha = float(fit.alpha)
    phi_rate = float(fit.psi)

    frame = TowerFrame(graph, r, k_max)
    wide = np.zeros((trials, k_max + 1))
    for t in range(trials):
        conf = Configuration.sample(
            graph.n_edges, derive_seed(seed, "ends-survey", t), p
        )
        wide[t] = frame.widest_per_level(conf)

    monotone_violations = int(np.sum(wide[:, 1:] > wide[:, :-1] + 1e-12))
    d_horiz = graph.dim - 1
    rows = []
    for delta in deltas:
        flags = wide >= delta - 1e-12
        for k in range(k_max + 1):
            freq = float(flags[:, k].mean())
            ci = 4.0 * math.sqrt(max(freq * (1 - freq), 1.0 / trials) / trials)
            bound = (2.0**k) ** (d_horiz - 1) * alpha * math.exp(
                -phi_rate * delta * 2.0 ** (k - 1)
            )
            rows.append(SurveyRow(p, delta, k, freq, ci, float(bound)))

    return EndsSurvey(
        rows=tuple(rows),
        monotone_violations=monotone_violations,
        fit=fit,
        alpha=alpha,
        phi_rate=phi_rate,
        r=float(r),
        trials=int(trials),
        seed=int(seed),
        family_label=family.label(),
        graph_hash=graph.content_hash(),
    )


def _survey_graph(family, r, dmax, k_max, cache_dir) -> EmbeddedGraph:
    floor = 2.0 ** (-k_max) / 4.0
    if isinstance(family, TilingFamily):
        guess = r + dmax + 2.0 * family.edge_length
        graph = family.slab_component(None, r=guess, delta=floor, top=1.0,
                                      cache_dir=cache_dir)
        span = edge_span(graph, 1.0)
        if guess < r + dmax + span - 1e-9:
            graph = family.slab_component(
                None, r=r + dmax + span + family.edge_length,
                delta=floor, top=1.0, cache_dir=cache_dir,
            )
        return graph
    return family.graph(extent=r + dmax + 2.0 * family.spacing)


def _survey_fit(family, p, seed, fit_trials, fit_hr_samples, cache_dir) -> FitResult:
    r_grid = np.arange(0.25, 3.01, 0.25)
    curve = estimate_gp(
        family,
        p,
        r_grid,
        trials=fit_trials,
        seed=derive_seed(seed, "survey-fit"),
        hr_samples=fit_hr_samples,
        cache_dir=cache_dir,
    )
    try:
        return fit_decay(curve)
    except ValueError as exc:
        raise ValueError(
            f"missing decay fit for the survey bound column: {exc}"
        ) from exc


def survey_to_csv(survey: EndsSurvey) -> str:
    lines = [
        f"# graph={survey.graph_hash} seed={survey.seed} trials={survey.trials}",
        "p,delta,k,frequency,ci,bound_from_fit",
    ]
    for row in survey.rows:
        lines.append(
            f"{row.p:.12g},{row.delta:.12g},{row.k},"
            f"{row.frequency:.12g},{row.ci:.12g},{row.bound_from_fit:.12g}"
        )
    return "\n".join(lines) + "\n"
