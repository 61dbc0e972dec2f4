"""Connectivity-decay estimators and the bootstrap arguments built on them.

The central object is a reach curve: the probability that the open cluster
of a repositioned origin extends to projection distance r inside a
truncated slab, estimated per (height, rotation) cell and reported as the
max over sampled cells.  On top of the curves sit an exponential-decay
fitter, a finite-size recursion, a renewal consistency check, and a
functional inequality comparing curves at two densities.

Every estimator draws its randomness through counter-based streams, so two
runs with the same seed agree bit for bit and curves at different densities
share their underlying uniforms (monotone coupling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graphs import (
    EmbeddedGraph,
    GuardBandError,
    LatticeFamily,
    SlabGraph,
    TilingFamily,
    clip_to_slab,
)
from .hypgeom import Isometry, hyperbolic_distance, segment_min_euclid_dist
from .percolate import (
    BitPropagator,
    count_bits,
    descending_or,
    is_subset_bits,
    sample_open_bits,
    thick_origin,
)
from .seeds import derive_seed, edge_uniforms, seed_stream

__all__ = [
    "BoundaryReport",
    "FitResult",
    "GpCurve",
    "PcReport",
    "RecursionTrace",
    "ThickTailReport",
    "WaldReport",
    "FunctionalReport",
    "default_hr_sampler",
    "estimate_boundary_point_prob",
    "estimate_gp",
    "estimate_pc",
    "estimate_thick_origin_tail",
    "fit_decay",
    "functional_inequality_check",
    "menshikov_recursion",
    "recursion_budget",
    "renewal_wald_check",
    "synthetic_curve",
    "two_point_curve",
]


# ---------------------------------------------------------------------------
# position cells


def _rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (rotations and reflections)."""
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def default_hr_sampler(
    d: int, n: int, seed: int, h_range: tuple[float, float] = (2.0 ** -6, 1.0)
) -> list[tuple[float, np.ndarray]]:
    """(height, rotation) cells with log-uniform heights.

    Heights are log-uniform over h_range and rotations Haar on O(d); the
    supremum over positions in the reach definition is approximated by the
    max over these samples.
    """
    lo, hi = h_range
    if not 0.0 < lo <= hi <= 1.0:
        raise ValueError("heights must satisfy 0 < lo <= hi <= 1")
    cells = []
    for i in range(n):
        rng = np.random.default_rng(derive_seed(seed, "hr-cell", i))
        h = lo * (hi / lo) ** rng.random()
        cells.append((float(h), _rotation(d, rng)))
    return cells


# ---------------------------------------------------------------------------
# reach curves


@dataclass(frozen=True)
class GpCurve:
    """Reach-probability curve, max over sampled position cells.

    ``estimates[i]`` is the largest per-cell frequency of the event "the
    origin's open cluster has a point at projection distance >= r_grid[i]"
    and ``ci`` the four-sigma binomial half-width computed in the argmax
    cell only; being conditioned on the argmax, it is optimistic.
    ``runner_up`` keeps the second-best cell for sanity comparison.
    """

    p: float
    r_grid: np.ndarray
    estimates: np.ndarray
    ci: np.ndarray
    argmax_cell: np.ndarray
    runner_up: np.ndarray
    per_cell: np.ndarray
    cells: tuple
    trials: int
    delta: float
    top: float
    meta: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_description(self, i: int) -> str:
        h, rot = self.cells[i]
        return "h=%.6g rot=%s" % (h, np.array2string(np.asarray(rot), precision=4))


def _binom_hw(freq: np.ndarray, trials: int, sigmas: float = 4.0) -> np.ndarray:
    return sigmas * np.sqrt(np.maximum(freq * (1.0 - freq), 0.0) / trials)


def estimate_gp(
    family: TilingFamily,
    p: float,
    r_grid: Sequence[float],
    trials: int,
    seed: int,
    hr_samples: int | Sequence[tuple[float, np.ndarray]] = 32,
    delta: float = 2.0 ** -7,
    top: float = 1.0,
    cache_dir: str | None = None,
) -> GpCurve:
    """Estimate the reach curve of a tiling family at density p.

    Each cell repositions the tiling by (h, R), clips to the slab
    [delta, top], and counts trials whose origin cluster reaches each r.
    Per-cell counts at increasing r are nested per trial by construction.
    The slab truncation at delta only removes connections, so the curve is
    a lower-bound proxy for the untruncated slab; delta is reported.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    r_grid = np.asarray(sorted(float(r) for r in r_grid))
    if r_grid.size == 0 or r_grid[0] <= 0:
        raise ValueError("r_grid must be positive")
    if isinstance(hr_samples, int):
        cells = default_hr_sampler(2, hr_samples, derive_seed(seed, "hr"))
    else:
        cells = [(float(h), np.asarray(R, dtype=float)) for h, R in hr_samples]
    if any(h < delta for h, _ in cells):
        raise GuardBandError(
            "a sampled position height lies below the slab floor delta; "
            "lower delta or restrict the height range"
        )
    r_max = float(r_grid[-1])
    per_cell = np.zeros((len(cells), r_grid.size))
    hashes = []
    for ci_, (h, rot) in enumerate(cells):
        phi = Isometry.position(h, rot)
        graph = family.slab_component(phi, r_max, delta, top, cache_dir=cache_dir)
        hashes.append(graph.content_hash()[:12])
        clip = clip_to_slab(graph, None, h=top, delta=delta)
        sv0 = clip.vertex_index_of_original(graph.origin_index)
        prop = BitPropagator(clip.n_vertices, clip.fragments, clip.parent)
        tseeds = seed_stream(derive_seed(seed, "gp-cell", ci_), trials)
        bits = sample_open_bits(tseeds, clip.n_parent_edges, p)
        visited = prop.closure(bits, [sv0])
        score = clip.vertex_proj_distances(clip.coords[sv0, :-1])
        events = descending_or(visited, score, r_grid)
        per_cell[ci_] = count_bits(events, trials) / trials
    order = np.argsort(per_cell, axis=0)
    argmax = order[-1]
    best = per_cell[argmax, np.arange(r_grid.size)]
    runner = (
        per_cell[order[-2], np.arange(r_grid.size)]
        if len(cells) > 1
        else np.zeros(r_grid.size)
    )
    return GpCurve(
        p=float(p),
        r_grid=r_grid,
        estimates=best,
        ci=_binom_hw(best, trials),
        argmax_cell=argmax,
        runner_up=runner,
        per_cell=per_cell,
        cells=tuple(cells),
        trials=int(trials),
        delta=float(delta),
        top=float(top),
        meta={
            "family": family.label(),
            "seed": int(seed),
            "graph_hashes": hashes,
            "kind": "origin-reach",
        },
    )


# ---------------------------------------------------------------------------
# exponential fit


@dataclass(frozen=True)
class FitResult:
    psi: float
    r_squared: float
    log_intercept: float
    n_points: int
    used_r: np.ndarray

    @property
    def alpha(self) -> float:
        """Prefactor of the fitted alpha * exp(-psi r) form."""
        return math.exp(self.log_intercept)


def fit_decay(curve: GpCurve, noise_floor: float | None = None) -> FitResult:
    """Least-squares exponential-decay fit of a reach curve.

    Fits ln(estimate) = c - psi * r over grid cells whose estimate clears
    a noise floor (default ten hits' worth, 10/trials).  Requires at least
    four positive cells overall and two above the floor.
    """
    if noise_floor is None:
        noise_floor = 10.0 / curve.trials
    est = np.asarray(curve.estimates, dtype=float)
    if int((est > 0).sum()) < 4:
        raise ValueError("need at least four positive cells for a decay fit")
    use = est >= noise_floor
    if int(use.sum()) < 2:
        raise ValueError("fewer than two cells above the noise floor")
    x = curve.r_grid[use]
    y = np.log(est[use])
    design = np.vstack([x, np.ones_like(x)]).T
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    yhat = design @ coef
    ss_res = float(((y - yhat) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return FitResult(
        psi=float(-coef[0]),
        r_squared=r2,
        log_intercept=float(coef[1]),
        n_points=int(use.sum()),
        used_r=x,
    )


def synthetic_curve(
    r_grid: Sequence[float], values: Sequence[float], trials: int = 10 ** 6, p: float = 0.1
) -> GpCurve:
    """Wrap explicit values as a curve, for fitting and oracle tests."""
    r_grid = np.asarray(r_grid, dtype=float)
    vals = np.asarray(values, dtype=float)
    return GpCurve(
        p=p,
        r_grid=r_grid,
        estimates=vals,
        ci=_binom_hw(vals, trials),
        argmax_cell=np.zeros(r_grid.size, dtype=np.int64),
        runner_up=np.zeros(r_grid.size),
        per_cell=vals[None, :],
        cells=((1.0, np.eye(2)),),
        trials=trials,
        delta=0.0,
        top=1.0,
        meta={"kind": "synthetic"},
    )


# ---------------------------------------------------------------------------
# thick-origin tails


@dataclass(frozen=True)
class ThickTailReport:
    curve: GpCurve
    alpha: float
    phi_rate: float
    fit: FitResult | None
    reduction_violations: int
    r0: float


def estimate_thick_origin_tail(
    family: TilingFamily,
    p: float,
    r0: float,
    r_grid: Sequence[float],
    trials: int,
    seed: int,
    hr_samples: int | Sequence[tuple[float, np.ndarray]] = 8,
    delta: float = 2.0 ** -6,
    top: float = 1.0,
    cache_dir: str | None = None,
) -> ThickTailReport:
    """Tail of the union of clusters seeded in a thick origin.

    The event at r is "the union of open clusters of all original slab
    vertices within projection distance r0 of the repositioned origin has
    a point at distance >= r".  Alongside the max-over-cells curve, every
    trial is checked against the covering reduction: if the union reaches
    r then some seed's own cluster reaches r - r0 from that seed, so the
    union event bits must be a subset of the per-seed union; violations
    are counted (zero expected, the argument is a strict implication).
    """
    r_grid = np.asarray(sorted(float(r) for r in r_grid))
    if r_grid.size == 0 or r_grid[0] < 0:
        raise ValueError("tail thresholds must be nonnegative")
    if isinstance(hr_samples, int):
        cells = default_hr_sampler(2, hr_samples, derive_seed(seed, "hr-thick"))
    else:
        cells = [(float(h), np.asarray(R, dtype=float)) for h, R in hr_samples]
    if any(h < delta for h, _ in cells):
        raise GuardBandError("sampled position height below the slab floor")
    r_max = float(r_grid[-1])
    per_cell = np.zeros((len(cells), r_grid.size))
    violations = 0
    hashes = []
    for ci_, (h, rot) in enumerate(cells):
        phi = Isometry.position(h, rot)
        graph = family.slab_component(phi, r_max, delta, top, cache_dir=cache_dir)
        hashes.append(graph.content_hash()[:12])
        clip = clip_to_slab(graph, None, h=top, delta=delta)
        sv0 = clip.vertex_index_of_original(graph.origin_index)
        center = clip.coords[sv0, :-1]
        seeds_idx = thick_origin(clip, r0, center)
        prop = BitPropagator(clip.n_vertices, clip.fragments, clip.parent)
        tseeds = seed_stream(derive_seed(seed, "thick-cell", ci_), trials)
        bits = sample_open_bits(tseeds, clip.n_parent_edges, p)
        visited = prop.closure(bits, seeds_idx)
        score = clip.vertex_proj_distances(center)
        union_events = descending_or(visited, score, r_grid)
        per_cell[ci_] = count_bits(union_events, trials) / trials

        # per-seed reduction: union reach >= r implies some seed cluster
        # reaches r - r0 measured from the seed itself
        cover = np.zeros_like(union_events)
        for sv in seeds_idx:
            vis_s = prop.closure(bits, [int(sv)])
            score_s = clip.vertex_proj_distances(clip.coords[int(sv), :-1])
            cover |= descending_or(vis_s, score_s, r_grid - r0)
        stray = union_events & ~cover
        violations += int(count_bits(stray, trials).sum())
    order = np.argsort(per_cell, axis=0)
    argmax = order[-1]
    best = per_cell[argmax, np.arange(r_grid.size)]
    runner = (
        per_cell[order[-2], np.arange(r_grid.size)]
        if len(cells) > 1
        else np.zeros(r_grid.size)
    )
    curve = GpCurve(
        p=float(p),
        r_grid=r_grid,
        estimates=best,
        ci=_binom_hw(best, trials),
        argmax_cell=argmax,
        runner_up=runner,
        per_cell=per_cell,
        cells=tuple(cells),
        trials=int(trials),
        delta=float(delta),
        top=float(top),
        meta={
            "family": family.label(),
            "seed": int(seed),
            "graph_hashes": hashes,
            "kind": "thick-origin-tail",
            "r0": float(r0),
        },
    )
    try:
        fit = fit_decay(curve)
        alpha, phi = fit.alpha, fit.psi
    except ValueError:
        # too few populated cells for a fit; the curve itself is still valid
        fit, alpha, phi = None, float("nan"), float("nan")
    return ThickTailReport(
        curve=curve,
        alpha=alpha,
        phi_rate=phi,
        fit=fit,
        reduction_violations=violations,
        r0=float(r0),
    )


# ---------------------------------------------------------------------------
# finite-size recursion


@dataclass(frozen=True)
class RecursionTrace:
    """Iterates of the density/scale recursion.

    steps holds (p_i, r_i, g_i) triples; the scale grows by 1/g each step
    while the density pays 3 g (1 - ln g).  `completed` means the reach
    value collapsed below the hard floor 1e-12; `aborted` means the
    density budget ran out (or the step cap was hit) first.
    squaring_holds records, per consecutive pair, whether g_{i+1} <= g_i^2
    (true throughout for the squaring toy evaluator).
    """

    p1: float
    r1: float
    p_floor: float
    steps: tuple
    status: str
    squaring_holds: tuple = ()

    @property
    def final_p(self) -> float:
        return self.steps[-1][0] if self.steps else self.p1


def menshikov_recursion(
    p1: float,
    r1: float,
    g_eval: Callable[[float, float], float],
    p_floor: float = 0.0,
    max_steps: int = 10000,
    a: float = 0.0,
) -> RecursionTrace:
    """Iterate (p, r) -> (p - 3 g (1 - ln g), r / g) with g = g_eval(p, r).

    Requires 0 < g < 1 at every step (the scale r therefore increases) and
    r1 >= a when a starting scale floor is given.  Stops with status
    "completed" once g < 1e-12, or "aborted" when the next density would
    fall to p_floor or below.
    """
    if r1 <= 0:
        raise ValueError("r1 must be positive")
    if r1 < a:
        raise ValueError("starting scale r1 must be at least a")
    p_i, r_i = float(p1), float(r1)
    steps = []

    def trace(status: str) -> RecursionTrace:
        gs = [s[2] for s in steps]
        sq = tuple(gs[i + 1] <= gs[i] ** 2 + 1e-15 for i in range(len(gs) - 1))
        return RecursionTrace(p1, r1, p_floor, tuple(steps), status, sq)

    for _ in range(max_steps):
        g_i = float(g_eval(p_i, r_i))
        if not 0.0 < g_i < 1.0:
            raise ValueError(f"g must lie strictly in (0, 1), got {g_i}")
        steps.append((p_i, r_i, g_i))
        if g_i < 1e-12:
            return trace("completed")
        p_next = p_i - 3.0 * g_i * (1.0 - math.log(g_i))
        if p_next <= p_floor:
            return trace("aborted")
        r_i = r_i / g_i
        p_i = p_next
    return trace("aborted")


def recursion_budget(x1: float) -> float:
    """Total density the recursion spends when g squares each step.

    Sum of 3 x_i (1 - ln x_i) with x_{i+1} = x_i^2, truncated when terms
    drop below 1e-15.  Strictly increasing in x1 on (0, 1).
    """
    if not 0.0 < x1 < 1.0:
        raise ValueError("x1 must lie strictly in (0, 1)")
    total = 0.0
    x = float(x1)
    while True:
        term = 3.0 * x * (1.0 - math.log(x))
        total += term
        if term < 1e-15:
            return total
        x = x * x


# ---------------------------------------------------------------------------
# renewal consistency


@dataclass(frozen=True)
class WaldReport:
    e_m_prime: float
    mean_s_k: float
    mean_k: float
    wald_gap: float
    wald_tol: float
    k_bound: float
    k_margin: float
    n_samples: int

    @property
    def wald_ok(self) -> bool:
        return abs(self.wald_gap) <= self.wald_tol

    @property
    def k_bound_ok(self) -> bool:
        return self.mean_k >= self.k_bound - self.k_margin


def _tail_atoms(r_grid: np.ndarray, tail: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Discrete distribution with Pr(M >= r_j) = tail_j, atom at 0 for the rest."""
    if tail.size == 0:
        raise ValueError("tail curve must have at least one grid cell")
    tail = np.minimum.accumulate(np.clip(tail, 0.0, 1.0))
    if tail[0] <= 0.0:
        raise ValueError("degenerate tail: the step variable is identically zero")
    values = np.concatenate([[0.0], r_grid])
    probs = np.empty(values.size)
    probs[0] = 1.0 - tail[0]
    probs[1:-1] = tail[:-1] - tail[1:]
    probs[-1] = tail[-1]
    return values, probs


def renewal_wald_check(
    tail_curve: GpCurve,
    a: float,
    r: float,
    n_samples: int,
    seed: int,
) -> WaldReport:
    """Wald-identity consistency of renewals driven by an empirical tail.

    Steps are M' = a + min(M, r) with M drawn from the distribution whose
    upper tail is the curve; K is the first k with S_k >= r + a.  Checks
    |E[S_K] - E[K] E[M']| against four standard errors of the per-sample
    Wald residual, and the lower bound E[K] >= (r + a) / E[M'].
    """
    if a <= 0 or r <= 0:
        raise ValueError("a and r must be positive")
    values, probs = _tail_atoms(
        np.asarray(tail_curve.r_grid, dtype=float),
        np.asarray(tail_curve.estimates, dtype=float),
    )
    steps_vals = a + np.minimum(values, r)
    e_m_prime = float(np.dot(probs, steps_vals))
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    target = r + a
    k_max = int(math.ceil(target / a)) + 1

    sum_d = sum_d2 = 0.0
    sum_k = sum_k2 = 0.0
    sum_s = 0.0
    chunk = max(1, min(n_samples, (1 << 20) // k_max))
    done = 0
    ci = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        u = edge_uniforms(derive_seed(seed, "wald", ci), n * k_max).reshape(n, k_max)
        ci += 1
        m = steps_vals[np.searchsorted(cum, u, side="right")]
        s = np.cumsum(m, axis=1)
        k = 1 + (s[:, :-1] < target).sum(axis=1)
        s_k = s[np.arange(n), k - 1]
        d = s_k - k * e_m_prime
        sum_d += float(d.sum())
        sum_d2 += float((d * d).sum())
        sum_k += float(k.sum())
        sum_k2 += float((k.astype(float) ** 2).sum())
        sum_s += float(s_k.sum())
        done += n
    n = float(n_samples)
    mean_d = sum_d / n
    var_d = max(sum_d2 / n - mean_d ** 2, 0.0)
    mean_k = sum_k / n
    var_k = max(sum_k2 / n - mean_k ** 2, 0.0)
    return WaldReport(
        e_m_prime=e_m_prime,
        mean_s_k=sum_s / n,
        mean_k=mean_k,
        wald_gap=mean_d,
        wald_tol=4.0 * math.sqrt(var_d / n),
        k_bound=target / e_m_prime,
        k_margin=4.0 * math.sqrt(var_k / n),
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# functional inequality between two densities


@dataclass(frozen=True)
class FunctionalReport:
    r_grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    margins: np.ndarray
    warnings: int
    failures: int

    @property
    def ok(self) -> bool:
        return self.failures == 0


def functional_inequality_check(
    curve_alpha: GpCurve, curve_beta: GpCurve, a: float
) -> FunctionalReport:
    """Check est_a(r) <= est_b(r) exp(-(b - a)(r / (a + I_b(r)) - 1)) + slack.

    I_b(r) is the trapezoid integral of the beta curve from 0 to r with the
    exact value 1 prepended at r = 0.  Slack is the sum of the two curves'
    four-sigma half-widths; shortfalls inside the slack count as warnings,
    beyond it as failures.
    """
    if curve_alpha.p > curve_beta.p:
        raise ValueError("needs curve_alpha.p <= curve_beta.p")
    if not np.array_equal(curve_alpha.r_grid, curve_beta.r_grid):
        raise ValueError("curves must share their r grid")
    alpha, beta = curve_alpha.p, curve_beta.p
    r = np.asarray(curve_alpha.r_grid, dtype=float)
    fa = np.asarray(curve_alpha.estimates, dtype=float)
    fb = np.asarray(curve_beta.estimates, dtype=float)
    grid = np.concatenate([[0.0], r])
    vals = np.concatenate([[1.0], fb])
    integral = np.cumsum(np.diff(grid) * 0.5 * (vals[1:] + vals[:-1]))
    rhs = fb * np.exp(-(beta - alpha) * (r / (a + integral) - 1.0))
    slack = curve_alpha.ci + curve_beta.ci
    margins = rhs + slack - fa
    raw_short = fa > rhs
    failures = int((margins < 0).sum())
    warnings = int((raw_short & (margins >= 0)).sum())
    return FunctionalReport(
        r_grid=r,
        lhs=fa,
        rhs=rhs,
        slack=slack,
        margins=margins,
        warnings=warnings,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# boundary-point tail


@dataclass(frozen=True)
class BoundaryReport:
    x: np.ndarray
    radii: np.ndarray
    freq: np.ndarray
    ci: np.ndarray
    monotone_violations: int
    trials: int

    @property
    def probability(self) -> float:
        """Frequency at the deepest level of the tower."""
        return float(self.freq[-1])


def estimate_boundary_point_prob(
    graph: EmbeddedGraph,
    p: float,
    x: Sequence[float],
    n_max: int,
    trials: int,
    seed: int,
    rho1: float = 1.0,
    delta: float | None = None,
) -> BoundaryReport:
    """Probability that the origin's cluster enters shrinking neighborhoods
    of a boundary point.

    Neighborhood n is the Euclidean half-ball of radius rho1 * 2^(1-n)
    centered at (x, 0); membership of a cluster is decided exactly per
    fragment through the closed-form segment distance.  The regions are
    nested, so per-trial flags are non-increasing in n by construction;
    violations are counted and expected to be zero.  On a finite graph the
    frequencies are lower-bound proxies of the infinite-volume quantity.
    """
    x = np.asarray(x, dtype=float)
    if x.size != graph.dim - 1:
        raise ValueError("x must be a horizontal (boundary) vector")
    if n_max == 0:
        # depth zero: the neighborhood is everything, the event is certain
        return BoundaryReport(
            x=x,
            radii=np.array([math.inf]),
            freq=np.array([1.0]),
            ci=np.array([0.0]),
            monotone_violations=0,
            trials=trials,
        )
    radii = rho1 * 2.0 ** (1.0 - np.arange(1, n_max + 1, dtype=float))
    bpoint = np.append(x, 0.0)
    # the apex of the deepest half-ball must be comfortably inside the
    # generated region, otherwise the deep-level frequencies are artifacts
    if graph.coverage_radius > 0.0:
        apex = np.append(x, radii[-1])
        need = hyperbolic_distance(graph.origin_point, apex) + graph.l_max
        if graph.coverage_radius + 1e-9 < need:
            raise GuardBandError(
                f"boundary neighborhood needs coverage {need:.3f}, "
                f"graph has {graph.coverage_radius:.3f}"
            )
    clip = clip_to_slab(graph, None, h=1.0, delta=delta)
    sv0 = clip.vertex_index_of_original(graph.origin_index)
    prop = BitPropagator(clip.n_vertices, clip.fragments, clip.parent)
    tseeds = seed_stream(derive_seed(seed, "boundary"), trials)
    bits = sample_open_bits(tseeds, clip.n_parent_edges, p)
    visited = prop.closure(bits, [sv0])

    vdist = np.linalg.norm(clip.coords - bpoint, axis=1)
    fdist = np.array(
        [
            segment_min_euclid_dist(
                clip.coords[i_], clip.coords[j_], bpoint
            )
            for i_, j_ in clip.fragments
        ]
    )
    frag_live = visited[clip.fragments[:, 0]] & bits[clip.parent]

    events = np.zeros((n_max, visited.shape[1]), dtype=np.uint64)
    events |= descending_or(visited, -vdist, -radii)
    events |= descending_or(frag_live, -fdist, -radii)
    freq = count_bits(events, trials) / trials
    violations = 0
    for i in range(n_max - 1):
        if not is_subset_bits(events[i + 1], events[i], trials):
            stray = count_bits(events[i + 1] & ~events[i], trials)
            violations += int(stray.sum())
    return BoundaryReport(
        x=x,
        radii=radii,
        freq=freq,
        ci=_binom_hw(freq, trials),
        monotone_violations=violations,
        trials=trials,
    )


# ---------------------------------------------------------------------------
# control-model critical point


@dataclass(frozen=True)
class PcReport:
    p_grid: np.ndarray
    freq_small: np.ndarray
    freq_large: np.ndarray
    crossing_small: float
    crossing_large: float
    interval: tuple[float, float]
    extents: tuple[float, float]
    trials: int

    @property
    def estimate(self) -> float:
        return 0.5 * (self.crossing_small + self.crossing_large)


def _crossing_probability(
    graph: EmbeddedGraph, p: float, trials: int, seed: int
) -> float:
    """Left-face to right-face open crossing frequency along the first axis."""
    clip = clip_to_slab(graph, None, h=1.0)
    xs = clip.coords[:, 0]
    left = np.nonzero(xs <= xs.min() + 1e-9)[0]
    right = np.nonzero(xs >= xs.max() - 1e-9)[0]
    prop = BitPropagator(clip.n_vertices, clip.fragments, clip.parent)
    tseeds = seed_stream(seed, trials)
    bits = sample_open_bits(tseeds, clip.n_parent_edges, p)
    visited = prop.closure(bits, left)
    hit = np.zeros((1, visited.shape[1]), dtype=np.uint64)
    for v in right:
        hit |= visited[v]
    return float(count_bits(hit, trials)[0]) / trials


def _interp_crossing(p_grid: np.ndarray, freq: np.ndarray) -> float:
    """First downward-robust crossing of frequency 0.5, by interpolation."""
    for i in range(len(p_grid) - 1):
        if freq[i] < 0.5 <= freq[i + 1]:
            f0, f1 = freq[i], freq[i + 1]
            return float(
                p_grid[i] + (0.5 - f0) / (f1 - f0) * (p_grid[i + 1] - p_grid[i])
            )
    raise ValueError("crossing probability never passes through 0.5 on the grid")


def estimate_pc(
    family: LatticeFamily,
    p_grid: Sequence[float],
    size_threshold: float,
    trials: int,
    seed: int,
) -> PcReport:
    """Bracket the critical density of the flat control lattice.

    Computes face-to-face crossing frequencies on two extents (the
    threshold and its double) over the density grid and interpolates where
    each passes one half; the interval spans both crossings widened by the
    interpolation uncertainty from four-sigma binomial errors.
    """
    p_grid = np.asarray(sorted(float(v) for v in p_grid))
    extents = (float(size_threshold), float(2 * size_threshold))
    freqs = []
    for which, ext in enumerate(extents):
        graph = family.graph(ext)
        f = np.array(
            [
                _crossing_probability(
                    graph, p, trials, derive_seed(seed, "pc", which, i)
                )
                for i, p in enumerate(p_grid)
            ]
        )
        freqs.append(f)
    c_small = _interp_crossing(p_grid, freqs[0])
    c_large = _interp_crossing(p_grid, freqs[1])
    # widen by the density equivalent of the binomial error at the crossing
    spacing = float(np.min(np.diff(p_grid))) if len(p_grid) > 1 else 0.01
    hw = 4.0 * math.sqrt(0.25 / trials)
    slope = max(
        np.max(np.abs(np.diff(freqs[1]))) / spacing, 1e-9
    )
    widen = hw / slope
    lo = min(c_small, c_large) - widen
    hi = max(c_small, c_large) + widen
    return PcReport(
        p_grid=p_grid,
        freq_small=freqs[0],
        freq_large=freqs[1],
        crossing_small=c_small,
        crossing_large=c_large,
        interval=(lo, hi),
        extents=extents,
        trials=trials,
    )


def two_point_curve(
    clip: SlabGraph,
    p: float,
    vertex_list: Sequence[int],
    trials: int,
    seed: int,
) -> np.ndarray:
    """Connection frequencies from the origin to each listed slab vertex."""
    sv0 = clip.vertex_index_of_original(clip.base.origin_index)
    prop = BitPropagator(clip.n_vertices, clip.fragments, clip.parent)
    tseeds = seed_stream(derive_seed(seed, "two-point"), trials)
    bits = sample_open_bits(tseeds, clip.n_parent_edges, p)
    visited = prop.closure(bits, [sv0])
    return count_bits(visited[np.asarray(vertex_list, dtype=np.int64)], trials) / trials
