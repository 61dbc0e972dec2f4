"""Exact small-instance machinery.

Everything here enumerates all 2^U states of a gadget's sampling units and
works in exact rational arithmetic: event probabilities as polynomials in
the density, pivotal-edge counts, the derivative identity for increasing
events, the disjoint-occurrence inequality, and the pivotal-chain
decomposition with its conditional tail inequality.  No Monte Carlo noise
enters this module; whatever it reports is a theorem about the gadget.

Enumeration piggybacks on the bit-parallel closure engine: state index c
is treated as trial c, and unit u's bit pattern over all states is the
fixed block pattern of the u-th binary digit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .hypgeom import proj_distance_many
from .percolate import BitPropagator, descending_or

__all__ = [
    "BkReport",
    "CapExceededError",
    "CheckRecord",
    "EventDoesNotOccur",
    "EventSpec",
    "IntegralReport",
    "NotIncreasingError",
    "OracleGraph",
    "PolyInP",
    "RussoReport",
    "SausReport",
    "SausageDecomposition",
    "disjoint_occurrence",
    "event_table",
    "exact_prob",
    "exact_reach_curve",
    "increasing_event_from_witnesses",
    "increasing_violation",
    "pivotal_expectation",
    "pivotal_order_consistent",
    "sausage_decompose",
    "sphere_reach_poly",
    "verify_bk",
    "verify_russo",
    "verify_russo_integral",
    "verify_saus",
]


ENUM_CAP = 22
DISJOINT_CAP = 14


class CapExceededError(ValueError):
    """Instance is too large for exhaustive enumeration."""


class EventDoesNotOccur(ValueError):
    """A decomposition was requested for a state outside the event."""


class NotIncreasingError(ValueError):
    """An event flagged increasing failed the exhaustive monotonicity check."""


@dataclass(frozen=True)
class CheckRecord:
    """One line of a verification report, CSV-friendly."""

    instance: str
    check: str
    status: str
    witness: str = ""

    def as_row(self) -> tuple[str, str, str, str]:
        return (self.instance, self.check, self.status, self.witness)


# ---------------------------------------------------------------------------
# gadget graphs


@dataclass(frozen=True)
class OracleGraph:
    """Small embedded multigraph whose randomness lives on sampling units.

    Rows of `edges` are individual links; `unit[e]` names the independent
    coin deciding link e, so several links may share one coin (the way slab
    fragments share their parent edge).  coords are half-space coordinates
    with the height last; horizontal sup-norm distances between projections
    drive every geometric event.
    """

    coords: np.ndarray
    edges: np.ndarray
    unit: np.ndarray
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        unit = np.asarray(self.unit, dtype=np.int64)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "unit", unit)
        if len(unit) != len(edges):
            raise ValueError("one unit id per edge row required")
        if np.any(coords[:, -1] <= 0):
            raise ValueError("heights must be positive")
        if self.n_units and set(np.unique(unit)) != set(range(self.n_units)):
            raise ValueError("unit ids must be consecutive from 0")

    @classmethod
    def from_edges(
        cls,
        edges: Sequence[tuple[int, int]],
        positions: Sequence[Sequence[float]] | None = None,
        seed: int = 0,
        name: str = "",
    ) -> "OracleGraph":
        """Abstract gadget: one unit per edge, vertices placed at height 1.

        Default positions space the vertices a unit apart on a horizontal
        line, so d_eth(i, j) = |i - j|.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        n = int(edges.max()) + 1 if edges.size else 1
        if positions is None:
            coords = np.stack([np.arange(n, dtype=float), np.ones(n)], axis=1)
        else:
            pos = np.asarray(positions, dtype=float)
            if pos.ndim == 1:
                pos = pos[:, None]
            coords = np.concatenate([pos, np.ones((len(pos), 1))], axis=1)
        return cls(coords, edges, np.arange(len(edges)), seed=seed, name=name)

    @classmethod
    def from_slab(cls, clip, seed_original: int = 0, name: str = "") -> "OracleGraph":
        """Gadget view of a clipped slab graph; fragments keep shared coins."""
        uniq, inv = np.unique(clip.parent, return_inverse=True)
        sv = clip.vertex_index_of_original(seed_original)
        return cls(clip.coords.copy(), clip.fragments.copy(), inv, seed=sv, name=name)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_units(self) -> int:
        return int(self.unit.max()) + 1 if len(self.unit) else 0

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def d_eth(self, i: int, j: int) -> float:
        """Sup-norm distance between two vertex projections."""
        return float(
            np.max(np.abs(self.coords[i, :-1] - self.coords[j, :-1]))
            if self.dim > 1
            else 0.0
        )

    def proj_scores(self, center_vertex: int) -> np.ndarray:
        return proj_distance_many(self.coords[:, :-1], self.coords[center_vertex, :-1])

    def pair_distances(self) -> np.ndarray:
        """Sorted unique d_eth values over all vertex pairs (0 included)."""
        proj = self.coords[:, :-1]
        diff = np.max(np.abs(proj[:, None, :] - proj[None, :, :]), axis=-1)
        return np.unique(np.round(diff, 12))

    def max_edge_span(self) -> float:
        """Largest horizontal sup-norm span of a single link."""
        if self.n_edges == 0:
            return 0.0
        a = self.coords[self.edges[:, 0], :-1]
        b = self.coords[self.edges[:, 1], :-1]
        return float(np.max(np.max(np.abs(a - b), axis=-1)))

    def open_links(self, open_units: np.ndarray) -> np.ndarray:
        return np.asarray(open_units, dtype=bool)[self.unit]


# ---------------------------------------------------------------------------
# exact polynomials


def _trim(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    out = [Fraction(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class PolyInP:
    """Polynomial in the edge density with exact rational coefficients."""

    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def zero(cls) -> "PolyInP":
        return cls(())

    @classmethod
    def one(cls) -> "PolyInP":
        return cls((Fraction(1),))

    @classmethod
    def from_counts(cls, counts: Sequence[int], n_units: int) -> "PolyInP":
        """Polynomial sum_k counts[k] p^k (1-p)^(n_units-k), expanded exactly."""
        coeffs = [0] * (n_units + 1)
        for k, c in enumerate(counts):
            c = int(c)
            if c == 0:
                continue
            rest = n_units - k
            for j in range(rest + 1):
                coeffs[k + j] += c * math.comb(rest, j) * (-1) ** j
        return cls(tuple(Fraction(c) for c in coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1 if self.coeffs else 0

    def __call__(self, p):
        """Horner evaluation; exact for int/Fraction input, float otherwise."""
        if isinstance(p, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * p + c
            return acc
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * p + float(c)
        return acc

    def derivative(self) -> "PolyInP":
        return PolyInP(tuple(k * c for k, c in enumerate(self.coeffs) if k >= 1))

    def __add__(self, other: "PolyInP") -> "PolyInP":
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))
        b = list(other.coeffs) + [Fraction(0)] * (n - len(other.coeffs))
        return PolyInP(tuple(x + y for x, y in zip(a, b)))

    def __sub__(self, other: "PolyInP") -> "PolyInP":
        return self + PolyInP(tuple(-c for c in other.coeffs))

    def __mul__(self, other: "PolyInP") -> "PolyInP":
        if not self.coeffs or not other.coeffs:
            return PolyInP.zero()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return PolyInP(tuple(out))

    def within_unit_interval(self, grid_points: int = 21) -> bool:
        """Spot check that values stay in [0, 1] on a density grid."""
        for j in range(grid_points):
            v = self(Fraction(j, grid_points - 1))
            if v < 0 or v > 1:
                return False
        return True


# ---------------------------------------------------------------------------
# events and exhaustive tables

_WORD_PATTERNS = (
    0xAAAAAAAAAAAAAAAA,
    0xCCCCCCCCCCCCCCCC,
    0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00,
    0xFFFF0000FFFF0000,
    0xFFFFFFFF00000000,
)


def _unit_bits(n_units: int) -> np.ndarray:
    """Open/closed bit of every unit across all 2^n_units states.

    Bit c of unit u's row is digit u of the state index c, so row u is a
    fixed block pattern; this is the exact-enumeration analog of sampled
    open bits.
    """
    n_states = 1 << n_units
    n_words = max(1, n_states >> 6)
    bits = np.empty((n_units, n_words), dtype=np.uint64)
    words = np.arange(n_words, dtype=np.uint64)
    ones = np.uint64(0xFFFFFFFFFFFFFFFF)
    for u in range(n_units):
        if u < 6:
            bits[u] = np.uint64(_WORD_PATTERNS[u])
        else:
            sel = (words >> np.uint64(u - 6)) & np.uint64(1)
            bits[u] = sel * ones
    return bits


def _unpack_table(row: np.ndarray, n_states: int) -> np.ndarray:
    flat = np.unpackbits(row.view(np.uint8), bitorder="little")
    return flat[:n_states].astype(bool)


def _pack_table(table: np.ndarray) -> np.ndarray:
    padded = np.packbits(table.astype(np.uint8), bitorder="little")
    pad = (-len(padded)) % 8
    if pad:
        padded = np.concatenate([padded, np.zeros(pad, dtype=np.uint8)])
    return padded.view(np.uint64)


@dataclass(frozen=True)
class EventSpec:
    """Event over gadget states.

    kind "connects": some open path joins vertex set a to vertex set b.
    kind "size_ge": the open cluster of `a` reaches sup-norm projection
    distance >= r from the first seed's projection.  kind "custom": an
    arbitrary predicate over the open-unit vector (or a precomputed state
    table).  monotone_flag asserts the event is increasing; it is verified
    exhaustively on instances of at most 16 units when a table is built.
    """

    kind: str
    a: tuple = ()
    b: tuple = ()
    r: float = 0.0
    monotone_flag: bool = True
    predicate: Callable | None = field(default=None, compare=False, repr=False)
    table: np.ndarray | None = field(default=None, compare=False, repr=False)
    label: str = ""

    @classmethod
    def connects(cls, a, b, label: str = "") -> "EventSpec":
        return cls(
            kind="connects",
            a=tuple(int(v) for v in a),
            b=tuple(int(v) for v in b),
            label=label or "connects",
        )

    @classmethod
    def size_ge(cls, r: float, seed: int = 0, label: str = "") -> "EventSpec":
        return cls(
            kind="size_ge", a=(int(seed),), r=float(r), label=label or f"size_ge({r:g})"
        )

    @classmethod
    def custom(
        cls, predicate: Callable, monotone_flag: bool, label: str = ""
    ) -> "EventSpec":
        return cls(
            kind="custom",
            predicate=predicate,
            monotone_flag=monotone_flag,
            label=label or "custom",
        )

    @classmethod
    def from_table(
        cls, table: np.ndarray, monotone_flag: bool, label: str = ""
    ) -> "EventSpec":
        return cls(
            kind="custom",
            table=np.asarray(table, dtype=bool),
            monotone_flag=monotone_flag,
            label=label,
        )

    def complement(self) -> "EventSpec":
        inv_table = None if self.table is None else ~self.table
        inv_pred = None
        if self.predicate is not None:
            pred = self.predicate
            inv_pred = lambda open_units: not pred(open_units)
        if self.table is None and self.predicate is None:
            raise ValueError(
                "complement needs a custom event; build one via from_table"
            )
        return EventSpec(
            kind="custom",
            monotone_flag=False,
            predicate=inv_pred,
            table=inv_table,
            label=f"not({self.label})",
        )


def increasing_violation(table: np.ndarray, n_units: int) -> tuple[int, int] | None:
    """First (state, unit) where opening one more unit leaves the event.

    None when the table is increasing.
    """
    idx = np.arange(len(table))
    for u in range(n_units):
        up = idx | (1 << u)
        bad = table & ~table[up]
        hit = np.nonzero(bad)[0]
        if hit.size:
            return int(hit[0]), u
    return None


def event_table(G: OracleGraph, A: EventSpec, cap: int = ENUM_CAP) -> np.ndarray:
    """Boolean truth table of the event over all 2^n_units states."""
    M = G.n_units
    if M > cap:
        raise CapExceededError(f"{M} units exceeds the enumeration cap {cap}")
    n_states = 1 << M
    if A.table is not None:
        table = np.asarray(A.table, dtype=bool)
        if len(table) != n_states:
            raise ValueError("precomputed table size does not match the gadget")
    elif A.kind == "connects":
        bits = _unit_bits(M)
        prop = BitPropagator(G.n_vertices, G.edges, G.unit)
        visited = prop.closure(bits, list(A.a))
        row = np.zeros((1, visited.shape[1]), dtype=np.uint64)
        for v in A.b:
            row |= visited[v]
        table = _unpack_table(row[0], n_states)
    elif A.kind == "size_ge":
        bits = _unit_bits(M)
        prop = BitPropagator(G.n_vertices, G.edges, G.unit)
        visited = prop.closure(bits, list(A.a))
        scores = G.proj_scores(A.a[0])
        row = descending_or(visited, scores, np.array([A.r]))
        table = _unpack_table(row[0], n_states)
    elif A.kind == "custom":
        if A.predicate is None:
            raise ValueError("custom event needs a predicate or a table")
        table = np.zeros(n_states, dtype=bool)
        for c in range(n_states):
            open_units = np.array(
                [(c >> u) & 1 for u in range(M)], dtype=bool
            )
            table[c] = bool(A.predicate(open_units))
    else:
        raise ValueError(f"unknown event kind {A.kind!r}")
    if A.monotone_flag and M <= 16:
        witness = increasing_violation(table, M)
        if witness is not None:
            raise NotIncreasingError(
                f"event {A.label or A.kind} flagged increasing but state "
                f"{witness[0]} leaves it when unit {witness[1]} opens"
            )
    return table


def _state_popcounts(n_states: int) -> np.ndarray:
    return np.bitwise_count(np.arange(n_states, dtype=np.uint64)).astype(np.int64)


def exact_prob(G: OracleGraph, A: EventSpec, cap: int = ENUM_CAP) -> PolyInP:
    """Exact event probability as a polynomial in the density."""
    table = event_table(G, A, cap=cap)
    M = G.n_units
    pop = _state_popcounts(len(table))
    counts = np.bincount(pop[table], minlength=M + 1)
    return PolyInP.from_counts(counts.tolist(), M)


def _pivotal_counts(table: np.ndarray, n_units: int) -> np.ndarray:
    """Number of units whose flip changes event membership, per state."""
    idx = np.arange(len(table))
    n = np.zeros(len(table), dtype=np.int64)
    for u in range(n_units):
        n += table != table[idx ^ (1 << u)]
    return n


def pivotal_expectation(
    G: OracleGraph, A: EventSpec, cap: int = ENUM_CAP
) -> tuple[PolyInP, PolyInP]:
    """Exact (E[N], E[N restricted to the event]) as polynomials.

    N counts the units whose flip changes membership in A.  The
    conditional expectation E[N | A] is the ratio of the second polynomial
    to exact_prob(A).
    """
    table = event_table(G, A, cap=cap)
    M = G.n_units
    pop = _state_popcounts(len(table))
    n = _pivotal_counts(table, M)
    tot = np.bincount(pop, weights=n.astype(float), minlength=M + 1)
    on_a = np.bincount(pop[table], weights=n[table].astype(float), minlength=M + 1)
    e_n = PolyInP.from_counts([int(round(v)) for v in tot], M)
    e_n_a = PolyInP.from_counts([int(round(v)) for v in on_a], M)
    return e_n, e_n_a


@dataclass(frozen=True)
class RussoReport:
    instance: str
    ok: bool
    records: tuple

    @property
    def discrepancies(self) -> tuple:
        return tuple(r for r in self.records if r.status == "fail")


def verify_russo(G: OracleGraph, A: EventSpec, cap: int = ENUM_CAP) -> RussoReport:
    """Coefficientwise check that d/dp Pr(A) equals E[number of pivotal units].

    Requires an increasing event; exact rational arithmetic throughout, so
    any nonzero discrepancy is a genuine failure, not roundoff.
    """
    if not A.monotone_flag:
        raise NotIncreasingError("the derivative identity needs an increasing event")
    f = exact_prob(G, A, cap=cap)
    e_n, _ = pivotal_expectation(G, A, cap=cap)
    diff = f.derivative() - e_n
    name = G.name or "gadget"
    if not diff.coeffs:
        rec = CheckRecord(name, f"russo[{A.label}]", "pass")
        return RussoReport(name, True, (rec,))
    witness = "; ".join(
        f"p^{k}: {c}" for k, c in enumerate(diff.coeffs) if c != 0
    )
    rec = CheckRecord(name, f"russo[{A.label}]", "fail", witness)
    return RussoReport(name, False, (rec,))


# ---------------------------------------------------------------------------
# disjoint occurrence


def _minimal_states(table: np.ndarray, n_units: int) -> np.ndarray:
    """States in the event none of whose one-unit-removals stay in it."""
    idx = np.arange(len(table))
    has_smaller = np.zeros(len(table), dtype=bool)
    for u in range(n_units):
        in_state = (idx & (1 << u)) != 0
        has_smaller |= in_state & table[idx ^ (1 << u)]
    return np.nonzero(table & ~has_smaller)[0]


def _upward_closure(marks: np.ndarray, n_units: int) -> np.ndarray:
    out = marks.copy()
    for u in range(n_units):
        view = out.reshape(-1, 2, 1 << u)
        view[:, 1, :] |= view[:, 0, :]
    return out


def increasing_event_from_witnesses(
    masks: Sequence[int], n_units: int, label: str = ""
) -> EventSpec:
    """Smallest increasing event containing the given witness states."""
    marks = np.zeros(1 << n_units, dtype=bool)
    for m in masks:
        marks[int(m)] = True
    return EventSpec.from_table(
        _upward_closure(marks, n_units), monotone_flag=True, label=label or "up-set"
    )


def disjoint_occurrence(
    G: OracleGraph, A: EventSpec, B: EventSpec, cap: int = DISJOINT_CAP
) -> EventSpec:
    """The event that A and B occur on disjoint unit sets.

    For increasing events a state qualifies exactly when it contains the
    union of a minimal witness of A and a disjoint minimal witness of B,
    so the table is the upward closure of those pairwise unions.
    """
    M = G.n_units
    if M > cap:
        raise CapExceededError(
            f"{M} units exceeds the disjoint-occurrence cap {cap}"
        )
    tA = event_table(G, A, cap=cap)
    tB = event_table(G, B, cap=cap)
    if not A.monotone_flag or not B.monotone_flag:
        raise NotIncreasingError("disjoint occurrence needs increasing events")
    minA = _minimal_states(tA, M)
    minB = _minimal_states(tB, M)
    marks = np.zeros(1 << M, dtype=bool)
    chunk = max(1, (1 << 22) // max(len(minB), 1))
    for lo in range(0, len(minA), chunk):
        ia = minA[lo : lo + chunk][:, None]
        disjoint = (ia & minB[None, :]) == 0
        unions = (ia | minB[None, :])[disjoint]
        marks[unions] = True
    table = _upward_closure(marks, M)
    return EventSpec(
        kind="custom",
        monotone_flag=True,
        table=table,
        label=f"({A.label})o({B.label})",
    )


@dataclass(frozen=True)
class BkReport:
    instance: str
    ok: bool
    n_checked: int
    records: tuple


def verify_bk(
    G: OracleGraph, A: EventSpec, B: EventSpec, cap: int = DISJOINT_CAP
) -> BkReport:
    """Exact check of Pr(A on-disjoint-units B) <= Pr(A) Pr(B).

    Evaluated at the 99 exact densities j/100; violations are collected
    with the offending density as witness (none are expected).
    """
    occ = disjoint_occurrence(G, A, B, cap=cap)
    pa = exact_prob(G, A, cap=max(cap, G.n_units))
    pb = exact_prob(G, B, cap=max(cap, G.n_units))
    po = exact_prob(G, occ, cap=max(cap, G.n_units))
    name = G.name or "gadget"
    records = []
    for j in range(1, 100):
        p = Fraction(j, 100)
        lhs, rhs = po(p), pa(p) * pb(p)
        if lhs > rhs:
            records.append(
                CheckRecord(
                    name,
                    f"bk[{A.label};{B.label}]",
                    "fail",
                    f"p={p}: {lhs} > {rhs}",
                )
            )
    if not records:
        records.append(CheckRecord(name, f"bk[{A.label};{B.label}]", "pass"))
    ok = all(r.status == "pass" for r in records)
    return BkReport(name, ok, 99, tuple(records))


# ---------------------------------------------------------------------------
# pivotal chain decomposition


@dataclass(frozen=True)
class SausageDecomposition:
    """Ordered pivotal edges of a seed-to-target connection.

    pivotal_edges[i] = (edge_row, x_i, y_i) with x_i the endpoint nearer
    the seed along every witnessing path; gaps[i] is the sup-norm
    projection distance from the previous far endpoint (the seed at first)
    to x_i.
    """

    pivotal_edges: tuple
    gaps: tuple
    seed: int
    target: tuple

    @property
    def n(self) -> int:
        return len(self.pivotal_edges)


def _open_adjacency(G: OracleGraph, open_links: np.ndarray) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(G.n_vertices)]
    for e in np.nonzero(open_links)[0]:
        i, j = int(G.edges[e, 0]), int(G.edges[e, 1])
        adj[i].append((j, int(e)))
        adj[j].append((i, int(e)))
    return adj


def _bfs_reach(
    adj: list[list[tuple[int, int]]],
    start: int,
    banned_edge: int = -1,
) -> np.ndarray:
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    queue = [start]
    while queue:
        v = queue.pop()
        for w, e in adj[v]:
            if e != banned_edge and not seen[w]:
                seen[w] = True
                queue.append(w)
    return seen


def _bfs_path(
    adj: list[list[tuple[int, int]]], start: int, targets: set[int]
) -> list[tuple[int, int]] | None:
    """Shortest open path as a list of (vertex, edge-used) hops after start."""
    from collections import deque

    prev: dict[int, tuple[int, int]] = {}
    seen = {start}
    dq = deque([start])
    hit = start if start in targets else None
    while dq and hit is None:
        v = dq.popleft()
        for w, e in adj[v]:
            if w not in seen:
                seen.add(w)
                prev[w] = (v, e)
                if w in targets:
                    hit = w
                    break
                dq.append(w)
    if hit is None:
        return None
    path = []
    v = hit
    while v != start:
        u, e = prev[v]
        path.append((v, e))
        v = u
    path.reverse()
    return path


def _target_vertices(G: OracleGraph, target) -> set[int]:
    if np.isscalar(target):
        scores = G.proj_scores(G.seed)
        return set(np.nonzero(scores >= float(target) - 1e-12)[0].tolist())
    return {int(v) for v in target}


def _max_flow_ge_2(
    adj: list[list[tuple[int, int]]], s: int, t: int
) -> bool:
    """True when at least two edge-disjoint open paths join s and t.

    Unit-capacity max-flow with breadth-first augmentation, stopping at
    flow two; each undirected link contributes capacity one each way.
    """
    if s == t:
        return True
    cap: dict[tuple[int, int, int], int] = {}
    for v, nbrs in enumerate(adj):
        for w, e in nbrs:
            cap[(v, w, e)] = 1
    flow = 0
    from collections import deque

    while flow < 2:
        prev: dict[int, tuple[int, int]] = {}
        seen = {s}
        dq = deque([s])
        found = False
        while dq and not found:
            v = dq.popleft()
            for w, e in adj[v]:
                if w not in seen and cap.get((v, w, e), 0) > 0:
                    seen.add(w)
                    prev[w] = (v, e)
                    if w == t:
                        found = True
                        break
                    dq.append(w)
        if not found:
            return False
        v = t
        while v != s:
            u, e = prev[v]
            cap[(u, v, e)] -= 1
            cap[(v, u, e)] = cap.get((v, u, e), 0) + 1
            v = u
        flow += 1
    return True


def sausage_decompose(
    G: OracleGraph,
    open_units: np.ndarray,
    target,
    check_invariants: bool = True,
) -> SausageDecomposition:
    """Ordered pivotal edges of the seed-to-target connection in one state.

    target is either a sup-norm radius (reach event from the seed) or an
    iterable of target vertices.  Pivotal edges are the open links whose
    individual removal disconnects the seed from every target vertex; they
    are ordered and oriented by any witnessing path (all witnessing paths
    agree, which check_invariants asserts via the two-path property).
    """
    open_units = np.asarray(open_units, dtype=bool)
    open_links = G.open_links(open_units)
    adj = _open_adjacency(G, open_links)
    targets = _target_vertices(G, target)
    reach = _bfs_reach(adj, G.seed)
    live_targets = {t for t in targets if reach[t]}
    if not live_targets:
        raise EventDoesNotOccur("the seed does not connect to the target")

    pivotal = []
    for e in np.nonzero(open_links)[0]:
        i, j = int(G.edges[e, 0]), int(G.edges[e, 1])
        if not (reach[i] or reach[j]):
            continue
        seen = _bfs_reach(adj, G.seed, banned_edge=int(e))
        if not any(seen[t] for t in targets):
            pivotal.append(int(e))

    path = _bfs_path(adj, G.seed, live_targets)
    assert path is not None
    order = []
    at = G.seed
    on_path = set()
    for v, e in path:
        if e in pivotal:
            order.append((int(e), at, v))
            on_path.add(e)
        at = v
    if set(pivotal) != on_path:
        raise AssertionError(
            "a pivotal edge is missing from a witnessing path; "
            "the separation structure is inconsistent"
        )

    gaps = []
    prev_far = G.seed
    for e, x, y in order:
        gaps.append(G.d_eth(prev_far, x))
        prev_far = y

    if check_invariants:
        prev_far = G.seed
        for e, x, y in order:
            if not _max_flow_ge_2(adj, prev_far, x):
                raise AssertionError(
                    "fewer than two edge-disjoint open paths inside a sausage"
                )
            prev_far = y

    return SausageDecomposition(
        pivotal_edges=tuple(order),
        gaps=tuple(gaps),
        seed=G.seed,
        target=tuple(sorted(targets)),
    )


def _all_simple_paths(
    adj: list[list[tuple[int, int]]], start: int, targets: set[int], limit: int = 20000
) -> list[list[tuple[int, int]]]:
    out: list[list[tuple[int, int]]] = []
    stack: list[tuple[int, list[tuple[int, int]], set[int]]] = [
        (start, [], {start})
    ]
    while stack:
        v, path, seen = stack.pop()
        if v in targets and path:
            out.append(path)
            if len(out) >= limit:
                raise RuntimeError("too many witnessing paths to enumerate")
            continue
        for w, e in adj[v]:
            if w not in seen:
                stack.append((w, path + [(w, e)], seen | {w}))
    return out


def pivotal_order_consistent(G: OracleGraph, open_units: np.ndarray, target) -> bool:
    """Whether every witnessing path visits the pivotal edges in the same
    order and direction.  Exhaustive over simple paths; gadget-sized only.
    """
    dec = sausage_decompose(G, open_units, target, check_invariants=False)
    open_links = G.open_links(np.asarray(open_units, dtype=bool))
    adj = _open_adjacency(G, open_links)
    targets = _target_vertices(G, target)
    expected = [(e, x, y) for e, x, y in dec.pivotal_edges]
    for path in _all_simple_paths(adj, G.seed, targets):
        seen = []
        at = G.seed
        for v, e in path:
            if e in {t[0] for t in expected}:
                seen.append((e, at, v))
            at = v
        if seen != expected:
            return False
    return True


# ---------------------------------------------------------------------------
# exact reach curve and the conditional chain inequality


def sphere_reach_poly(
    G: OracleGraph, v: int, r: float, cap: int = ENUM_CAP
) -> PolyInP:
    """Exact probability that v's open cluster reaches sup-norm distance r
    from v's own projection."""
    ev = EventSpec(kind="size_ge", a=(int(v),), r=float(r), label=f"reach({v},{r:g})")
    return exact_prob(G, ev, cap=cap)


def exact_reach_curve(G: OracleGraph, cap: int = ENUM_CAP) -> Callable:
    """Dominating reach curve: max over gadget vertices of the exact
    probability of reaching distance r from that vertex.

    Returns g(p, r) evaluating exactly (Fraction in, Fraction out); results
    are cached per radius.
    """
    cache: dict[float, list[PolyInP]] = {}

    def g(p, r: float):
        key = float(r)
        if key not in cache:
            cache[key] = [
                sphere_reach_poly(G, v, key, cap=cap) for v in range(G.n_vertices)
            ]
        return max(poly(p) for poly in cache[key])

    return g


@dataclass(frozen=True)
class SausReport:
    instance: str
    ok: bool
    n_checked: int
    n_skipped_infeasible: int
    n_vacuous: int
    records: tuple


def verify_saus(
    G: OracleGraph,
    r_values: Sequence[float],
    p_grid: Sequence[Fraction],
    a: float | None = None,
    gp: Callable | None = None,
    cap: int = ENUM_CAP,
) -> SausReport:
    """Exhaustive check of the conditional pivotal-chain tail inequality.

    For each event radius r, every state in the reach event is decomposed
    into its pivotal chain; then for every observed gap prefix and every
    realizable candidate value r_k that keeps sum(r_i) <= r - (k-1) a, the
    inequality Pr(prefix and k-th gap >= r_k and event) <= g(p, r_k) *
    Pr(prefix and event) is verified exactly at each grid density.
    Candidate tuples that break the feasibility budget are skipped, not
    failed, since the underlying statement assumes the budget.
    """
    if a is None:
        a = G.max_edge_span()
    if gp is None:
        gp = exact_reach_curve(G, cap=cap)
    p_grid = [Fraction(p) if not isinstance(p, Fraction) else p for p in p_grid]
    M = G.n_units
    if M > cap:
        raise CapExceededError(f"{M} units exceeds the enumeration cap {cap}")
    pop = _state_popcounts(1 << M)
    name = G.name or "gadget"
    realizable = [float(v) for v in G.pair_distances()]

    records = []
    checked = skipped = vacuous = 0
    for r in r_values:
        ev = EventSpec.size_ge(float(r), seed=G.seed)
        table = event_table(G, ev, cap=cap)
        states = np.nonzero(table)[0]
        if states.size == 0:
            vacuous += 1
            records.append(
                CheckRecord(name, f"saus[r={r:g}]", "vacuous", "event empty")
            )
            continue
        chains: dict[int, tuple] = {}
        for c in states.tolist():
            open_units = (c >> np.arange(M)) & 1
            dec = sausage_decompose(
                G, open_units.astype(bool), float(r), check_invariants=False
            )
            chains[c] = dec.gaps
        max_n = max((len(g_) for g_ in chains.values()), default=0)

        for k in range(1, max_n + 2):
            prefixes = {g_[: k - 1] for g_ in chains.values() if len(g_) >= k - 1}
            for prefix in sorted(prefixes):
                members = [
                    c for c, g_ in chains.items() if g_[: k - 1] == prefix
                ]
                if not members:
                    continue
                budget = float(r) - (k - 1) * a - sum(prefix)
                pre_counts = np.bincount(pop[members], minlength=M + 1)
                pre_poly = PolyInP.from_counts(pre_counts.tolist(), M)
                for rk in realizable:
                    if rk > budget + 1e-9:
                        skipped += 1
                        continue
                    bad = [
                        c
                        for c in members
                        if len(chains[c]) >= k and chains[c][k - 1] >= rk - 1e-12
                    ]
                    bad_counts = np.bincount(
                        pop[bad] if bad else np.array([], dtype=np.int64),
                        minlength=M + 1,
                    )
                    bad_poly = PolyInP.from_counts(bad_counts.tolist(), M)
                    checked += 1
                    for p in p_grid:
                        lhs = bad_poly(p)
                        rhs = gp(p, rk) * pre_poly(p)
                        if lhs > rhs:
                            records.append(
                                CheckRecord(
                                    name,
                                    f"saus[r={r:g}]",
                                    "fail",
                                    f"k={k} prefix={prefix} rk={rk:g} "
                                    f"p={p}: {lhs} > {rhs}",
                                )
                            )
    ok = not any(rec.status == "fail" for rec in records)
    if ok:
        records.append(
            CheckRecord(name, "saus", "pass", f"{checked} cases, {skipped} skipped")
        )
    return SausReport(
        instance=name,
        ok=ok,
        n_checked=checked,
        n_skipped_infeasible=skipped,
        n_vacuous=vacuous,
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# integrated derivative inequality


@dataclass(frozen=True)
class IntegralReport:
    instance: str
    ok: bool
    f_alpha: float
    f_beta: float
    bound: float
    integral: float
    quad_error: float
    records: tuple


def verify_russo_integral(
    G: OracleGraph,
    alpha: float,
    beta: float,
    r: float | None = None,
    event: EventSpec | None = None,
    cap: int = ENUM_CAP,
) -> IntegralReport:
    """Check f(alpha) <= f(beta) exp(-integral of E[N | event]) exactly
    up to quadrature.

    The integrand is the exact rational ratio E[N on event] / Pr(event)
    evaluated pointwise; the integral uses adaptive quadrature to absolute
    error 1e-10 and the comparison allows 1e-9 slack beyond it.
    """
    if not 0.0 < alpha <= beta <= 1.0:
        raise ValueError("need 0 < alpha <= beta <= 1")
    if event is None:
        if r is None:
            raise ValueError("give either an event radius r or an event")
        event = EventSpec.size_ge(float(r), seed=G.seed)
    f = exact_prob(G, event, cap=cap)
    _, e_n_on = pivotal_expectation(G, event, cap=cap)
    f_alpha = f(float(alpha))
    if f_alpha <= 0.0:
        raise EventDoesNotOccur(
            "the event has probability zero at alpha; the bound is vacuous"
        )

    def integrand(p: float) -> float:
        return e_n_on(p) / f(p)

    integral, quad_err = quad(integrand, alpha, beta, epsabs=1e-10, limit=200)
    f_beta = f(float(beta))
    bound = f_beta * math.exp(-integral)
    ok = f_alpha <= bound + quad_err + 1e-9
    name = G.name or "gadget"
    status = "pass" if ok else "fail"
    witness = "" if ok else f"{f_alpha} > {bound} (quad_err {quad_err:g})"
    rec = CheckRecord(name, f"russo-integral[{event.label}]", status, witness)
    return IntegralReport(
        instance=name,
        ok=ok,
        f_alpha=f_alpha,
        f_beta=f_beta,
        bound=bound,
        integral=integral,
        quad_error=quad_err,
        records=(rec,),
    )
