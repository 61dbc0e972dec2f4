"""Geometry of the half-space model of d-dimensional hyperbolic space.

Points live in the upper half-space ``R^(d-1) x (0, inf)``; the last
coordinate is the height.  The distinguished origin is ``(0, ..., 0, 1)``.

Isometries are stored as (d+1)x(d+1) Lorentz matrices acting on the
hyperboloid sheet ``{X : <X,X> = -1, X_0 > 0}`` of Minkowski space with
signature ``(-, +, ..., +)``.  The chart used to move between the two
models is

    lift(u, t)   = ((|u|^2 + t^2 + 1) / 2t,  u / t,  (|u|^2 + t^2 - 1) / 2t)
    unlift(X)    = (X_mid / (X_0 - X_d),  1 / (X_0 - X_d))

whose derivative at the origin is the identity, so a rotation of the
tangent space at the origin by an orthogonal matrix R is represented by
``diag(1, R)``.  Scalings are Lorentz boosts in the (0, d) plane and
horizontal translations are parabolic matrices; both have closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Tolerances shared across the package.
MINK_DRIFT_TOL = 1e-12   # re-orthonormalize Lorentz matrices beyond this
ORTHO_TOL = 1e-9         # orthogonality check for rotation inputs
GEOM_TOL = 1e-9          # geometric predicate tolerance


def _as_horizontal(x) -> np.ndarray:
    u = np.atleast_1d(np.asarray(x, dtype=float))
    if u.ndim != 1:
        raise ValueError("horizontal part must be a 1-d vector")
    return u


@dataclass(frozen=True, eq=False)
class Point:
    """A point of hyperbolic d-space in half-space coordinates."""

    horizontal: np.ndarray
    height: float

    def __post_init__(self):
        u = _as_horizontal(self.horizontal)
        object.__setattr__(self, "horizontal", u)
        object.__setattr__(self, "height", float(self.height))
        if not (self.height > 0.0) or not math.isfinite(self.height):
            raise ValueError("height must be positive and finite")
        if not np.all(np.isfinite(u)):
            raise ValueError("horizontal coordinates must be finite")

    @property
    def dim(self) -> int:
        return self.horizontal.size + 1

    @property
    def coords(self) -> np.ndarray:
        """Full half-space coordinate vector (horizontal..., height)."""
        return np.append(self.horizontal, self.height)

    @classmethod
    def origin(cls, d: int) -> "Point":
        return cls(np.zeros(d - 1), 1.0)

    @classmethod
    def from_coords(cls, c) -> "Point":
        c = np.asarray(c, dtype=float)
        return cls(c[:-1], c[-1])

    def close_to(self, other: "Point", tol: float = GEOM_TOL) -> bool:
        return (
            self.dim == other.dim
            and abs(self.height - other.height) <= tol
            and float(np.max(np.abs(self.horizontal - other.horizontal), initial=0.0)) <= tol
        )

    def __repr__(self):
        return f"Point({self.horizontal.tolist()}, h={self.height:.6g})"


def origin(d: int) -> Point:
    return Point.origin(d)


# ---------------------------------------------------------------------------
# chart between half-space and hyperboloid coordinates


def lift(coords: np.ndarray) -> np.ndarray:
    """Half-space coordinates (..., d) to hyperboloid coordinates (..., d+1)."""
    coords = np.asarray(coords, dtype=float)
    u = coords[..., :-1]
    t = coords[..., -1]
    s = np.sum(u * u, axis=-1)
    out = np.empty(coords.shape[:-1] + (coords.shape[-1] + 1,))
    out[..., 0] = (s + t * t + 1.0) / (2.0 * t)
    out[..., 1:-1] = u / t[..., None]
    out[..., -1] = (s + t * t - 1.0) / (2.0 * t)
    return out


def unlift(X: np.ndarray) -> np.ndarray:
    """Hyperboloid coordinates (..., d+1) back to half-space (..., d)."""
    X = np.asarray(X, dtype=float)
    w = X[..., 0] - X[..., -1]
    out = np.empty(X.shape[:-1] + (X.shape[-1] - 1,))
    out[..., :-1] = X[..., 1:-1] / w[..., None]
    out[..., -1] = 1.0 / w
    return out


def minkowski_metric(n: int) -> np.ndarray:
    eta = np.eye(n)
    eta[0, 0] = -1.0
    return eta


def _mink_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


# ---------------------------------------------------------------------------
# distances


def hyperbolic_distance(a, b) -> float:
    """Hyperbolic distance between two half-space points.

    Uses the closed form arcosh(1 + |a - b|^2 / (2 h_a h_b)) where |.| is
    the full Euclidean norm and h the heights.
    """
    ca = a.coords if isinstance(a, Point) else np.asarray(a, dtype=float)
    cb = b.coords if isinstance(b, Point) else np.asarray(b, dtype=float)
    diff = ca - cb
    arg = 1.0 + float(diff @ diff) / (2.0 * ca[-1] * cb[-1])
    return math.acosh(max(arg, 1.0))


def hyperbolic_distance_many(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Vectorized distance between rows of coordinate arrays A and B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    diff = A - B
    arg = 1.0 + np.sum(diff * diff, axis=-1) / (2.0 * A[..., -1] * B[..., -1])
    return np.arccosh(np.maximum(arg, 1.0))


def proj_distance(a, b) -> float:
    """Sup-norm distance between the horizontal projections of two points.

    A pseudometric: it vanishes on vertically aligned pairs.
    """
    ua = a.horizontal if isinstance(a, Point) else np.asarray(a, dtype=float)[:-1]
    ub = b.horizontal if isinstance(b, Point) else np.asarray(b, dtype=float)[:-1]
    if ua.size != ub.size:
        raise ValueError("dimension mismatch")
    if ua.size == 0:
        return 0.0
    return float(np.max(np.abs(ua - ub)))


def proj_distance_many(U: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Sup-norm distances from rows of a horizontal array U to a center c."""
    U = np.asarray(U, dtype=float)
    c = np.asarray(c, dtype=float)
    if U.shape[-1] == 0:
        return np.zeros(U.shape[:-1])
    return np.max(np.abs(U - c), axis=-1)


# ---------------------------------------------------------------------------
# isometries


def _lorentz_drift(M: np.ndarray) -> float:
    n = M.shape[0]
    eta = minkowski_metric(n)
    return float(np.max(np.abs(M.T @ eta @ M - eta)))


def _lorentz_renormalize(M: np.ndarray) -> np.ndarray:
    """Gram-Schmidt the columns of M with respect to the Minkowski form."""
    n = M.shape[0]
    cols = [M[:, j].copy() for j in range(n)]
    c0 = cols[0]
    norm0 = math.sqrt(max(-_mink_dot(c0, c0), 1e-300))
    c0 = c0 / norm0
    if c0[0] < 0:
        c0 = -c0
    out = [c0]
    for j in range(1, n):
        v = cols[j] + _mink_dot(cols[j], c0) * c0
        for k in range(1, j):
            v = v - _mink_dot(v, out[k]) * out[k]
        v = v / math.sqrt(max(_mink_dot(v, v), 1e-300))
        out.append(v)
    return np.column_stack(out)


@dataclass(frozen=True, eq=False)
class Isometry:
    """A hyperbolic isometry stored as a Lorentz matrix.

    The matrix acts on hyperboloid coordinates; ``apply`` accepts and
    returns half-space data.  Matrices drifting off the Lorentz group by
    more than ``MINK_DRIFT_TOL`` are re-orthonormalized on construction.
    """

    matrix: np.ndarray
    tag: str = ""

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 3:
            raise ValueError("isometry matrix must be square, size d+1 >= 3")
        if M[0, 0] <= 0:
            raise ValueError("matrix must preserve the upper hyperboloid sheet")
        if _lorentz_drift(M) > MINK_DRIFT_TOL:
            M = _lorentz_renormalize(M)
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, d: int) -> "Isometry":
        return cls(np.eye(d + 1), tag="id")

    @classmethod
    def scaling(cls, k: float, d: int) -> "Isometry":
        """The map (u, t) -> (k u, k t); a boost of rapidity log k."""
        if not k > 0:
            raise ValueError("scaling factor must be positive")
        c = 0.5 * (k + 1.0 / k)
        s = 0.5 * (k - 1.0 / k)
        M = np.eye(d + 1)
        M[0, 0] = M[d, d] = c
        M[0, d] = M[d, 0] = s
        return cls(M, tag=f"scale({k:g})")

    @classmethod
    def translation(cls, x) -> "Isometry":
        """The map (u, t) -> (u + x, t) for a horizontal vector x."""
        x = _as_horizontal(x)
        d = x.size + 1
        n2 = 0.5 * float(x @ x)
        M = np.eye(d + 1)
        M[0, 0] = 1.0 + n2
        M[0, 1:d] = x
        M[0, d] = -n2
        M[1:d, 0] = x
        M[1:d, d] = -x
        M[d, 0] = n2
        M[d, 1:d] = x
        M[d, d] = 1.0 - n2
        return cls(M, tag="translate")

    @classmethod
    def rotation_about_origin(cls, R) -> "Isometry":
        """The isometry fixing the origin with chart derivative R in O(d)."""
        R = np.asarray(R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("R must be a square matrix")
        d = R.shape[0]
        if np.max(np.abs(R.T @ R - np.eye(d))) > ORTHO_TOL:
            raise ValueError("R must be orthogonal")
        M = np.eye(d + 1)
        M[1:, 1:] = R
        return cls(M, tag="rotation")

    @classmethod
    def scale_translate(cls, k: float, x) -> "Isometry":
        """The map (u, t) -> (k u + x, k t)."""
        x = _as_horizontal(x)
        d = x.size + 1
        M = cls.translation(x).matrix @ cls.scaling(k, d).matrix
        return cls(M, tag=f"scale_translate({k:g})")

    @classmethod
    def position(cls, h: float, R) -> "Isometry":
        """The unique isometry sending the origin to height h with twist R.

        Maps the origin to (0, ..., 0, h) and has chart derivative h R
        there, for h in (0, 1] and orthogonal R.
        """
        if not (0.0 < h <= 1.0):
            raise ValueError("height parameter must lie in (0, 1]")
        rot = cls.rotation_about_origin(R)
        d = rot.dim
        M = cls.scaling(h, d).matrix @ rot.matrix
        return cls(M, tag=f"position(h={h:g})")

    # -- group operations --------------------------------------------------

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other, i.e. (self . other)(x) = self(other(x))."""
        return Isometry(self.matrix @ other.matrix, tag=f"{self.tag}*{other.tag}")

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)

    def inverse(self) -> "Isometry":
        eta = minkowski_metric(self.matrix.shape[0])
        return Isometry(eta @ self.matrix.T @ eta, tag=f"inv({self.tag})")

    # -- action ------------------------------------------------------------

    def apply_coords(self, coords: np.ndarray) -> np.ndarray:
        """Apply to an (..., d) array of half-space coordinates."""
        X = lift(coords)
        Y = X @ self.matrix.T
        return unlift(Y)

    def apply(self, p: Point) -> Point:
        return Point.from_coords(self.apply_coords(p.coords))

    def jacobian_at(self, p: Point, step: float = 1e-7) -> np.ndarray:
        """Central finite-difference chart Jacobian at p (d x d)."""
        d = self.dim
        J = np.empty((d, d))
        base = p.coords
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            J[:, i] = (self.apply_coords(base + e) - self.apply_coords(base - e)) / (2 * step)
        return J

    def drift(self) -> float:
        return _lorentz_drift(self.matrix)

    def __repr__(self):
        return f"Isometry(d={self.dim}, tag={self.tag!r})"


def position_isometry(h: float, R) -> Isometry:
    """Convenience wrapper for Isometry.position."""
    return Isometry.position(h, R)


def reflection_through(point_coords: np.ndarray) -> Isometry:
    """Point reflection (rotation by pi in the plane case) about a point."""
    m = lift(np.asarray(point_coords, dtype=float))
    n = m.size
    eta = minkowski_metric(n)
    M = -(np.eye(n) + 2.0 * np.outer(m, eta @ m))
    return Isometry(M, tag="point_reflection")


# ---------------------------------------------------------------------------
# slabs and boxes


@dataclass(frozen=True)
class Slab:
    """The region of height at most h, optionally cut below at delta.

    ``Slab(h)`` is the open-bottom slab of heights (0, h]; ``Slab(h, delta)``
    restricts to heights [delta, h].
    """

    h: float = 1.0
    delta: float | None = None

    def __post_init__(self):
        if not (0.0 < self.h <= 1.0):
            raise ValueError("slab height must lie in (0, 1]")
        if self.delta is not None and not (0.0 < self.delta < self.h):
            raise ValueError("lower cut must lie in (0, h)")

    @property
    def lo(self) -> float:
        return 0.0 if self.delta is None else self.delta

    def contains_height(self, t: float) -> bool:
        return self.lo <= t <= self.h if self.delta is not None else 0.0 < t <= self.h


@dataclass(frozen=True, eq=False)
class Box:
    """Sup-norm cylinder of horizontal radius r about a center point.

    Contains the points whose horizontal projection differs from the
    center's by at most r in sup norm; an optional height cap h restricts
    to the slab of that height.
    """

    center: Point
    r: float
    h: float | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("box radius must be positive")
        if self.h is not None and not self.h > 0:
            raise ValueError("box height cap must be positive")


def in_box(p: Point, box: Box) -> bool:
    if proj_distance(p, box.center) > box.r:
        return False
    if box.h is not None and p.height > box.h:
        return False
    return True


def on_sphere(p: Point, box: Box, tol: float = GEOM_TOL) -> bool:
    """Whether p lies on the lateral boundary cylinder of the box."""
    if box.h is not None and p.height > box.h + tol:
        return False
    return abs(proj_distance(p, box.center) - box.r) <= tol


# ---------------------------------------------------------------------------
# geodesic segments: height ranges, clipping, distances

# A geodesic between half-space points is either a vertical ray segment or
# an arc of a semicircle orthogonal to the boundary plane.  The horizontal
# projection of either kind is traversed monotonically, so it is exactly
# the Euclidean segment between the endpoint projections.

_VERT_TOL = 1e-12


def _arc_params(a: np.ndarray, b: np.ndarray):
    """Circle parameters for the geodesic through half-space points a, b.

    Returns (foot, w, m, rho, th_a, th_b) where points are
    foot + (m + rho cos th) w horizontally at height rho sin th, or None
    for a vertical segment.
    """
    ua, ta = a[:-1], a[-1]
    ub, tb = b[:-1], b[-1]
    chord = ub - ua
    s = float(np.linalg.norm(chord))
    if s <= _VERT_TOL * max(ta, tb, 1.0):
        return None
    w = chord / s
    m = (s * s + tb * tb - ta * ta) / (2.0 * s)
    rho = math.hypot(m, ta)
    th_a = math.atan2(ta, -m)
    th_b = math.atan2(tb, s - m)
    return ua, w, m, rho, th_a, th_b


def segment_height_range(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Min and max height attained along the geodesic segment [a, b]."""
    pa = _arc_params(a, b)
    ta, tb = a[-1], b[-1]
    lo, hi = min(ta, tb), max(ta, tb)
    if pa is None:
        return lo, hi
    _, _, m, rho, th_a, th_b = pa
    t0, t1 = min(th_a, th_b), max(th_a, th_b)
    if t0 <= 0.5 * math.pi <= t1:
        hi = rho
    return lo, hi


def clip_geodesic(a: np.ndarray, b: np.ndarray, lo: float, hi: float):
    """Portions of the geodesic segment [a, b] at heights in [lo, hi].

    Returns a list of (p, q) coordinate pairs, at most two of them.  Cut
    endpoints are placed at exactly the cut height.  Degenerate pieces are
    dropped.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ta, tb = a[-1], b[-1]
    pa = _arc_params(a, b)

    if pa is None:
        low, high = (a, b) if ta <= tb else (b, a)
        c0, c1 = max(low[-1], lo), min(high[-1], hi)
        if c1 - c0 <= _VERT_TOL:
            return []
        # keep uncut endpoints bit-identical so callers can recognize them
        p = low if c0 == low[-1] else np.append(low[:-1], c0)
        q = high if c1 == high[-1] else np.append(high[:-1], c1)
        return [(p, q)]

    foot, w, m, rho, th_a, th_b = pa

    def point_at_height(t: float, theta: float) -> np.ndarray:
        # exact horizontal offset for the requested height; the offset from
        # the circle center is +/- rho cos(theta), positive before the apex
        root = math.sqrt(max(rho * rho - t * t, 0.0))
        x = m + root if theta < 0.5 * math.pi else m - root
        return np.append(foot + x * w, t)

    # Work on the angle interval; height = rho sin(theta), unimodal on (0, pi).
    th0, th1 = min(th_a, th_b), max(th_a, th_b)

    # Feasible theta set for height >= lo.
    if lo > rho:
        return []
    if lo <= 0.0:
        lo_int = (0.0, math.pi)
    else:
        al = math.asin(min(lo / rho, 1.0))
        lo_int = (al, math.pi - al)

    # Feasible theta set for height <= hi: complement of the apex window.
    if hi >= rho:
        hi_ints = [(0.0, math.pi)]
    else:
        ah = math.asin(min(hi / rho, 1.0))
        hi_ints = [(0.0, ah), (math.pi - ah, math.pi)]

    pieces = []
    for h0, h1 in hi_ints:
        q0 = max(th0, lo_int[0], h0)
        q1 = min(th1, lo_int[1], h1)
        if q1 - q0 <= 1e-13:
            continue
        # endpoints of the theta subinterval -> coordinates
        ends = []
        for q in (q0, q1):
            if abs(q - th0) <= 1e-13:
                ends.append(a if th_a <= th_b else b)
            elif abs(q - th1) <= 1e-13:
                ends.append(b if th_a <= th_b else a)
            else:
                t_cut = rho * math.sin(q)
                # snap to the exact cut height
                t_exact = hi if abs(t_cut - hi) < abs(t_cut - lo) else lo
                ends.append(point_at_height(t_exact, q))
        pieces.append((np.array(ends[0], dtype=float), np.array(ends[1], dtype=float)))
    return pieces


def segment_proj_min(u0: np.ndarray, u1: np.ndarray, c: np.ndarray) -> float:
    """Min over the segment [u0, u1] of the sup-norm distance to c.

    Exact: the objective is piecewise linear and convex in the segment
    parameter, so the minimum is attained at a breakpoint.
    """
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))
    u1 = np.atleast_1d(np.asarray(u1, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if u0.size == 0:
        return 0.0
    f0 = u0 - c
    df = u1 - u0

    candidates = [0.0, 1.0]
    for i in range(u0.size):
        if df[i] != 0.0:
            candidates.append(-f0[i] / df[i])
        for j in range(i + 1, u0.size):
            for sgn in (1.0, -1.0):
                den = df[i] - sgn * df[j]
                if den != 0.0:
                    candidates.append((sgn * f0[j] - f0[i]) / den)
    best = math.inf
    for s in candidates:
        if 0.0 <= s <= 1.0:
            val = float(np.max(np.abs(f0 + s * df)))
            best = min(best, val)
    return best


def segment_min_euclid_dist(a: np.ndarray, b: np.ndarray, q: np.ndarray) -> float:
    """Min Euclidean distance from the geodesic segment [a, b] to point q.

    q is a full half-space coordinate vector (typically a boundary point
    with height 0).  Closed form: along an arc the squared distance is
    A + B cos(theta) + C sin(theta).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    pa = _arc_params(a, b)
    if pa is None:
        # vertical segment: quadratic in the height
        u = a[:-1]
        horiz2 = float(np.sum((u - q[:-1]) ** 2))
        t0, t1 = min(a[-1], b[-1]), max(a[-1], b[-1])
        t = min(max(q[-1], t0), t1)
        return math.sqrt(horiz2 + (t - q[-1]) ** 2)

    foot, w, m, rho, th_a, th_b = pa
    center = np.append(foot + m * w, 0.0)
    diff = center - q
    W1 = np.append(w, 0.0)
    W2 = np.zeros(q.size)
    W2[-1] = 1.0
    A = float(diff @ diff) + rho * rho
    B = 2.0 * rho * float(W1 @ diff)
    C = 2.0 * rho * float(W2 @ diff)

    th0, th1 = min(th_a, th_b), max(th_a, th_b)
    cands = [th0, th1]
    th_star = math.atan2(-C, -B)
    for t in (th_star, th_star + 2 * math.pi, th_star - 2 * math.pi):
        if th0 < t < th1:
            cands.append(t)
    best = math.inf
    for t in cands:
        val = A + B * math.cos(t) + C * math.sin(t)
        best = min(best, max(val, 0.0))
    return math.sqrt(best)
