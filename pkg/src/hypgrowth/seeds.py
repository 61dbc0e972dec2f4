"""Deterministic counter-based randomness.

Every random quantity in the package is a pure function of a master seed
and a counter (edge index, trial index, cell index, ...), so results are
independent of evaluation order and of any worker-pool size, and coupled
samples at different parameters share the same underlying uniforms.

The mixer is the splitmix64 finalizer, applied twice with decorrelating
constants; it passes standard avalanche tests and is cheap to vectorize.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD6E8FEB86659FD93)
_STREAM2 = np.uint64(0xA24BAED4963EE407)

_U64_INV = 1.0 / 2.0 ** 64


def _mix64(z: np.ndarray) -> np.ndarray:
    # modular 64-bit arithmetic; silence numpy's wraparound warnings
    with np.errstate(over="ignore"):
        z = (z + _GOLDEN) & _MASK
        z = (z ^ (z >> np.uint64(30))) * _MIX1 & _MASK
        z = (z ^ (z >> np.uint64(27))) * _MIX2 & _MASK
        return z ^ (z >> np.uint64(31))


def mix64(value: int) -> int:
    """Scalar splitmix64 finalizer."""
    return int(_mix64(np.uint64(value & 0xFFFFFFFFFFFFFFFF)))


def derive_seed(master: int, *parts) -> int:
    """Fold task labels and indices into a child seed.

    Accepts ints and strings; strings are hashed with FNV-1a so the
    derivation is stable across interpreter runs.
    """
    state = np.uint64(master & 0xFFFFFFFFFFFFFFFF)
    for part in parts:
        if isinstance(part, str):
            h = 0xCBF29CE484222325
            for byte in part.encode("utf8"):
                h = ((h ^ byte) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
            token = np.uint64(h)
        else:
            token = np.uint64(int(part) & 0xFFFFFFFFFFFFFFFF)
        with np.errstate(over="ignore"):
            state = _mix64(state ^ (_mix64(token) * _STREAM & _MASK))
    return int(state)


def edge_uniforms(seed: int, ids) -> np.ndarray:
    """Uniforms in [0, 1) indexed by edge (or any counter) ids.

    ``edge_uniforms(seed, ids)[i]`` depends only on (seed, ids[i]); slices
    and permutations of the id set therefore agree entry-wise, which is
    what makes lazy cluster exploration and monotone coupling exact.
    """
    if np.isscalar(ids):
        ids = np.arange(int(ids), dtype=np.uint64)
    else:
        ids = np.asarray(ids, dtype=np.uint64)
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        h = _mix64(_mix64(ids) ^ (_mix64(s) * _STREAM & _MASK))
    return h.astype(np.float64) * _U64_INV


def edge_uniform(seed: int, edge_id: int) -> float:
    """Scalar variant of edge_uniforms."""
    return float(edge_uniforms(seed, np.array([edge_id], dtype=np.uint64))[0])


def uniforms_matrix(seeds, ids) -> np.ndarray:
    """Uniforms for every (seed, id) pair, shape (len(seeds), len(ids)).

    Row k equals edge_uniforms(seeds[k], ids) exactly; batch estimators and
    the lazy single-trial path therefore see identical configurations.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        row_key = (_mix64(seeds) * _STREAM & _MASK)[:, None]
        h = _mix64(_mix64(ids)[None, :] ^ row_key)
    return h.astype(np.float64) * _U64_INV


def seed_stream(seed: int, ids) -> np.ndarray:
    """Child seeds for indexed trials, as a uint64 array.

    A distinct stream constant keeps trial seeds uncorrelated with the
    edge-uniform stream even when the same integer indices appear in both.
    """
    if np.isscalar(ids):
        ids = np.arange(int(ids), dtype=np.uint64)
    else:
        ids = np.asarray(ids, dtype=np.uint64)
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        return _mix64(_mix64(ids) ^ (_mix64(s) * _STREAM2 & _MASK))
