"""Counter-derived xoshiro256++ streams.

Each (master_seed, stream_index) pair maps to an independent generator
state via a splitmix64 expansion, so realization ``i`` is reproducible no
matter in which order realizations execute.  The step function is written
against plain uint64 numpy scalars and is jitted when numba is available;
the same source runs interpreted otherwise (callers then silence numpy's
overflow warnings, wraparound being the generator's working mode).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit as _njit

    def _jit(f):
        return _njit(cache=True)(f)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def _jit(f):
        return f

    HAVE_NUMBA = False

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_S11 = _U64(11)
_S17 = _U64(17)
_S23 = _U64(23)
_S41 = _U64(41)
_S45 = _U64(45)
_S19 = _U64(19)


def seed_state(master_seed: int, stream_index: int) -> np.ndarray:
    """Expand (master_seed, stream_index) into a 4-word xoshiro256++ state."""
    with np.errstate(over="ignore"):
        s = _U64(master_seed & 0xFFFFFFFFFFFFFFFF)
        s = s ^ (_U64((stream_index + 1) & 0xFFFFFFFFFFFFFFFF) * _GOLDEN)
        state = np.empty(4, dtype=np.uint64)
        for k in range(4):
            s = s + _GOLDEN
            z = s
            z = (z ^ (z >> _U64(30))) * _MIX1
            z = (z ^ (z >> _U64(27))) * _MIX2
            z = z ^ (z >> _U64(31))
            state[k] = z
        if not state.any():  # the single forbidden all-zero state
            state[0] = _GOLDEN
    return state


@_jit
def next_u64(state):
    """Advance a xoshiro256++ state array in place; return the next word."""
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    tmp = s0 + s3
    result = ((tmp << _S23) | (tmp >> _S41)) + s0
    t = s1 << _S17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = (s3 << _S45) | (s3 >> _S19)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@_jit
def next_uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(state) >> _S11) * _INV53


class RngStream:
    """Convenience wrapper holding one stream's state."""

    __slots__ = ("state",)

    def __init__(self, master_seed: int, stream_index: int = 0):
        self.state = seed_state(master_seed, stream_index)

    def uniform(self) -> float:
        with np.errstate(over="ignore"):
            return float(next_uniform(self.state))

    def uniforms(self, n: int) -> np.ndarray:
        out = np.empty(n)
        with np.errstate(over="ignore"):
            for i in range(n):
                out[i] = next_uniform(self.state)
        return out
