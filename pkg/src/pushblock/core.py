"""Shared domain types: model parameters, seeds, height profiles, noise streams.

All randomness in the package flows through :class:`Seed`, which wraps numpy's
``SeedSequence``/``PCG64``.  The generator algorithm is pinned (PCG64, numpy's
default bit generator) so that a fixed ``(params, seed)`` pair reproduces the
same streams bit-for-bit on every platform.
"""
from __future__ import annotations

import json
import struct
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# Variates are materialized in blocks so bulk consumers pay one numpy call
# per block instead of one per draw.
_VARIATE_BLOCK = 64

# Tags separating the derived sub-streams of one Seed.  Changing these breaks
# reproducibility of archived runs.
_TAG_NUCLEATION = 1
_TAG_VARIATE = 2
_TAG_KEYED_VARIATE = 3
_TAG_RING = 4


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the growth model and its finite-window approximation.

    ``v`` is the up-jump rate (down-jumps run at rate ``1/v``), ``n`` sets the
    number of time steps (``2n`` by default) and the staircase size, ``L`` is
    the spatial half-window for nucleations.
    """

    v: float
    n: int
    L: float
    steps: int | None = None

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"v must be positive, got {self.v}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.steps is None:
            object.__setattr__(self, "steps", 2 * self.n)
        if not (isinstance(self.steps, int) and self.steps >= 0):
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps}")

    def as_dict(self) -> dict:
        return {"v": self.v, "n": self.n, "L": self.L, "steps": self.steps}


@dataclass(frozen=True)
class Seed:
    """64-bit seed plus a stream id for deriving independent replica streams."""

    value: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.value < 2**64):
            raise ValueError("seed value must fit in 64 bits")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")

    def with_stream(self, stream_id: int) -> "Seed":
        return Seed(self.value, stream_id)

    def sequence(self, *key: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.value, spawn_key=(self.stream_id, *key))

    def generator(self, *key: int) -> np.random.Generator:
        """PCG64 generator for the sub-stream addressed by ``key``."""
        return np.random.Generator(np.random.PCG64(self.sequence(*key)))

    def as_dict(self) -> dict:
        return {"value": self.value, "stream_id": self.stream_id}


def _check_strictly_increasing(xs: Sequence[float], label: str) -> None:
    for a, b in zip(xs, xs[1:]):
        if not a < b:
            raise ValueError(f"{label} must be strictly increasing, got {a} !< {b}")


@dataclass(frozen=True)
class HeightProfile:
    """Compactly supported integer step function, encoded by its jump points.

    ``inc`` lists the points of increase and ``dec`` the points of decrease.
    The evaluation rule h(x) = #{inc <= x} - #{dec < x} makes the profile
    upper semi-continuous: an increase point already carries the higher value
    and a decrease point still carries it.
    """

    inc: tuple[float, ...]
    dec: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "inc", tuple(float(x) for x in self.inc))
        object.__setattr__(self, "dec", tuple(float(x) for x in self.dec))
        if len(self.inc) != len(self.dec):
            raise ValueError("inc and dec must have equal lengths")
        _check_strictly_increasing(self.inc, "inc")
        _check_strictly_increasing(self.dec, "dec")
        for y, z in zip(self.inc, self.dec):
            if not y < z:
                raise ValueError(f"ballot property violated: increase {y} !< decrease {z}")

    def height_at(self, x: float) -> int:
        return bisect_right(self.inc, x) - bisect_left(self.dec, x)

    @property
    def is_empty(self) -> bool:
        return not self.inc

    def reflect(self) -> "HeightProfile":
        """Space reflection x -> -x; increase and decrease points swap roles."""
        return HeightProfile(
            inc=tuple(-z for z in reversed(self.dec)),
            dec=tuple(-y for y in reversed(self.inc)),
        )

    def support_bounds(self) -> tuple[float, float]:
        if self.is_empty:
            return (0.0, 0.0)
        return (self.inc[0], self.dec[-1])

    def max_height(self) -> int:
        h = 0
        best = 0
        events = sorted([(y, 1) for y in self.inc] + [(z, -1) for z in self.dec])
        for _, step in events:
            h += step
            best = max(best, h)
        return best


EMPTY_PROFILE = HeightProfile(inc=(), dec=())


def height_at(profile: HeightProfile, x: float) -> int:
    """Evaluate a profile at x under the upper semi-continuous convention."""
    return profile.height_at(x)


def dominates(upper: HeightProfile, lower: HeightProfile) -> bool:
    """True if upper(x) >= lower(x) for every x (checked at all jump points)."""
    breakpoints = set(upper.inc) | set(upper.dec) | set(lower.inc) | set(lower.dec)
    for x in breakpoints:
        if upper.height_at(x) < lower.height_at(x):
            return False
        # Just right of a decrease point the value drops; probe there too.
        if upper.height_at(np.nextafter(x, np.inf)) < lower.height_at(np.nextafter(x, np.inf)):
            return False
    return True


# A per-step variate drawer: takes the position at which the down-clock is
# created and returns the exponential variate for that clock.  Indexed
# streams ignore the position; keyed streams hash it.
VariateDrawer = Callable[[float], float]


class NoiseStream:
    """Per-step nucleation lists plus an indexed supply of exponential variates.

    Nucleations for step t form a Poisson process of rate v on [-L, L];
    variates are Exp(rate 1/v), i.e. mean v, consumed sequentially in the
    particle-update order (left-to-right on odd steps, right-to-left on even
    ones after reflection).  Everything is a pure function of (params, seed):
    regenerating with the same pair gives identical streams.
    """

    def __init__(self, params: ModelParams, seed: Seed,
                 nucleations: Sequence[Sequence[float]] | None = None):
        self.params = params
        self.seed = seed
        if nucleations is None:
            nucs = []
            for t in range(1, params.steps + 1):
                rng = seed.generator(_TAG_NUCLEATION, t)
                count = int(rng.poisson(2.0 * params.v * params.L))
                pos = np.sort(rng.uniform(-params.L, params.L, size=count))
                nucs.append(tuple(float(x) for x in pos))
            self.nucleations = tuple(nucs)
        else:
            if len(nucleations) != params.steps:
                raise ValueError("need one nucleation list per step")
            clean = []
            for xs in nucleations:
                xs = tuple(sorted(float(x) for x in xs))
                for x in xs:
                    if not (-params.L <= x <= params.L):
                        raise ValueError(f"nucleation {x} outside [-L, L]")
                clean.append(xs)
            self.nucleations = tuple(clean)
        self._variates: list[list[float]] = [[] for _ in range(params.steps)]
        self.consumed: list[int] = [0] * params.steps

    def variate(self, t: int, j: int) -> float:
        """j-th (0-based) variate of step t; the supply extends lazily."""
        store = self._variates[t - 1]
        while j >= len(store):
            rng = self.seed.generator(_TAG_VARIATE, t, len(store) // _VARIATE_BLOCK)
            store.extend(float(x) for x in
                         rng.exponential(scale=self.params.v, size=_VARIATE_BLOCK))
        return store[j]

    def drawer(self, t: int) -> VariateDrawer:
        """Sequential drawer for step t, tracking the consumption high-water mark."""
        def draw(_nominal_position: float) -> float:
            j = self.consumed[t - 1]
            z = self.variate(t, j)
            self.consumed[t - 1] = j + 1
            return z

        return draw

    def to_json(self) -> str:
        records = []
        for t in range(1, self.params.steps + 1):
            records.append({
                "step": t,
                "nucleations": list(self.nucleations[t - 1]),
                "variates_consumed": [self._variates[t - 1][j]
                                      for j in range(self.consumed[t - 1])],
            })
        return json.dumps({"schema": "pushblock.noise.v1",
                           "params": self.params.as_dict(),
                           "seed": self.seed.as_dict(),
                           "steps": records}, indent=None)


def make_noise(params: ModelParams, seed: Seed,
               nucleations: Sequence[Sequence[float]] | None = None) -> NoiseStream:
    """Build the deterministic noise stream for (params, seed).

    Passing explicit ``nucleations`` (e.g. a discretized continuum point set)
    keeps the variate streams seed-derived but replaces the Poisson lists.
    """
    return NoiseStream(params, seed, nucleations)


def _float_key(x: float) -> tuple[int, int]:
    bits = struct.unpack("<Q", struct.pack("<d", float(x)))[0]
    return (bits & 0xFFFFFFFF, bits >> 32)


class NestedNoise:
    """Noise whose window can be doubled without disturbing existing points.

    Nucleations come from independent rings [-2^k L0, -2^{k-1} L0) u
    (2^{k-1} L0, 2^k L0]; enlarging the window only adds the next ring.
    Down-clock variates are keyed by (step, creation position) instead of a
    sequential index, so inserting far-away points does not shift the variates
    of unaffected clocks.  Used by the window-stabilization diagnostic; the
    law of the dynamics is the same as under :class:`NoiseStream`.
    """

    def __init__(self, params: ModelParams, seed: Seed):
        self.params = params
        self.seed = seed
        self._ring_cache: dict[int, tuple[tuple[float, ...], ...]] = {}

    def _ring(self, k: int) -> tuple[tuple[float, ...], ...]:
        """Nucleations of ring k (k=0 is the base window), one tuple per step."""
        if k in self._ring_cache:
            return self._ring_cache[k]
        L0 = self.params.L
        if k == 0:
            lo, hi = 0.0, L0
        else:
            lo, hi = 2 ** (k - 1) * L0, 2**k * L0
        length = 2.0 * (hi - lo)
        per_step = []
        for t in range(1, self.params.steps + 1):
            rng = self.seed.generator(_TAG_RING, k, t)
            count = int(rng.poisson(self.params.v * length))
            u = rng.uniform(0.0, length, size=count)
            if k == 0:
                pos = u - L0  # base window is the full interval [-L0, L0]
            else:
                # Map [0, length) onto the two-sided ring.
                pos = np.where(u < hi - lo, lo + u, -(lo + (u - (hi - lo))))
            per_step.append(tuple(sorted(float(x) for x in pos)))
        out = tuple(per_step)
        self._ring_cache[k] = out
        return out

    def level(self, k: int) -> "NestedNoiseView":
        """View with window [-2^k L, 2^k L]: rings 0..k merged."""
        merged = []
        for t in range(self.params.steps):
            xs: list[float] = []
            for r in range(k + 1):
                xs.extend(self._ring(r)[t])
            merged.append(tuple(sorted(xs)))
        return NestedNoiseView(self, tuple(merged))


class NestedNoiseView:
    """One window level of a NestedNoise; provides the engine interface."""

    def __init__(self, parent: NestedNoise, nucleations: tuple[tuple[float, ...], ...]):
        self._parent = parent
        self.nucleations = nucleations

    def drawer(self, t: int) -> VariateDrawer:
        seed = self._parent.seed
        v = self._parent.params.v

        def draw(nominal_position: float) -> float:
            lo, hi = _float_key(nominal_position)
            rng = seed.generator(_TAG_KEYED_VARIATE, t, lo, hi)
            return float(rng.exponential(scale=v))

        return draw


def staircase_cells(n: int) -> list[tuple[int, int]]:
    """Cells (i, j) with i, j >= 1 and i + j <= 2n + 1, row-major order."""
    return [(i, j) for i in range(1, 2 * n + 1) for j in range(1, 2 * n + 2 - i)]


def diagonal_cells(n: int) -> list[tuple[int, int]]:
    """The staircase diagonal read from the anti-diagonal toward the corner.

    Order: (n+1, n), (n, n), (n, n-1), (n-1, n-1), ..., (1, 1); the k-th entry
    carries the height h_k(.) when the array is read as a growth trajectory.
    """
    cells = [(n + 1, n)]
    for m in range(n, 0, -1):
        cells.append((m, m))
        if m - 1 >= 1:
            cells.append((m, m - 1))
    return cells
