"""Two-species particle system: paired increase/decrease points with
nucleation, sequential pushed jumps, and first-obstacle annihilation.

On odd steps the decrease particles sweep right one at a time; each consumes
one exponential variate, starts from the maximum of its own position and the
previous particle's finishing position (pushing), and annihilates with the
first increase particle strictly to the right of its starting point whenever
the jump would reach it.  Freshly nucleated decrease particles take part in
the sweep immediately; the matching increase particles are inserted only
after the sweep completes.  Even steps are the exact mirror image (increase
particles sweep left), implemented by reflecting space.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from .core import (EMPTY_PROFILE, HeightProfile, ModelParams, NoiseStream,
                   Seed, VariateDrawer, make_noise)
from .growth import GrowthTrajectory


def _check_sorted(xs: Sequence[float], label: str) -> None:
    for a, b in zip(xs, xs[1:]):
        if not a < b:
            raise ValueError(f"{label} must be strictly increasing")


@dataclass(frozen=True)
class ParticleConfig:
    """Ordered positions of increase particles y and decrease particles z.

    Construction enforces sortedness and equal counts; the ballot property
    (y[j] < z[j] for all j) is an invariant of configurations reached by the
    dynamics and is asserted by the simulator, not by the constructor, so the
    jump mechanics can also be exercised on free-standing inputs.
    """

    y: tuple[float, ...]
    z: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(x) for x in self.y))
        object.__setattr__(self, "z", tuple(float(x) for x in self.z))
        if len(self.y) != len(self.z):
            raise ValueError("y and z must have equal lengths")
        _check_sorted(self.y, "y")
        _check_sorted(self.z, "z")

    @property
    def satisfies_ballot(self) -> bool:
        return all(a < b for a, b in zip(self.y, self.z))


EMPTY_CONFIG = ParticleConfig(y=(), z=())


@dataclass
class SweepResult:
    static: list[tuple[float, int]]
    moving: list[tuple[float, int]]
    annihilations: list[tuple[int, int, float]]  # (static id, moving id, position)


def _list_drawer(variates: Sequence[float]) -> VariateDrawer:
    it = iter(variates)

    def draw(_nominal: float) -> float:
        try:
            return float(next(it))
        except StopIteration:
            raise ValueError("variate supply exhausted") from None

    return draw


def _sweep_right(static: Sequence[tuple[float, int]],
                 moving: Sequence[tuple[float, int]],
                 nuc_static: Sequence[tuple[float, int]],
                 nuc_moving: Sequence[tuple[float, int]],
                 draw: VariateDrawer) -> SweepResult:
    """One rightward sweep of the moving species against the static one.

    ``static``/``moving`` are sorted (position, id) lists.  Nucleated movers
    join the queue at their positions, ordered after any existing particle at
    the same position; nucleated statics are merged in after the sweep,
    ordered before an equal-position survivor.
    """
    # Queue of movers in position order; tie flag 0 = pre-existing, 1 = nucleated.
    queue = sorted([(p, 0, pid) for p, pid in moving]
                   + [(p, 1, pid) for p, pid in nuc_moving])
    obstacles = [p for p, _ in static]
    obstacle_ids = [pid for _, pid in static]

    out_moving: list[tuple[float, int]] = []
    annihilations: list[tuple[int, int, float]] = []
    prev_finish = float("-inf")

    for nominal, _, pid in queue:
        start = nominal if nominal > prev_finish else prev_finish
        target = start + draw(nominal)
        k = bisect_right(obstacles, nominal)  # first obstacle strictly right
        if k < len(obstacles) and target >= obstacles[k]:
            hit = obstacles.pop(k)
            hit_id = obstacle_ids.pop(k)
            annihilations.append((hit_id, pid, hit))
            prev_finish = hit
        else:
            out_moving.append((target, pid))
            prev_finish = target

    survivors = [(p, 1, pid) for p, pid in zip(obstacles, obstacle_ids)]
    inserted = [(p, 0, pid) for p, pid in nuc_static]
    out_static = [(p, pid) for p, _, pid in sorted(survivors + inserted)]
    return SweepResult(static=out_static, moving=out_moving,
                       annihilations=annihilations)


def evolve_odd(cfg: ParticleConfig, nucleations: Sequence[float],
               variates: Sequence[float] | VariateDrawer) -> ParticleConfig:
    """Odd step: z-particles jump right, y fixed; nucleated pairs inserted."""
    nucs = [float(x) for x in nucleations]
    if sorted(nucs) != nucs:
        raise ValueError("nucleations must be sorted")
    draw = variates if callable(variates) else _list_drawer(variates)
    res = _sweep_right(static=[(p, i) for i, p in enumerate(cfg.y)],
                       moving=[(p, i) for i, p in enumerate(cfg.z)],
                       nuc_static=[(x, -1 - i) for i, x in enumerate(nucs)],
                       nuc_moving=[(x, -1 - i) for i, x in enumerate(nucs)],
                       draw=draw)
    return ParticleConfig(y=tuple(p for p, _ in res.static),
                          z=tuple(p for p, _ in res.moving))


def evolve_even(cfg: ParticleConfig, nucleations: Sequence[float],
                variates: Sequence[float] | VariateDrawer) -> ParticleConfig:
    """Even step: y-particles jump left, z fixed; mirror image of evolve_odd."""
    nucs = [float(x) for x in nucleations]
    if sorted(nucs) != nucs:
        raise ValueError("nucleations must be sorted")
    draw = variates if callable(variates) else _list_drawer(variates)
    # Reflect space: increase points become the movers of a rightward sweep.
    res = _sweep_right(
        static=[(-p, i) for i, p in enumerate(reversed(cfg.z))],
        moving=[(-p, i) for i, p in enumerate(reversed(cfg.y))],
        nuc_static=[(-x, -1 - i) for i, x in enumerate(reversed(nucs))],
        nuc_moving=[(-x, -1 - i) for i, x in enumerate(reversed(nucs))],
        draw=draw)
    return ParticleConfig(y=tuple(-p for p, _ in reversed(res.moving)),
                          z=tuple(-p for p, _ in reversed(res.static)))


def reconstruct(cfg: ParticleConfig) -> HeightProfile:
    """Height profile whose increase points are y and decrease points are z."""
    return HeightProfile(inc=cfg.y, dec=cfg.z)


@dataclass
class PathEvent:
    t: int
    particle_id: int
    species: str  # "Y" or "Z"
    position: float


def simulate(params: ModelParams, seed: Seed, noise: NoiseStream | None = None,
             record_paths: bool = False,
             ) -> GrowthTrajectory | tuple[GrowthTrajectory, list[PathEvent]]:
    """Run the particle system for params.steps steps and reconstruct heights.

    With record_paths=True also returns per-step particle positions tagged by
    a persistent id, suitable for drawing space-time diagrams.
    """
    if noise is None:
        noise = make_noise(params, seed)
    profiles = [EMPTY_PROFILE]
    y: list[tuple[float, int]] = []
    z: list[tuple[float, int]] = []
    next_id = 0
    paths: list[PathEvent] = []

    for t in range(1, params.steps + 1):
        nucs = noise.nucleations[t - 1]
        draw = noise.drawer(t)
        births = []
        for x in nucs:
            births.append((x, next_id))
            next_id += 1
        if t % 2 == 1:
            res = _sweep_right(static=y, moving=z, nuc_static=births,
                               nuc_moving=births, draw=draw)
            y, z = res.static, res.moving
        else:
            res = _sweep_right(
                static=[(-p, pid) for p, pid in reversed(z)],
                moving=[(-p, pid) for p, pid in reversed(y)],
                nuc_static=[(-x, pid) for x, pid in reversed(births)],
                nuc_moving=[(-x, pid) for x, pid in reversed(births)],
                draw=draw)
            y = [(-p, pid) for p, pid in reversed(res.moving)]
            z = [(-p, pid) for p, pid in reversed(res.static)]

        created = len(births)
        annihilated = len(res.annihilations)
        if len(y) != len(z):
            raise AssertionError("particle counts diverged")
        if len(y) - len(profiles[-1].inc) != created - annihilated:
            raise AssertionError("pair conservation violated")

        profile = HeightProfile(inc=tuple(p for p, _ in y),
                                dec=tuple(p for p, _ in z))
        profiles.append(profile)
        if record_paths:
            for p, pid in y:
                paths.append(PathEvent(t, pid, "Y", p))
            for p, pid in z:
                paths.append(PathEvent(t, pid, "Z", p))

    traj = GrowthTrajectory(params=params, seed=seed, profiles=profiles)
    if record_paths:
        return traj, paths
    return traj
