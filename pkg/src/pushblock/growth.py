"""Height-function dynamics: one walk sweep per time step.

Each step runs a space-indexed walk over the previous profile (the floor).
The walk jumps up at nucleation positions, and whenever it sits strictly
above the floor a single down-clock runs at a time: the clock for the j-th
excess level starts where the (j-1)-th finished (or at the level's creation
position, whichever is further right) and fires after an exponential gap.
An up-step of the floor either pushes the walk (when they touch) or absorbs
the running clock together with that up-step, which is the annihilation of
the particle picture.  Even steps run the same sweep on the space-reflected
floor and reflect the result back.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .core import (EMPTY_PROFILE, HeightProfile, ModelParams, NestedNoise,
                   NoiseStream, Seed, VariateDrawer, dominates, height_at,
                   make_noise)

# Event ranks at equal positions: the floor's decrease step is processed
# first, then its increase step, then a nucleation (x- / x+ placement).
_DEC, _INC, _NUC = 0, 1, 2


@dataclass(frozen=True)
class GrowthTrajectory:
    """Profiles h_0, h_1, ..., h_steps produced by one run."""

    params: ModelParams
    seed: Seed | None
    profiles: tuple[HeightProfile, ...]

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles or not self.profiles[0].is_empty:
            raise ValueError("trajectory must start from the flat profile")

    def __len__(self) -> int:
        return len(self.profiles)


def sweep_step(floor: HeightProfile, nucleations: Sequence[float],
               draw: VariateDrawer) -> HeightProfile:
    """One rightward sweep of the walk over ``floor``.

    Consumes exactly one variate per excess level (floor decrease points and
    nucleations), in creation order.
    """
    events = sorted(
        [(z, _DEC) for z in floor.dec]
        + [(y, _INC) for y in floor.inc]
        + [(x, _NUC) for x in nucleations]
    )
    out_inc: list[tuple[float, int]] = []  # (position, tie rank: nucleation first)
    out_dec: list[float] = []
    pending: deque[float] = deque()  # creation positions of waiting levels
    active_expiry: float | None = None

    def start_next(from_pos: float) -> None:
        nonlocal active_expiry
        if pending:
            nominal = pending.popleft()
            start = nominal if nominal > from_pos else from_pos
            active_expiry = start + draw(nominal)
        else:
            active_expiry = None

    def add_level(nominal: float) -> None:
        nonlocal active_expiry
        if active_expiry is None:
            active_expiry = nominal + draw(nominal)
        else:
            pending.append(nominal)

    idx = 0
    while True:
        next_event = events[idx][0] if idx < len(events) else None
        if active_expiry is not None and (next_event is None or active_expiry < next_event):
            # Down-jump fires strictly before the next event.
            out_dec.append(active_expiry)
            start_next(active_expiry)
            continue
        if next_event is None:
            break
        pos, kind = events[idx]
        idx += 1
        if kind == _DEC:
            add_level(pos)
        elif kind == _NUC:
            out_inc.append((pos, 0))
            add_level(pos)
        else:  # floor increase step
            if active_expiry is None:
                # Walk and floor touch: the up-step pushes the walk along.
                out_inc.append((pos, 1))
            else:
                # Clock absorbed by the up-step: neither appears in the output.
                start_next(pos)

    return HeightProfile(inc=tuple(p for p, _ in sorted(out_inc)),
                         dec=tuple(out_dec))


def step(h_prev: HeightProfile, t: int, params: ModelParams,
         noise: NoiseStream) -> HeightProfile:
    """Advance the profile by one time step (odd: rightward, even: reflected)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    nucs = noise.nucleations[t - 1]
    draw = noise.drawer(t)
    if t % 2 == 1:
        return sweep_step(h_prev, nucs, draw)
    reflected = sweep_step(h_prev.reflect(), sorted(-x for x in nucs), draw)
    return reflected.reflect()


def simulate(params: ModelParams, seed: Seed,
             noise: NoiseStream | None = None, validate: bool = True) -> GrowthTrajectory:
    """Run the growth dynamics from the flat profile for params.steps steps."""
    if noise is None:
        noise = make_noise(params, seed)
    profiles = [EMPTY_PROFILE]
    for t in range(1, params.steps + 1):
        nxt = step(profiles[-1], t, params, noise)
        if validate and not dominates(nxt, profiles[-1]):
            raise AssertionError(f"monotone growth violated at step {t}")
        profiles.append(nxt)
    return GrowthTrajectory(params=params, seed=seed, profiles=profiles)


def read_vector(traj: GrowthTrajectory, x: float) -> list[int]:
    """(h_1(x), ..., h_2n(x)); weakly increasing by monotone growth."""
    needed = 2 * traj.params.n
    if len(traj.profiles) <= needed:
        raise ValueError("trajectory too short for its n")
    return [height_at(traj.profiles[t], x) for t in range(1, needed + 1)]


def _restrict_equal(a: HeightProfile, b: HeightProfile, window: float) -> bool:
    """Do two profiles agree as functions on [-window, window]?"""
    def inside(xs):
        return tuple(x for x in xs if -window <= x <= window)

    return (inside(a.inc) == inside(b.inc) and inside(a.dec) == inside(b.dec)
            and a.height_at(-window) == b.height_at(-window)
            and a.height_at(window) == b.height_at(window))


def stabilize_L(params: ModelParams, seed: Seed, window: float,
                max_doublings: int = 12) -> tuple[float, GrowthTrajectory]:
    """Double the window until the trajectory is unchanged on [-window, window].

    Uses nested noise: enlarging the window only adds nucleations outside the
    smaller one, and down-clock variates are keyed to their creation position
    so they survive insertions.  Pathwise diagnostic for one seed; makes no
    convergence claim.
    """
    if not window < params.L:
        raise ValueError("window must be smaller than the initial L")
    nested = NestedNoise(params, seed)

    def run(level: int) -> GrowthTrajectory:
        view = nested.level(level)
        profiles = [EMPTY_PROFILE]
        for t in range(1, params.steps + 1):
            nucs = view.nucleations[t - 1]
            draw = view.drawer(t)
            if t % 2 == 1:
                nxt = sweep_step(profiles[-1], nucs, draw)
            else:
                nxt = sweep_step(profiles[-1].reflect(),
                                 sorted(-x for x in nucs), draw).reflect()
            profiles.append(nxt)
        return GrowthTrajectory(params=params, seed=seed, profiles=profiles)

    prev = run(0)
    for k in range(1, max_doublings + 1):
        cur = run(k)
        if all(_restrict_equal(a, b, window)
               for a, b in zip(prev.profiles, cur.profiles)):
            return params.L * 2 ** (k - 1), prev
        prev = cur
    raise RuntimeError(
        f"no stabilization on [-{window}, {window}] after {max_doublings} "
        f"doublings (final window {params.L * 2 ** max_doublings})")
