"""Interlaced integer array on the staircase, evolving by push/block jumps.

Cells (i, j) with i + j <= 2n + 1 hold nonnegative integers ordered so that
values weakly decrease in each row and column away from the (1, 1) corner.
An up-clock at (i, j) raises the whole run of equal values extending through
(i, j-1), ..., and is suppressed when the cell above is equal; a down-clock
lowers the run extending down the column and is suppressed at the wall or by
an equal right neighbour.  Rates are v or 1/v depending on the position of
the anchor relative to its upper-right diagonal neighbour (infinite above
row one).  The stationary law is exactly the law of the last-passage table,
which is how stationary states are sampled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ModelParams, Seed, diagonal_cells, staircase_cells
from .lpp import lpp_table, sample_env

_TAG_CT = 21
_TAG_PUSHASEP = 22


@dataclass(frozen=True)
class ArrayState:
    """Interlaced nonnegative integers on the staircase."""

    n: int
    grid: np.ndarray  # int64, shape (2n+2, 2n+2); cells outside the staircase are 0

    def __post_init__(self):
        size = 2 * self.n + 2
        if self.grid.shape != (size, size):
            raise ValueError(f"grid must have shape ({size}, {size})")
        validate_grid(self.n, self.grid)

    def value(self, i: int, j: int) -> int:
        return int(self.grid[i, j])

    def cells(self) -> list[tuple[int, int]]:
        return staircase_cells(self.n)

    def diagonal_vector(self) -> list[int]:
        return [int(self.grid[i, j]) for i, j in diagonal_cells(self.n)]

    def top_row(self) -> list[int]:
        """(x_{1,2n}, ..., x_{1,1}), weakly increasing."""
        return [int(self.grid[1, j]) for j in range(2 * self.n, 0, -1)]

    def row(self, i: int) -> list[int]:
        """(x_{i,2n+1-i}, ..., x_{i,1}), weakly increasing."""
        return [int(self.grid[i, j]) for j in range(2 * self.n + 1 - i, 0, -1)]

    def __eq__(self, other) -> bool:
        return (isinstance(other, ArrayState) and self.n == other.n
                and np.array_equal(self.grid, other.grid))


def validate_grid(n: int, grid: np.ndarray) -> None:
    for i, j in staircase_cells(n):
        if grid[i, j] < 0:
            raise ValueError(f"negative entry at ({i}, {j})")
        if i + j < 2 * n + 1:
            if grid[i + 1, j] > grid[i, j] or grid[i, j + 1] > grid[i, j]:
                raise ValueError(f"interlacing violated at ({i}, {j})")


def state_from_values(n: int, values: dict[tuple[int, int], int]) -> ArrayState:
    grid = np.zeros((2 * n + 2, 2 * n + 2), dtype=np.int64)
    for (i, j), x in values.items():
        grid[i, j] = x
    return ArrayState(n, grid)


@dataclass(frozen=True)
class Transition:
    """One enabled jump: a contiguous equal-valued block moved as one."""

    kind: str  # "up-row" | "down-col" (forward) | "down-row" | "up-col" (reversed)
    anchor: tuple[int, int]
    block: tuple[tuple[int, int], ...]
    rate: float
    target: ArrayState


def _up_block(n: int, grid: np.ndarray, i: int, j: int) -> list[tuple[int, int]]:
    """Equal-valued run through (i, j), (i, j-1), ... pushed by an up-jump."""
    val = grid[i, j]
    k = j
    while k - 1 >= 1 and grid[i, k - 1] == val:
        k -= 1
    return [(i, c) for c in range(j, k - 1, -1)]


def _down_block(n: int, grid: np.ndarray, i: int, j: int) -> list[tuple[int, int]]:
    """Equal-valued run through (i, j), (i+1, j), ... pushed by a down-jump."""
    val = grid[i, j]
    l = i
    while (l + 1) + j <= 2 * n + 1 and grid[l + 1, j] == val:
        l += 1
    return [(r, j) for r in range(i, l + 1)]


def enabled_transitions(state: ArrayState, v: float) -> list[Transition]:
    """All forward jumps out of ``state`` with their rates."""
    n, grid = state.n, state.grid
    out: list[Transition] = []
    for i, j in staircase_cells(n):
        x = grid[i, j]
        # Up-jump anchored at (i, j): blocked by an equal cell above.
        if i == 1 or grid[i - 1, j] > x:
            rate = v if (i == 1 or x < grid[i - 1, j + 1]) else 1.0 / v
            block = _up_block(n, grid, i, j)
            g2 = grid.copy()
            for bi, bj in block:
                g2[bi, bj] += 1
            out.append(Transition("up-row", (i, j), tuple(block), rate,
                                  ArrayState(n, g2)))
        # Down-jump anchored at (i, j): blocked at the wall or by an equal
        # right neighbour.
        if x >= 1 and (i + j == 2 * n + 1 or grid[i, j + 1] < x):
            rate = v if (i >= 2 and x > grid[i - 1, j + 1]) else 1.0 / v
            block = _down_block(n, grid, i, j)
            g2 = grid.copy()
            for bi, bj in block:
                g2[bi, bj] -= 1
            out.append(Transition("down-col", (i, j), tuple(block), rate,
                                  ArrayState(n, g2)))
    return out


def reversed_transitions(state: ArrayState, v: float) -> list[Transition]:
    """All jumps of the time-reversed chain out of ``state``.

    Reversed moves lower row blocks and raise column blocks; the rate of a
    row move compares the low end of the block with its lower-left diagonal
    neighbour (infinite left of column one), and symmetrically for columns.
    """
    n, grid = state.n, state.grid
    out: list[Transition] = []

    # Row blocks moving down: (i, k..j) with j at the right end of its run.
    for i in range(1, 2 * n + 1):
        width = 2 * n + 1 - i
        j = 1
        while j <= width:
            val = grid[i, j]
            hi = j
            while hi + 1 <= width and grid[i, hi + 1] == val:
                hi += 1
            # run spans columns j..hi with common value val
            if val >= 1:
                ok_below_suffix = True
                for k in range(hi, j - 1, -1):
                    below = grid[i + 1, k] if (i + 1) + k <= 2 * n + 1 else -1
                    if below >= val:
                        ok_below_suffix = False
                    if ok_below_suffix:
                        block = [(i, c) for c in range(k, hi + 1)]
                        if k >= 2:
                            cmp = grid[i + 1, k - 1]
                            rate = v if (val - 1) >= cmp else 1.0 / v
                        else:
                            rate = 1.0 / v  # infinite neighbour: never >=
                        g2 = grid.copy()
                        for bi, bj in block:
                            g2[bi, bj] -= 1
                        out.append(Transition("down-row", (i, k), tuple(block),
                                              rate, ArrayState(n, g2)))
            j = hi + 1

    # Column blocks moving up: (i..l, j) with i at the top of its run.
    for j in range(1, 2 * n + 1):
        height = 2 * n + 1 - j
        i = 1
        while i <= height:
            val = grid[i, j]
            lo = i
            while lo + 1 <= height and grid[lo + 1, j] == val:
                lo += 1
            # run spans rows i..lo
            top_ok = (i == 1) or grid[i - 1, j] > val
            if top_ok:
                ok_row_prefix = True
                for l in range(i, lo + 1):
                    left = grid[l, j - 1] if j >= 2 else None
                    if left is not None and left <= val:
                        ok_row_prefix = False
                    if not ok_row_prefix:
                        break
                    block = [(r, j) for r in range(i, l + 1)]
                    if j >= 2:
                        cmp = grid[l + 1, j - 1] if (l + 1) + (j - 1) <= 2 * n + 1 else -1
                        rate = v if (val + 1) <= cmp else 1.0 / v
                    else:
                        rate = v  # infinite neighbour: always <=
                    g2 = grid.copy()
                    for bi, bj in block:
                        g2[bi, bj] += 1
                    out.append(Transition("up-col", (l, j), tuple(block),
                                          rate, ArrayState(n, g2)))
            i = lo + 1
    return out


def reversed_rate_v(source: ArrayState, tr: Transition, v: float) -> float:
    """q-hat of the move undoing ``tr``, evaluated per the reversed-rate rules."""
    n, grid = source.n, source.grid
    if tr.kind == "up-row":
        (i, j) = tr.anchor
        k = tr.block[-1][1]  # smallest column in the block
        val = grid[i, k]     # value in the lower state (= source)
        if k == 1:
            return 1.0 / v
        return v if val >= grid[i + 1, k - 1] else 1.0 / v
    if tr.kind == "down-col":
        (i, j) = tr.anchor
        l = tr.block[-1][0]  # largest row in the block
        val = grid[l, j]     # value in the upper state (= source)
        if j == 1:
            return v
        cmp = grid[l + 1, j - 1] if (l + 1) + (j - 1) <= 2 * n + 1 else None
        if cmp is None:
            # (l+1, j-1) lies outside the staircase only if l+j > 2n+1,
            # impossible for a block inside it.
            raise AssertionError("unreachable comparison cell")
        return v if val <= cmp else 1.0 / v
    raise ValueError(f"not a forward transition kind: {tr.kind}")


def log_pi(state: ArrayState, v: float) -> float:
    """Log stationary mass: the law of the LPP table, written in log space."""
    if not 0 < v < 1:
        raise ValueError("v must lie in (0, 1)")
    n, grid = state.n, state.grid
    exponent = 0
    for i, j in staircase_cells(n):
        if i + j < 2 * n + 1:
            exponent += int(grid[i, j]) - max(int(grid[i + 1, j]), int(grid[i, j + 1]))
        else:
            exponent += int(grid[i, j])
    return n * (2 * n + 1) * math.log1p(-v * v) + 2.0 * exponent * math.log(v)


@dataclass
class BalanceReport:
    state: ArrayState
    n_transitions: int
    max_log_residual: float
    forward_total: float
    reversed_total: float
    violations: list[str] = field(default_factory=list)

    @property
    def rate_gap(self) -> float:
        return abs(self.forward_total - self.reversed_total)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_balance(state: ArrayState, v: float,
                  log_tol: float = 1e-9, rate_tol: float = 1e-12) -> BalanceReport:
    """Verify pi(x) q(x,x') = pi(x') q_hat(x',x) and the total-rate identity."""
    fwd = enabled_transitions(state, v)
    rev = reversed_transitions(state, v)
    lp = log_pi(state, v)
    worst = 0.0
    violations = []
    for tr in fwd:
        lhs = lp + math.log(tr.rate)
        rhs = log_pi(tr.target, v) + math.log(reversed_rate_v(state, tr, v))
        resid = abs(lhs - rhs)
        worst = max(worst, resid)
        if resid > log_tol:
            violations.append(
                f"balance violated at anchor {tr.anchor} ({tr.kind}): residual {resid:.3e}")
    ftot = sum(tr.rate for tr in fwd)
    rtot = sum(tr.rate for tr in rev)
    if abs(ftot - rtot) > rate_tol:
        violations.append(f"rate sums differ: {ftot!r} vs {rtot!r}")
    return BalanceReport(state=state, n_transitions=len(fwd),
                         max_log_residual=worst, forward_total=ftot,
                         reversed_total=rtot, violations=violations)


@dataclass
class CtEvent:
    time: float
    anchor: tuple[int, int]
    kind: str
    block: tuple[tuple[int, int], ...]


@dataclass
class CtTrajectory:
    times: list[float]
    states: list[ArrayState]
    events: list[CtEvent]

    def state_at(self, t: float) -> ArrayState:
        """State just after the last event at or before t."""
        idx = 0
        for k, u in enumerate(self.times):
            if u <= t:
                idx = k
        return self.states[idx]


def simulate_ct(s0: ArrayState, T: float, v: float, seed: Seed,
                max_events: int | None = None) -> CtTrajectory:
    """Total-rate event loop: exponential holding times, categorical choice."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = seed.generator(_TAG_CT)
    t = 0.0
    state = s0
    traj = CtTrajectory(times=[0.0], states=[s0], events=[])
    while True:
        if max_events is not None and len(traj.events) >= max_events:
            break
        transitions = enabled_transitions(state, v)
        total = sum(tr.rate for tr in transitions)
        if total == 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t > T and max_events is None:
            break
        u = rng.uniform(0.0, total)
        acc = 0.0
        chosen = transitions[-1]
        for tr in transitions:
            acc += tr.rate
            if u < acc:
                chosen = tr
                break
        state = chosen.target
        traj.times.append(t)
        traj.states.append(state)
        traj.events.append(CtEvent(t, chosen.anchor, chosen.kind, chosen.block))
    return traj


def sample_stationary(params: ModelParams, seed: Seed) -> ArrayState:
    """Exact stationary draw: the LPP table of a fresh geometric environment."""
    table = lpp_table(sample_env(params, seed))
    return ArrayState(params.n, table.grid.copy())


def diagonal_marginal(traj: CtTrajectory) -> list[list[int]]:
    """Diagonal vector at every event time."""
    return [s.diagonal_vector() for s in traj.states]


def top_row(traj: CtTrajectory) -> list[list[int]]:
    """Top-row vector (x_{1,2n}, ..., x_{1,1}) at every event time."""
    return [s.top_row() for s in traj.states]


# --- standalone PushASEP with a wall -------------------------------------

@dataclass
class PushAsepTrajectory:
    times: list[float]
    states: list[tuple[int, ...]]


def _pushasep_moves(w: Sequence[int], v: float) -> list[tuple[int, int, float]]:
    """Enabled (walker, direction, rate) moves; direction +1 right, -1 left."""
    m = len(w)
    moves = []
    for k in range(m):
        moves.append((k, +1, v))  # right jumps always run; pushing resolves order
        blocked = (w[k] == 0) if k == 0 else (w[k] == w[k - 1])
        if not blocked:
            moves.append((k, -1, 1.0 / v))
    return moves


def _pushasep_apply(w: list[int], k: int, direction: int) -> None:
    if direction > 0:
        val = w[k]
        w[k] += 1
        j = k + 1
        while j < len(w) and w[j] == val:
            w[j] += 1
            j += 1
    else:
        w[k] -= 1


def pushasep_wall(m: int, x0: Sequence[int], T: float, v: float, seed: Seed,
                  record: bool = True) -> PushAsepTrajectory:
    """Ordered walkers with right rate v, left rate 1/v, one-sided pushing,
    left blocking, and a wall at the origin."""
    w = [int(x) for x in x0]
    if m < 1 or len(w) != m:
        raise ValueError("x0 must have m >= 1 entries")
    if any(a > b for a, b in zip(w, w[1:])) or w[0] < 0:
        raise ValueError("x0 must be weakly increasing and nonnegative")
    rng = seed.generator(_TAG_PUSHASEP)
    t = 0.0
    traj = PushAsepTrajectory(times=[0.0], states=[tuple(w)])
    while True:
        moves = _pushasep_moves(w, v)
        total = sum(r for _, _, r in moves)
        t += rng.exponential(1.0 / total)
        if t > T:
            break
        u = rng.uniform(0.0, total)
        acc = 0.0
        chosen = moves[-1]
        for mv in moves:
            acc += mv[2]
            if u < acc:
                chosen = mv
                break
        _pushasep_apply(w, chosen[0], chosen[1])
        if record:
            traj.times.append(t)
            traj.states.append(tuple(w))
    if not record:
        traj.times.append(t)
        traj.states.append(tuple(w))
    return traj


def export_state_csv(state: ArrayState, header_meta: str = "") -> str:
    lines = [f"# pushblock.array.v1 {header_meta}".rstrip(), "i,j,x"]
    for i, j in state.cells():
        lines.append(f"{i},{j},{state.grid[i, j]}")
    return "\n".join(lines) + "\n"


def import_state_csv(text: str) -> ArrayState:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("i,"):
            continue
        i, j, x = line.split(",")
        rows.append((int(i), int(j), int(x)))
    n = (max(i + j for i, j, _ in rows) - 1) // 2
    grid = np.zeros((2 * n + 2, 2 * n + 2), dtype=np.int64)
    for i, j, x in rows:
        grid[i, j] = x
    return ArrayState(n, grid)
