"""Numba kernels for bulk continuous-time runs of the staircase array.

The Python enumeration in :mod:`pushblock.staircase` is the readable
reference; these kernels repeat its jump rules on flat int64 grids so that
the 1e5-replica stationarity and symmetry harnesses finish in seconds.  An
agreement test pins the kernel's enabled set to the reference one.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _collect_enabled(grid, n, v, anchors_i, anchors_j, dirs, rates):
    """Fill the enabled-move buffers; returns (count, total rate).

    dirs: +1 for an up move of the row block at the anchor, -1 for a down
    move of the column block.
    """
    n2 = 2 * n + 1
    count = 0
    total = 0.0
    for i in range(1, n2):
        for j in range(1, n2 + 1 - i):
            x = grid[i, j]
            # up move, suppressed by an equal cell above
            if i == 1 or grid[i - 1, j] > x:
                if i == 1 or x < grid[i - 1, j + 1]:
                    r = v
                else:
                    r = 1.0 / v
                anchors_i[count] = i
                anchors_j[count] = j
                dirs[count] = 1
                rates[count] = r
                total += r
                count += 1
            # down move, suppressed at the wall or by an equal right neighbour
            if x >= 1 and (i + j == n2 or grid[i, j + 1] < x):
                if i >= 2 and x > grid[i - 1, j + 1]:
                    r = v
                else:
                    r = 1.0 / v
                anchors_i[count] = i
                anchors_j[count] = j
                dirs[count] = -1
                rates[count] = r
                total += r
                count += 1
    return count, total


@njit(cache=True)
def _apply_move(grid, n, i, j, direction):
    n2 = 2 * n + 1
    x = grid[i, j]
    if direction == 1:
        k = j
        while k - 1 >= 1 and grid[i, k - 1] == x:
            k -= 1
        for c in range(k, j + 1):
            grid[i, c] += 1
    else:
        l = i
        while (l + 1) + j <= n2 and grid[l + 1, j] == x:
            l += 1
        for r in range(i, l + 1):
            grid[r, j] -= 1


@njit(cache=True)
def _run_until(grid, n, v, T):
    """Advance one replica to time T in place; numba's np.random drives it."""
    size = 2 * n * (2 * n + 1)
    anchors_i = np.empty(size, dtype=np.int64)
    anchors_j = np.empty(size, dtype=np.int64)
    dirs = np.empty(size, dtype=np.int64)
    rates = np.empty(size, dtype=np.float64)
    t = 0.0
    while True:
        count, total = _collect_enabled(grid, n, v, anchors_i, anchors_j, dirs, rates)
        if total <= 0.0:
            break
        t += np.random.exponential(1.0 / total)
        if t > T:
            break
        u = np.random.uniform(0.0, total)
        acc = 0.0
        pick = count - 1
        for m in range(count):
            acc += rates[m]
            if u < acc:
                pick = m
                break
        _apply_move(grid, n, anchors_i[pick], anchors_j[pick], dirs[pick])


@njit(cache=True)
def run_batch(grids, n, v, T, seeds):
    """Evolve every replica grid to time T in place, one RNG seed each."""
    for r in range(grids.shape[0]):
        np.random.seed(seeds[r])
        _run_until(grids[r], n, v, T)


@njit(cache=True)
def enabled_snapshot(grid, n, v):
    """Enabled moves of one state, for agreement tests against the reference."""
    size = 2 * n * (2 * n + 1)
    anchors_i = np.empty(size, dtype=np.int64)
    anchors_j = np.empty(size, dtype=np.int64)
    dirs = np.empty(size, dtype=np.int64)
    rates = np.empty(size, dtype=np.float64)
    count, total = _collect_enabled(grid, n, v, anchors_i, anchors_j, dirs, rates)
    return anchors_i[:count].copy(), anchors_j[:count].copy(), dirs[:count].copy(), \
        rates[:count].copy(), total
