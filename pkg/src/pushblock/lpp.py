"""Point-to-line last passage percolation in a geometric environment.

Weights g_ij live on the staircase S = {(i, j): i, j >= 1, i + j <= 2n + 1}
with P(g = k) = (1 - v^2) v^{2k}.  G(k, l) is the maximal weight of an
up-right path from (k, l) to the anti-diagonal i + j = 2n + 1; the table is
filled by max-plus dynamic programming and cross-checked by exhaustive path
enumeration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModelParams, Seed, diagonal_cells, staircase_cells

_TAG_ENV = 11


def geometric_pmf(v: float, k: int) -> float:
    """P(g = k) = (1 - v^2) v^{2k} for k >= 0."""
    if not 0 < v < 1:
        raise ValueError(f"v must lie in (0, 1), got {v}")
    if k < 0:
        raise ValueError("k must be nonnegative")
    return (1.0 - v * v) * v ** (2 * k)


def _in_staircase(n: int, i: int, j: int) -> bool:
    return i >= 1 and j >= 1 and i + j <= 2 * n + 1


@dataclass(frozen=True)
class GeometricEnv:
    """I.i.d. geometric weights on the staircase, stored on a padded grid."""

    n: int
    grid: np.ndarray  # int64, shape (2n+2, 2n+2); only staircase cells are meaningful

    def __post_init__(self):
        size = 2 * self.n + 2
        if self.grid.shape != (size, size):
            raise ValueError(f"grid must have shape ({size}, {size})")
        for i, j in staircase_cells(self.n):
            if self.grid[i, j] < 0:
                raise ValueError("weights must be nonnegative")

    def weight(self, i: int, j: int) -> int:
        if not _in_staircase(self.n, i, j):
            raise ValueError(f"({i}, {j}) outside the staircase")
        return int(self.grid[i, j])

    def cells(self) -> list[tuple[int, int]]:
        return staircase_cells(self.n)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GeometricEnv) and self.n == other.n
                and np.array_equal(self.grid, other.grid))


@dataclass(frozen=True)
class LppTable:
    """Last passage times G(k, l) for every staircase cell."""

    n: int
    grid: np.ndarray  # int64, padded like GeometricEnv.grid

    def value(self, k: int, l: int) -> int:
        if not _in_staircase(self.n, k, l):
            raise ValueError(f"({k}, {l}) outside the staircase")
        return int(self.grid[k, l])

    def diagonal_vector(self) -> list[int]:
        """(G(n+1, n), G(n, n), G(n, n-1), ..., G(1, 1)), weakly increasing."""
        return [int(self.grid[i, j]) for i, j in diagonal_cells(self.n)]

    def __eq__(self, other) -> bool:
        return (isinstance(other, LppTable) and self.n == other.n
                and np.array_equal(self.grid, other.grid))


def env_from_weights(n: int, weights: dict[tuple[int, int], int]) -> GeometricEnv:
    """Build an environment from an explicit cell -> weight map (tests, import)."""
    grid = np.zeros((2 * n + 2, 2 * n + 2), dtype=np.int64)
    for (i, j), g in weights.items():
        if not _in_staircase(n, i, j):
            raise ValueError(f"({i}, {j}) outside the staircase")
        grid[i, j] = g
    return GeometricEnv(n, grid)


def sample_env(params: ModelParams, seed: Seed) -> GeometricEnv:
    """Sample i.i.d. geometric(1 - v^2) weights on the staircase."""
    v, n = params.v, params.n
    if not 0 < v < 1:
        raise ValueError("sampling requires 0 < v < 1")
    rng = seed.generator(_TAG_ENV)
    grid = np.zeros((2 * n + 2, 2 * n + 2), dtype=np.int64)
    cells = staircase_cells(n)
    # numpy's geometric counts trials to first success; subtract 1 for failures.
    draws = rng.geometric(p=1.0 - v * v, size=len(cells)) - 1
    for (i, j), g in zip(cells, draws):
        grid[i, j] = g
    return GeometricEnv(n, grid)


def lpp_table(env: GeometricEnv) -> LppTable:
    """Fill G by the max-plus recursion G(k,l) = g_kl + max(G(k+1,l), G(k,l+1)).

    Cells outside the staircase contribute -inf, so anti-diagonal cells get
    G = g.  Runs in O(|S|), sweeping anti-diagonals from the boundary inward.
    """
    n = env.n
    size = 2 * n + 2
    neg = np.int64(-(1 << 60))
    table = np.full((size + 1, size + 1), neg, dtype=np.int64)
    for d in range(2 * n + 1, 1, -1):  # d = i + j
        for i in range(max(1, d - 2 * n), min(d - 1, 2 * n) + 1):
            j = d - i
            if d == 2 * n + 1:
                table[i, j] = env.grid[i, j]
            else:
                table[i, j] = env.grid[i, j] + max(table[i + 1, j], table[i, j + 1])
    out = np.zeros((size, size), dtype=np.int64)
    for i, j in staircase_cells(n):
        out[i, j] = table[i, j]
    return LppTable(n, out)


def _paths_from(n: int, k: int, l: int):
    """Yield every up-right path from (k, l) to the anti-diagonal as a cell list."""
    if k + l == 2 * n + 1:
        yield [(k, l)]
        return
    for tail in _paths_from(n, k + 1, l):
        yield [(k, l)] + tail
    for tail in _paths_from(n, k, l + 1):
        yield [(k, l)] + tail


def lpp_bruteforce(env: GeometricEnv, k: int, l: int) -> int:
    """Exhaustive-path oracle for G(k, l); exponential time, intended for n <= 4."""
    if not _in_staircase(env.n, k, l):
        raise ValueError(f"({k}, {l}) outside the staircase")
    best = None
    for path in _paths_from(env.n, k, l):
        total = sum(int(env.grid[i, j]) for i, j in path)
        if best is None or total > best:
            best = total
    return int(best)


def count_paths(n: int, k: int, l: int) -> int:
    """Number of up-right paths from (k, l) to the anti-diagonal (= 2^(2n+1-k-l))."""
    return sum(1 for _ in _paths_from(n, k, l))


def sample_G_vector(params: ModelParams, seed: Seed) -> list[int]:
    """Sample an environment and read the staircase diagonal of its LPP table."""
    return lpp_table(sample_env(params, seed)).diagonal_vector()


def sample_g_vectors(params: ModelParams, seed: Seed, count: int,
                     chunk: int = 4096) -> np.ndarray:
    """Vectorized sampling of `count` diagonal G-vectors, shape (count, 2n).

    Environments are drawn in chunks and the max-plus recursion runs across
    the whole chunk at once.  Equivalent in law to repeated sample_G_vector.
    """
    v, n = params.v, params.n
    if not 0 < v < 1:
        raise ValueError("sampling requires 0 < v < 1")
    diag = diagonal_cells(n)
    out = np.empty((count, 2 * n), dtype=np.int64)
    done = 0
    block = 0
    while done < count:
        m = min(chunk, count - done)
        rng = seed.generator(_TAG_ENV, block)
        tables = _batch_tables(n, v, m, rng)
        for c, (i, j) in enumerate(diag):
            out[done:done + m, c] = tables[:, i, j]
        done += m
        block += 1
    return out


def _batch_tables(n: int, v: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """LPP tables for m environments at once; shape (m, 2n+2, 2n+2)."""
    return batch_envs_and_tables(n, v, m, rng)[1]


def batch_envs_and_tables(n: int, v: float, m: int,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Paired (weights, tables) batch used by tests to cross-check the batch DP."""
    size = 2 * n + 2
    cells = staircase_cells(n)
    g = np.zeros((m, size, size), dtype=np.int64)
    draws = rng.geometric(p=1.0 - v * v, size=(m, len(cells))) - 1
    for c, (i, j) in enumerate(cells):
        g[:, i, j] = draws[:, c]
    neg = np.int64(-(1 << 60))
    table = np.full((m, size + 1, size + 1), neg, dtype=np.int64)
    for d in range(2 * n + 1, 1, -1):
        idx_i = np.arange(max(1, d - 2 * n), min(d - 1, 2 * n) + 1)
        idx_j = d - idx_i
        if d == 2 * n + 1:
            table[:, idx_i, idx_j] = g[:, idx_i, idx_j]
        else:
            succ = np.maximum(table[:, idx_i + 1, idx_j], table[:, idx_i, idx_j + 1])
            table[:, idx_i, idx_j] = g[:, idx_i, idx_j] + succ
    out = np.zeros((m, size, size), dtype=np.int64)
    for i, j in cells:
        out[:, i, j] = table[:, i, j]
    return g, out


def export_csv(env: GeometricEnv, table: LppTable, header_meta: str = "") -> str:
    """CSV rows (i, j, g, G) with a schema header comment."""
    lines = [f"# pushblock.lpp.v1 {header_meta}".rstrip(), "i,j,g,G"]
    for i, j in staircase_cells(env.n):
        lines.append(f"{i},{j},{env.grid[i, j]},{table.grid[i, j]}")
    return "\n".join(lines) + "\n"


def import_csv(text: str) -> tuple[GeometricEnv, LppTable]:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("i,"):
            continue
        i, j, g, G = line.split(",")
        rows.append((int(i), int(j), int(g), int(G)))
    n2 = max(i + j for i, j, _, _ in rows)  # = 2n + 1
    n = (n2 - 1) // 2
    size = 2 * n + 2
    g_grid = np.zeros((size, size), dtype=np.int64)
    t_grid = np.zeros((size, size), dtype=np.int64)
    for i, j, g, G in rows:
        g_grid[i, j] = g
        t_grid[i, j] = G
    return GeometricEnv(n, g_grid), LppTable(n, t_grid)
