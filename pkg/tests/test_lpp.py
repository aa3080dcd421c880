import numpy as np
import pytest

from pushblock.core import ModelParams, Seed
from pushblock.lpp import (GeometricEnv, batch_envs_and_tables, count_paths,
                           env_from_weights, export_csv, geometric_pmf,
                           import_csv, lpp_bruteforce, lpp_table,
                           sample_G_vector, sample_env, sample_g_vectors)


def test_pmf_values():
    assert geometric_pmf(0.5, 0) == pytest.approx(0.75)
    assert geometric_pmf(0.5, 1) == pytest.approx(0.1875)


def test_pmf_sums_to_one():
    total = sum(geometric_pmf(0.5, k) for k in range(201))
    assert abs(total - 1.0) < 1e-12


def test_pmf_rejects_bad_v():
    for v in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            geometric_pmf(v, 0)
    with pytest.raises(ValueError):
        geometric_pmf(0.5, -1)


def test_env_cell_counts():
    e1 = sample_env(ModelParams(v=0.5, n=1, L=1.0), Seed(0))
    assert len(e1.cells()) == 3
    assert set(e1.cells()) == {(1, 1), (1, 2), (2, 1)}
    e2 = sample_env(ModelParams(v=0.5, n=2, L=1.0), Seed(0))
    assert len(e2.cells()) == 10


def test_env_empirical_mean():
    params = ModelParams(v=0.5, n=22, L=1.0)  # 990 cells per env
    total, count = 0.0, 0
    for r in range(1011):
        env = sample_env(params, Seed(77, r))
        total += sum(env.weight(i, j) for i, j in env.cells())
        count += len(env.cells())
    assert count >= 10**6
    assert abs(total / count - 1.0 / 3.0) < 0.002


def test_lpp_table_zero_env():
    env = env_from_weights(2, {})
    table = lpp_table(env)
    assert all(table.value(i, j) == 0 for i, j in env.cells())


def test_lpp_table_single_weight():
    env = env_from_weights(1, {(1, 1): 1})
    table = lpp_table(env)
    assert table.value(1, 2) == 0
    assert table.value(2, 1) == 0
    assert table.value(1, 1) == 1


def test_lpp_table_hand_case():
    env = env_from_weights(1, {(1, 1): 2, (1, 2): 3, (2, 1): 5})
    # Two paths from (1,1): through (1,2) for 5, through (2,1) for 7.
    assert lpp_bruteforce(env, 1, 1) == 7
    assert lpp_table(env).value(1, 1) == 7


def test_bruteforce_constant_env():
    env = env_from_weights(1, {(1, 1): 4, (1, 2): 4, (2, 1): 4})
    assert lpp_bruteforce(env, 1, 1) == 8


def test_path_count():
    assert count_paths(2, 1, 1) == 8
    assert count_paths(1, 1, 1) == 2
    assert count_paths(3, 1, 1) == 32


def test_dp_matches_bruteforce_small():
    rng = np.random.default_rng(3)
    for n in (1, 2, 3):
        for rep in range(30):
            grid = np.zeros((2 * n + 2, 2 * n + 2), dtype=np.int64)
            for i, j in env_from_weights(n, {}).cells():
                grid[i, j] = rng.integers(0, 6)
            env = GeometricEnv(n, grid)
            table = lpp_table(env)
            for i, j in env.cells():
                assert table.value(i, j) == lpp_bruteforce(env, i, j)


def test_table_monotonicity_and_residuals():
    params = ModelParams(v=0.8, n=3, L=1.0)
    for r in range(50):
        env = sample_env(params, Seed(11, r))
        table = lpp_table(env)
        for i, j in env.cells():
            succ = []
            if i + j < 2 * params.n + 1:
                succ = [table.value(i + 1, j), table.value(i, j + 1)]
            best = max(succ) if succ else 0
            assert table.value(i, j) >= best
            assert table.value(i, j) - best == env.weight(i, j)


def test_single_weight_bump_raises_G_by_zero_or_one():
    rng = np.random.default_rng(5)
    for n in (1, 2):
        for rep in range(20):
            cells = env_from_weights(n, {}).cells()
            weights = {c: int(rng.integers(0, 4)) for c in cells}
            env = env_from_weights(n, weights)
            for bump in cells:
                bumped = dict(weights)
                bumped[bump] += 1
                env2 = env_from_weights(n, bumped)
                for k, l in cells:
                    delta = lpp_bruteforce(env2, k, l) - lpp_bruteforce(env, k, l)
                    assert delta in (0, 1)


def test_G_vector_weakly_increasing():
    params = ModelParams(v=0.5, n=3, L=1.0)
    for r in range(200):
        vec = sample_G_vector(params, Seed(21, r))
        assert len(vec) == 6
        assert all(a <= b for a, b in zip(vec, vec[1:]))


def test_G_vector_first_component_is_single_cell():
    # G(n+1, n) has a one-cell path for n=1, so it equals the raw weight there.
    params = ModelParams(v=0.5, n=1, L=1.0)
    for r in range(50):
        env = sample_env(params, Seed(33, r))
        vec = lpp_table(env).diagonal_vector()
        assert vec[0] == env.weight(2, 1)


def test_mean_G11_against_exact_summation():
    # Exact oracle: E[G(1,1)] = E[g11] + E[max(g12, g21)] by direct truncated
    # summation of the product pmf; truncation tail < 1e-20 at K=40.
    v = 0.5
    K = 40
    p = np.array([geometric_pmf(v, k) for k in range(K + 1)])
    ks = np.arange(K + 1)
    e_g = float((ks * p).sum())
    pmax = np.add.outer(np.zeros(K + 1), np.zeros(K + 1))
    exact_max = float(sum(max(a, b) * p[a] * p[b] for a in ks for b in ks))
    exact = e_g + exact_max
    vecs = sample_g_vectors(ModelParams(v=v, n=1, L=1.0), Seed(2024), 10**6)
    mc = vecs[:, 1].mean()
    assert abs(mc - exact) < 0.005


def test_batch_tables_match_per_env_dp():
    rng = np.random.default_rng(17)
    for n in (1, 2, 3):
        g, tables = batch_envs_and_tables(n, 0.5, 40, rng)
        for r in range(40):
            env = GeometricEnv(n, g[r])
            table = lpp_table(env)
            assert np.array_equal(table.grid, tables[r])


def test_sample_g_vectors_matches_law_of_singular():
    params = ModelParams(v=0.5, n=2, L=1.0)
    batch = sample_g_vectors(params, Seed(55), 4000)
    singles = np.array([sample_G_vector(params, Seed(56, r)) for r in range(4000)])
    # Same law: compare summed-component means loosely (3+ sigma).
    assert abs(batch.sum(axis=1).mean() - singles.sum(axis=1).mean()) < 0.3


def test_csv_roundtrip():
    env = sample_env(ModelParams(v=0.5, n=2, L=1.0), Seed(8))
    table = lpp_table(env)
    text = export_csv(env, table, header_meta="seed=8")
    env2, table2 = import_csv(text)
    assert env2 == env
    assert table2 == table
    assert export_csv(env2, table2, header_meta="seed=8") == text
