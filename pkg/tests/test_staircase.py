import math

import numpy as np
import pytest

from pushblock.core import ModelParams, Seed
from pushblock.lpp import geometric_pmf
from pushblock.staircase import (ArrayState, check_balance,
                                 enabled_transitions, export_state_csv,
                                 import_state_csv, log_pi, pushasep_wall,
                                 reversed_rate_v, reversed_transitions,
                                 sample_stationary, simulate_ct,
                                 state_from_values)

V = 0.5


def s1(x11, x12, x21):
    return state_from_values(1, {(1, 1): x11, (1, 2): x12, (2, 1): x21})


def summarize(transitions):
    return {(tr.kind, tr.anchor): tr for tr in transitions}


def test_state_validation():
    s1(1, 1, 0)
    with pytest.raises(ValueError):
        s1(0, 1, 0)  # x12 > x11 breaks interlacing
    with pytest.raises(ValueError):
        s1(-1, 0, 0)


def test_enabled_from_zero_state():
    trs = enabled_transitions(s1(0, 0, 0), V)
    by_key = summarize(trs)
    assert set(by_key) == {("up-row", (1, 1)), ("up-row", (1, 2))}
    t11 = by_key[("up-row", (1, 1))]
    assert t11.rate == V
    assert t11.block == ((1, 1),)
    assert t11.target == s1(1, 0, 0)
    t12 = by_key[("up-row", (1, 2))]
    assert t12.rate == V
    assert t12.block == ((1, 2), (1, 1))
    assert t12.target == s1(1, 1, 0)
    assert sum(tr.rate for tr in trs) == pytest.approx(2 * V)


def test_down_never_enabled_at_zero():
    rng = np.random.default_rng(0)
    for _ in range(50):
        grid = sample_stationary(ModelParams(v=0.7, n=2, L=1.0),
                                 Seed(1, int(rng.integers(1 << 30))))
        for tr in enabled_transitions(grid, 0.7):
            if tr.kind == "down-col":
                assert grid.value(*tr.anchor) >= 1


def test_down_from_excited_state():
    trs = enabled_transitions(s1(1, 0, 0), V)
    by_key = summarize(trs)
    down = by_key[("down-col", (1, 1))]
    assert down.block == ((1, 1),)
    assert down.rate == pytest.approx(1.0 / V)
    assert down.target == s1(0, 0, 0)


def test_reversed_from_zero_state():
    trs = reversed_transitions(s1(0, 0, 0), V)
    targets = {(tuple(tr.target.grid[1, 1:3]), tr.target.grid[2, 1]): tr.rate
               for tr in trs}
    assert targets == {((1, 0), 0): V, ((1, 0), 1): V}
    total_fwd = sum(tr.rate for tr in enabled_transitions(s1(0, 0, 0), V))
    total_rev = sum(tr.rate for tr in trs)
    assert total_rev == pytest.approx(total_fwd)


def test_reversed_rate_hand_cases():
    # Undoing the up move (0,0,0) -> (1,0,0) is a row-block descent whose
    # comparison cell sits in column zero, so its rate is 1/v.
    up = summarize(enabled_transitions(s1(0, 0, 0), V))[("up-row", (1, 1))]
    assert reversed_rate_v(s1(0, 0, 0), up, V) == pytest.approx(1.0 / V)
    # Undoing the down move (1,0,0) -> (0,0,0) is a column-block ascent; the
    # column-zero convention makes its rate v.
    down = summarize(enabled_transitions(s1(1, 0, 0), V))[("down-col", (1, 1))]
    assert reversed_rate_v(s1(1, 0, 0), down, V) == pytest.approx(V)


def test_reversed_never_negative():
    for r in range(30):
        state = sample_stationary(ModelParams(v=0.5, n=2, L=1.0), Seed(3, r))
        for tr in reversed_transitions(state, 0.5):
            for i, j in tr.block:
                assert tr.target.grid[i, j] >= 0


def test_log_pi_values():
    assert log_pi(s1(0, 0, 0), V) == pytest.approx(3 * math.log(0.75))
    assert log_pi(s1(1, 0, 0), V) == pytest.approx(3 * math.log(0.75) + math.log(0.25))


def test_pi_normalizes():
    total = 0.0
    for x11 in range(41):
        for x12 in range(x11 + 1):
            for x21 in range(x11 + 1):
                total += math.exp(log_pi(s1(x11, x12, x21), V))
    assert abs(total - 1.0) < 1e-10


def test_balance_hand_case():
    lhs = math.exp(log_pi(s1(0, 0, 0), V)) * V
    up = summarize(enabled_transitions(s1(0, 0, 0), V))[("up-row", (1, 1))]
    rhs = math.exp(log_pi(up.target, V)) * reversed_rate_v(s1(0, 0, 0), up, V)
    assert lhs == pytest.approx(rhs)
    assert lhs == pytest.approx(0.75**3 * 0.5)


def test_balance_on_sampled_states():
    for n in (1, 2):
        for v in (0.3, 0.8):
            params = ModelParams(v=v, n=n, L=1.0)
            for r in range(80):
                rep = check_balance(sample_stationary(params, Seed(7, r)), v)
                assert rep.passed, rep.violations
                assert rep.max_log_residual < 1e-9
                assert rep.rate_gap < 1e-12


def test_simulate_ct_zero_time():
    traj = simulate_ct(s1(0, 0, 0), 0.0, V, Seed(5))
    assert traj.times == [0.0]
    assert traj.states == [s1(0, 0, 0)]


def test_simulate_ct_first_holding_time():
    times = []
    for r in range(20000):
        traj = simulate_ct(s1(0, 0, 0), 1e9, V, Seed(6, r), max_events=1)
        times.append(traj.times[1])
    mean = float(np.mean(times))
    assert abs(mean - 1.0 / (2 * V)) < 0.01 * (1.0 / (2 * V)) * 3


def test_simulate_ct_states_stay_valid():
    traj = simulate_ct(s1(0, 0, 0), 20.0, V, Seed(8))
    assert len(traj.events) > 5
    for st in traj.states:
        st2 = ArrayState(st.n, st.grid)  # re-validates interlacing
        assert st2 == st


def test_stationary_sample_invariants():
    params = ModelParams(v=0.5, n=3, L=1.0)
    for r in range(50):
        state = sample_stationary(params, Seed(9, r))
        assert state.n == 3
        vec = state.diagonal_vector()
        assert all(a <= b for a, b in zip(vec, vec[1:]))


def test_stationary_corner_cell_is_geometric():
    params = ModelParams(v=0.5, n=1, L=1.0)
    vals = np.array([sample_stationary(params, Seed(10, r)).value(2, 1)
                     for r in range(20000)])
    for k in range(4):
        assert abs((vals == k).mean() - geometric_pmf(0.5, k)) < 0.01


def test_diagonal_monotone_along_trajectory():
    start = sample_stationary(ModelParams(v=0.5, n=2, L=1.0), Seed(11))
    traj = simulate_ct(start, 5.0, 0.5, Seed(12))
    for st in traj.states:
        vec = st.diagonal_vector()
        assert all(a <= b for a, b in zip(vec, vec[1:]))


def test_pushasep_validation():
    with pytest.raises(ValueError):
        pushasep_wall(2, [3, 1], 1.0, V, Seed(0))
    with pytest.raises(ValueError):
        pushasep_wall(2, [1], 1.0, V, Seed(0))


def test_pushasep_push_cascade():
    from pushblock.staircase import _pushasep_apply
    w = [2, 2, 2, 5]
    _pushasep_apply(w, 0, +1)
    assert w == [3, 3, 3, 5]
    w = [2, 2]
    _pushasep_apply(w, 1, +1)
    assert w == [2, 3]


def test_pushasep_wall_blocks_left_jump_at_zero():
    from pushblock.staircase import _pushasep_moves
    moves = _pushasep_moves([0, 0, 1], V)
    lefts = [(k, d) for k, d, _ in moves if d < 0]
    assert lefts == [(2, -1)]


def test_pushasep_single_walker_geometric():
    # Reflected birth-death chain: run long, then sample; law geometric(1-v^2).
    counts = np.zeros(30, dtype=float)
    reps = 4000
    for r in range(reps):
        traj = pushasep_wall(1, [0], 30.0, V, Seed(13, r), record=False)
        final = traj.states[-1][0]
        if final < 30:
            counts[final] += 1
    pmf = counts / reps
    for k in range(4):
        assert abs(pmf[k] - geometric_pmf(V, k)) < 0.02


def test_state_csv_roundtrip():
    state = sample_stationary(ModelParams(v=0.5, n=2, L=1.0), Seed(14))
    text = export_state_csv(state, header_meta="seed=14")
    assert import_state_csv(text) == state
