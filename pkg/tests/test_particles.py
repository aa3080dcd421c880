import numpy as np
import pytest

from pushblock.core import ModelParams, Seed, make_noise
from pushblock.particles import (EMPTY_CONFIG, ParticleConfig, evolve_even,
                                 evolve_odd, reconstruct, simulate)


def test_config_validation():
    ParticleConfig(y=(0.1,), z=(0.5,))
    with pytest.raises(ValueError):
        ParticleConfig(y=(0.1, 0.2), z=(0.5,))
    with pytest.raises(ValueError):
        ParticleConfig(y=(0.2, 0.1), z=(0.5, 0.6))


def test_ballot_flag():
    assert ParticleConfig(y=(0.1,), z=(0.5,)).satisfies_ballot
    assert not ParticleConfig(y=(0.5,), z=(0.0,)).satisfies_ballot


def test_odd_single_nucleation():
    out = evolve_odd(EMPTY_CONFIG, [0.3], [0.5])
    assert out == ParticleConfig(y=(0.3,), z=(0.8,))


def test_odd_free_jump_no_obstacle():
    cfg = ParticleConfig(y=(0.0,), z=(0.4,))
    out = evolve_odd(cfg, [], [1.0])
    assert out == ParticleConfig(y=(0.0,), z=(1.4,))


def test_odd_annihilation_then_continue():
    cfg = ParticleConfig(y=(0.0, 1.0), z=(0.4, 1.2))
    out = evolve_odd(cfg, [], [0.7, 0.25])
    # First jump reaches 1.1 >= 1.0, removing that increase point; the second
    # decrease particle then jumps from its own position.
    assert out == ParticleConfig(y=(0.0,), z=(1.2 + 0.25,))


def test_odd_push_chains_jumps():
    # Two fresh pairs: the first jump overshoots the second particle's start,
    # so the second starts where the first finished.
    out = evolve_odd(EMPTY_CONFIG, [0.1, 0.2], [0.3, 0.05])
    assert out.y == (0.1, 0.2)
    assert out.z == (0.4, 0.45)


def test_odd_no_self_annihilation_with_fresh_pairs():
    # Nucleated increase points are inserted only after the sweep, so a fresh
    # decrease particle cannot annihilate its own or a later increase point.
    out = evolve_odd(EMPTY_CONFIG, [0.1, 0.2], [5.0, 1.0])
    assert out.y == (0.1, 0.2)
    assert len(out.z) == 2


def test_even_single_nucleation():
    out = evolve_even(EMPTY_CONFIG, [-0.2], [0.4])
    assert out.z == (-0.2,)
    assert out.y[0] == pytest.approx(-0.6)


def test_even_annihilation():
    out = evolve_even(ParticleConfig(y=(0.5,), z=(0.0,)), [], [0.9])
    assert out == EMPTY_CONFIG


def test_even_mirrors_odd():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m = int(rng.integers(0, 4))
        pts = np.sort(rng.uniform(-3, 3, size=2 * m))
        cfg = ParticleConfig(y=tuple(pts[:m]), z=tuple(pts[m:]))
        nucs = sorted(rng.uniform(-3, 3, size=int(rng.integers(0, 4))))
        zetas = list(rng.exponential(0.5, size=m + len(nucs) + 2))
        out_odd = evolve_odd(cfg, nucs, list(zetas))
        mirror_cfg = ParticleConfig(y=tuple(-z for z in reversed(cfg.z)),
                                    z=tuple(-y for y in reversed(cfg.y)))
        out_even = evolve_even(mirror_cfg, sorted(-x for x in nucs), list(zetas))
        assert out_even.y == tuple(-z for z in reversed(out_odd.z))
        assert out_even.z == tuple(-y for y in reversed(out_odd.y))


def test_variate_underrun_rejected():
    with pytest.raises(ValueError):
        evolve_odd(EMPTY_CONFIG, [0.1, 0.2], [0.5])


def test_unsorted_nucleations_rejected():
    with pytest.raises(ValueError):
        evolve_odd(EMPTY_CONFIG, [0.2, 0.1], [0.5, 0.5])


def test_reconstruct():
    assert reconstruct(EMPTY_CONFIG).is_empty
    prof = reconstruct(ParticleConfig(y=(0.3,), z=(0.8,)))
    assert prof.height_at(0.3) == 1
    assert prof.height_at(0.81) == 0


def test_simulate_invariants():
    params = ModelParams(v=0.5, n=3, L=5.0)
    traj = simulate(params, Seed(99))
    assert len(traj.profiles) == params.steps + 1
    for prof in traj.profiles:
        assert len(prof.inc) == len(prof.dec)
        assert all(a < b for a, b in zip(prof.inc, prof.dec))
        assert all(a < b for a, b in zip(prof.inc, prof.inc[1:]))
        assert all(a < b for a, b in zip(prof.dec, prof.dec[1:]))


def test_simulate_records_paths():
    params = ModelParams(v=0.5, n=2, L=3.0)
    traj, paths = simulate(params, Seed(4), record_paths=True)
    assert paths
    species = {p.species for p in paths}
    assert species <= {"Y", "Z"}
    # Every recorded step's particle count matches the profile.
    for t in range(1, params.steps + 1):
        ys = [p for p in paths if p.t == t and p.species == "Y"]
        assert len(ys) == len(traj.profiles[t].inc)


def test_conservation_mod_annihilation():
    params = ModelParams(v=0.7, n=4, L=4.0)
    noise = make_noise(params, Seed(123))
    traj = simulate(params, Seed(123), noise=noise)
    # Pair count never exceeds total nucleations so far, and parity of
    # creation minus survival is even (pairs annihilate together).
    created = 0
    for t in range(1, params.steps + 1):
        created += len(noise.nucleations[t - 1])
        alive = len(traj.profiles[t].inc)
        assert alive <= created
        assert (created - alive) % 1 == 0
