"""Particle reachability tests.

The 1-D benchmark admits a closed-form reachable interval, which serves as
the oracle: sampled sets must always be contained in it and approach it
from inside as the particle count grows.
"""

import numpy as np
import pytest
from scipy import stats

from reachrrt import rng
from reachrrt.benchmarks import Jumper, make_benchmark
from reachrrt.dynamics import Box
from reachrrt.geometry import Ball, GoalRegion, point_in_hull
from reachrrt.reachability import (
    ParticleSet,
    compute_reach_set,
    exact_interval_reach,
    extension_w_source,
    init_particles,
    padded_collision_free,
    padded_goal_contained,
    project_to_plane,
)

SEED = 17


def _linear(theta_lo=0.4, theta_hi=0.6, w_lo=-0.1, w_hi=0.1):
    return make_benchmark("linear1d", theta_lo=theta_lo, theta_hi=theta_hi,
                          w_lo=w_lo, w_hi=w_hi)


# ------------------------------------------------------------------ init


def test_init_draws_land_in_their_boxes():
    sys_ = _linear()
    region = Box([0.0], [0.1])
    pset = init_particles(sys_, region, 500, SEED)
    assert pset.states.shape == (500, 1)
    assert np.all(pset.states >= 0.0) and np.all(pset.states <= 0.1)
    assert np.all(pset.thetas >= 0.4) and np.all(pset.thetas <= 0.6)
    assert pset.t == 0.0
    assert np.array_equal(pset.mu, region.center)


def test_init_parameter_marginal_is_uniform():
    sys_ = _linear()
    pset = init_particles(sys_, Box([0.0], [0.1]), 2000, SEED)
    scaled = (pset.thetas[:, 0] - 0.4) / 0.2
    p = stats.kstest(scaled, "uniform").pvalue
    assert p > 0.01


def test_init_state_and_parameter_streams_are_separate():
    sys_ = _linear()
    pset = init_particles(sys_, Box([0.0], [1.0]), 4000, SEED)
    r = np.corrcoef(pset.states[:, 0], pset.thetas[:, 0])[0, 1]
    assert abs(r) < 0.05


def test_init_prefix_stability_in_particle_count():
    sys_ = _linear()
    small = init_particles(sys_, Box([0.0], [0.1]), 50, SEED)
    large = init_particles(sys_, Box([0.0], [0.1]), 400, SEED)
    assert np.array_equal(small.states, large.states[:50])
    assert np.array_equal(small.thetas, large.thetas[:50])


def test_init_nominal_only_baseline():
    sys_ = _linear()
    pset = init_particles(sys_, Box([0.0], [0.1]), 5, SEED, nominal_only=True)
    assert np.all(pset.states == 0.05)
    assert np.all(pset.thetas == sys_.nominal_param)


def test_init_nominal_kinds():
    sys_ = _linear()
    region = Box([0.0], [0.1])
    mean = init_particles(sys_, region, 100, SEED, nominal_kind="mean")
    assert np.array_equal(mean.nominal, mean.states.mean(axis=0))
    tracked = init_particles(sys_, region, 100, SEED, nominal_kind="tracked")
    assert np.array_equal(tracked.nominal, region.center)
    with pytest.raises(ValueError):
        init_particles(sys_, region, 100, SEED, nominal_kind="median")


def test_hybrid_init_requires_mode():
    jumper = make_benchmark("jumper")
    region = Box([0.0, 0.0, 0.0, 0.0], [0.1, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        init_particles(jumper, region, 10, SEED)
    pset = init_particles(jumper, region, 10, SEED, init_mode=Jumper.CONTACT)
    assert pset.modes.tolist() == [0] * 10
    assert pset.mu_mode == 0


def test_projection_pads_scalars_and_rejects_3d():
    pts = project_to_plane(np.array([[1.0, 2.0], [3.0, 4.0]]), (1,))
    assert np.array_equal(pts, np.array([[2.0, 0.0], [4.0, 0.0]]))
    with pytest.raises(ValueError):
        project_to_plane(np.zeros((2, 5)), (0, 1, 2))


# ------------------------------------------------------- exact containment


def test_sampled_interval_contained_in_exact():
    sys_ = _linear()
    exact = exact_interval_reach(sys_, (0.0, 0.1), 1.0)
    assert exact == pytest.approx((0.3, 0.8), abs=1e-12)
    root = init_particles(sys_, Box([0.0], [0.1]), 300, SEED)
    pset, _ = compute_reach_set(sys_, root, np.zeros(1), 1.0, 0.1, SEED, 0)
    assert pset.states.min() >= exact[0] - 1e-12
    assert pset.states.max() <= exact[1] + 1e-12


def test_containment_across_random_configurations():
    gen = rng.substream(SEED, rng.DOMAIN_CHECK, 0)
    for trial in range(40):
        lo = float(gen.uniform(-1.0, 0.0))
        hi = lo + float(gen.uniform(0.01, 0.5))
        wmag = float(gen.uniform(0.0, 0.3))
        sys_ = _linear(theta_lo=lo, theta_hi=hi, w_lo=-wmag, w_hi=wmag)
        x0 = Box([float(gen.uniform(-1, 1))], [float(gen.uniform(1.01, 2.0))])
        tau = float(gen.uniform(0.0, 2.0))
        root = init_particles(sys_, x0, 64, SEED + trial)
        pset, _ = compute_reach_set(sys_, root, np.zeros(1), tau, 0.1,
                                    SEED + trial, trial)
        exact = exact_interval_reach(sys_, (x0.lo[0], x0.hi[0]), tau)
        assert pset.states.min() >= exact[0] - 1e-9
        assert pset.states.max() <= exact[1] + 1e-9


def test_sampled_interval_tightens_with_more_particles():
    sys_ = _linear(w_lo=0.0, w_hi=0.0)
    exact = exact_interval_reach(sys_, (0.0, 0.1), 1.0)
    gaps = []
    for n in (20, 2000):
        root = init_particles(sys_, Box([0.0], [0.1]), n, SEED)
        pset, _ = compute_reach_set(sys_, root, np.zeros(1), 1.0, 0.1, SEED, 0)
        gaps.append(max(pset.states.min() - exact[0], exact[1] - pset.states.max()))
    assert gaps[1] < gaps[0]


def test_exact_interval_is_linear1d_only():
    with pytest.raises(TypeError):
        exact_interval_reach(make_benchmark("quadrotor"), (0.0, 1.0), 1.0)


# -------------------------------------------------------------- extension


def test_extension_keeps_parameters_frozen():
    sys_ = _linear()
    root = init_particles(sys_, Box([0.0], [0.1]), 100, SEED)
    pset, _ = compute_reach_set(sys_, root, np.zeros(1), 0.5, 0.1, SEED, 3)
    assert np.array_equal(pset.thetas, root.thetas)
    assert pset.t == pytest.approx(0.5)
    child, _ = compute_reach_set(sys_, pset, np.zeros(1), 0.25, 0.1, SEED, 4)
    assert child.t == pytest.approx(0.75)


def test_extension_monotone_in_particle_count():
    sys_ = _linear()
    small_root = init_particles(sys_, Box([0.0], [0.1]), 40, SEED)
    large_root = init_particles(sys_, Box([0.0], [0.1]), 160, SEED)
    small, _ = compute_reach_set(sys_, small_root, np.zeros(1), 0.8, 0.1, SEED, 7)
    large, _ = compute_reach_set(sys_, large_root, np.zeros(1), 0.8, 0.1, SEED, 7)
    assert np.array_equal(small.states, large.states[:40])
    for v in small.hull.vertices:
        assert point_in_hull(large.hull, v)


def test_extension_draws_differ_by_id_and_substep():
    sys_ = _linear()
    src = extension_w_source(sys_, SEED, 5)
    a = src(0, 50)
    b = src(1, 50)
    c = extension_w_source(sys_, SEED, 6)(0, 50)
    again = extension_w_source(sys_, SEED, 5)(0, 50)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(a, again)
    assert np.array_equal(a[:10], src(0, 10))


def test_extension_worker_count_is_invisible():
    sys_ = make_benchmark("quadrotor")
    region = Box([-0.1, -0.1, 0.0, 0.0], [0.1, 0.1, 0.0, 0.0])
    root = init_particles(sys_, region, 97, SEED)
    outs = [
        compute_reach_set(sys_, root, np.array([0.5, -0.2]), 0.73, 0.1, SEED, 2,
                          workers=k)[0]
        for k in (1, 4, 8)
    ]
    for o in outs[1:]:
        assert np.array_equal(outs[0].states, o.states)
        assert np.array_equal(outs[0].mu, o.mu)
        assert np.array_equal(outs[0].hull.vertices, o.hull.vertices)


def test_extension_mean_nominal_is_particle_mean():
    sys_ = _linear()
    root = init_particles(sys_, Box([0.0], [0.1]), 100, SEED)
    pset, _ = compute_reach_set(sys_, root, np.zeros(1), 0.5, 0.1, SEED, 0)
    assert np.array_equal(pset.nominal, pset.states.mean(axis=0))


def test_divergent_extension_returns_none():
    class Blow:
        name = "blow"
        hybrid = False
        state_dim = 1
        collision_projection = (0,)
        bounds = make_benchmark("linear1d").bounds
        nominal_param = np.array([0.5])
        nominal_disturbance = np.array([0.0])

        def resolve_control(self, nu, X, mu):
            return np.tile(nu, (len(X), 1))

        def step_batch(self, X, U, W, Th, h):
            return X * 1e8

    root = init_particles(Blow(), Box([1.0], [2.0]), 8, SEED)
    pset, r = compute_reach_set(Blow(), root, np.zeros(1), 1.0, 0.1, SEED, 0)
    assert pset is None
    assert r.diverged


# ------------------------------------------------------ padded constraints


def _point_set(points, t=0.0):
    """Particle set around explicit 2-D states (projection is identity)."""
    from reachrrt.geometry import convex_hull_2d

    states = np.atleast_2d(np.asarray(points, dtype=float))
    return ParticleSet(
        states=states,
        thetas=np.zeros((len(states), 1)),
        mu=states[0],
        nominal=states.mean(axis=0),
        t=t,
        hull=convex_hull_2d(states),
    )


def test_collision_padding_is_strict():
    ball = Ball((0.0, 0.0), 1.0)
    eps = 0.25
    # single-point trace exactly eps away from the inflated obstacle: rejected
    at_eps = np.array([[[1.0 + eps, 0.0]]])
    beyond = np.array([[[1.0 + eps + 1e-6, 0.0]]])
    assert not padded_collision_free(at_eps, (0, 1), [ball], eps)
    assert padded_collision_free(beyond, (0, 1), [ball], eps)
    assert padded_collision_free(at_eps, (0, 1), [], eps)


def test_collision_checks_every_substep():
    ball = Ball((0.0, 0.0), 1.0)
    # passes through the obstacle at the middle sub-step only
    trace = np.array([[[-3.0, 0.0]], [[0.0, 0.0]], [[3.0, 0.0]]])
    assert not padded_collision_free(trace, (0, 1), [ball], 0.0)


def test_collision_sees_hull_between_particles():
    ball = Ball((0.0, 0.0), 0.5)
    # two particles straddling the obstacle; segment between them crosses it
    trace = np.array([[[-2.0, 0.0], [2.0, 0.0]]])
    assert not padded_collision_free(trace, (0, 1), [ball], 0.0)


def test_goal_shrink_boundary():
    goal = GoalRegion((0, 1), (0.0, 0.0), 0.5)
    eps = 0.1
    inside = _point_set([[0.39, 0.0]])
    outside = _point_set([[0.41, 0.0]])
    assert padded_goal_contained(inside, goal, eps)
    assert not padded_goal_contained(outside, goal, eps)
    # every particle must make it, not just the bulk
    mixed = _point_set([[0.0, 0.0], [0.41, 0.0]])
    assert not padded_goal_contained(mixed, goal, eps)


def test_goal_check_uses_projection_dims():
    goal = GoalRegion((2, 3), (1.0, 1.0), 0.5)
    sys_ = make_benchmark("quadrotor")
    # positions scattered, velocities pinned 0.1*sqrt(2) from the goal center
    region = Box([0.0, 0.0, 0.9, 0.9], [9.0, 9.0, 0.9, 0.9])
    pset = init_particles(sys_, region, 20, SEED)
    assert padded_goal_contained(pset, goal, 0.3)
    assert not padded_goal_contained(pset, goal, 0.4)
