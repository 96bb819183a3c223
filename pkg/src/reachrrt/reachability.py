"""Particle-based reachable sets.

A reachable set is approximated by N forward-simulated particles: initial
states and frozen parameters are sampled once, disturbances are resampled
every sub-step.  The planar footprint of a set is the convex hull of the
particles' collision projection.  Robustness padding (epsilon) never touches
the hull itself; it inflates obstacles and shrinks the goal instead.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .benchmarks import Linear1D
from .dynamics import rollout_batch
from .geometry import convex_hull_2d, goal_contains, hull_obstacle_clearance, points_obstacle_clearance


def project_to_plane(states, projection):
    """Collision-projection of a state batch, zero-padded to 2-D for scalar
    projections."""
    pts = np.asarray(states, dtype=float)[..., list(projection)]
    if pts.shape[-1] == 1:
        pts = np.concatenate([pts, np.zeros_like(pts)], axis=-1)
    if pts.shape[-1] != 2:
        raise ValueError("collision projection must be 1-D or 2-D")
    return pts


@dataclass(frozen=True)
class ParticleSet:
    """Reachable-set approximation at a fixed time.

    states and thetas are row-aligned; thetas never change after the initial
    draw.  mu is the deterministically tracked nominal state (the feedback
    reference), nominal the representative used for tree distances.
    """

    states: np.ndarray            # (N, n)
    thetas: np.ndarray            # (N, p)
    mu: np.ndarray                # (n,)
    nominal: np.ndarray           # (n,)
    t: float
    hull: object                  # ConvexHull2D of the collision projection
    modes: np.ndarray | None = None
    mu_mode: int | None = None

    @property
    def n_particles(self):
        return len(self.states)


def _representative(states, mu, kind):
    if kind == "mean":
        return np.mean(states, axis=0)
    if kind == "tracked":
        return np.asarray(mu, dtype=float)
    raise ValueError(f"unknown nominal kind {kind!r}")


def init_particles(sys, init_region, n_particles, seed, init_mode=None,
                   nominal_kind="mean", nominal_only=False):
    """Sample the initial particle set.

    Initial states and parameters come from separate substreams, so growing
    n_particles extends the set without disturbing existing rows.  With
    nominal_only=True the set is a single-point baseline: every row is the
    region center with the nominal parameter.
    """
    n = int(n_particles)
    if n < 1:
        raise ValueError("need at least one particle")
    center = np.asarray(init_region.center, dtype=float)
    if nominal_only:
        states = np.tile(center, (n, 1))
        thetas = np.tile(sys.nominal_param, (n, 1))
    else:
        states = init_region.sample(rng.substream(seed, rng.DOMAIN_INIT, 0), n)
        thetas = sys.bounds.param.sample(rng.substream(seed, rng.DOMAIN_INIT, 1), n)
    modes = None
    mu_mode = None
    if sys.hybrid:
        if init_mode is None:
            raise ValueError("hybrid system needs an initial mode")
        mu_mode = int(init_mode)
        modes = np.full(n, mu_mode, dtype=np.int64)
    mu = center.copy()
    return ParticleSet(
        states=states,
        thetas=thetas,
        mu=mu,
        nominal=_representative(states, mu, nominal_kind),
        t=0.0,
        hull=convex_hull_2d(project_to_plane(states, sys.collision_projection)),
        modes=modes,
        mu_mode=mu_mode,
    )


def extension_w_source(sys, seed, ext_id):
    """Disturbance draws for one extension, keyed by sub-step index.

    Each sub-step gets its own substream, so draws are independent of how
    many particles other extensions used and the first m rows of a block are
    stable as the particle count grows.
    """
    box = sys.bounds.disturbance

    def source(j, count):
        gen = rng.substream(seed, rng.DOMAIN_EXTEND, int(ext_id), int(j))
        return box.sample(gen, count)

    return source


def compute_reach_set(sys, pset, nu, tau, h, seed, ext_id, workers=1,
                      nominal_kind="mean"):
    """Propagate a particle set under commanded control nu for duration tau.

    Returns (new_set, rollout); new_set is None when the rollout left the
    finite range (the caller should reject the extension).
    """
    r = rollout_batch(
        sys,
        pset.states,
        nu,
        tau,
        h,
        pset.thetas,
        extension_w_source(sys, seed, ext_id),
        mu0=pset.mu,
        modes0=pset.modes,
        mu_mode0=pset.mu_mode,
        workers=workers,
    )
    if r.diverged:
        return None, r
    states = r.final_states
    mu = r.mu[-1]
    new = ParticleSet(
        states=states,
        thetas=pset.thetas,
        mu=mu,
        nominal=_representative(states, mu, nominal_kind),
        t=pset.t + float(tau),
        hull=convex_hull_2d(project_to_plane(states, sys.collision_projection)),
        modes=None if r.modes is None else r.final_modes,
        mu_mode=None if r.mu_modes is None else int(r.mu_modes[-1]),
    )
    return new, r


def padded_collision_free(traces, projection, obstacles, epsilon):
    """True when the particle hull clears every obstacle by more than epsilon
    at every sub-step of the trace.

    The hull is left alone; the padding inflates obstacles.  A per-point
    prefilter rejects early (any particle within epsilon of an obstacle puts
    the hull within epsilon too); surviving traces get the exact hull check,
    which also covers the region the hull spans between particles.
    """
    traces = np.asarray(traces, dtype=float)
    if not obstacles:
        return True
    pts = project_to_plane(traces, projection)
    flat = pts.reshape(-1, 2)
    for obstacle in obstacles:
        if points_obstacle_clearance(flat, obstacle).min() <= epsilon:
            return False
    for k in range(pts.shape[0]):
        hull = convex_hull_2d(pts[k])
        for obstacle in obstacles:
            if hull_obstacle_clearance(hull, obstacle) <= epsilon:
                return False
    return True


def padded_goal_contained(pset, goal, epsilon):
    """True when every particle's projection lies in the goal shrunk by
    epsilon."""
    return bool(np.all(goal_contains(goal, pset.states, shrink=epsilon)))


def exact_interval_reach(sys, x0_interval, tau):
    """Exact reachable interval for the 1-D benchmark.

    Only linear1d admits this closed form; anything else is a usage error.
    """
    if not isinstance(sys, Linear1D):
        raise TypeError("exact interval reach is defined for linear1d only")
    lo, hi = float(x0_interval[0]), float(x0_interval[1])
    th = sys.bounds.param
    w = sys.bounds.disturbance
    return (lo + (th.lo[0] + w.lo[0]) * tau, hi + (th.hi[0] + w.hi[0]) * tau)
