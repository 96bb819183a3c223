"""RRT over reachable sets.

Each iteration samples a state, picks a tree node (nearest nominal, or
uniform among nominals within zeta of the sample), samples a constant
control and a duration, and propagates the node's particle set.  Extensions
whose hull comes within epsilon of an obstacle at any sub-step are discarded;
a new node whose particles all reach the shrunken goal solves the query.

Hybrid systems additionally sample a target mode among those reachable from
the chosen node (found by deterministic probing) and reject extensions whose
nominal ends in a different mode or whose particles straddle modes.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import rng
from .dynamics import rollout
from .reachability import (
    compute_reach_set,
    init_particles,
    padded_collision_free,
    padded_goal_contained,
)
from .tree import DualTree, Edge, build_path


@dataclass(frozen=True)
class PlannerParams:
    i_max: int = 1000
    tau_max: float = 1.0
    zeta: float = 0.0            # node-selection radius; 0 recovers pure nearest
    n_particles: int = 100
    epsilon: float = 0.0         # obstacle inflation / goal shrink
    h: float = 0.1               # sub-step
    seed: int = 0
    workers: int = 1
    nn_weights: tuple | None = None
    nominal_kind: str = "mean"   # tree representative: particle mean or tracked nominal
    baseline: bool = False       # single nominal particle, no uncertainty sampling

    def validated(self):
        if self.i_max < 0:
            raise ValueError("i_max must be nonnegative")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be positive")
        if self.zeta < 0:
            raise ValueError("zeta must be nonnegative")
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.h <= 0 or self.h > self.tau_max:
            raise ValueError("sub-step must lie in (0, tau_max]")
        return self


@dataclass
class PlanStats:
    iterations: int = 0
    nodes_added: int = 0
    rejected_collision: int = 0
    rejected_divergence: int = 0
    rejected_mode: int = 0
    wall_time: float = 0.0

    def as_dict(self):
        # wall time stays out: stats files must be byte-identical across runs
        return {
            "iterations": self.iterations,
            "nodes_added": self.nodes_added,
            "rejected_collision": self.rejected_collision,
            "rejected_divergence": self.rejected_divergence,
            "rejected_mode": self.rejected_mode,
        }


@dataclass
class PlanResult:
    status: str          # "solved" | "budget_exhausted"
    plan: object | None
    stats: PlanStats
    tree: DualTree

    @property
    def solved(self):
        return self.status == "solved"


@dataclass(frozen=True)
class ExtendOutcome:
    reach: object | None
    rollout: object | None
    reject: str | None   # None | "nominal_mode" | "mode_straddle" | "diverged"


def sample_node(tree, x_s, zeta, gen):
    """Node selection: the unique nearest nominal when the sample is farther
    than zeta from the tree, otherwise uniform among all nominals within
    zeta.  The spread keeps dense regions from absorbing every extension."""
    nid, d = tree.nearest_nominal(x_s)
    if d > zeta:
        return nid
    cands = tree.range_nominal(x_s, zeta)
    return cands[int(gen.integers(len(cands)))]


def sample_control(control_box, tau_max, gen):
    """Uniform commanded control and duration; tau = 0 is legal and yields a
    duplicate of the parent.  Draw order (u then tau) is part of the
    replayable stream contract."""
    u = control_box.sample(gen)
    tau = float(gen.uniform(0.0, tau_max))
    return u, tau


def sample_control_hybrid(sys, x, mode, tau_max, h, gen):
    """Hybrid control draw: (u, tau) as in the smooth case, then a target
    mode uniform over the modes a segment from (x, mode) can reach.  Mode
    probing is deterministic and consumes no randomness."""
    from .dynamics import reachable_modes

    u, tau = sample_control(sys.bounds.control, tau_max, gen)
    sigmas = reachable_modes(sys, x, mode, tau_max, h)
    sigma = int(sigmas[int(gen.integers(len(sigmas)))])
    return u, tau, sigma


def extend_hybrid(sys, reach, u, tau, sigma_s, h, seed, ext_id, workers=1,
                  nominal_kind="mean"):
    """One hybrid extension attempt against a target mode sigma_s.

    Gates in order: the nominal rollout must end in sigma_s (cheap, checked
    before touching particles), the particle rollout must stay finite, and
    every particle must end in sigma_s (no straddling the guard).
    """
    try:
        _, mtrace = rollout(sys, reach.mu, u, tau, h, mode=reach.mu_mode)
    except RuntimeError:
        return ExtendOutcome(None, None, "diverged")
    if int(mtrace[-1]) != int(sigma_s):
        return ExtendOutcome(None, None, "nominal_mode")
    pset, r = compute_reach_set(sys, reach, u, tau, h, seed, ext_id,
                                workers=workers, nominal_kind=nominal_kind)
    if pset is None:
        return ExtendOutcome(None, r, "diverged")
    if np.any(pset.modes != int(sigma_s)):
        return ExtendOutcome(None, r, "mode_straddle")
    return ExtendOutcome(pset, r, None)


def plan(sys, init_region, goal, obstacles, sampling_box, params, init_mode=None):
    """Grow the tree until some node's particles all reach the shrunken goal
    or the iteration budget runs out.

    Every iteration consumes budget whether or not its extension is kept.
    All randomness derives from params.seed; a run is reproducible from the
    seed alone, including bitwise-identical results for any worker count.
    """
    params = params.validated()
    meta = {
        "n_particles": int(params.n_particles),
        "epsilon": float(params.epsilon),
        "h": float(params.h),
        "tau_max": float(params.tau_max),
        "zeta": float(params.zeta),
        "nominal_kind": params.nominal_kind,
        "baseline": bool(params.baseline),
    }
    if init_mode is not None:
        meta["init_mode"] = int(init_mode)

    t0 = time.perf_counter()
    root = init_particles(
        sys, init_region, params.n_particles, params.seed,
        init_mode=init_mode, nominal_kind=params.nominal_kind,
        nominal_only=params.baseline,
    )
    tree = DualTree(root, weights=params.nn_weights)
    stats = PlanStats()

    if padded_goal_contained(root, goal, params.epsilon):
        plan_obj = build_path(tree, 0, params.seed, sys.name, meta=meta)
        stats.wall_time = time.perf_counter() - t0
        return PlanResult("solved", plan_obj, stats, tree)

    gen = rng.substream(params.seed, rng.DOMAIN_PLANNER)
    obstacles = list(obstacles)
    proj = sys.collision_projection

    for i in range(params.i_max):
        stats.iterations = i + 1
        x_s = sampling_box.sample(gen)
        nid = sample_node(tree, x_s, params.zeta, gen)
        reach = tree.nodes[nid].reach

        if sys.hybrid:
            u, tau, sigma = sample_control_hybrid(
                sys, reach.mu, reach.mu_mode, params.tau_max, params.h, gen)
            out = extend_hybrid(sys, reach, u, tau, sigma, params.h,
                                params.seed, i, params.workers, params.nominal_kind)
            if out.reject in ("nominal_mode", "mode_straddle"):
                stats.rejected_mode += 1
                continue
            if out.reject == "diverged":
                stats.rejected_divergence += 1
                continue
            pset, r = out.reach, out.rollout
            edge_mode = sigma
        else:
            u, tau = sample_control(sys.bounds.control, params.tau_max, gen)
            pset, r = compute_reach_set(sys, reach, u, tau, params.h,
                                        params.seed, i, params.workers,
                                        params.nominal_kind)
            if pset is None:
                stats.rejected_divergence += 1
                continue
            edge_mode = None

        if not padded_collision_free(r.states, proj, obstacles, params.epsilon):
            stats.rejected_collision += 1
            continue

        new_id = tree.add_node(nid, pset, Edge(u=np.asarray(u, dtype=float),
                                               tau=float(tau), ext_id=i,
                                               mode=edge_mode))
        stats.nodes_added += 1
        if padded_goal_contained(pset, goal, params.epsilon):
            plan_obj = build_path(tree, new_id, params.seed, sys.name, meta=meta)
            stats.wall_time = time.perf_counter() - t0
            return PlanResult("solved", plan_obj, stats, tree)

    stats.wall_time = time.perf_counter() - t0
    return PlanResult("budget_exhausted", None, stats, tree)


def replay_plan(sys, plan_obj, init_region, workers=1):
    """Re-derive every reachable set along a plan from its seed.

    Reuses the stored extension ids, so the disturbance draws are the ones
    the original growth consumed; the reconstruction is exact.
    """
    meta = plan_obj.meta
    root = init_particles(
        sys, init_region, meta["n_particles"], plan_obj.seed,
        init_mode=meta.get("init_mode"), nominal_kind=meta.get("nominal_kind", "mean"),
        nominal_only=meta.get("baseline", False),
    )
    sets = [root]
    rollouts = []
    cur = root
    for step in plan_obj.steps:
        cur, r = compute_reach_set(
            sys, cur, np.asarray(step.u, dtype=float), step.tau, meta["h"],
            plan_obj.seed, step.ext_id, workers=workers,
            nominal_kind=meta.get("nominal_kind", "mean"),
        )
        if cur is None:
            raise RuntimeError("replay diverged; plan and system disagree")
        sets.append(cur)
        rollouts.append(r)
    return sets, rollouts
