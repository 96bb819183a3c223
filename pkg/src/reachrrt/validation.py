"""Plan validation and empirical bound checks.

monte_carlo_validate executes a plan on fresh uncertainty draws against the
unpadded constraints: a rollout fails on obstacle contact at any sub-step or
by ending outside the goal, collision taking precedence and counted once.
Validation draws live in their own stream domain, so they are independent of
everything the planner consumed even under the same numeric seed.

The bound checks probe two inequalities empirically: the trajectory-level
bound  |x1_t - x2_t| <= L_t (|x1_0 - x2_0| + |u1 - u2|)  with
L_t = sqrt(2 max(1, 2 t^2 K^2)) * exp(K t), and its set-level counterpart
d_H(X1, X2) <= L (d_H(X1_0, X2_0) + |t1 - t2| + |u1 - u2|) with
L = max(L_t2, sup |f|).
"""

from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .dynamics import rollout_batch
from .geometry import goal_contains, hausdorff_distance, points_obstacle_clearance
from .reachability import padded_collision_free, padded_goal_contained, project_to_plane
from .planner import plan as run_plan
from .planner import replay_plan


@dataclass(frozen=True)
class ValidityRecord:
    rollouts: int
    collisions: int
    goal_misses: int
    valid: bool
    worst_clearance: float

    def as_dict(self):
        return {
            "rollouts": self.rollouts,
            "collisions": self.collisions,
            "goal_misses": self.goal_misses,
            "valid": self.valid,
            "worst_clearance": self.worst_clearance,
        }


def _min_clearance(pts, obstacles):
    """Per-point minimum signed clearance over obstacles; +inf without any."""
    out = np.full(len(pts), np.inf)
    for obstacle in obstacles:
        np.minimum(out, points_obstacle_clearance(pts, obstacle), out=out)
    return out


def monte_carlo_validate(sys, plan_obj, init_region, goal, obstacles,
                         m_rollouts, seed, init_mode=None, workers=1):
    """Execute a plan m_rollouts times under fresh uncertainty draws.

    The plan's commanded controls are applied through the system's own
    control resolution (feedback stays active); initial states, parameters,
    and per-sub-step disturbances are drawn from the validation stream
    domain.  Checks run against the unpadded obstacles and goal.
    """
    m = int(m_rollouts)
    if m < 1:
        raise ValueError("need at least one rollout")
    h = plan_obj.meta["h"]
    obstacles = list(obstacles)
    proj = sys.collision_projection

    X = init_region.sample(rng.substream(seed, rng.DOMAIN_VALIDATE, 0), m)
    Th = sys.bounds.param.sample(rng.substream(seed, rng.DOMAIN_VALIDATE, 1), m)
    modes = None
    mu_mode = None
    if sys.hybrid:
        if init_mode is None:
            init_mode = plan_obj.meta.get("init_mode")
        if init_mode is None:
            raise ValueError("hybrid validation needs the initial mode")
        modes = np.full(m, int(init_mode), dtype=np.int64)
        mu_mode = int(init_mode)
    mu = np.asarray(init_region.center, dtype=float)

    worst = _min_clearance(project_to_plane(X, proj), obstacles)
    collided = worst <= 0.0

    box = sys.bounds.disturbance
    for k, step in enumerate(plan_obj.steps):

        def w_source(j, count, _k=k):
            gen = rng.substream(seed, rng.DOMAIN_VALIDATE, 2, _k, int(j))
            return box.sample(gen, count)

        r = rollout_batch(sys, X, np.asarray(step.u, dtype=float), step.tau, h,
                          Th, w_source, mu0=mu, modes0=modes, mu_mode0=mu_mode,
                          workers=workers)
        if r.diverged:
            raise RuntimeError("validation rollout diverged")
        pts = project_to_plane(r.states, proj)          # (S+1, m, 2)
        clear = np.full(m, np.inf)
        for sl in pts:
            np.minimum(clear, _min_clearance(sl, obstacles), out=clear)
        np.minimum(worst, clear, out=worst)
        collided |= clear <= 0.0
        X = r.final_states
        mu = r.mu[-1]
        if sys.hybrid:
            modes = r.final_modes
            mu_mode = int(r.mu_modes[-1])

    in_goal = goal_contains(goal, X, shrink=0.0)
    collisions = int(collided.sum())
    goal_misses = int((~collided & ~in_goal).sum())
    return ValidityRecord(
        rollouts=m,
        collisions=collisions,
        goal_misses=goal_misses,
        valid=(collisions == 0 and goal_misses == 0),
        worst_clearance=float(worst.min()),
    )


def replay_validate(sys, plan_obj, init_region, goal, obstacles, workers=1):
    """Check a plan on the planner's own particle draws (exact replay).

    A correctly produced plan always passes: growth required strictly more
    clearance and goal margin than the unpadded constraints ask for.
    """
    sets, rollouts = replay_plan(sys, plan_obj, init_region, workers=workers)
    proj = sys.collision_projection
    for r in rollouts:
        if not padded_collision_free(r.states, proj, obstacles, 0.0):
            return False
    if rollouts == [] and obstacles:
        if not padded_collision_free(sets[0].states[None], proj, obstacles, 0.0):
            return False
    return padded_goal_contained(sets[-1], goal, 0.0)


def trajectory_bound_factor(t, K):
    """L_t = sqrt(2 max(1, 2 t^2 K^2)) exp(K t)."""
    t = np.asarray(t, dtype=float)
    A = np.maximum(1.0, 2.0 * (t * K) ** 2)
    return np.sqrt(2.0 * A) * np.exp(K * t)


def lipschitz_bound_check(sys, K, box, n_trials, tau_max, h, seed):
    """Empirical check of the trajectory deviation bound.

    Rolls paired trajectories from random initial states and controls with
    shared parameters and disturbances, and tests the bound at every
    sub-step boundary (which dominates any single sampled time).  Returns a
    dict with the violation count and the worst observed ratio.
    """
    T = int(n_trials)
    X1 = box.sample(rng.substream(seed, rng.DOMAIN_CHECK, 0), T)
    X2 = box.sample(rng.substream(seed, rng.DOMAIN_CHECK, 1), T)
    U1 = sys.bounds.control.sample(rng.substream(seed, rng.DOMAIN_CHECK, 2), T)
    U2 = sys.bounds.control.sample(rng.substream(seed, rng.DOMAIN_CHECK, 3), T)
    Th = sys.bounds.param.sample(rng.substream(seed, rng.DOMAIN_CHECK, 4), T)

    wbox = sys.bounds.disturbance

    def w_source(j, count):
        gen = rng.substream(seed, rng.DOMAIN_CHECK, 5, int(j))
        return wbox.sample(gen, count)

    # both rollouts see identical parameter and disturbance realizations;
    # controls are applied open loop (pass a per-row commanded control by
    # stepping rows through resolve-free dynamics)
    r1 = _open_loop_rollout(sys, X1, U1, tau_max, h, Th, w_source)
    r2 = _open_loop_rollout(sys, X2, U2, tau_max, h, Th, w_source)

    times = np.concatenate([[0.0], np.cumsum(r1.lengths)])
    du = np.linalg.norm(U1 - U2, axis=1)
    dx0 = np.linalg.norm(X1 - X2, axis=1)
    L = trajectory_bound_factor(times, K)               # (S+1,)
    lhs = np.linalg.norm(r1.states - r2.states, axis=2)  # (S+1, T)
    rhs = L[:, None] * (dx0 + du)[None, :]
    bad = lhs > rhs + 1e-9
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    return {
        "trials": T,
        "violations": int(np.any(bad, axis=0).sum()),
        "worst_ratio": float(ratio.max()),
    }


def _open_loop_rollout(sys, X, U_rows, tau, h, Th, w_source):
    """Rollout applying a different commanded control per row (open loop)."""

    class _PerRow:
        hybrid = sys.hybrid
        nominal_param = sys.nominal_param
        nominal_disturbance = sys.nominal_disturbance

        @staticmethod
        def resolve_control(nu, X_, mu):
            return U_rows

        @staticmethod
        def step_batch(X_, U_, W_, Th_, h_):
            return sys.step_batch(X_, U_, W_, Th_, h_)

    return rollout_batch(_PerRow, X, U_rows[0], tau, h, Th, w_source)


def quadrotor_lipschitz_constant(quad, v_max, h, grid=1000):
    """Valid Lipschitz constant of the quadrotor sub-step increment map.

    The (state, control) Jacobian depends only on s_i = 2 a_i |v_i|, so the
    operator norm is maximized over a grid on the rectangle
    [0, 2 a_max v_max]^2 and padded by the Jacobian's own per-cell drift,
    giving an upper bound rather than a sample maximum.  Returns (K, meta).
    """
    from .benchmarks import GRAVITY, Quadrotor

    base = quad.base if hasattr(quad, "base") else quad
    if not isinstance(base, Quadrotor):
        raise TypeError("closed-form Lipschitz constant is quadrotor-specific")
    a_hi = float(base.bounds.param.hi.max())
    s_max = 2.0 * a_hi * float(v_max)
    g = int(grid)
    s = np.linspace(0.0, s_max, g)
    S1, S2 = np.meshgrid(s, s, indexing="ij")
    G = g * g

    J = np.zeros((G, 4, 6))
    J[:, 0, 2] = 1.0
    J[:, 1, 3] = 1.0
    J[:, 2, 2] = -S1.ravel()
    J[:, 3, 3] = -S2.ravel()
    J[:, 0, 4] = h * GRAVITY / 4.0
    J[:, 1, 5] = -h * GRAVITY / 4.0
    J[:, 2, 4] = GRAVITY
    J[:, 3, 5] = -GRAVITY

    JJt = J @ np.swapaxes(J, 1, 2)
    eig = np.linalg.eigvalsh(JJt)[:, -1]
    k_grid = float(np.sqrt(eig.max()))
    spacing = s_max / max(g - 1, 1)
    K = k_grid + spacing  # Jacobian entries are 1-Lipschitz in s
    return K, {"grid": g, "grid_max": k_grid, "cell_slack": spacing}


def quadrotor_flow_sup(quad, box):
    """Analytic sup of the sub-step increment magnitude over a state box.

    Componentwise worst cases are attained at box corners (each component is
    monotone in the relevant coordinates), so the bound is exact up to the
    conservative combination across components.
    """
    from .benchmarks import GRAVITY, Quadrotor

    base = quad.base if hasattr(quad, "base") else quad
    if not isinstance(base, Quadrotor):
        raise TypeError("flow sup bound is quadrotor-specific")
    v_abs = np.maximum(np.abs(box.lo), np.abs(box.hi))[2:4]
    u_abs = np.maximum(np.abs(base.bounds.control.lo), np.abs(base.bounds.control.hi))
    w_abs = np.maximum(np.abs(base.bounds.disturbance.lo),
                       np.abs(base.bounds.disturbance.hi))
    a_hi = base.bounds.param.hi
    g = GRAVITY
    # sub-step length drops out of the h-dependent term conservatively at 1
    f1 = v_abs[0] + (g / 4.0) * u_abs[0]
    f2 = v_abs[1] + (g / 4.0) * u_abs[1]
    f3 = g * u_abs[0] + a_hi[0] * v_abs[0] ** 2 + w_abs[0]
    f4 = g * u_abs[1] + a_hi[1] * v_abs[1] ** 2 + w_abs[1]
    return float(np.sqrt(f1 * f1 + f2 * f2 + f3 * f3 + f4 * f4))


def reachset_lipschitz_check(sys, L, box, n_trials, n_particles, tau_max, h, seed,
                             shift_scale=0.1, du_scale=0.1, dtau_scale=0.1):
    """Empirical check of the set-level deviation bound.

    Paired particle clouds share every uncertainty draw; the second cloud is
    a translate of the first with a perturbed control and duration.  The
    Hausdorff distances are computed on the particle sets themselves (full
    state), which is the quantity the planner's sets approximate.
    """
    T = int(n_trials)
    N = int(n_particles)
    gen = rng.substream(seed, rng.DOMAIN_CHECK, 10)
    wbox = sys.bounds.disturbance

    violations = 0
    worst_ratio = 0.0
    for t in range(T):
        c = box.sample(gen)
        rho = gen.uniform(0.0, 0.05 * box.width + 1e-12)
        P1 = c + gen.uniform(-rho, rho, size=(N, box.dim))
        shift = gen.uniform(-shift_scale, shift_scale, size=box.dim)
        P2 = P1 + shift
        u1 = sys.bounds.control.sample(gen)
        du = gen.uniform(-du_scale, du_scale, size=u1.shape[0])
        u2 = sys.bounds.control.clip(u1 + du)
        tau1 = float(gen.uniform(0.25 * tau_max, tau_max))
        tau2 = float(np.clip(tau1 + gen.uniform(-dtau_scale, dtau_scale) * tau_max,
                             0.0, tau_max))
        Th = sys.bounds.param.sample(rng.substream(seed, rng.DOMAIN_CHECK, 11, t), N)

        def w_source(j, count, _t=t):
            g2 = rng.substream(seed, rng.DOMAIN_CHECK, 12, _t, int(j))
            return wbox.sample(g2, count)

        r1 = rollout_batch(sys, P1, u1, tau1, h, Th, w_source)
        r2 = rollout_batch(sys, P2, u2, tau2, h, Th, w_source)
        lhs = hausdorff_distance(r1.final_states, r2.final_states)
        rhs = L * (hausdorff_distance(P1, P2) + abs(tau1 - tau2)
                   + float(np.linalg.norm(u1 - u2)))
        if lhs > rhs + 1e-9:
            violations += 1
        if rhs > 0:
            worst_ratio = max(worst_ratio, lhs / rhs)
    return {"trials": T, "violations": violations, "worst_ratio": worst_ratio}


def success_rate_study(sys, init_region, goal, obstacles, sampling_box,
                       base_params, budgets, repeats, init_mode=None):
    """Planner success fraction per iteration budget.

    The same seed list is reused across budgets, so a run that solves within
    a smaller budget also solves within a larger one and the curve is
    nondecreasing by construction.
    """
    rows = []
    for budget in budgets:
        successes = 0
        for j in range(int(repeats)):
            params = replace(base_params, i_max=int(budget),
                             seed=base_params.seed + j)
            result = run_plan(sys, init_region, goal, obstacles, sampling_box,
                              params, init_mode=init_mode)
            if result.solved:
                successes += 1
        rows.append({
            "budget": int(budget),
            "repeats": int(repeats),
            "successes": successes,
            "rate": successes / max(int(repeats), 1),
        })
    return rows
