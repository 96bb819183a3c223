"""System abstractions and the batched rollout driver.

A system exposes a one-sub-step transition on a batch of states.  Rollouts
hold a piecewise-constant commanded control for a duration tau, integrating
in sub-steps of length h with a final partial sub-step when tau is not a
multiple of h.  Disturbances are redrawn every sub-step; the parameter vector
theta is frozen per particle for the whole rollout.

Everything a particle step does is row-local (no cross-particle reductions),
so splitting the batch across worker threads is bitwise equivalent to a
single-shot call for any worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in R^d, possibly degenerate (lo == hi)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def clip(self, x):
        return np.clip(x, self.lo, self.hi)

    def sample(self, gen, n=None):
        """Uniform draws; an (n, dim) block fills row-major, so the first m
        rows match an m-row block from the same generator state."""
        if n is None:
            return gen.uniform(self.lo, self.hi)
        return gen.uniform(self.lo, self.hi, size=(int(n), self.dim))


@dataclass(frozen=True)
class BallRegion:
    """Ball in R^d, used for initial-state regions."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")

    @property
    def dim(self):
        return self.center.shape[0]

    def contains(self, x, tol=0.0):
        return bool(np.linalg.norm(np.asarray(x, float) - self.center) <= self.radius + tol)

    def sample(self, gen, n=None):
        # direction from gaussians, radius via d-th root for uniform volume
        single = n is None
        m = 1 if single else int(n)
        g = gen.standard_normal((m, self.dim))
        norms = np.sqrt((g * g).sum(axis=1))
        norms = np.where(norms == 0, 1.0, norms)
        r = self.radius * gen.uniform(0.0, 1.0, size=m) ** (1.0 / self.dim)
        pts = self.center + g / norms[:, None] * r[:, None]
        return pts[0] if single else pts


@dataclass(frozen=True)
class UncertaintyBounds:
    """Admissible boxes for controls, sub-step disturbances, and parameters."""

    control: Box
    disturbance: Box
    param: Box


class System:
    """Base class: uncertain discrete-sub-step dynamics on state batches.

    Subclasses set name, dims, bounds, nominal_param, nominal_disturbance,
    collision_projection, and implement step_batch.
    """

    name = "system"
    hybrid = False

    def step_batch(self, X, U, W, Th, h):
        """Advance an (N, n) batch one sub-step of length h.

        U is the applied control per particle (already resolved), W a per-
        particle disturbance draw held constant over the sub-step, Th the
        frozen per-particle parameters.
        """
        raise NotImplementedError

    def resolve_control(self, nu, X, mu):
        """Applied control per particle given the commanded control nu.

        Open loop by default: every particle applies nu.  Feedback wrappers
        override this with a tracking law around the nominal state mu.
        """
        return np.tile(np.asarray(nu, dtype=float), (len(X), 1))


class ContinuousSystem(System):
    """System defined by a flow x' = f(x, u, w; theta), integrated per sub-step."""

    integration = "euler"

    def flow_batch(self, X, U, W, Th):
        raise NotImplementedError

    def step_batch(self, X, U, W, Th, h):
        if self.integration == "euler":
            return X + h * self.flow_batch(X, U, W, Th)
        if self.integration == "rk4":
            k1 = self.flow_batch(X, U, W, Th)
            k2 = self.flow_batch(X + 0.5 * h * k1, U, W, Th)
            k3 = self.flow_batch(X + 0.5 * h * k2, U, W, Th)
            k4 = self.flow_batch(X + h * k3, U, W, Th)
            return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        raise ValueError(f"unknown integration scheme {self.integration!r}")


class HybridSystem(System):
    """System with a finite mode set and guard/reset transitions.

    Mode arrays are integer-coded; `modes` names them.  Per-segment discrete
    state (e.g. transition latency countdowns) lives in a context created at
    segment start from the first disturbance draw.
    """

    hybrid = True
    modes = ()

    def begin_segment(self, nu, mode_arr, W0):
        return None

    def hybrid_step_batch(self, X, mode_arr, U, W, Th, h, ctx):
        raise NotImplementedError

    def probe_controls(self, x, mode):
        """Candidate controls used to probe which modes a segment can reach."""
        raise NotImplementedError

    def mode_index(self, name):
        return self.modes.index(name)


class FeedbackWrapped(System):
    """Wraps a system with control u = nu + K (x - mu), clipped to the
    control box.  The nominal state mu is the tracking reference carried by
    the caller; resolving at x = mu returns nu exactly."""

    def __init__(self, base, gain):
        self.base = base
        self.gain = np.asarray(gain, dtype=float)
        m, n = base.bounds.control.dim, base.state_dim
        if self.gain.shape != (m, n):
            raise ValueError(f"gain must be ({m}, {n})")
        self.name = base.name
        self.state_dim = base.state_dim
        self.bounds = base.bounds
        self.nominal_param = base.nominal_param
        self.nominal_disturbance = base.nominal_disturbance
        self.collision_projection = base.collision_projection
        self.hybrid = base.hybrid

    def resolve_control(self, nu, X, mu):
        if mu is None:
            raise ValueError("feedback wrapper needs a tracked nominal state")
        U = np.tile(np.asarray(nu, dtype=float), (len(X), 1))
        err = X - mu[None, :]
        # explicit expansion keeps summation order fixed regardless of BLAS
        for j in range(self.gain.shape[0]):
            for i in range(self.gain.shape[1]):
                U[:, j] += self.gain[j, i] * err[:, i]
        np.clip(U, self.bounds.control.lo, self.bounds.control.hi, out=U)
        return U

    def step_batch(self, X, U, W, Th, h):
        return self.base.step_batch(X, U, W, Th, h)


def substep_lengths(tau, h):
    """Sub-step lengths covering [0, tau]: full steps of h plus one final
    partial step.  Lengths sum to tau exactly (the remainder is computed by
    subtraction)."""
    if tau < 0:
        raise ValueError("rollout duration must be nonnegative")
    if h <= 0:
        raise ValueError("sub-step must be positive")
    n_full = int(np.floor(tau / h + 1e-9))
    rem = tau - n_full * h
    if rem < 1e-9 * max(h, 1.0):
        rem = 0.0
    out = [float(h)] * n_full
    if rem > 0.0:
        out.append(float(rem))
    return out


def constant_w_source(w):
    w = np.asarray(w, dtype=float)

    def source(j, n):
        return np.tile(w, (int(n), 1))

    return source


_POOLS = {}


def _pool(workers):
    p = _POOLS.get(workers)
    if p is None:
        p = ThreadPoolExecutor(max_workers=workers)
        _POOLS[workers] = p
    return p


def _chunk_bounds(n, k):
    edges = np.linspace(0, n, k + 1).astype(int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(k) if edges[i + 1] > edges[i]]


@dataclass
class Rollout:
    """Trace of one constant-control segment over a particle batch."""

    states: np.ndarray            # (S+1, N, n)
    modes: np.ndarray | None      # (S+1, N) int, hybrid only
    mu: np.ndarray | None         # (S+1, n) tracked nominal
    mu_modes: np.ndarray | None   # (S+1,) int
    lengths: list = field(default_factory=list)
    diverged: bool = False

    @property
    def final_states(self):
        return self.states[-1]

    @property
    def final_modes(self):
        return None if self.modes is None else self.modes[-1]


def rollout_batch(sys, X0, nu, tau, h, thetas, w_source, mu0=None, modes0=None,
                  mu_mode0=None, workers=1):
    """Roll a particle batch under commanded control nu for duration tau.

    Args:
        sys: the system.
        X0: (N, n) initial particle states.
        nu: (m,) commanded control, constant over the segment.
        tau: segment duration; sub-steps of h with a final partial step.
        h: sub-step length.
        thetas: (N, p) frozen per-particle parameters.
        w_source: callable (substep_index, count) -> (count, dw) disturbance
            draws shared by all workers.
        mu0: tracked nominal state, advanced under nominal parameter and
            disturbance alongside the batch (required by feedback systems).
        modes0: (N,) initial mode indices for hybrid systems.
        mu_mode0: initial mode of the tracked nominal.
        workers: worker threads used to split the batch by rows.

    Returns a Rollout; `diverged` is set if any state leaves the finite range,
    in which case the trace is truncated at the bad sub-step.
    """
    X = np.array(X0, dtype=float)
    N = len(X)
    nu = np.asarray(nu, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    lengths = substep_lengths(tau, h)

    track_mu = mu0 is not None
    mu = np.asarray(mu0, dtype=float).copy() if track_mu else None
    th_hat = sys.nominal_param[None, :]
    w_hat = sys.nominal_disturbance[None, :]

    hyb = sys.hybrid
    modes = np.array(modes0, dtype=np.int64) if hyb else None
    mu_mode = np.array([mu_mode0], dtype=np.int64) if (hyb and track_mu) else None

    states_trace = [X.copy()]
    modes_trace = [modes.copy()] if hyb else None
    mu_trace = [mu.copy()] if track_mu else None
    mu_modes_trace = [mu_mode.copy()] if mu_mode is not None else None

    ctx = None
    mu_ctx = None
    for j, hj in enumerate(lengths):
        W = np.asarray(w_source(j, N), dtype=float)
        if hyb and j == 0:
            ctx = sys.begin_segment(nu, modes, W)
            if track_mu:
                mu_ctx = sys.begin_segment(nu, mu_mode, w_hat)
        U = sys.resolve_control(nu, X, mu)

        if hyb:
            X, modes = _stepped(sys, X, U, W, thetas, hj, workers, modes=modes, ctx=ctx)
        else:
            X = _stepped(sys, X, U, W, thetas, hj, workers)

        if track_mu:
            U_mu = sys.resolve_control(nu, mu[None, :], mu)
            if hyb:
                mu_b, mu_mode = sys.hybrid_step_batch(
                    mu[None, :], mu_mode, U_mu, w_hat, th_hat, hj, mu_ctx)
                mu = mu_b[0]
            else:
                mu = sys.step_batch(mu[None, :], U_mu, w_hat, th_hat, hj)[0]

        bad = not np.all(np.isfinite(X)) or np.any(np.abs(X) > DIVERGENCE_LIMIT)
        states_trace.append(X.copy())
        if hyb:
            modes_trace.append(modes.copy())
        if track_mu:
            mu_trace.append(mu.copy())
            if mu_mode is not None:
                mu_modes_trace.append(mu_mode.copy())
        if bad:
            return Rollout(
                states=np.stack(states_trace),
                modes=np.stack(modes_trace) if hyb else None,
                mu=np.stack(mu_trace) if track_mu else None,
                mu_modes=np.concatenate(mu_modes_trace) if mu_modes_trace else None,
                lengths=lengths[: j + 1],
                diverged=True,
            )

    return Rollout(
        states=np.stack(states_trace),
        modes=np.stack(modes_trace) if hyb else None,
        mu=np.stack(mu_trace) if track_mu else None,
        mu_modes=np.concatenate(mu_modes_trace) if mu_modes_trace else None,
        lengths=lengths,
        diverged=False,
    )


def _stepped(sys, X, U, W, Th, h, workers, modes=None, ctx=None):
    """One sub-step, optionally split by rows across worker threads.  Steps
    are row-local so any split is bitwise identical to a single call."""
    N = len(X)
    if workers <= 1 or N < 2 * workers:
        if modes is None:
            return sys.step_batch(X, U, W, Th, h)
        return sys.hybrid_step_batch(X, modes, U, W, Th, h, ctx)

    bounds = _chunk_bounds(N, workers)

    def run(se):
        s, e = se
        if modes is None:
            return s, sys.step_batch(X[s:e], U[s:e], W[s:e], Th[s:e], h), None
        sub_ctx = None if ctx is None else {k: v[s:e] for k, v in ctx.items()}
        Xn, Mn = sys.hybrid_step_batch(X[s:e], modes[s:e], U[s:e], W[s:e], Th[s:e], h, sub_ctx)
        return s, Xn, Mn

    out_X = np.empty_like(X)
    out_M = None if modes is None else np.empty_like(modes)
    for s, Xc, Mc in _pool(workers).map(run, bounds):
        e = s + len(Xc)
        out_X[s:e] = Xc
        if out_M is not None:
            out_M[s:e] = Mc
    if modes is None:
        return out_X
    return out_X, out_M


def step(sys, x, u, w, theta, h):
    """Single-state convenience wrapper around step_batch."""
    X = np.asarray(x, dtype=float)[None, :]
    U = np.asarray(u, dtype=float)[None, :]
    W = np.asarray(w, dtype=float)[None, :]
    Th = np.asarray(theta, dtype=float)[None, :]
    out = sys.step_batch(X, U, W, Th, h)[0]
    if not np.all(np.isfinite(out)):
        raise RuntimeError("dynamics diverged")
    return out


def hybrid_step(sys, x, mode, u, w, theta, h, ctx=None):
    """Single-state hybrid step; builds a fresh segment context if none given."""
    X = np.asarray(x, dtype=float)[None, :]
    U = np.asarray(u, dtype=float)[None, :]
    W = np.asarray(w, dtype=float)[None, :]
    Th = np.asarray(theta, dtype=float)[None, :]
    M = np.array([int(mode)], dtype=np.int64)
    if ctx is None:
        ctx = sys.begin_segment(U[0], M, W)
    Xn, Mn = sys.hybrid_step_batch(X, M, U, W, Th, h, ctx)
    return Xn[0], int(Mn[0])


def rollout(sys, x0, u, tau, h, theta=None, w=None, mode=None):
    """Single-trace rollout under constant disturbance (nominal by default).

    Returns the (S+1, n) state trace, with S = ceil(tau / h) sub-steps and the
    final partial sub-step included; hybrid systems also return the mode trace.
    """
    theta = sys.nominal_param if theta is None else np.asarray(theta, dtype=float)
    w = sys.nominal_disturbance if w is None else np.asarray(w, dtype=float)
    modes0 = None
    if sys.hybrid:
        if mode is None:
            raise ValueError("hybrid rollout needs an initial mode")
        modes0 = np.array([int(mode)], dtype=np.int64)
    r = rollout_batch(
        sys,
        np.asarray(x0, dtype=float)[None, :],
        u,
        tau,
        h,
        theta[None, :],
        constant_w_source(w),
        modes0=modes0,
    )
    if r.diverged:
        raise RuntimeError("dynamics diverged")
    if sys.hybrid:
        return r.states[:, 0, :], r.modes[:, 0]
    return r.states[:, 0, :]


def nominal_rollout(sys, x, nu, tau, h, mode=None):
    """Deterministic rollout of the nominal state under nominal uncertainty."""
    return rollout(sys, x, nu, tau, h, mode=mode)


def reachable_modes(sys, x, mode, tau_max, h):
    """Mode indices a segment from (x, mode) can visit, found by probing.

    Runs a nominal rollout of length tau_max for each of the system's probe
    controls and unions the visited modes.  Deterministic, no random draws.
    A diverging probe still contributes the modes seen before truncation.
    """
    out = {int(mode)}
    x0 = np.asarray(x, dtype=float)[None, :]
    th = sys.nominal_param[None, :]
    for nu in sys.probe_controls(x, int(mode)):
        r = rollout_batch(
            sys, x0, nu, tau_max, h, th,
            constant_w_source(sys.nominal_disturbance),
            modes0=np.array([int(mode)], dtype=np.int64),
        )
        out.update(int(v) for v in r.modes[:, 0])
    return sorted(out)
