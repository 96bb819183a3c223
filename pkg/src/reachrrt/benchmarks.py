"""Benchmark systems.

linear1d   scalar integrator with uncertain rate, the analytic test case
quadrotor  planar quadrotor under LQR tracking, uncertain quadratic drag
jumper     hybrid point jumper with contact and flight modes, uncertain mass
           and a random takeoff latency

The quadrotor uses an exact discretization of its (nilpotent) linear part,
so one sub-step of length h is the map

    px+ = px + h vx + (h^2 g / 4) u1
    py+ = py + h vy - (h^2 g / 4) u2
    vx+ = vx + h (g u1 - ax vx |vx| + w1)
    vy+ = vy + h (-g u2 - ay vy |vy| + w2)

with controls u = (tan of pitch, tan of roll) and drag coefficients
(ax, ay) frozen per particle.
"""

import numpy as np

from .dynamics import Box, ContinuousSystem, FeedbackWrapped, HybridSystem, System, UncertaintyBounds

GRAVITY = 9.81


class Linear1D(ContinuousSystem):
    """x' = theta + w; the control is a placeholder (degenerate box)."""

    name = "linear1d"
    state_dim = 1
    collision_projection = (0,)
    integration = "euler"

    def __init__(self, theta_lo=0.0, theta_hi=1.0, w_lo=0.0, w_hi=0.0):
        self.bounds = UncertaintyBounds(
            control=Box([0.0], [0.0]),
            disturbance=Box([w_lo], [w_hi]),
            param=Box([theta_lo], [theta_hi]),
        )
        self.nominal_param = self.bounds.param.center
        self.nominal_disturbance = self.bounds.disturbance.center

    def flow_batch(self, X, U, W, Th):
        return Th[:, :1] + W[:, :1]


class Quadrotor(System):
    """Planar quadrotor, exactly discretized per sub-step; see module docs."""

    name = "quadrotor"
    state_dim = 4
    collision_projection = (0, 1)

    def __init__(self, alpha_lo=(0.35, 0.35), alpha_hi=(0.65, 0.65),
                 control_box=((-1.0, -1.0), (1.0, 1.0)),
                 w_box=((0.0, 0.0), (0.0, 0.0))):
        self.bounds = UncertaintyBounds(
            control=Box(*control_box),
            disturbance=Box(*w_box),
            param=Box(alpha_lo, alpha_hi),
        )
        self.nominal_param = self.bounds.param.center
        self.nominal_disturbance = self.bounds.disturbance.center

    def step_batch(self, X, U, W, Th, h):
        px, py, vx, vy = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
        u1, u2 = U[:, 0], U[:, 1]
        ax, ay = Th[:, 0], Th[:, 1]
        g = GRAVITY
        quarter = h * h * g / 4.0
        out = np.empty_like(X)
        out[:, 0] = px + h * vx + quarter * u1
        out[:, 1] = py + h * vy - quarter * u2
        out[:, 2] = vx + h * (g * u1 - ax * vx * np.abs(vx) + W[:, 0])
        out[:, 3] = vy + h * (-g * u2 - ay * vy * np.abs(vy) + W[:, 1])
        return out

    def linearization(self, h):
        """Exact hover linearization of the sub-step map (drag vanishes at
        v = 0): returns (Ad, Bd)."""
        g = GRAVITY
        Ad = np.eye(4)
        Ad[0, 2] = h
        Ad[1, 3] = h
        Bd = np.array([
            [h * h * g / 4.0, 0.0],
            [0.0, -h * h * g / 4.0],
            [h * g, 0.0],
            [0.0, -h * g],
        ])
        return Ad, Bd


def dlqr_gain(A, B, Q, R, iters=100000, tol=1e-13):
    """Tracking gain K for u = nu + K (x - mu) via Riccati iteration.

    Returned with the sign folded in, so K is what the feedback wrapper
    consumes directly.
    """
    P = np.array(Q, dtype=float)
    K = np.zeros((B.shape[1], A.shape[0]))
    for _ in range(iters):
        BtP = B.T @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        Pn = Q + A.T @ P @ (A - B @ K)
        Pn = 0.5 * (Pn + Pn.T)
        if np.max(np.abs(Pn - P)) < tol:
            P = Pn
            break
        P = Pn
    BtP = B.T @ P
    K = np.linalg.solve(R + BtP @ B, BtP @ A)
    return -K


def quadrotor_tracking_gain(h=0.1, q=1.0, r=0.1):
    quad = Quadrotor()
    Ad, Bd = quad.linearization(h)
    return dlqr_gain(Ad, Bd, q * np.eye(4), r * np.eye(2))


class Jumper(HybridSystem):
    """Point jumper: PD-driven horizontally, jumps on command.

    State (x, xdot, y, ydot); modes contact and flight.  The commanded
    control is (x setpoint, jump channel); a jump channel >= 0.5 at segment
    start triggers a takeoff after a per-particle latency of 0, 1, or 2
    sub-steps drawn from the disturbance channel.  Takeoff sets the vertical
    speed to v_takeoff / mass; mass is the frozen uncertain parameter.
    Landing (y back at ground level while descending) resets to contact.
    """

    name = "jumper"
    state_dim = 4
    collision_projection = (0, 2)
    modes = ("contact", "flight")
    CONTACT = 0
    FLIGHT = 1

    def __init__(self, kp=16.0, kd=8.0, a_max=10.0, v_takeoff=4.5,
                 mass_lo=0.8, mass_hi=1.2,
                 setpoint_lo=-0.5, setpoint_hi=5.5, ground=0.0):
        self.kp = kp
        self.kd = kd
        self.a_max = a_max
        self.v_takeoff = v_takeoff
        self.ground = ground
        self.bounds = UncertaintyBounds(
            control=Box([setpoint_lo, 0.0], [setpoint_hi, 1.0]),
            disturbance=Box([0.0], [1.0]),
            param=Box([mass_lo], [mass_hi]),
        )
        self.nominal_param = np.array([0.5 * (mass_lo + mass_hi)])
        # nominal latency draw of zero: the nominal jumper takes off
        # immediately on command
        self.nominal_disturbance = np.array([0.0])

    def begin_segment(self, nu, mode_arr, W0):
        commanded = float(nu[1]) >= 0.5
        if commanded:
            lat = np.minimum(2, np.floor(3.0 * W0[:, 0]).astype(np.int64))
            countdown = np.where(mode_arr == self.CONTACT, lat, -1)
        else:
            countdown = np.full(len(mode_arr), -1, dtype=np.int64)
        return {"countdown": countdown}

    def hybrid_step_batch(self, X, mode_arr, U, W, Th, h, ctx):
        x, xdot, y, ydot = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
        mass = Th[:, 0]
        cd = ctx["countdown"]

        modes = mode_arr.copy()
        fire = (modes == self.CONTACT) & (cd == 0)
        ydot = np.where(fire, self.v_takeoff / mass, ydot)
        modes[fire] = self.FLIGHT
        cd[cd >= 0] -= 1  # in place: views must observe the burn

        accel = np.clip(self.kp * (U[:, 0] - x) - self.kd * xdot,
                        -self.a_max, self.a_max) / mass
        flight = modes == self.FLIGHT

        out = np.empty_like(X)
        out[:, 0] = x + h * xdot
        out[:, 1] = xdot + h * accel
        out[:, 2] = np.where(flight, y + h * ydot, y)
        out[:, 3] = np.where(flight, ydot - h * GRAVITY, 0.0)

        landed = flight & (out[:, 2] <= self.ground) & (out[:, 3] <= 0.0)
        out[landed, 2] = self.ground
        out[landed, 3] = 0.0
        modes[landed] = self.CONTACT
        return out, modes

    def probe_controls(self, x, mode):
        hold = float(x[0])
        return [np.array([hold, 0.0]), np.array([hold, 1.0])]


def make_benchmark(name, **kw):
    """Build a benchmark system by name.

    quadrotor accepts feedback=False for the raw plant and gain= to override
    the tracking gain (list of lists, as stored in scenario files).
    """
    if name == "linear1d":
        return Linear1D(**kw)
    if name == "quadrotor":
        feedback = kw.pop("feedback", True)
        gain = kw.pop("gain", None)
        gain_substep = kw.pop("gain_substep", 0.1)
        quad = Quadrotor(**kw)
        if not feedback:
            return quad
        if gain is None:
            Ad, Bd = quad.linearization(gain_substep)
            gain = dlqr_gain(Ad, Bd, np.eye(4), 0.1 * np.eye(2))
        return FeedbackWrapped(quad, gain)
    if name == "jumper":
        return Jumper(**kw)
    raise ValueError(f"unknown benchmark {name!r}")
