"""Scenario files and deterministic result serialization.

A scenario is a JSON file naming a benchmark system and the planning query:
initial region, goal, obstacles, sampling box, planner parameters.  Loader
errors carry the offending key and the line it first appears on, so messages
are actionable.  All writers sort keys and render floats via repr, making
output files byte-identical for identical inputs.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .benchmarks import make_benchmark
from .dynamics import BallRegion, Box
from .geometry import AxisAlignedBox, Ball, GoalRegion
from .planner import PlannerParams
from .tree import Plan, PlanStep

PLAN_FORMAT = "reachrrt-plan/1"
STATS_FORMAT = "reachrrt-stats/1"
REPORT_FORMAT = "reachrrt-validation/1"
STUDY_FORMAT = "reachrrt-study/1"


class ScenarioError(ValueError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


@dataclass
class Scenario:
    name: str
    system_name: str
    system_options: dict
    init_region: object
    goal: GoalRegion
    obstacles: list
    sampling_box: Box
    params: PlannerParams
    init_mode_name: str | None
    baseline_padding: float
    validation_rollouts: int
    validation_seed: int
    sha256: str
    path: str
    _system: object = field(default=None, repr=False)

    def build_system(self):
        if self._system is None:
            self._system = make_benchmark(self.system_name, **self.system_options)
        return self._system

    @property
    def init_mode(self):
        if self.init_mode_name is None:
            return None
        sys = self.build_system()
        if self.init_mode_name not in sys.modes:
            raise ScenarioError(
                f"init_mode {self.init_mode_name!r} not a mode of {self.system_name}",
                key="init_mode")
        return sys.modes.index(self.init_mode_name)


def _want(raw, key, types, where=""):
    if key not in raw:
        raise ScenarioError(f"missing required key {where}{key}", key=key)
    v = raw[key]
    if not isinstance(v, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ScenarioError(f"{where}{key} must be {names}", key=key)
    return v


def _vector(raw, key, where=""):
    v = _want(raw, key, list, where)
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ScenarioError(f"{where}{key} must be a list of numbers", key=key)
    return np.asarray(v, dtype=float)


def _parse_init(raw, dim):
    kind = _want(raw, "kind", str, "init.")
    if kind == "box":
        lo = _vector(raw, "lo", "init.")
        hi = _vector(raw, "hi", "init.")
        if lo.shape != (dim,) or hi.shape != (dim,):
            raise ScenarioError(f"init box must have dimension {dim}", key="init")
        if np.any(hi < lo):
            raise ScenarioError("init box needs lo <= hi", key="init")
        return Box(lo, hi)
    if kind == "ball":
        center = _vector(raw, "center", "init.")
        radius = _want(raw, "radius", (int, float), "init.")
        if center.shape != (dim,):
            raise ScenarioError(f"init ball must have dimension {dim}", key="init")
        if radius < 0:
            raise ScenarioError("init ball radius must be nonnegative", key="init")
        return BallRegion(center, float(radius))
    raise ScenarioError(f"unknown init kind {kind!r}", key="init")


def _parse_obstacle(raw, idx):
    kind = _want(raw, "kind", str, f"obstacles[{idx}].")
    if kind == "ball":
        center = _vector(raw, "center", f"obstacles[{idx}].")
        radius = _want(raw, "radius", (int, float), f"obstacles[{idx}].")
        if center.shape != (2,):
            raise ScenarioError("obstacle ball center must be planar", key="obstacles")
        if not radius > 0:
            raise ScenarioError("obstacle radius must be positive", key="obstacles")
        return Ball(center, float(radius))
    if kind == "box":
        lo = _vector(raw, "lo", f"obstacles[{idx}].")
        hi = _vector(raw, "hi", f"obstacles[{idx}].")
        if lo.shape != (2,) or hi.shape != (2,):
            raise ScenarioError("obstacle box must be planar", key="obstacles")
        if not np.all(hi > lo):
            raise ScenarioError("obstacle box needs lo < hi", key="obstacles")
        return AxisAlignedBox(lo, hi)
    raise ScenarioError(f"unknown obstacle kind {kind!r}", key="obstacles")


def load_scenario(path):
    with open(path, "rb") as f:
        data = f.read()
    sha = hashlib.sha256(data).hexdigest()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")

    name = _want(raw, "name", str)
    system_name = _want(raw, "system", str)
    system_options = raw.get("system_options", {})
    if not isinstance(system_options, dict):
        raise ScenarioError("system_options must be an object", key="system_options")

    try:
        sys = make_benchmark(system_name, **system_options)
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e), key="system") from e
    dim = sys.state_dim

    init_region = _parse_init(_want(raw, "init", dict), dim)

    goal_raw = _want(raw, "goal", dict)
    proj = _want(goal_raw, "projection", list, "goal.")
    if not all(isinstance(i, int) and 0 <= i < dim for i in proj):
        raise ScenarioError(f"goal.projection must index states 0..{dim - 1}", key="goal")
    center = _vector(goal_raw, "center", "goal.")
    radius = _want(goal_raw, "radius", (int, float), "goal.")
    if not radius > 0:
        raise ScenarioError("goal.radius must be positive", key="goal")
    if center.shape != (len(proj),):
        raise ScenarioError("goal.center must match goal.projection length", key="goal")
    goal = GoalRegion(tuple(proj), center, float(radius))

    obstacles_raw = raw.get("obstacles", [])
    if not isinstance(obstacles_raw, list):
        raise ScenarioError("obstacles must be a list", key="obstacles")
    obstacles = [_parse_obstacle(o, i) for i, o in enumerate(obstacles_raw)]

    sb_raw = _want(raw, "sampling_box", dict)
    lo = _vector(sb_raw, "lo", "sampling_box.")
    hi = _vector(sb_raw, "hi", "sampling_box.")
    if lo.shape != (dim,) or hi.shape != (dim,):
        raise ScenarioError(f"sampling_box must have dimension {dim}", key="sampling_box")
    if np.any(hi < lo):
        raise ScenarioError("sampling_box needs lo <= hi", key="sampling_box")
    sampling_box = Box(lo, hi)

    p = _want(raw, "planner", dict)

    def num(key, default, kinds=(int, float), positive=False, nonneg=False):
        v = p.get(key, default)
        if isinstance(v, bool) or not isinstance(v, kinds):
            raise ScenarioError(f"planner.{key} must be a number", key=key)
        if positive and v <= 0:
            raise ScenarioError(f"planner.{key} must be positive", key=key)
        if nonneg and v < 0:
            raise ScenarioError(f"planner.{key} must be nonnegative", key=key)
        return v

    nn_weights = p.get("nn_weights")
    if nn_weights is not None:
        nn_weights = tuple(float(w) for w in nn_weights)
        if len(nn_weights) != dim:
            raise ScenarioError("planner.nn_weights must match the state dimension",
                                key="nn_weights")

    params = PlannerParams(
        i_max=int(num("i_max", 1000, kinds=int, nonneg=True)),
        tau_max=float(num("tau_max", 1.0, positive=True)),
        zeta=float(num("zeta", 0.0, nonneg=True)),
        n_particles=int(num("particles", 100, kinds=int, positive=True)),
        epsilon=float(num("epsilon", 0.0, nonneg=True)),
        h=float(num("substep", 0.1, positive=True)),
        seed=int(num("seed", 0, kinds=int, nonneg=True)),
        nn_weights=nn_weights,
    )

    init_mode_name = raw.get("init_mode")
    if sys.hybrid and init_mode_name is None:
        raise ScenarioError("hybrid system scenarios must set init_mode", key="init_mode")
    if init_mode_name is not None and init_mode_name not in getattr(sys, "modes", ()):
        raise ScenarioError(f"init_mode {init_mode_name!r} is not a mode of {system_name}",
                            key="init_mode")

    baseline_padding = raw.get("baseline_padding", 0.0)
    if isinstance(baseline_padding, bool) or not isinstance(baseline_padding, (int, float)):
        raise ScenarioError("baseline_padding must be a number", key="baseline_padding")
    if baseline_padding < 0:
        raise ScenarioError("baseline_padding must be nonnegative", key="baseline_padding")

    val = raw.get("validation", {})
    if not isinstance(val, dict):
        raise ScenarioError("validation must be an object", key="validation")

    scenario = Scenario(
        name=name,
        system_name=system_name,
        system_options=system_options,
        init_region=init_region,
        goal=goal,
        obstacles=obstacles,
        sampling_box=sampling_box,
        params=params,
        init_mode_name=init_mode_name,
        baseline_padding=float(baseline_padding),
        validation_rollouts=int(val.get("rollouts", 1000)),
        validation_seed=int(val.get("seed", 1)),
        sha256=sha,
        path=str(path),
    )
    scenario._system = sys
    return scenario


def error_line(path, key):
    """Line of the first occurrence of a key in the file, for error messages."""
    if key is None:
        return 1
    try:
        with open(path, "r") as f:
            for i, line in enumerate(f, start=1):
                if f'"{key}"' in line:
                    return i
    except OSError:
        pass
    return 1


def _plain(value):
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_json(path, obj):
    text = json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False)
    with open(path, "w") as f:
        f.write(text)
        f.write("\n")


def plan_to_dict(plan_obj, scenario_sha):
    return {
        "format": PLAN_FORMAT,
        "version": __version__,
        "seed": plan_obj.seed,
        "scenario_sha256": scenario_sha,
        "system": plan_obj.system,
        "solved_node": plan_obj.solved_node,
        "meta": dict(plan_obj.meta),
        "steps": [
            {
                "u": list(s.u),
                "tau": s.tau,
                "ext_id": s.ext_id,
                "node_id": s.node_id,
                "mode": s.mode,
            }
            for s in plan_obj.steps
        ],
    }


def plan_from_dict(raw):
    if raw.get("format") != PLAN_FORMAT:
        raise ScenarioError(f"not a plan file (format {raw.get('format')!r})")
    steps = tuple(
        PlanStep(
            u=tuple(float(v) for v in s["u"]),
            tau=float(s["tau"]),
            ext_id=int(s["ext_id"]),
            node_id=int(s["node_id"]),
            mode=None if s.get("mode") is None else int(s["mode"]),
        )
        for s in raw["steps"]
    )
    return Plan(
        steps=steps,
        seed=int(raw["seed"]),
        system=str(raw["system"]),
        solved_node=int(raw["solved_node"]),
        meta=dict(raw.get("meta", {})),
    )


def load_plan(path):
    with open(path, "r") as f:
        raw = json.load(f)
    return plan_from_dict(raw)


def stats_to_dict(result, params, scenario_sha, extra=None):
    out = {
        "format": STATS_FORMAT,
        "version": __version__,
        "seed": params.seed,
        "scenario_sha256": scenario_sha,
        "status": result.status,
        "solved": result.solved,
        "tree_size": len(result.tree),
        "plan_length": None if result.plan is None else len(result.plan),
        "epsilon": params.epsilon,
        "n_particles": params.n_particles,
        "baseline": params.baseline,
    }
    out.update(result.stats.as_dict())
    if extra:
        out.update(extra)
    return out
