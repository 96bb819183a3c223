"""Search tree over reachable sets.

Every node stores a full particle set; nearest-neighbor queries run against
the nominal representatives only, through a kd-tree that is rebuilt when the
node count doubles.  Query answers are made exact (identical to a linear
scan, ties to the lowest node id) by re-checking candidates with the same
arithmetic the linear scan uses, so the index is purely an accelerator.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

# below this size a vectorized linear scan beats the index
LINEAR_SCAN_LIMIT = 64


@dataclass(frozen=True)
class Edge:
    """Segment from parent to child: commanded control held for tau."""

    u: np.ndarray
    tau: float
    ext_id: int
    mode: int | None = None   # commanded mode, hybrid systems only


@dataclass
class Node:
    id: int
    parent: int | None
    reach: object              # ParticleSet
    edge: Edge | None          # None at the root

    @property
    def nominal(self):
        return self.reach.nominal

    @property
    def t(self):
        return self.reach.t


@dataclass(frozen=True)
class PlanStep:
    u: tuple
    tau: float
    ext_id: int
    node_id: int
    mode: int | None = None


@dataclass(frozen=True)
class Plan:
    """Solved path: controls plus everything needed for exact replay."""

    steps: tuple
    seed: int
    system: str
    solved_node: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.steps)


class DualTree:
    """Tree of reachable sets with an exact nearest-nominal index.

    `weights` scales state coordinates before distances are taken, which is
    how position and velocity units are traded off; with no weights the
    metric is plain Euclidean on the full state.
    """

    def __init__(self, root_reach, weights=None):
        dim = root_reach.nominal.shape[0]
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        if self.weights is not None and self.weights.shape != (dim,):
            raise ValueError("weights must match the state dimension")
        self.nodes = []
        self._scaled = np.empty((16, dim))
        self._kd = None
        self._kd_size = 0
        self.add_node(None, root_reach, None)

    def __len__(self):
        return len(self.nodes)

    def _scale(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.weights is None else x * self.weights

    def add_node(self, parent_id, reach, edge):
        if parent_id is not None and not (0 <= parent_id < len(self.nodes)):
            raise ValueError(f"parent {parent_id} not in tree")
        nid = len(self.nodes)
        node = Node(id=nid, parent=parent_id, reach=reach, edge=edge)
        self.nodes.append(node)
        if nid >= len(self._scaled):
            grown = np.empty((2 * len(self._scaled), self._scaled.shape[1]))
            grown[:nid] = self._scaled[:nid]
            self._scaled = grown
        self._scaled[nid] = self._scale(reach.nominal)
        self._maybe_rebuild()
        return nid

    def _maybe_rebuild(self):
        n = len(self.nodes)
        if n >= LINEAR_SCAN_LIMIT and n >= 2 * max(self._kd_size, 1):
            self._kd = cKDTree(self._scaled[:n].copy())
            self._kd_size = n

    def _exact_dists(self, xs, ids):
        pts = self._scaled[ids]
        d = pts - xs[None, :]
        return np.sqrt((d * d).sum(axis=1))

    def nearest_nominal(self, x):
        """Nearest node by scaled Euclidean distance; ties take the lowest id.

        Matches a linear scan exactly: the kd-tree only proposes a radius,
        and every node within it is re-measured with the scan's arithmetic.
        """
        n = len(self.nodes)
        xs = self._scale(x)
        if self._kd is None or n < LINEAR_SCAN_LIMIT:
            ids = np.arange(n)
        else:
            _, cand = self._kd.query(xs)
            overlay = np.arange(self._kd_size, n)
            r = self._exact_dists(xs, np.array([cand])).min()
            if len(overlay):
                r = min(r, self._exact_dists(xs, overlay).min())
            # widen by one part in 1e9: covers last-ulp disagreement between
            # the index's distance arithmetic and ours
            near = self._kd.query_ball_point(xs, r * (1.0 + 1e-9) + 1e-12)
            ids = np.concatenate([np.asarray(near, dtype=int), overlay])
        dists = self._exact_dists(xs, ids)
        best = dists.min()
        best_id = int(ids[dists <= best].min())
        return best_id, float(best)

    def range_nominal(self, x, radius):
        """Ids of nodes within the closed scaled ball, ascending."""
        n = len(self.nodes)
        xs = self._scale(x)
        if self._kd is None or n < LINEAR_SCAN_LIMIT:
            ids = np.arange(n)
        else:
            near = self._kd.query_ball_point(xs, radius * (1.0 + 1e-9) + 1e-12)
            ids = np.concatenate([np.asarray(near, dtype=int),
                                  np.arange(self._kd_size, n)])
        if len(ids) == 0:
            return []
        dists = self._exact_dists(xs, ids)
        keep = np.sort(ids[dists <= radius])
        return [int(i) for i in keep]


def build_path(tree, leaf_id, seed, system_name, meta=None):
    """Assemble the root-to-leaf plan.

    Steps carry node ids and extension ids, so a replay can re-derive the
    exact disturbance streams of the original growth.
    """
    chain = []
    nid = leaf_id
    while nid is not None:
        node = tree.nodes[nid]
        chain.append(node)
        nid = node.parent
    chain.reverse()
    steps = []
    for node in chain[1:]:
        e = node.edge
        steps.append(PlanStep(
            u=tuple(float(v) for v in e.u),
            tau=float(e.tau),
            ext_id=int(e.ext_id),
            node_id=int(node.id),
            mode=None if e.mode is None else int(e.mode),
        ))
    return Plan(
        steps=tuple(steps),
        seed=int(seed),
        system=system_name,
        solved_node=int(leaf_id),
        meta=dict(meta or {}),
    )
