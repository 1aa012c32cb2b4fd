"""Force-directed layout of the technology graph.

Force model: degree-scaled repulsion between all node pairs, linear
edge attraction proportional to distance times weight^edge_weight_influence,
gravity toward the origin proportional to degree+1, and an adaptive global
speed driven by the swing/traction balance. The pairwise repulsion is the
hot loop; it runs in the compiled kernel when available (exact or
Barnes-Hut) and falls back to NumPy otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fa2_np
from .errors import TechmapError
from .graph import TechnologyGraph

try:
    from . import _fa2
except ImportError:  # compiled kernel not built
    _fa2 = None


class LayoutError(TechmapError):
    pass


def available_backends() -> list[str]:
    return (["c"] if _fa2 is not None else []) + ["numpy"]


def get_backend(name: str = "auto"):
    if name == "auto":
        return _fa2 if _fa2 is not None else _fa2_np
    if name in ("c", "cython"):
        if _fa2 is None:
            raise LayoutError("compiled layout kernel is not available")
        return _fa2
    if name in ("numpy", "python"):
        return _fa2_np
    raise LayoutError(f"unknown layout backend {name!r}")


@dataclass(frozen=True)
class LayoutParams:
    k_repulsion: float = 10.0
    gravity: float = 1.0
    edge_weight_influence: float = 1.0
    use_barnes_hut: bool = False
    theta: float = 1.2
    jitter_tolerance: float = 1.0


@dataclass
class LayoutState:
    positions: np.ndarray          # (n, 2)
    mass: np.ndarray               # degree + 1
    edges_u: np.ndarray
    edges_v: np.ndarray
    edge_attraction: np.ndarray    # weight ** edge_weight_influence
    forces: np.ndarray = None
    old_forces: np.ndarray = None
    speed: float = 1.0
    speed_efficiency: float = 1.0
    iterations_done: int = 0
    last_max_displacement: float = math.inf

    def __post_init__(self):
        n = self.positions.shape[0]
        if self.forces is None:
            self.forces = np.zeros((n, 2))
        if self.old_forces is None:
            self.old_forces = np.zeros((n, 2))


@dataclass
class LayoutResult:
    positions: dict[str, tuple[float, float]]
    iterations: int
    converged: bool
    backend: str


def _graph_arrays(graph: TechnologyGraph, params: LayoutParams):
    n = graph.n_nodes
    degree = np.zeros(n)
    us, vs, ws = [], [], []
    for edge in graph.sorted_edges():
        degree[edge.u] += 1
        degree[edge.v] += 1
        us.append(edge.u)
        vs.append(edge.v)
        ws.append(edge.total_weight)
    mass = degree + 1.0
    attraction = np.asarray(ws, dtype=np.float64) ** params.edge_weight_influence
    return mass, np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64), attraction


def initialize(graph: TechnologyGraph, seed: int = 0, params: LayoutParams | None = None) -> LayoutState:
    """Seeded start positions, uniform in a disk of radius sqrt(n), with
    coincident points jittered apart."""
    if graph.n_nodes == 0:
        raise LayoutError("cannot lay out an empty graph")
    params = params or LayoutParams()
    n = graph.n_nodes
    rng = np.random.default_rng(seed)
    radius = math.sqrt(n) * np.sqrt(rng.uniform(0.0, 1.0, n))
    angle = rng.uniform(0.0, 2.0 * math.pi, n)
    pos = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    # jitter exact duplicates (astronomically rare from a continuous RNG)
    while True:
        _, first_index = np.unique(pos, axis=0, return_index=True)
        if len(first_index) == n:
            break
        dupes = np.setdiff1d(np.arange(n), first_index)
        pos[dupes] += rng.normal(0.0, 1e-9, (len(dupes), 2))
    mass, us, vs, attraction = _graph_arrays(graph, params)
    return LayoutState(positions=pos, mass=mass, edges_u=us, edges_v=vs,
                       edge_attraction=attraction)


def step(state: LayoutState, params: LayoutParams, backend=None) -> LayoutState:
    """One layout iteration; mutates and returns the state."""
    kernel = backend or get_backend("auto")
    pos = state.positions
    n = pos.shape[0]
    force = state.forces
    force[:] = 0.0

    if params.use_barnes_hut:
        kernel.repulsion_bh(pos, state.mass, force, params.k_repulsion, params.theta)
    else:
        kernel.repulsion_exact(pos, state.mass, force, params.k_repulsion)

    # linear attraction along edges: F = d * w^influence toward the peer
    if len(state.edges_u):
        delta = pos[state.edges_u] - pos[state.edges_v]
        pull = delta * state.edge_attraction[:, None]
        np.add.at(force, state.edges_u, -pull)
        np.add.at(force, state.edges_v, pull)

    # gravity toward the origin, constant magnitude g * (deg + 1)
    if params.gravity != 0.0:
        dist = np.sqrt(np.sum(pos * pos, axis=1))
        safe = np.where(dist > 1e-12, dist, 1.0)
        g = params.gravity * state.mass / safe
        g[dist <= 1e-12] = 0.0
        force -= pos * g[:, None]

    # adaptive speed from the swing/traction balance
    diff = force - state.old_forces
    summ = force + state.old_forces
    swinging = state.mass * np.sqrt(np.sum(diff * diff, axis=1))
    traction = 0.5 * state.mass * np.sqrt(np.sum(summ * summ, axis=1))
    total_swinging = float(np.sum(swinging))
    total_traction = float(np.sum(traction))

    speed = state.speed
    efficiency = state.speed_efficiency
    if total_traction > 0.0:
        estimated_jt = 0.05 * math.sqrt(n)
        jt = params.jitter_tolerance * max(
            math.sqrt(estimated_jt),
            min(10.0, estimated_jt * total_traction / (n * n)),
        )
        if total_swinging > 0.0 and total_swinging / total_traction > 2.0:
            if efficiency > 0.05:
                efficiency *= 0.5
            jt = max(jt, params.jitter_tolerance)
        if total_swinging == 0.0:
            target_speed = math.inf
        else:
            target_speed = jt * efficiency * total_traction / total_swinging
        if total_swinging > jt * total_traction:
            if efficiency > 0.05:
                efficiency *= 0.7
        elif speed < 1000.0:
            efficiency *= 1.3
        speed = speed + min(target_speed - speed, 0.5 * speed)

    factor = speed / (1.0 + np.sqrt(speed * swinging))
    displacement = force * factor[:, None]
    pos += displacement

    if not np.isfinite(pos).all():
        raise LayoutError("layout diverged to non-finite coordinates "
                          "(check repulsion/gravity parameters)")

    state.old_forces, state.forces = state.forces, state.old_forces
    state.speed = speed
    state.speed_efficiency = efficiency
    state.iterations_done += 1
    state.last_max_displacement = float(np.max(np.sqrt(np.sum(displacement * displacement, axis=1))))
    return state


def run(
    graph: TechnologyGraph,
    params: LayoutParams | None = None,
    max_iter: int = 1000,
    eps: float | None = None,
    seed: int = 0,
    backend: str = "auto",
) -> LayoutResult:
    """Iterate until the max per-node displacement drops below eps
    (default 1e-3 * sqrt(n)) or max_iter is reached."""
    params = params or LayoutParams()
    kernel = get_backend(backend)
    state = initialize(graph, seed=seed, params=params)
    if eps is None:
        eps = 1e-3 * math.sqrt(graph.n_nodes)
    converged = False
    for _ in range(max_iter):
        step(state, params, backend=kernel)
        if state.last_max_displacement < eps:
            converged = True
            break
    positions = {
        node.label: (float(state.positions[node.node_id, 0]),
                     float(state.positions[node.node_id, 1]))
        for node in graph.nodes
    }
    return LayoutResult(positions=positions, iterations=state.iterations_done,
                        converged=converged, backend=kernel.BACKEND)
