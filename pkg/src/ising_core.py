"""Logical Ising problems: graphs, models, energies, instance generators and auto-scale.

Vertices are dense integer ids in ``[0, n)`` so that assignments can be plain spin vectors.
An assignment is a one dimensional ``numpy`` array of ``int8`` values in ``{-1, +1}``.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ValidationError, validator

from errors import GenerationFailureError, InvalidArgumentError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
Assignment = np.ndarray

DEFAULT_H_RANGE = (-2.0, 2.0)
DEFAULT_J_RANGE = (-1.0, 1.0)


def normalize_edge(u: int, v: int) -> Edge:
    """Return the edge key with the smaller endpoint first."""
    return (u, v) if u < v else (v, u)


class Graph(BaseModel):
    """Undirected simple graph on the vertices ``0 .. n-1``."""

    n: int
    edges: FrozenSet[Edge] = frozenset()

    class Config:
        frozen = True

    @validator("n")
    def _non_negative(cls, n: int):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        return n

    @validator("edges")
    def _simple_edges(cls, edges, values):
        n = values.get("n", 0)
        normalized = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) has a vertex outside [0, {n})")
            normalized.add(normalize_edge(u, v))
        return frozenset(normalized)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self, v: int) -> List[int]:
        return sorted(b if a == v else a for a, b in self.edges if v in (a, b))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.sorted_edges())
        return g


class IsingModel(BaseModel):
    """Ising cost function ``sum h_v x_v + sum J_uv x_u x_v`` on a graph.

    Absent ``h`` and ``J`` keys mean a zero weight.
    """

    graph: Graph
    h: Dict[int, float] = {}
    J: Dict[Edge, float] = {}

    class Config:
        allow_mutation = False

    @validator("h")
    def _h_on_vertices(cls, h, values):
        graph = values.get("graph")
        if graph is None:
            return h
        for v in h:
            if not 0 <= v < graph.n:
                raise ValueError(f"h key {v} is not a vertex")
        return h

    @validator("J")
    def _j_on_edges(cls, J, values):
        graph = values.get("graph")
        if graph is None:
            return J
        normalized = {}
        for (u, v), w in J.items():
            key = normalize_edge(u, v)
            if key not in graph.edges:
                raise ValueError(f"J key {key} is not an edge of the graph")
            normalized[key] = w
        return normalized

    @property
    def n(self) -> int:
        return self.graph.n

    def h_vector(self) -> np.ndarray:
        vec = np.zeros(self.n)
        for v, w in self.h.items():
            vec[v] = w
        return vec

    def coupling_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(us, vs, js)`` over the sorted graph edges."""
        edges = self.graph.sorted_edges()
        us = np.array([u for u, _ in edges], dtype=np.int64)
        vs = np.array([v for _, v in edges], dtype=np.int64)
        js = np.array([self.J.get(e, 0.0) for e in edges], dtype=float)
        return us, vs, js


def make_model(n: int, h: Optional[Dict[int, float]] = None, J=None) -> IsingModel:
    """Build a model whose graph is the support of ``J``.

    :raises InvalidArgumentError: if the weights do not describe a valid model.
    """
    J = dict(J or {})
    try:
        graph = Graph(n=n, edges=frozenset(J))
        return IsingModel(graph=graph, h=dict(h or {}), J=J)
    except ValidationError as e:
        raise InvalidArgumentError(str(e)) from e


def as_assignment(a: Union[Sequence[int], np.ndarray], n: int) -> Assignment:
    """Validate a spin vector against a vertex count and return it as an ``int8`` array."""
    spins = np.asarray(a)
    if spins.ndim != 1 or spins.shape[0] != n:
        raise InvalidArgumentError(f"assignment of length {spins.shape} does not match n={n}")
    if not np.all(np.abs(spins) == 1):
        raise InvalidArgumentError("assignment entries must be -1 or +1")
    return spins.astype(np.int8)


def all_assignments(n: int) -> np.ndarray:
    """All ``2^n`` assignments in computational basis order.

    Row ``b`` holds spin ``+1`` for vertex ``i`` when bit ``n-1-i`` of ``b`` is 0, so vertex 0
    is the most significant qubit and the all ``+1`` state comes first.
    """
    return assignment_block(n, 0, 1 << n)


def assignment_block(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def energy(model: IsingModel, a) -> float:
    """Ising cost of one assignment.

    :raises InvalidArgumentError: on a length mismatch.
    """
    spins = as_assignment(a, model.n).astype(float)
    us, vs, js = model.coupling_arrays()
    linear = float(model.h_vector() @ spins)
    quadratic = float(np.sum(js * spins[us] * spins[vs])) if js.size else 0.0
    return linear + quadratic


def energies(model: IsingModel, spins: np.ndarray) -> np.ndarray:
    """Vectorised cost of the rows of a ``(m, n)`` spin matrix."""
    spins = np.asarray(spins)
    if spins.ndim != 2 or spins.shape[1] != model.n:
        raise InvalidArgumentError(f"spin matrix {spins.shape} does not match n={model.n}")
    x = spins.astype(float)
    out = x @ model.h_vector()
    us, vs, js = model.coupling_arrays()
    if js.size:
        out = out + (x[:, us] * x[:, vs]) @ js
    return out


def maxcut_to_ising(g: Graph) -> IsingModel:
    """Max-cut as an Ising problem: every coupler 1, every field 0."""
    return IsingModel(graph=g, h={}, J={e: 1.0 for e in g.sorted_edges()})


def cut_size(g: Graph, a) -> int:
    spins = as_assignment(a, g.n)
    return sum(1 for u, v in g.edges if spins[u] != spins[v])


def scale_model(model: IsingModel, divisor: float) -> IsingModel:
    """Divide every weight by ``divisor``."""
    return IsingModel(
        graph=model.graph,
        h={v: w / divisor for v, w in model.h.items()},
        J={e: w / divisor for e, w in model.J.items()},
    )


def check_range(name: str, rng: Sequence[float]) -> Tuple[float, float]:
    if len(rng) != 2:
        raise InvalidArgumentError(f"{name} must be a [lo, hi] pair")
    lo, hi = float(rng[0]), float(rng[1])
    if not lo < 0 < hi:
        raise InvalidArgumentError(f"{name} [{lo}, {hi}] must be non-empty and straddle 0")
    return lo, hi


def autoscale(
    model: IsingModel,
    h_range: Sequence[float] = DEFAULT_H_RANGE,
    j_range: Sequence[float] = DEFAULT_J_RANGE,
) -> Tuple[IsingModel, float]:
    """Uniformly shrink all weights until they fit the working ranges.

    Returns the scaled model and the divisor, which is 1 when the model already fits.
    """
    h_lo, h_hi = check_range("h_range", h_range)
    j_lo, j_hi = check_range("j_range", j_range)
    h_limit = min(abs(h_lo), abs(h_hi))
    j_limit = min(abs(j_lo), abs(j_hi))
    max_h = max((abs(w) for w in model.h.values()), default=0.0)
    max_j = max((abs(w) for w in model.J.values()), default=0.0)
    factor = max(1.0, max_h / h_limit, max_j / j_limit)
    if factor == 1.0:
        return model, 1.0
    logger.debug("auto-scale divides all weights by %s", factor)
    return scale_model(model, factor), factor


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) random graph, each pair drawn independently from the seeded generator."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p={p} is not a probability")
    g = nx.gnp_random_graph(n, p, seed=seed)
    return Graph(n=n, edges=frozenset(normalize_edge(u, v) for u, v in g.edges()))


def gen_d_regular(n: int, d: int, seed: int, retries: int = 1000) -> Graph:
    """Random d-regular graph from the configuration model, rejecting non-simple pairings.

    :raises InvalidArgumentError: if no d-regular graph on n vertices exists.
    :raises GenerationFailureError: if every pairing in the retry budget was rejected.
    """
    if n < 1 or d < 0 or d >= n:
        raise InvalidArgumentError(f"d-regular graph needs 0 <= d < n, got n={n}, d={d}")
    if (n * d) % 2:
        raise InvalidArgumentError(f"n*d = {n * d} is odd, no {d}-regular graph on {n} vertices")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for attempt in range(retries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        edges = set()
        for u, v in pairs.tolist():
            if u == v or normalize_edge(u, v) in edges:
                break
            edges.add(normalize_edge(u, v))
        else:
            logger.debug("d-regular pairing accepted after %d attempts", attempt + 1)
            return Graph(n=n, edges=frozenset(edges))
    raise GenerationFailureError(f"{d}-regular graph on {n} vertices", retries)


def coupling_rms(model: IsingModel) -> float:
    """Root mean square of the couplers over the edges of the graph."""
    m = len(model.graph.edges)
    if m == 0:
        raise InvalidArgumentError("coupling RMS needs at least one edge")
    total = sum(model.J.get(e, 0.0) ** 2 for e in model.graph.sorted_edges())
    return math.sqrt(total / m)


def iter_assignment_blocks(n: int, block: int = 1 << 16) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield ``(offset, spins)`` blocks covering all ``2^n`` assignments in basis order."""
    total = 1 << n
    for start in range(0, total, block):
        yield start, assignment_block(n, start, min(total, start + block))


def _label_key(label: str):
    return (0, int(label), "") if label.lstrip("-").isdigit() else (1, 0, label)


def read_json(path: Union[str, Path]) -> Any:
    """Load a JSON input file.

    :raises InvalidArgumentError: if the file is not JSON.
    """
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"{path} is not valid JSON: {e}") from e


def _parse_weights(data: dict):
    if not isinstance(data, dict):
        raise InvalidArgumentError("a model file holds a JSON object")
    h_raw = {str(k): float(w) for k, w in (data.get("h") or {}).items()}
    j_raw = {}
    for key, w in (data.get("J") or {}).items():
        parts = [part.strip() for part in str(key).split(",")]
        if len(parts) != 2 or not all(parts):
            raise InvalidArgumentError(f"J key {key!r} is not a 'u,v' vertex pair")
        j_raw[(parts[0], parts[1])] = float(w)
    edge_raw = [(str(u), str(v)) for u, v in data.get("edges", [])]
    return h_raw, j_raw, edge_raw


def model_from_dict(data: dict) -> IsingModel:
    """Parse model (or graph) JSON, remapping non-dense labels to ``0 .. n-1``.

    Graph files use the same layout with empty ``h``/``J`` and an ``edges`` list.

    :raises InvalidArgumentError: on malformed weights, keys or edges.
    """
    try:
        h_raw, j_raw, edge_raw = _parse_weights(data)
        labels = set(h_raw) | {x for e in j_raw for x in e} | {x for e in edge_raw for x in e}
        n = data.get("n")
        dense = n is not None and all(
            lbl.lstrip("-").isdigit() and 0 <= int(lbl) < int(n) for lbl in labels
        )
        if dense:
            index = {lbl: int(lbl) for lbl in labels}
        else:
            ordered = sorted(labels, key=_label_key)
            index = {lbl: i for i, lbl in enumerate(ordered)}
            n = max(len(ordered), int(n or 0))
            logger.info("remapped %d vertex labels to dense ids", len(ordered))

        J = {normalize_edge(index[u], index[v]): w for (u, v), w in j_raw.items()}
        edges = set(J) | {normalize_edge(index[u], index[v]) for u, v in edge_raw}
        graph = Graph(n=int(n), edges=frozenset(edges))
        return IsingModel(graph=graph, h={index[k]: w for k, w in h_raw.items()}, J=J)
    except (AttributeError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"malformed model: {e}") from e


def model_to_dict(model: IsingModel) -> dict:
    return {
        "n": model.n,
        "edges": [list(e) for e in model.graph.sorted_edges()],
        "h": {str(v): model.h[v] for v in sorted(model.h)},
        "J": {f"{u},{v}": model.J[(u, v)] for u, v in sorted(model.J)},
    }


def graph_to_dict(g: Graph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.sorted_edges()], "h": {}, "J": {}}


def load_model(path: Union[str, Path]) -> IsingModel:
    return model_from_dict(read_json(path))


def load_graph(path: Union[str, Path]) -> Graph:
    return load_model(path).graph
