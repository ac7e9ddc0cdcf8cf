"""Hardware target graphs: the Chimera family, qubit masking and the clique cross embedding."""

import logging
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Tuple, Union

import dwave_networkx as dnx
import networkx as nx
from pydantic import BaseModel, validator

from errors import InvalidArgumentError
from ising_core import Edge, normalize_edge, read_json

logger = logging.getLogger(__name__)

VERTICAL = 0
HORIZONTAL = 1


class TopologyMeta(BaseModel):
    family: str
    m: Optional[int] = None
    l: Optional[int] = None  # noqa: E741

    class Config:
        frozen = True


class Topology(BaseModel):
    """Physical target graph; qubit ids need not be contiguous."""

    qubits: FrozenSet[int]
    couplers: FrozenSet[Edge] = frozenset()
    meta: Optional[TopologyMeta] = None

    class Config:
        frozen = True

    @validator("couplers")
    def _couplers_on_qubits(cls, couplers, values):
        qubits = values.get("qubits", frozenset())
        normalized = set()
        for p, q in couplers:
            if p == q:
                raise ValueError(f"self-coupler on qubit {p}")
            if p not in qubits or q not in qubits:
                raise ValueError(f"coupler ({p}, {q}) touches a missing qubit")
            normalized.add(normalize_edge(p, q))
        return frozenset(normalized)

    def has_coupler(self, p: int, q: int) -> bool:
        return normalize_edge(p, q) in self.couplers

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.qubits))
        g.add_edges_from(sorted(self.couplers))
        return g


def chimera_index(r: int, c: int, side: int, k: int, m: int, l: int) -> int:  # noqa: E741
    """Linear id ``((r*m + c)*2 + side)*l + k`` of a square chimera(m, l) qubit."""
    return dnx.chimera_coordinates(m, m, l).chimera_to_linear((r, c, side, k))


def chimera_coordinates(q: int, m: int, l: int) -> Tuple[int, int, int, int]:  # noqa: E741
    """Inverse of :func:`chimera_index`: ``(row, column, side, k)``."""
    r, c, side, k = dnx.chimera_coordinates(m, m, l).linear_to_chimera(q)
    return int(r), int(c), int(side), int(k)


def chimera(m: int, l: int = 4) -> Topology:  # noqa: E741
    """m x m grid of K_{l,l} unit cells.

    Side 0 qubits chain vertically between cells, side 1 qubits horizontally.
    """
    if m < 1 or l < 1:
        raise InvalidArgumentError(f"chimera needs m >= 1 and l >= 1, got m={m}, l={l}")
    g = dnx.chimera_graph(m, m, l)
    return Topology(
        qubits=frozenset(int(q) for q in g.nodes),
        couplers=frozenset(normalize_edge(int(p), int(q)) for p, q in g.edges),
        meta=TopologyMeta(family="chimera", m=m, l=l),
    )


def chimera_clique_embedding(m: int):
    """Cross construction of a K_{4m} minor in a fully working chimera(m, 4).

    Logical vertex i (block b = i // 4, lane k = i % 4) takes the vertical line of column b
    and the horizontal line of row b on lane k; both lines meet in cell (b, b).
    """
    from embedding import Embedding

    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    to_linear = dnx.chimera_coordinates(m, m, 4).chimera_to_linear
    phi = {}
    for i in range(4 * m):
        b, k = divmod(i, 4)
        chain = [to_linear((r, b, VERTICAL, k)) for r in range(m)]
        chain += [to_linear((b, c, HORIZONTAL, k)) for c in range(m)]
        phi[i] = tuple(chain)
    return Embedding(phi=phi)


def remove_qubits(t: Topology, dead: Iterable[int]) -> Topology:
    """Drop inoperable qubits and every coupler touching them."""
    dead = frozenset(dead)
    unknown = dead - t.qubits
    if unknown:
        raise InvalidArgumentError(f"unknown qubit ids {sorted(unknown)}")
    if not dead:
        return t
    logger.debug("removing %d qubits", len(dead))
    return Topology(
        qubits=t.qubits - dead,
        couplers=frozenset(e for e in t.couplers if e[0] not in dead and e[1] not in dead),
        meta=t.meta,
    )


def topology_from_dict(data: dict) -> Topology:
    meta = data.get("meta")
    try:
        return Topology(
            qubits=frozenset(int(q) for q in data["qubits"]),
            couplers=frozenset((int(p), int(q)) for p, q in data.get("couplers", [])),
            meta=TopologyMeta(**meta) if meta else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"malformed topology: {e}") from e


def topology_to_dict(t: Topology) -> dict:
    out = {"qubits": sorted(t.qubits), "couplers": [list(e) for e in sorted(t.couplers)]}
    if t.meta is not None:
        out["meta"] = t.meta.dict(exclude_none=True)
    return out


def load_topology(path: Union[str, Path]) -> Topology:
    return topology_from_dict(read_json(path))
