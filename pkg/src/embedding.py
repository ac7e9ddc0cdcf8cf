"""Minor embeddings: validity, weight spreading, majority vote and chain break metrics."""

import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ValidationError, validator
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from errors import DataIntegrityError, EmbeddingNotFoundError, InvalidArgumentError
from ising_core import Edge, Graph, IsingModel, normalize_edge, read_json
from topology import Topology

logger = logging.getLogger(__name__)

Strength = Union[float, Dict[int, float]]

OVERLAP_EXPONENT_CAP = 8


class Embedding(BaseModel):
    """Map ``phi`` from logical vertices to chains of physical qubits.

    ``chain_strength`` is set when every chain shares one magnitude, ``per_chain_strength``
    otherwise. Disjointness is not enforced here; :func:`validate` reports it.
    """

    phi: Dict[int, Tuple[int, ...]]
    chain_strength: Optional[float] = None
    per_chain_strength: Optional[Dict[int, float]] = None

    class Config:
        allow_mutation = False

    @validator("phi")
    def _non_empty_chains(cls, phi):
        for v, chain in phi.items():
            if not chain:
                raise ValueError(f"chain of logical vertex {v} is empty")
            if len(set(chain)) != len(chain):
                raise ValueError(f"chain of logical vertex {v} repeats a qubit")
        return phi

    @validator("chain_strength")
    def _positive_strength(cls, value):
        if value is not None and value <= 0:
            raise ValueError("chain strength magnitude must be > 0")
        return value

    @validator("per_chain_strength")
    def _positive_strengths(cls, value):
        if value is not None and any(w <= 0 for w in value.values()):
            raise ValueError("chain strength magnitudes must be > 0")
        return value

    @property
    def is_global(self) -> bool:
        return self.per_chain_strength is None

    @property
    def logical_n(self) -> int:
        return len(self.phi)

    @property
    def qubits(self) -> List[int]:
        return sorted(q for chain in self.phi.values() for q in chain)

    @property
    def total_qubits(self) -> int:
        return sum(len(chain) for chain in self.phi.values())

    def strength_of(self, v: int) -> Optional[float]:
        if self.per_chain_strength is not None:
            return self.per_chain_strength.get(v)
        return self.chain_strength


class ValidityReport(BaseModel):
    connected: bool
    disjoint: bool
    edges_covered: bool
    disconnected: List[int] = []
    overlapping: List[int] = []
    uncovered: List[Edge] = []

    @property
    def valid(self) -> bool:
        return self.connected and self.disjoint and self.edges_covered


class EmbeddedModel(BaseModel):
    """Physical Ising model built from a logical model and an embedding.

    The physical index space is ``0 .. len(qubits)-1``; ``qubits[i]`` is the hardware id of
    index ``i``. ``ferro_edges`` maps each chain coupler (physical indices) to its logical
    vertex.
    """

    physical: IsingModel
    qubits: Tuple[int, ...]
    ferro_edges: Dict[Edge, int]
    embedding: Embedding
    logical: IsingModel
    logical_n: int

    class Config:
        allow_mutation = False

    def index_of(self) -> Dict[int, int]:
        return {q: i for i, q in enumerate(self.qubits)}

    def ferro_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(us, vs, owners)`` of the chain couplers in sorted order."""
        edges = sorted(self.ferro_edges)
        us = np.array([u for u, _ in edges], dtype=np.int64)
        vs = np.array([v for _, v in edges], dtype=np.int64)
        owners = np.array([self.ferro_edges[e] for e in edges], dtype=np.int64)
        return us, vs, owners


class SampleSet(BaseModel):
    """Distinct spin rows over ``variables`` with their energies and occurrence counts."""

    variables: Tuple[int, ...]
    spins: np.ndarray
    energies: np.ndarray
    occurrences: np.ndarray
    shots: int
    seed: int

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("spins", pre=True)
    def _spin_matrix(cls, spins, values):
        spins = np.asarray(spins, dtype=np.int8)
        width = len(values.get("variables", ()))
        if spins.ndim != 2 or spins.shape[1] != width:
            raise ValueError(f"spin matrix {spins.shape} does not match {width} variables")
        if not np.all(np.abs(spins) == 1):
            raise ValueError("spins must be -1 or +1")
        return spins

    @validator("energies", pre=True)
    def _one_energy_per_row(cls, energies, values):
        energies = np.asarray(energies, dtype=float)
        spins = values.get("spins")
        if spins is not None and energies.shape != (spins.shape[0],):
            raise ValueError("one energy per sample row expected")
        return energies

    @validator("occurrences", pre=True)
    def _positive_occurrences(cls, occurrences, values):
        occurrences = np.asarray(occurrences, dtype=np.int64)
        spins = values.get("spins")
        if spins is not None and occurrences.shape != (spins.shape[0],):
            raise ValueError("one occurrence count per sample row expected")
        if np.any(occurrences < 1):
            raise ValueError("occurrence counts must be >= 1")
        return occurrences

    @validator("shots")
    def _shots_match(cls, shots, values):
        occurrences = values.get("occurrences")
        if shots < 1:
            raise ValueError("a sample set needs at least one shot")
        if occurrences is not None and int(occurrences.sum()) != shots:
            raise ValueError(f"occurrences sum to {int(occurrences.sum())}, expected {shots}")
        return shots

    @classmethod
    def from_shots(
        cls, variables: Sequence[int], spins: np.ndarray, energies: np.ndarray, seed: int
    ) -> "SampleSet":
        """Aggregate one row per shot into distinct rows (sorted) with counts."""
        spins = np.asarray(spins, dtype=np.int8)
        rows, first, counts = np.unique(spins, axis=0, return_index=True, return_counts=True)
        return cls(
            variables=tuple(variables),
            spins=rows,
            energies=np.asarray(energies, dtype=float)[first],
            occurrences=counts,
            shots=int(spins.shape[0]),
            seed=seed,
        )

    def samples(self) -> Iterator[Tuple[np.ndarray, float, int]]:
        for row, e, occ in zip(self.spins, self.energies, self.occurrences):
            yield row, float(e), int(occ)

    def relabeled(self, variables: Sequence[int]) -> "SampleSet":
        """Same samples with new variable labels, e.g. physical indices to hardware ids."""
        if len(variables) != len(self.variables):
            raise InvalidArgumentError("relabeling must keep the variable count")
        return self.copy(update={"variables": tuple(variables)})

    def columns_for(self, qubits: Sequence[int]) -> np.ndarray:
        """Spin matrix restricted and reordered to ``qubits``."""
        position = {q: i for i, q in enumerate(self.variables)}
        missing = [q for q in qubits if q not in position]
        if missing:
            raise InvalidArgumentError(f"sample set has no value for qubits {missing[:10]}")
        return self.spins[:, [position[q] for q in qubits]]


def validate(e: Embedding, source: Graph, target: Topology) -> ValidityReport:
    """Check the three minor-embedding conditions; never raises."""
    tg = target.to_networkx()
    disconnected = []
    owners: Dict[int, List[int]] = {}
    for v in range(source.n):
        chain = e.phi.get(v)
        if not chain or any(q not in target.qubits for q in chain):
            disconnected.append(v)
            continue
        if not nx.is_connected(tg.subgraph(chain)):
            disconnected.append(v)
    for v, chain in e.phi.items():
        for q in chain:
            owners.setdefault(q, []).append(v)
    overlapping = sorted({v for vs in owners.values() if len(vs) > 1 for v in vs})

    uncovered = []
    for u, v in source.sorted_edges():
        if u not in e.phi or v not in e.phi:
            uncovered.append((u, v))
            continue
        other = set(e.phi[v])
        if not any(p in tg and any(q in other for q in tg[p]) for p in e.phi[u]):
            uncovered.append((u, v))
    return ValidityReport(
        connected=not disconnected,
        disjoint=not overlapping,
        edges_covered=not uncovered,
        disconnected=disconnected,
        overlapping=overlapping,
        uncovered=uncovered,
    )


class _QubitRouter:
    """Node weighted cheapest paths over the target graph, in dense qubit indices.

    Entering qubit ``q`` costs ``cost[q]``; the source chain itself is free.
    """

    def __init__(self, target: Topology):
        self.ids = sorted(target.qubits)
        index = {q: i for i, q in enumerate(self.ids)}
        self.n = len(self.ids)
        ends = np.array(
            [(index[p], index[q]) for p, q in sorted(target.couplers)], dtype=np.int64
        ).reshape(-1, 2)
        rows = np.concatenate([ends[:, 0], ends[:, 1]])
        cols = np.concatenate([ends[:, 1], ends[:, 0]])
        self.adjacency = sparse.csr_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(self.n, self.n)
        )
        self.base = float(max(2, self.n))
        self.spread = self._spread()

    def _sweep(self, start: int) -> np.ndarray:
        return dijkstra(self.adjacency, indices=start, unweighted=True)

    def _spread(self) -> np.ndarray:
        """Double sweep eccentricity estimate; the middle of the chip scores lowest."""
        if self.n == 0:
            return np.zeros(0)
        first = self._sweep(0)
        far = self._sweep(int(np.argmax(np.where(np.isfinite(first), first, -1.0))))
        other = self._sweep(int(np.argmax(np.where(np.isfinite(far), far, -1.0))))
        return np.maximum(far, other)

    def costs(self, usage: np.ndarray) -> np.ndarray:
        return np.power(self.base, np.minimum(usage, OVERLAP_EXPONENT_CAP)).astype(float)

    def cheapest(self, sources: Sequence[int], cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """``(dist, pred)`` of the cheapest paths leaving any of ``sources``."""
        adj = self.adjacency
        weighted = sparse.csr_matrix(
            (cost[adj.indices], adj.indices, adj.indptr), shape=(self.n, self.n)
        )
        dist, pred, _ = dijkstra(
            weighted, indices=list(sources), min_only=True, return_predecessors=True
        )
        return dist, pred


def _cheapest(scores: np.ndarray, rng: np.random.Generator) -> Optional[int]:
    finite = np.isfinite(scores)
    if not finite.any():
        return None
    best = scores[finite].min()
    ties = np.flatnonzero(finite & (scores <= best + 1e-9 * max(1.0, abs(best))))
    return int(ties[rng.integers(ties.size)])


class _ChainPlacer:
    """Chains in dense qubit indices with the number of chains holding each qubit."""

    def __init__(self, source: Graph, router: _QubitRouter, rng: np.random.Generator):
        self.router = router
        self.rng = rng
        self.neighbors = [source.neighbors(v) for v in range(source.n)]
        self.phi: Dict[int, List[int]] = {}
        self.usage = np.zeros(router.n, dtype=np.int64)

    def overlaps(self) -> int:
        return int(np.maximum(self.usage - 1, 0).sum())

    def rip_up(self, v: int) -> None:
        self.usage[self.phi.pop(v)] -= 1

    def place(self, v: int) -> bool:
        cost = self.router.costs(self.usage)
        placed = [u for u in self.neighbors[v] if u in self.phi]
        chain = self._route(placed, cost) if placed else self._seed(cost)
        if chain is None:
            return False
        self.phi[v] = chain
        self.usage[chain] += 1
        return True

    def _seed(self, cost: np.ndarray) -> Optional[List[int]]:
        """Root a chain with no placed neighbour next to the current embedding."""
        occupied = np.flatnonzero(self.usage)
        if occupied.size == 0:
            scores = cost + self.router.spread
        else:
            scores, _ = self.router.cheapest(occupied.tolist(), cost)
            scores = scores.copy()
            scores[occupied] = np.inf
            if not np.isfinite(scores).any():
                scores = cost
        root = _cheapest(scores, self.rng)
        return None if root is None else [root]

    def _route(self, placed: List[int], cost: np.ndarray) -> Optional[List[int]]:
        """Root minimizing the summed path cost to every placed neighbour chain.

        The chain is the root plus the union of those paths, source chains excluded.
        """
        total = cost.copy()
        trees = []
        for u in placed:
            dist, pred = self.router.cheapest(self.phi[u], cost)
            extra = dist - cost
            extra[self.phi[u]] = 0.0
            total += extra
            trees.append((set(self.phi[u]), pred))
        root = _cheapest(total, self.rng)
        if root is None:
            return None
        chain, members = [root], {root}
        for sources, pred in trees:
            q = root
            while q not in sources:
                if q not in members:
                    members.add(q)
                    chain.append(q)
                q = int(pred[q])
        return chain


def _greedy_attempt(
    source: Graph, router: _QubitRouter, rng: np.random.Generator, rounds: int
) -> Optional[Dict[int, List[int]]]:
    deg = source.degrees()
    tie = rng.permutation(source.n)
    order = sorted(range(source.n), key=lambda v: (-deg[v], tie[v]))
    placer = _ChainPlacer(source, router, rng)
    for v in order:
        if not placer.place(v):
            logger.debug("greedy embedder dead end at logical vertex %d", v)
            return None

    for r in range(rounds):
        shared = placer.overlaps()
        if not shared:
            break
        logger.debug("refinement round %d starts with %d shared qubits", r, shared)
        for v in rng.permutation(order):
            placer.rip_up(int(v))
            if not placer.place(int(v)):
                return None
    if placer.overlaps():
        logger.debug("chains still share %d qubits after %d rounds", placer.overlaps(), rounds)
        return None
    return {v: [router.ids[q] for q in chain] for v, chain in placer.phi.items()}


def _prune(phi: Dict[int, List[int]], source: Graph, tg: nx.Graph) -> None:
    """Drop chain qubits whose removal keeps every validity condition."""

    def covers(chain, v):
        chain_set = set(chain)
        for u in source.neighbors(v):
            other = set(phi[u])
            if not any(q in other for p in chain_set for q in tg[p]):
                return False
        return True

    changed = True
    while changed:
        changed = False
        for v in sorted(phi):
            for q in list(phi[v]):
                if len(phi[v]) == 1:
                    break
                candidate = [p for p in phi[v] if p != q]
                if nx.is_connected(tg.subgraph(candidate)) and covers(candidate, v):
                    phi[v] = candidate
                    changed = True


def greedy_embed(
    source: Graph,
    target: Topology,
    seed: int = 0,
    max_tries: int = 50,
    max_qubits: Optional[int] = None,
    rounds: int = 64,
) -> Embedding:
    """Place chains one logical vertex at a time along cheapest paths, then refine.

    Vertices go in degree-descending order. Each root minimizes the summed path cost to the
    placed neighbour chains, a qubit held by ``k`` other chains costing ``len(qubits)**k``,
    and the chain grows as the union of those paths. Refinement rounds rip up and reroute
    every chain until no qubit is shared, and a pruning pass drops redundant qubits.

    :raises EmbeddingNotFoundError: if no try produced a valid embedding within budget.
    """
    tg = target.to_networkx()
    router = _QubitRouter(target)
    for attempt in range(max_tries):
        rng = np.random.default_rng([seed, attempt])
        phi = _greedy_attempt(source, router, rng, rounds)
        if phi is None:
            continue
        _prune(phi, source, tg)
        emb = Embedding(phi={v: tuple(phi[v]) for v in sorted(phi)})
        if max_qubits is not None and emb.total_qubits > max_qubits:
            logger.debug("try %d uses %d qubits, budget %d", attempt, emb.total_qubits, max_qubits)
            continue
        if validate(emb, source, target).valid:
            logger.info(
                "embedding found on try %d: %d logical -> %d physical qubits",
                attempt + 1,
                source.n,
                emb.total_qubits,
            )
            return emb
        logger.warning("greedy try %d produced an invalid embedding, retrying", attempt)
    raise EmbeddingNotFoundError(max_tries)


def _strength_map(e: Embedding, strength: Optional[Strength]) -> Dict[int, float]:
    if strength is None:
        if e.chain_strength is None and e.per_chain_strength is None:
            raise InvalidArgumentError("no chain strength given")
        strength = e.chain_strength if e.is_global else e.per_chain_strength
    if isinstance(strength, dict):
        missing = set(e.phi) - set(strength)
        if missing:
            raise InvalidArgumentError(f"no chain strength for logical vertices {sorted(missing)}")
        magnitudes = {v: float(strength[v]) for v in e.phi}
    else:
        magnitudes = {v: float(strength) for v in e.phi}
    if any(w <= 0 for w in magnitudes.values()):
        raise InvalidArgumentError("chain strength magnitudes must be > 0")
    return magnitudes


def embed_model(
    model: IsingModel, e: Embedding, target: Topology, strength: Optional[Strength] = None
) -> EmbeddedModel:
    """Spread logical weights uniformly over chains and couple each chain ferromagnetically.

    Every target coupler inside a chain gets ``-|F(v)|``.

    :raises InvalidArgumentError: if the embedding is not valid for the model's graph.
    """
    report = validate(e, model.graph, target)
    if not report.valid:
        raise InvalidArgumentError(f"invalid embedding: {report.dict()}")
    magnitudes = _strength_map(e, strength)

    qubits = tuple(e.qubits)
    index = {q: i for i, q in enumerate(qubits)}
    h: Dict[int, float] = {}
    for v, chain in e.phi.items():
        share = model.h.get(v, 0.0) / len(chain)
        for q in chain:
            h[index[q]] = share

    J: Dict[Edge, float] = {}
    for u, v in model.graph.sorted_edges():
        links = [
            normalize_edge(index[p], index[q])
            for p in e.phi[u]
            for q in e.phi[v]
            if target.has_coupler(p, q)
        ]
        share = model.J.get((u, v), 0.0) / len(links)
        for link in links:
            J[link] = share

    ferro: Dict[Edge, int] = {}
    for v, chain in e.phi.items():
        for i, p in enumerate(chain):
            for q in chain[i + 1 :]:
                if target.has_coupler(p, q):
                    edge = normalize_edge(index[p], index[q])
                    ferro[edge] = v
                    J[edge] = -magnitudes[v]

    distinct = set(magnitudes.values())
    if len(distinct) == 1:
        stored = e.copy(update={"chain_strength": distinct.pop(), "per_chain_strength": None})
    else:
        stored = e.copy(update={"chain_strength": None, "per_chain_strength": magnitudes})
    physical = IsingModel(graph=Graph(n=len(qubits), edges=frozenset(J)), h=h, J=J)
    return EmbeddedModel(
        physical=physical,
        qubits=qubits,
        ferro_edges=ferro,
        embedding=stored,
        logical=model,
        logical_n=model.n,
    )


def unembed(ss: SampleSet, e: Embedding, seed: int = 0) -> List[np.ndarray]:
    """Majority vote per chain; exact ties are settled by a seeded fair coin.

    Returns one logical assignment per distinct sample row.
    """
    n = e.logical_n
    if sorted(e.phi) != list(range(n)):
        raise InvalidArgumentError("logical vertices must be 0 .. n-1")
    qubits = e.qubits
    spins = ss.columns_for(qubits).astype(np.int64)
    column = {q: i for i, q in enumerate(qubits)}
    membership = np.zeros((len(qubits), n), dtype=np.int64)
    for v, chain in e.phi.items():
        for q in chain:
            membership[column[q], v] = 1
    votes = spins @ membership
    coins = 2 * np.random.default_rng(seed).integers(0, 2, size=votes.shape) - 1
    logical = np.where(votes == 0, coins, np.sign(votes)).astype(np.int8)
    return list(logical)


def broken_chains(spins: np.ndarray, em: EmbeddedModel) -> np.ndarray:
    """Boolean ``(rows, logical_n)`` matrix of chains with a corrupted coupler."""
    us, vs, owners = em.ferro_arrays()
    broken = np.zeros((spins.shape[0], em.logical_n), dtype=bool)
    if owners.size == 0:
        return broken
    corrupted = spins[:, us] != spins[:, vs]
    for v in np.unique(owners):
        broken[:, v] = corrupted[:, owners == v].any(axis=1)
    return broken


def chain_break_rate(a, em: EmbeddedModel) -> float:
    """Fraction of logical qubits with at least one corrupted chain coupler in one shot."""
    spins = np.asarray(a)
    if spins.shape != (len(em.qubits),):
        raise InvalidArgumentError("assignment does not match the physical model")
    if em.logical_n == 0:
        return 0.0
    return float(broken_chains(spins[None, :], em).mean())


def avg_chain_break_rate(ss: SampleSet, em: EmbeddedModel) -> float:
    """Occurrence weighted mean of the per-shot breaking chain rate."""
    if ss.spins.shape[0] == 0:
        raise InvalidArgumentError("empty sample set")
    if em.logical_n == 0:
        return 0.0
    per_row = broken_chains(ss.columns_for(em.qubits), em).sum(axis=1)
    return float(np.dot(per_row, ss.occurrences)) / (em.logical_n * ss.shots)


class CorruptionStats(BaseModel):
    per_edge: Dict[Edge, int]
    mean: float
    median: float
    distinct: int
    simultaneous: Dict[int, Dict[int, int]]


def coupler_corruption_stats(ss: SampleSet, em: EmbeddedModel) -> CorruptionStats:
    """How often each chain coupler is corrupted over all shots.

    ``per_edge`` is keyed by hardware qubit pairs. ``simultaneous[v][k]`` counts the shots in
    which chain ``v`` had exactly ``k >= 1`` corrupted couplers.
    """
    us, vs, owners = em.ferro_arrays()
    spins = ss.columns_for(em.qubits)
    corrupted = (spins[:, us] != spins[:, vs]).astype(np.int64)
    counts = corrupted.T @ ss.occurrences if us.size else np.zeros(0, dtype=np.int64)

    simultaneous: Dict[int, Dict[int, int]] = {}
    for v in np.unique(owners):
        per_row = corrupted[:, owners == v].sum(axis=1)
        tally: Counter = Counter()
        for k, occ in zip(per_row, ss.occurrences):
            if k:
                tally[int(k)] += int(occ)
        if tally:
            simultaneous[int(v)] = dict(sorted(tally.items()))

    per_edge = {
        normalize_edge(em.qubits[u], em.qubits[v]): int(c) for u, v, c in zip(us, vs, counts)
    }
    return CorruptionStats(
        per_edge=per_edge,
        mean=float(counts.mean()) if counts.size else 0.0,
        median=float(np.median(counts)) if counts.size else 0.0,
        distinct=int(np.count_nonzero(counts)),
        simultaneous=simultaneous,
    )


class ChainLengths(BaseModel):
    histogram: Dict[int, int]
    total_qubits: int


def chain_length_histogram(e: Embedding) -> ChainLengths:
    counts = Counter(len(chain) for chain in e.phi.values())
    return ChainLengths(histogram=dict(sorted(counts.items())), total_qubits=e.total_qubits)


def break_rate_by_chain_length(ss: SampleSet, em: EmbeddedModel) -> Dict[int, float]:
    """Average break probability of chains grouped by their length."""
    broken = broken_chains(ss.columns_for(em.qubits), em)
    weighted = (broken.T.astype(float) @ ss.occurrences) / ss.shots
    lengths: Dict[int, List[float]] = {}
    for v, chain in em.embedding.phi.items():
        lengths.setdefault(len(chain), []).append(float(weighted[v]))
    return {length: float(np.mean(rates)) for length, rates in sorted(lengths.items())}


def embedding_ratio(cmr_counts: Sequence[int], cme_counts: Sequence[int]) -> float:
    """Mean of the per-instance qubit count ratios of two embedding methods."""
    if len(cmr_counts) != len(cme_counts) or not cmr_counts:
        raise InvalidArgumentError("qubit count lists must be non-empty and of equal length")
    if any(c <= 0 for c in cme_counts) or any(c <= 0 for c in cmr_counts):
        raise InvalidArgumentError("qubit counts must be positive")
    return float(np.mean([a / b for a, b in zip(cmr_counts, cme_counts)]))


def embedding_from_dict(data: dict) -> Embedding:
    strength = data.get("chain_strength")
    try:
        return Embedding(
            phi={int(v): tuple(int(q) for q in chain) for v, chain in data["phi"].items()},
            chain_strength=strength if not isinstance(strength, dict) else None,
            per_chain_strength=(
                {int(v): float(w) for v, w in strength.items()}
                if isinstance(strength, dict)
                else None
            ),
        )
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"malformed embedding: {e}") from e


def embedding_to_dict(e: Embedding) -> dict:
    out: dict = {"phi": {str(v): list(e.phi[v]) for v in sorted(e.phi)}}
    if e.per_chain_strength is not None:
        out["chain_strength"] = {str(v): e.per_chain_strength[v] for v in sorted(e.per_chain_strength)}
    elif e.chain_strength is not None:
        out["chain_strength"] = e.chain_strength
    return out


def sampleset_to_dict(ss: SampleSet) -> dict:
    return {
        "shots": ss.shots,
        "seed": ss.seed,
        "samples": [
            {
                "spins": {str(q): int(s) for q, s in zip(ss.variables, row)},
                "energy": energy,
                "occurrences": occ,
            }
            for row, energy, occ in ss.samples()
        ],
    }


def sampleset_from_dict(data: dict) -> SampleSet:
    """Parse SampleSet JSON.

    :raises DataIntegrityError: on missing spins or occurrence counts that disagree with shots.
    """
    try:
        samples = data["samples"]
        variables = sorted({int(q) for s in samples for q in s["spins"]})
        rows = []
        for s in samples:
            spins = {int(q): int(x) for q, x in s["spins"].items()}
            if len(spins) != len(variables):
                raise DataIntegrityError("a sample does not assign every qubit")
            rows.append([spins[q] for q in variables])
        return SampleSet(
            variables=tuple(variables),
            spins=np.array(rows, dtype=np.int8).reshape(len(rows), len(variables)),
            energies=np.array([float(s["energy"]) for s in samples]),
            occurrences=np.array([int(s["occurrences"]) for s in samples], dtype=np.int64),
            shots=int(data["shots"]),
            seed=int(data.get("seed", 0)),
        )
    except ValidationError as e:
        raise DataIntegrityError(str(e)) from e
    except (AttributeError, KeyError, TypeError, ValueError) as e:
        raise DataIntegrityError(f"malformed sample set: {e}") from e


def load_sampleset(path: Union[str, Path]) -> SampleSet:
    return sampleset_from_dict(read_json(path))


def load_embedding(path: Union[str, Path]) -> Embedding:
    return embedding_from_dict(read_json(path))
