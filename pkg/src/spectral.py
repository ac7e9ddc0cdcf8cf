"""Exact diagonalization of the transverse field Ising Hamiltonian along an annealing schedule.

``H(s) = a(s) H_M + b(s) H_P`` with the mixer ``H_M = -sum_i sigma^x_i`` (its ground state is the
uniform superposition) and the diagonal problem Hamiltonian ``H_P``. Basis state ``b`` assigns
spin +1 to qubit ``i`` when bit ``n-1-i`` of ``b`` is 0.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, validator
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar

from bounds import choi_bound_global
from embedding import Embedding, broken_chains, embed_model
from errors import BracketExhaustedError, InvalidArgumentError, ResourceLimitError
from ising_core import (
    IsingModel,
    all_assignments,
    energies,
    iter_assignment_blocks,
    normalize_edge,
    scale_model,
)
from topology import Topology, TopologyMeta

logger = logging.getLogger(__name__)

DEFAULT_QUBIT_CAP = 12
BRUTE_FORCE_CAP = 24
DEGENERACY_TOL = 1e-9
GROUND_ATOL = 1e-9


def qubit_cap() -> int:
    """Configured cap, overridable through ``CHAINGAUGE_QUBIT_CAP``."""
    return int(os.environ.get("CHAINGAUGE_QUBIT_CAP", DEFAULT_QUBIT_CAP))


class Schedule(BaseModel):
    """Sampled ``(s, a(s), b(s))`` points, evaluated by linear interpolation.

    ``s = t/T`` is the annealing fraction; the total anneal time ``T`` (100 us on the
    hardware runs) plays no role in the static spectrum.
    """

    s: Tuple[float, ...]
    a: Tuple[float, ...]
    b: Tuple[float, ...]

    class Config:
        frozen = True

    @validator("s")
    def _grid(cls, s):
        if len(s) < 2 or s[0] != 0.0 or s[-1] != 1.0:
            raise ValueError("schedule must start at s=0 and end at s=1")
        if any(t1 <= t0 for t0, t1 in zip(s, s[1:])):
            raise ValueError("schedule s values must be strictly increasing")
        return s

    @validator("a", "b")
    def _same_length(cls, values_, values):
        s = values.get("s")
        if s is not None and len(values_) != len(s):
            raise ValueError("a and b need one value per s")
        return values_

    @classmethod
    def linear(cls) -> "Schedule":
        return cls(s=(0.0, 1.0), a=(1.0, 0.0), b=(0.0, 1.0))

    def at(self, s: float) -> Tuple[float, float]:
        return float(np.interp(s, self.s, self.a)), float(np.interp(s, self.s, self.b))


def load_schedule(path: Union[str, Path]) -> Schedule:
    """Read a ``s,a,b`` CSV file sorted by ``s``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return Schedule(
            s=tuple(float(r["s"]) for r in rows),
            a=tuple(float(r["a"]) for r in rows),
            b=tuple(float(r["b"]) for r in rows),
        )
    except (KeyError, ValueError) as e:
        raise InvalidArgumentError(f"malformed schedule {path}: {e}") from e


class GapProfile(BaseModel):
    """Lowest ``k`` eigenvalues (ascending) at each grid point."""

    s: np.ndarray
    levels: np.ndarray
    k: int

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    def scaled(self, factor: float) -> "GapProfile":
        return GapProfile(s=self.s, levels=self.levels * factor, k=self.k)


class GapResult(BaseModel):
    delta_min: float
    s_star: float
    degenerate: bool = False
    excited_gap: Optional[float] = None
    strength: Optional[float] = None


def _check_cap(n: int, cap: Optional[int]) -> None:
    cap = qubit_cap() if cap is None else cap
    if n > cap:
        raise ResourceLimitError(n, cap)


def mixer_matrix(n: int) -> np.ndarray:
    """Dense ``-sum_i sigma^x_i``."""
    dim = 1 << n
    mixer = np.zeros((dim, dim))
    idx = np.arange(dim)
    for i in range(n):
        mixer[idx, idx ^ (1 << (n - 1 - i))] = -1.0
    return mixer


def problem_diagonal(model: IsingModel) -> np.ndarray:
    return energies(model, all_assignments(model.n))


def build_hamiltonian(
    model: IsingModel,
    s: float,
    schedule: Optional[Schedule] = None,
    cap: Optional[int] = None,
) -> np.ndarray:
    """Real symmetric ``2^n x 2^n`` matrix of ``H(s)``.

    :raises ResourceLimitError: if the model has more qubits than the cap.
    """
    _check_cap(model.n, cap)
    if not 0.0 <= s <= 1.0:
        raise InvalidArgumentError(f"s={s} outside [0, 1]")
    a, b = (schedule or Schedule.linear()).at(s)
    return a * mixer_matrix(model.n) + np.diag(b * problem_diagonal(model))


class _Spectrum:
    """Lowest eigenvalues of ``a H_M + b H_P`` for a fixed model."""

    def __init__(self, model: IsingModel, schedule: Schedule, k: int):
        self.mixer = mixer_matrix(model.n)
        self.diagonal = problem_diagonal(model)
        self.schedule = schedule
        self.k = min(k, self.diagonal.size)

    def levels(self, s: float) -> np.ndarray:
        a, b = self.schedule.at(s)
        h = a * self.mixer
        h[np.diag_indices_from(h)] += b * self.diagonal
        return eigh(h, eigvals_only=True, subset_by_index=[0, self.k - 1])

    def gap(self, s: float) -> float:
        e = self.levels(s)
        return float(e[1] - e[0])


def _grid_levels(spectrum: _Spectrum, grid: np.ndarray, threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(spectrum.levels, grid))
    else:
        rows = [spectrum.levels(s) for s in grid]
    return np.vstack(rows)


def gap_profile(
    model: IsingModel,
    schedule: Optional[Schedule] = None,
    grid_points: int = 201,
    k: int = 4,
    cap: Optional[int] = None,
    threads: int = 1,
) -> GapProfile:
    """Eigenvalues of ``H(s)`` on a uniform grid of annealing fractions."""
    _check_cap(model.n, cap)
    if grid_points < 2:
        raise InvalidArgumentError("a gap profile needs at least 2 grid points")
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    spectrum = _Spectrum(model, schedule or Schedule.linear(), k)
    grid = np.linspace(0.0, 1.0, grid_points)
    logger.debug("diagonalizing %d points of a %d qubit model", grid_points, model.n)
    return GapProfile(s=grid, levels=_grid_levels(spectrum, grid, threads), k=spectrum.k)


def min_gap(profile: GapProfile, degeneracy_tol: float = DEGENERACY_TOL) -> GapResult:
    """Minimum of ``E_1(s) - E_0(s)`` over the grid.

    When the final spectrum is degenerate the result is flagged and ``excited_gap`` holds the
    minimum gap to the first level above the degenerate ground manifold (if tracked).
    """
    if profile.k < 2:
        raise InvalidArgumentError("min_gap needs at least 2 tracked levels")
    gaps = profile.levels[:, 1] - profile.levels[:, 0]
    i = int(np.argmin(gaps))
    final = profile.levels[-1]
    degenerate = bool(final[1] - final[0] < degeneracy_tol)
    excited_gap = None
    if degenerate:
        multiplicity = int(np.sum(final - final[0] < degeneracy_tol))
        if multiplicity < profile.k:
            excited_gap = float(np.min(profile.levels[:, multiplicity] - profile.levels[:, 0]))
        logger.warning("final spectrum is %d-fold degenerate", multiplicity)
    return GapResult(
        delta_min=float(gaps[i]), s_star=float(profile.s[i]), degenerate=degenerate,
        excited_gap=excited_gap,
    )


def refine_min_gap(
    model: IsingModel,
    profile: GapProfile,
    result: GapResult,
    schedule: Optional[Schedule] = None,
) -> GapResult:
    """Polish the grid minimum with a bounded scalar search between its grid neighbours."""
    if result.degenerate:
        return result
    spectrum = _Spectrum(model, schedule or Schedule.linear(), 2)
    i = int(np.searchsorted(profile.s, result.s_star))
    lo = float(profile.s[max(i - 1, 0)])
    hi = float(profile.s[min(i + 1, profile.s.size - 1)])
    found = minimize_scalar(spectrum.gap, bounds=(lo, hi), method="bounded",
                            options={"xatol": 1e-10})
    if found.fun < result.delta_min:
        return result.copy(update={"delta_min": float(found.fun), "s_star": float(found.x)})
    return result


def rescale_model(model: IsingModel, alpha: float) -> IsingModel:
    """Divide every weight by ``alpha``."""
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha={alpha} must be > 0")
    if alpha == 1:
        return model
    return scale_model(model, alpha)


def rescaling_correspondence(s2: float, alpha: float) -> Tuple[float, float]:
    """Annealing fraction ``s1`` of the original problem matching ``s2`` of the rescaled one.

    Returns ``(s1, factor)`` with ``E_i^{1/alpha}(s2) = factor * E_i(s1)``.
    """
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha={alpha} must be > 0")
    if not 0.0 <= s2 <= 1.0:
        raise InvalidArgumentError(f"s2={s2} outside [0, 1]")
    s1 = s2 / ((alpha - 1.0) * (1.0 - s2) + 1.0)
    return s1, 1.0 + (1.0 / alpha - 1.0) * s2


def inverse_rescaling_correspondence(s1: float, alpha: float) -> float:
    if alpha <= 0:
        raise InvalidArgumentError(f"alpha={alpha} must be > 0")
    return s1 / ((1.0 / alpha) * (1.0 - s1) + s1)


class RescalingCheck(BaseModel):
    alpha: float
    max_deviation: float
    original: GapResult
    rescaled: GapResult


def rescaling_check(
    model: IsingModel,
    alpha: float,
    grid_points: int = 201,
    k: int = 4,
    cap: Optional[int] = None,
) -> RescalingCheck:
    """Compare the rescaled spectrum with the mapped original one under the linear schedule.

    The original spectrum is diagonalized exactly at each mapped ``s1`` rather than
    interpolated.
    """
    _check_cap(model.n, cap)
    schedule = Schedule.linear()
    rescaled_model = rescale_model(model, alpha)
    original = _Spectrum(model, schedule, k)
    rescaled = _Spectrum(rescaled_model, schedule, k)
    grid = np.linspace(0.0, 1.0, grid_points)
    deviation = 0.0
    for s2 in grid:
        s1, factor = rescaling_correspondence(float(s2), alpha)
        diff = rescaled.levels(float(s2)) - factor * original.levels(s1)
        deviation = max(deviation, float(np.max(np.abs(diff))))

    results = []
    for m, spectrum in ((model, original), (rescaled_model, rescaled)):
        profile = GapProfile(s=grid, levels=_grid_levels(spectrum, grid, 1), k=spectrum.k)
        results.append(refine_min_gap(m, profile, min_gap(profile), schedule))
    logger.info("rescaling alpha=%s: max deviation %.3e", alpha, deviation)
    return RescalingCheck(
        alpha=alpha, max_deviation=deviation, original=results[0], rescaled=results[1]
    )


def brute_force_ground(
    model: IsingModel, cap: int = BRUTE_FORCE_CAP, atol: float = GROUND_ATOL
) -> Tuple[float, List[np.ndarray]]:
    """Exhaustive minimum energy and every assignment within ``atol`` of it."""
    if model.n > cap:
        raise ResourceLimitError(model.n, cap, "variables")
    best = np.inf
    rows: List[np.ndarray] = []
    values: List[float] = []
    for _, block in iter_assignment_blocks(model.n):
        e = energies(model, block)
        best = min(best, float(e.min()))
        keep = e <= best + atol
        rows.extend(block[keep])
        values.extend(e[keep].tolist())
    minimizers = [row for row, value in zip(rows, values) if value <= best + atol]
    return best, minimizers


def _ground_states_unbroken(model: IsingModel, e: Embedding, target: Topology, strength: float,
                            cap: int) -> bool:
    em = embed_model(model, e, target, strength)
    _, minimizers = brute_force_ground(em.physical, cap)
    return not broken_chains(np.array(minimizers), em).any()


def min_maintaining_strength(
    model: IsingModel,
    e: Embedding,
    target: Topology,
    tol: float = 1e-3,
    cap: int = BRUTE_FORCE_CAP,
) -> float:
    """Smallest chain strength (within ``tol``) at which no ground state breaks a chain.

    Bisection over ``[0, choi_bound_global + 1]``.

    :raises BracketExhaustedError: if even the bracket's upper end breaks a chain.
    """
    if e.total_qubits > cap:
        raise ResourceLimitError(e.total_qubits, cap)
    if all(len(chain) == 1 for chain in e.phi.values()):
        return 0.0
    lo, hi = 0.0, choi_bound_global(model).magnitude + 1.0
    if not _ground_states_unbroken(model, e, target, hi, cap):
        raise BracketExhaustedError(f"ground states break a chain even at strength {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _ground_states_unbroken(model, e, target, mid, cap):
            hi = mid
        else:
            lo = mid
        logger.debug("maintaining strength bracket [%s, %s]", lo, hi)
    return hi


ENCODINGS = ("chain", "cycle", "clique")


def encode_logical_qubit(
    model: IsingModel, v: int, kind: str, size: int = 4
) -> Tuple[Topology, Embedding]:
    """Target graph and embedding replacing logical vertex ``v`` by ``size`` physical qubits.

    The qubits of ``v`` are wired as a path, a ring or a complete graph; the neighbours of
    ``v`` attach to them round-robin. Every other vertex keeps a single qubit with its own id.
    """
    if kind not in ENCODINGS:
        raise InvalidArgumentError(f"unknown encoding {kind!r}, expected one of {ENCODINGS}")
    if not 0 <= v < model.n:
        raise InvalidArgumentError(f"unknown vertex {v}")
    if size < 1 or (kind == "cycle" and size < 3):
        raise InvalidArgumentError(f"{kind} encoding cannot have {size} qubits")
    chain = [v] + list(range(model.n, model.n + size - 1))
    couplers = set()
    if kind == "clique":
        couplers |= {normalize_edge(p, q) for i, p in enumerate(chain) for q in chain[i + 1 :]}
    else:
        couplers |= {normalize_edge(p, q) for p, q in zip(chain, chain[1:])}
        if kind == "cycle":
            couplers.add(normalize_edge(chain[-1], chain[0]))
    neighbors = model.graph.neighbors(v)
    attach = {u: chain[j % size] for j, u in enumerate(neighbors)}
    for a, b in model.graph.edges:
        if v == a:
            couplers.add(normalize_edge(attach[b], b))
        elif v == b:
            couplers.add(normalize_edge(a, attach[a]))
        else:
            couplers.add((a, b))
    qubits = frozenset(range(model.n + size - 1))
    phi = {u: (u,) for u in range(model.n)}
    phi[v] = tuple(chain)
    target = Topology(
        qubits=qubits, couplers=frozenset(couplers), meta=TopologyMeta(family=f"encoding-{kind}")
    )
    return target, Embedding(phi=phi)


def gap_vs_chain_strength(
    model: IsingModel,
    e: Embedding,
    target: Topology,
    strengths: Sequence[float],
    schedule: Optional[Schedule] = None,
    grid_points: int = 201,
    k: int = 2,
    cap: Optional[int] = None,
    refine: bool = True,
) -> List[GapResult]:
    """Minimum spectral gap of the embedded problem for each chain strength."""
    results = []
    for strength in strengths:
        em = embed_model(model, e, target, strength)
        profile = gap_profile(em.physical, schedule, grid_points, k, cap)
        result = min_gap(profile)
        if refine:
            result = refine_min_gap(em.physical, profile, result, schedule)
        results.append(result.copy(update={"strength": float(strength)}))
        logger.info("strength %s: gap %.6f at s=%.4f", strength, result.delta_min, result.s_star)
    return results


def profile_rows(profile: GapProfile) -> List[List[float]]:
    """Rows ``s, E0, ..., Ek-1`` for CSV output."""
    return [[float(s), *map(float, row)] for s, row in zip(profile.s, profile.levels)]
