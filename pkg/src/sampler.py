"""Sample generators standing in for the quantum annealer.

Anything that maps ``(model, shots, seed)`` to a :class:`SampleSet` over the model's vertex ids
can drive the tuner; replay files of real annealer runs plug in the same way.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, validator
from scipy import sparse

from embedding import EmbeddedModel, SampleSet, load_sampleset
from errors import DataIntegrityError, InvalidArgumentError, ResourceLimitError
from ising_core import IsingModel, all_assignments, energies

logger = logging.getLogger(__name__)

GIBBS_CAP = 20
ENERGY_TOL = 1e-6


class Sampler(Protocol):
    def __call__(self, model: IsingModel, shots: int, seed: int) -> SampleSet:
        ...


class SamplerConfig(BaseModel):
    shots: int = 128
    seed: int = 0
    beta: float = 1.0
    sweeps: int = 128
    beta_hot: float = 0.1
    beta_cold: float = 10.0
    chunk_size: int = 256
    threads: int = 1

    class Config:
        allow_mutation = False

    @validator("shots", "sweeps", "chunk_size", "threads")
    def _at_least_one(cls, value: int):
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @validator("seed")
    def _non_negative_seed(cls, value: int):
        if value < 0:
            raise ValueError("seeds are non-negative integers")
        return value

    @validator("beta")
    def _non_negative_beta(cls, value: float):
        if value < 0:
            raise ValueError("beta must be >= 0")
        return value

    @validator("beta_hot", "beta_cold")
    def _positive_beta(cls, value: float):
        if value <= 0:
            raise ValueError("beta must be > 0")
        return value


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    """Generator of one shot, derived statelessly from ``(seed, shot)``."""
    return np.random.default_rng(np.random.SeedSequence([seed, shot]))


def gibbs_sample(
    model: IsingModel, beta: float, shots: int, seed: int, cap: int = GIBBS_CAP
) -> SampleSet:
    """Exact Boltzmann draws ``p(x) ~ exp(-beta E(x))`` from the enumerated partition function."""
    if model.n > cap:
        raise ResourceLimitError(model.n, cap, "variables")
    if shots < 1 or beta < 0:
        raise InvalidArgumentError("Gibbs sampling needs shots >= 1 and beta >= 0")
    states = all_assignments(model.n)
    e = energies(model, states)
    weights = np.exp(-beta * (e - e.min()))
    rng = np.random.default_rng(seed)
    idx = rng.choice(states.shape[0], size=shots, p=weights / weights.sum())
    return SampleSet.from_shots(range(model.n), states[idx], e[idx], seed)


def _neighbourhoods(model: IsingModel) -> List[Tuple[np.ndarray, np.ndarray]]:
    us, vs, js = model.coupling_arrays()
    n = model.n
    coupling = sparse.coo_matrix(
        (np.concatenate([js, js]), (np.concatenate([us, vs]), np.concatenate([vs, us]))),
        shape=(n, n),
    ).tocsr()
    return [
        (coupling.indices[coupling.indptr[i] : coupling.indptr[i + 1]],
         coupling.data[coupling.indptr[i] : coupling.indptr[i + 1]])
        for i in range(n)
    ]


def _anneal_chunk(
    model: IsingModel, config: SamplerConfig, shots: Sequence[int], betas: np.ndarray
) -> np.ndarray:
    n = model.n
    h = model.h_vector()
    nbrs = _neighbourhoods(model)
    rngs = [shot_rng(config.seed, i) for i in shots]
    x = np.vstack([2.0 * rng.integers(0, 2, size=n) - 1.0 for rng in rngs]).reshape(len(rngs), n)
    for beta in betas:
        u = np.vstack([rng.random(n) for rng in rngs]).reshape(len(rngs), n)
        for i in range(n):
            idx, w = nbrs[i]
            field = h[i] + (x[:, idx] @ w if idx.size else 0.0)
            delta = -2.0 * x[:, i] * field
            accept = (delta <= 0) | (u[:, i] < np.exp(-beta * np.maximum(delta, 0.0)))
            x[accept, i] = -x[accept, i]
    return x.astype(np.int8)


def sa_sample(model: IsingModel, config: SamplerConfig) -> SampleSet:
    """Single spin flip Metropolis sweeps along a geometric inverse temperature ladder.

    Shot ``i`` draws its start state and acceptance numbers from :func:`shot_rng`, so the
    result does not depend on how shots are chunked or threaded.
    """
    betas = np.geomspace(config.beta_hot, config.beta_cold, config.sweeps)
    per_chunk = config.chunk_size
    chunks = [
        range(start, min(config.shots, start + per_chunk))
        for start in range(0, config.shots, per_chunk)
    ]
    if config.threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            parts = list(pool.map(lambda c: _anneal_chunk(model, config, c, betas), chunks))
    else:
        parts = [_anneal_chunk(model, config, c, betas) for c in chunks]
    spins = np.vstack(parts)
    logger.debug("annealed %d shots of a %d spin model", config.shots, model.n)
    return SampleSet.from_shots(range(model.n), spins, energies(model, spins), config.seed)


def check_energies(ss: SampleSet, model: IsingModel, tol: float = ENERGY_TOL) -> None:
    """:raises DataIntegrityError: if stored energies disagree with the model."""
    if sorted(ss.variables) != list(range(model.n)):
        raise DataIntegrityError("sample variables do not match the model's vertices")
    spins = ss.columns_for(range(model.n))
    diff = np.abs(energies(model, spins) - ss.energies)
    if diff.size and diff.max() > tol:
        raise DataIntegrityError(f"stored energy differs from recomputation by {diff.max():.3g}")


def replay_sample(path: Union[str, Path], model: Optional[IsingModel] = None) -> SampleSet:
    """Load a sample set file; energies are cross-checked when a model is supplied."""
    ss = load_sampleset(path)
    if model is not None:
        check_energies(ss, model)
    return ss


class GibbsSampler:
    def __init__(self, beta: float = 1.0, cap: int = GIBBS_CAP):
        self.beta = beta
        self.cap = cap

    def __call__(self, model: IsingModel, shots: int, seed: int) -> SampleSet:
        return gibbs_sample(model, self.beta, shots, seed, self.cap)


class SimulatedAnnealingSampler:
    def __init__(self, config: Optional[SamplerConfig] = None):
        self.config = config or SamplerConfig()

    def __call__(self, model: IsingModel, shots: int, seed: int) -> SampleSet:
        return sa_sample(model, SamplerConfig(**{**self.config.dict(), "shots": shots, "seed": seed}))


class ReplaySampler:
    """Serves a recorded sample set regardless of the requested seed."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def __call__(self, model: IsingModel, shots: int, seed: int) -> SampleSet:
        ss = load_sampleset(self.path)
        if ss.shots != shots:
            logger.warning("replay file holds %d shots, %d requested", ss.shots, shots)
        return ss


def sample_embedded(sampler: Sampler, em: EmbeddedModel, shots: int, seed: int) -> SampleSet:
    """Sample the physical model and label the result with hardware qubit ids."""
    ss = sampler(em.physical, shots, seed)
    if set(ss.variables) == set(em.qubits):
        return ss
    if tuple(ss.variables) == tuple(range(len(em.qubits))):
        return ss.relabeled(em.qubits)
    raise DataIntegrityError("sample set variables match neither physical indices nor qubits")


def derive_seed(seed: int, index: int) -> int:
    """Stateless child seed for step or scan point ``index``."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
