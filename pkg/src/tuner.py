"""Breaking-chain-rate driven binary search on the chain strength, and the chain scan baseline."""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, validator

from bounds import choi_bound_global
from embedding import (
    EmbeddedModel,
    Embedding,
    avg_chain_break_rate,
    coupler_corruption_stats,
    embed_model,
    unembed,
)
from errors import InvalidArgumentError, TunerError
from ising_core import DEFAULT_H_RANGE, DEFAULT_J_RANGE, Graph, IsingModel, autoscale, cut_size
from sampler import Sampler, derive_seed, sample_embedded
from settings import CB_PRESETS
from topology import Topology

logger = logging.getLogger(__name__)

# cs, step -> average breaking chain rate
RateFn = Callable[[float, int], float]
EmbeddedModelFn = Callable[[float], EmbeddedModel]


class TunerConfig(BaseModel):
    cb_interval: Tuple[float, float]
    cs_interval: Optional[Tuple[float, float]] = None
    shots_per_step: int = 128
    width_tol: Optional[float] = None
    width_tol_rel: float = 1e-3
    max_steps: int = 30
    seed: int = 0

    class Config:
        allow_mutation = False

    @validator("cb_interval")
    def _rate_window(cls, value):
        lo, hi = value
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"breaking chain rate window [{lo}, {hi}] needs 0 <= lo < hi <= 1")
        return value

    @validator("cs_interval")
    def _strength_window(cls, value):
        if value is not None:
            lo, hi = value
            if not 0.0 <= lo < hi:
                raise ValueError(f"chain strength interval [{lo}, {hi}] needs 0 <= lo < hi")
        return value

    @validator("shots_per_step", "max_steps")
    def _positive(cls, value: int):
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @validator("width_tol", "width_tol_rel")
    def _positive_tol(cls, value):
        if value is not None and value <= 0:
            raise ValueError("width_tol must be > 0")
        return value

    @classmethod
    def from_preset(cls, preset: str, **kwargs) -> "TunerConfig":
        if preset not in CB_PRESETS:
            raise InvalidArgumentError(f"unknown preset {preset!r}")
        return cls(cb_interval=CB_PRESETS[preset], **kwargs)


class TunerStep(BaseModel):
    step: int
    cs: float
    chain_break_rate: float
    lo: float
    hi: float


class TunerTrace(BaseModel):
    records: List[TunerStep] = []
    converged: bool = False
    final_cs: float
    steps: int


class ScanRecord(BaseModel):
    cs: float
    best_cut: int
    mean_energy: float
    avg_break_rate: float
    distinct_corrupted: int


class EmbeddedModelBuilder:
    """Chain strength -> embedded model: spread weights, add chains, then auto-scale."""

    def __init__(
        self,
        model: IsingModel,
        embedding: Embedding,
        target: Topology,
        rescale: bool = True,
        h_range: Sequence[float] = DEFAULT_H_RANGE,
        j_range: Sequence[float] = DEFAULT_J_RANGE,
    ):
        self.logical = model
        self.embedding = embedding
        self.target = target
        self.rescale = rescale
        self.h_range = h_range
        self.j_range = j_range

    def __call__(self, cs: float) -> EmbeddedModel:
        em = embed_model(self.logical, self.embedding, self.target, cs)
        if not self.rescale:
            return em
        physical, factor = autoscale(em.physical, self.h_range, self.j_range)
        logger.debug("chain strength %s: auto-scale factor %s", cs, factor)
        return em.copy(update={"physical": physical})


def search_chain_strength(
    rate_fn: RateFn, config: TunerConfig, upper_bound: Optional[float] = None
) -> TunerTrace:
    """Bisect the chain strength until the breaking chain rate lands in ``cb_interval``.

    Too many breaks raise the lower end, too few lower the upper end. The search also stops,
    unconverged, once the interval is narrower than ``width_tol`` or after ``max_steps``; the
    reported strength is then the smallest tried one whose rate did not exceed the window.
    """
    if config.cs_interval is not None:
        lo, hi = config.cs_interval
    elif upper_bound is not None and upper_bound > 0:
        lo, hi = 0.0, float(upper_bound)
    else:
        raise TunerError("no chain strength interval and no positive upper bound")
    cb_lo, cb_hi = config.cb_interval
    width_tol = config.width_tol or config.width_tol_rel * (hi - lo)

    records: List[TunerStep] = []
    while len(records) < config.max_steps and hi - lo >= width_tol:
        step = len(records) + 1
        cs = (lo + hi) / 2.0
        rate = float(rate_fn(cs, step))
        if cb_lo <= rate <= cb_hi:
            records.append(TunerStep(step=step, cs=cs, chain_break_rate=rate, lo=lo, hi=hi))
            logger.info("step %d: cs=%.6g rate=%.4g converged", step, cs, rate)
            return TunerTrace(records=records, converged=True, final_cs=cs, steps=step)
        if rate > cb_hi:
            lo = cs
        else:
            hi = cs
        records.append(TunerStep(step=step, cs=cs, chain_break_rate=rate, lo=lo, hi=hi))
        logger.info("step %d: cs=%.6g rate=%.4g -> [%.6g, %.6g]", step, cs, rate, lo, hi)

    acceptable = [r.cs for r in records if r.chain_break_rate <= cb_hi]
    final = min(acceptable) if acceptable else hi
    logger.warning("chain strength search stopped unconverged after %d steps", len(records))
    return TunerTrace(records=records, converged=False, final_cs=final, steps=len(records))


def binary_search_chain_strength(
    em_builder: EmbeddedModelFn,
    sampler: Sampler,
    config: TunerConfig,
    logical: Optional[IsingModel] = None,
) -> TunerTrace:
    """Run the search against a sampler; each step samples ``shots_per_step`` shots.

    Without ``cs_interval`` the search starts from ``[0, choi_bound_global(logical)]``, the
    logical model being taken from ``logical`` or from the builder.
    """
    upper = None
    if config.cs_interval is None:
        logical = logical if logical is not None else getattr(em_builder, "logical", None)
        if logical is None:
            raise TunerError("a logical model is needed to derive the default interval")
        upper = choi_bound_global(logical).magnitude

    def rate_fn(cs: float, step: int) -> float:
        em = em_builder(cs)
        ss = sample_embedded(sampler, em, config.shots_per_step, derive_seed(config.seed, step))
        return avg_chain_break_rate(ss, em)

    return search_chain_strength(rate_fn, config, upper)


def evaluate_chain_strength(
    em_builder: EmbeddedModelFn, sampler: Sampler, cs: float, shots: int, g: Graph, seed: int
) -> ScanRecord:
    """Sample once at ``cs`` and summarise cut quality and chain breaks."""
    if cs <= 0:
        raise InvalidArgumentError("chain strength magnitudes must be > 0")
    em = em_builder(cs)
    ss = sample_embedded(sampler, em, shots, seed)
    logical = unembed(ss, em.embedding, seed)
    cuts = [cut_size(g, a) for a in logical]
    return ScanRecord(
        cs=cs,
        best_cut=max(cuts),
        mean_energy=float(np.dot(ss.energies, ss.occurrences)) / ss.shots,
        avg_break_rate=avg_chain_break_rate(ss, em),
        distinct_corrupted=coupler_corruption_stats(ss, em).distinct,
    )


def chain_scan(
    em_builder: EmbeddedModelFn,
    sampler: Sampler,
    cs_list: Sequence[float],
    shots: int,
    g: Graph,
    seed: int = 0,
) -> List[ScanRecord]:
    """Evaluate every chain strength of ``cs_list`` in order."""
    if not cs_list:
        raise InvalidArgumentError("cs_list is empty")
    records = []
    for i, cs in enumerate(cs_list):
        record = evaluate_chain_strength(em_builder, sampler, cs, shots, g, derive_seed(seed, i))
        logger.info(
            "scan cs=%.6g best cut %d, break rate %.4g", cs, record.best_cut, record.avg_break_rate
        )
        records.append(record)
    return records


def plateau_detect(records: Sequence[ScanRecord], rel_tol: float = 0.02) -> float:
    """Smallest scanned strength whose best cut is within ``rel_tol`` of the scan maximum."""
    if len(records) < 3:
        raise InvalidArgumentError("plateau detection needs at least 3 scan records")
    if any(b.cs <= a.cs for a, b in zip(records, records[1:])):
        raise InvalidArgumentError("scan records must be sorted by ascending chain strength")
    threshold = max(r.best_cut for r in records) * (1.0 - rel_tol)
    return next(r.cs for r in records if r.best_cut >= threshold)


def trace_rows(trace: TunerTrace) -> List[list]:
    return [
        [r.step, r.cs, r.chain_break_rate, r.lo, r.hi, int(trace.converged and r.step == trace.steps)]
        for r in trace.records
    ]


def scan_rows(records: Sequence[ScanRecord]) -> List[list]:
    return [
        [r.cs, r.best_cut, r.mean_energy, r.avg_break_rate, r.distinct_corrupted] for r in records
    ]
