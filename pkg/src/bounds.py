"""Closed-form chain strength prescriptions.

All functions return magnitudes; the embedding module applies them as negative couplers.
"""

import logging
import math
from typing import Dict, Optional

from pydantic import BaseModel, validator

from errors import InvalidArgumentError
from ising_core import IsingModel, coupling_rms

logger = logging.getLogger(__name__)

TORQUE_PREFACTOR = 1.414


class BoundResult(BaseModel):
    method: str
    magnitude: float
    per_node: Optional[Dict[int, float]] = None

    @validator("magnitude")
    def _non_negative(cls, value: float):
        if value < 0:
            raise ValueError("a bound magnitude is never negative")
        return value

    @validator("per_node")
    def _magnitude_is_max(cls, per_node, values):
        magnitude = values.get("magnitude")
        if per_node and magnitude is not None and magnitude != max(per_node.values()):
            raise ValueError("magnitude must be the maximum of the per-node values")
        return per_node


def choi_bound_node(model: IsingModel, v: int) -> float:
    """``|h_v| + sum |J_uv|`` over the neighbours of ``v``.

    Any chain strength with a strictly larger magnitude keeps the chain of ``v`` intact.
    """
    if not 0 <= v < model.n:
        raise InvalidArgumentError(f"unknown vertex {v}")
    total = abs(model.h.get(v, 0.0))
    for (a, b), w in model.J.items():
        if v in (a, b):
            total += abs(w)
    return total


def choi_bound_global(model: IsingModel) -> BoundResult:
    """Largest per-node Choi threshold: one magnitude sufficient for every chain."""
    if model.n == 0:
        raise InvalidArgumentError("model has no vertices")
    per_node = {v: abs(model.h.get(v, 0.0)) for v in range(model.n)}
    for (a, b), w in model.J.items():
        per_node[a] += abs(w)
        per_node[b] += abs(w)
    return BoundResult(method="choi", magnitude=max(per_node.values()), per_node=per_node)


def per_chain_strengths(model: IsingModel, margin: float = 1e-6) -> Dict[int, float]:
    """Per-chain magnitudes just above each vertex's own Choi threshold."""
    if margin <= 0:
        raise InvalidArgumentError("margin must be > 0")
    return {v: w + margin for v, w in choi_bound_global(model).per_node.items()}


def torque_compensation(model: IsingModel, prefactor: float = TORQUE_PREFACTOR) -> float:
    """``prefactor * sqrt(average degree) * RMS(J)``."""
    edges = len(model.graph.edges)
    if edges == 0:
        raise InvalidArgumentError("torque compensation needs at least one edge")
    avg_degree = 2.0 * edges / model.n
    return prefactor * math.sqrt(avg_degree) * coupling_rms(model)


def raymond_lambda(model: IsingModel, lambda0: float) -> float:
    """``lambda0 * sqrt(sigma^2 N)`` with ``sigma^2 = 2/(N(N-1)) sum J^2``."""
    n = model.n
    if n < 2:
        raise InvalidArgumentError("the coupling variance needs at least 2 vertices")
    if lambda0 < 0:
        raise InvalidArgumentError("lambda0 must be non-negative")
    sigma2 = 2.0 / (n * (n - 1)) * sum(w * w for w in model.J.values())
    return lambda0 * math.sqrt(sigma2 * n)


def bound_by_method(
    model: IsingModel,
    method: str,
    prefactor: float = TORQUE_PREFACTOR,
    lambda0: float = 1.0,
) -> BoundResult:
    if method == "choi":
        return choi_bound_global(model)
    if method == "torque":
        return BoundResult(method=method, magnitude=torque_compensation(model, prefactor))
    if method == "raymond":
        return BoundResult(method=method, magnitude=raymond_lambda(model, lambda0))
    raise InvalidArgumentError(f"unknown bound method {method!r}")
