from typing import Tuple

from pydantic import BaseModel, validator

from errors import InvalidArgumentError

CB_PRESETS = {
    "advantage6": (6e-3, 2e-2),
    "advantage2": (2e-2, 5e-2),
}


def parse_range(value) -> Tuple[float, float]:
    """Parse a "lo,hi" string (or a two item sequence) into a float pair."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ValueError(f"expected 'lo,hi', got {value!r}")
    lo, hi = float(parts[0]), float(parts[1])
    return lo, hi


class Settings(BaseModel):
    log_level: str = "INFO"
    threads: int = 1

    qubit_cap: int = 12
    brute_force_cap: int = 24
    gibbs_cap: int = 20

    h_range: Tuple[float, float] = (-2.0, 2.0)
    j_range: Tuple[float, float] = (-1.0, 1.0)

    sa_sweeps: int = 128
    sa_beta_hot: float = 0.1
    sa_beta_cold: float = 10.0
    sa_chunk_size: int = 256
    gibbs_beta: float = 1.0

    shots_per_step: int = 128
    width_tol_rel: float = 1e-3
    max_steps: int = 30

    gap_points: int = 201
    gap_levels: int = 4
    gap_refine: bool = True
    degeneracy_tol: float = 1e-9

    embed_tries: int = 50
    regular_retries: int = 1000
    torque_prefactor: float = 1.414

    class Config:
        allow_mutation = False

    @validator("h_range", "j_range", pre=True)
    def _ranges_contain_zero(cls, value):
        lo, hi = parse_range(value)
        if not lo < 0 < hi:
            raise ValueError(f"range [{lo}, {hi}] must straddle 0")
        return lo, hi

    @validator("log_level")
    def _known_level(cls, value: str):
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value}")
        return value

    @validator(
        "threads",
        "qubit_cap",
        "brute_force_cap",
        "gibbs_cap",
        "sa_sweeps",
        "sa_chunk_size",
        "shots_per_step",
        "max_steps",
        "embed_tries",
        "regular_retries",
    )
    def _positive_int(cls, value: int):
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @validator("gap_points")
    def _enough_points(cls, value: int):
        if value < 2:
            raise ValueError("a gap profile needs at least 2 grid points")
        return value

    @validator("sa_beta_hot", "sa_beta_cold", "width_tol_rel", "torque_prefactor")
    def _positive_float(cls, value: float):
        if value <= 0:
            raise ValueError("must be > 0")
        return value

    @classmethod
    def parse(cls, **options) -> "Settings":
        """Build settings from option names as they appear in config files or on the command line.

        :raises InvalidArgumentError: on an option that is not a setting.
        """
        normalized = {key.strip().lower().replace("-", "_"): value for key, value in options.items()}
        unknown = sorted(set(normalized) - set(cls.__fields__))
        if unknown:
            raise InvalidArgumentError(f"unknown options {unknown}")
        return cls(**normalized)
