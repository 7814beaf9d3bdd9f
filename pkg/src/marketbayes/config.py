from __future__ import annotations

from dataclasses import asdict, dataclass, replace

SEQUENTIAL = "sequential"
SNAPSHOT = "snapshot-parallel"


@dataclass(frozen=True)
class SolverConfig:
    """Agent parameters and auction settings for one run.

    ``sigma``, ``endowment``, ``beta`` and ``y_max`` are baked into the agents
    at compile time; the remaining fields steer the price auction.
    """

    sigma: float = 50.0
    endowment: float = 10.0
    beta: float = 100.0
    y_max: float = 1e4
    tol: float = 1e-3
    max_rounds: int = 10_000
    init_price: float = 0.5
    bracket: tuple[float, float] = (1e-6, 1.0)
    # upper bracket is widened to this once if demand is still positive at bracket[1]
    bracket_expand: float | None = 2.0
    mode: str = SEQUENTIAL
    # snapshot rounds commit old + relaxation * (cleared - old); undamped Jacobi oscillates
    snapshot_relaxation: float = 0.5
    # "tail": also require the geometric estimate of remaining error to be below tol
    stop_rule: str = "tail"
    # contraction assumed before two rounds have been observed
    assumed_contraction: float = 0.95
    k_clamp: float = 1e-6
    price_floor: float = 1e-9
    max_nodes: int = 64
    max_parents: int = 12
    trace_length: int = 256
    auto_moralize: bool = True

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < lo < hi:
            raise ValueError(f"bracket must satisfy 0 < lower < upper, got {self.bracket}")
        if not lo <= self.init_price <= hi:
            raise ValueError(f"init_price {self.init_price} outside bracket {self.bracket}")
        if not self.sigma > 1:
            raise ValueError("sigma must exceed 1")
        if not self.endowment > 0:
            raise ValueError("endowment must be positive")
        if not (self.beta > 0 and self.y_max > 0):
            raise ValueError("beta and y_max must be positive")
        if self.mode not in (SEQUENTIAL, SNAPSHOT):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.snapshot_relaxation <= 1:
            raise ValueError("snapshot_relaxation must lie in (0, 1]")
        if self.stop_rule not in ("tail", "delta"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")
        if not 0 <= self.assumed_contraction < 1:
            raise ValueError("assumed_contraction must lie in [0, 1)")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.bracket_expand is not None and self.bracket_expand <= hi:
            raise ValueError("bracket_expand must exceed the upper bracket")

    def with_(self, **changes) -> SolverConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d
