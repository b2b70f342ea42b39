"""Experiment configuration: one JSON-serializable dataclass plus flag overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

from .errors import DomainError


@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible run parameters shared by the command-line subcommands."""

    N: int = 1
    k: float = 1.0
    jmax: int = 8
    lmax: int | None = None
    quad_degree: int | None = None
    rn_ladder: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    seed: int = 0
    tol_scale: float = 1.0
    out_dir: str = "out"
    grid_shape: tuple[int, int, int] = (64, 64, 64)
    grid_half_widths: tuple[float, float] = (4.0, 8.0)
    minimax_seeds: int = 10
    minimax_budget: int = 300
    flow_seeds: int = 20

    def __post_init__(self):
        Q = 2 * self.N + 2
        if not (0 < 2 * self.k < Q):
            raise DomainError(f"need 0 < 2k < Q = {Q}")
        ladder = tuple(float(r) for r in self.rn_ladder)
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise DomainError("rn_ladder must decrease strictly")
        object.__setattr__(self, "rn_ladder", ladder)
        if self.tol_scale <= 0:
            raise DomainError("tol_scale must be positive")

    @property
    def lmax_resolved(self) -> int:
        return self.jmax if self.lmax is None else self.lmax

    @staticmethod
    def from_json(path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        for key in ("rn_ladder", "grid_shape", "grid_half_widths"):
            if key in data and isinstance(data[key], list):
                data[key] = tuple(data[key])
        return ExperimentConfig(**data)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        clean = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **clean) if clean else self

    def to_json(self) -> str:
        data = asdict(self)
        return json.dumps(data, indent=1, sort_keys=True)
