"""Run configuration shared by the trajectory driver, ensembles, and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

DETECTORS = ("homodyne", "photocount")
ENGINES = ("moments", "generic")


@dataclass(frozen=True)
class SimConfig:
    """All parameters of a seeded experiment.

    Defaults reproduce the headline run: kappa = gamma = 0.1, no detuning,
    photon arriving at t0 = 3, horizon t0 + 100 (over ten cavity lifetimes).
    """

    kappa: float = 0.1
    gamma: float = 0.1
    delta: float = 0.0
    t0: float = 3.0
    t_end: float = 103.0
    dt: float = 1e-3
    fock_dim: int = 2
    ntraj: int = 100
    seed: int = 1
    engine: str = "moments"
    detector: str = "homodyne"

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.t_end <= self.t0:
            raise ValueError(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.dt >= 1.0 / (10.0 * max(self.kappa, self.gamma)):
            raise ValueError(
                f"dt = {self.dt} too coarse for rates kappa={self.kappa}, gamma={self.gamma}"
            )
        if self.fock_dim < 1:
            raise ValueError(f"fock_dim must be >= 1, got {self.fock_dim}")
        if self.ntraj < 1:
            raise ValueError(f"ntraj must be >= 1, got {self.ntraj}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.detector not in DETECTORS:
            raise ValueError(f"unknown detector {self.detector!r}")

    def asdict(self) -> dict:
        return asdict(self)

    def with_(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)
