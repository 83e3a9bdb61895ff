"""Versioned JSON run configurations."""

import itertools
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Type, TypeVar

import numpy as np
from dotenv import load_dotenv

from fracwave.errors import ConfigurationError
from fracwave.fode import DEFAULT_BASE_N, ProblemParams
from fracwave.spectral_pde import DEFAULT_GRID_FACTOR, DEFAULT_MODES_1D, SpectralDomain, SpectralField

SCHEMA_VERSION = 1
SOLVERS = ("fode", "pde")
THREADS_ENV_VAR = "FRACWAVE_THREADS"

T = TypeVar("T")


def _build(cls: Type[T], data: Any, section: str) -> T:
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise ConfigurationError(f"'{section}' must be an object", section=section)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown field(s) in '{section}': {', '.join(unknown)}", section=section)
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigurationError(f"invalid '{section}': {e}", section=section) from e


def default_threads() -> int:
    """Worker cap from FRACWAVE_THREADS (default 1)."""
    load_dotenv()
    raw = os.getenv(THREADS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be an integer", value=raw)


@dataclass
class ProblemConfig:
    alpha: float
    gamma: float
    p: float
    a: float = 1.0
    b: float = 1.0

    def to_params(self) -> ProblemParams:
        return ProblemParams(alpha=self.alpha, gamma=self.gamma, p=self.p, a=self.a, b=self.b)


@dataclass
class MeshConfig:
    horizon: float = 50.0
    base_n: int = DEFAULT_BASE_N
    threshold: Optional[float] = None


@dataclass
class DomainConfig:
    dimension: int = 1
    modes: int = DEFAULT_MODES_1D
    grid_factor: int = DEFAULT_GRID_FACTOR

    def to_domain(self) -> SpectralDomain:
        return SpectralDomain(dimension=self.dimension, modes=self.modes, grid_factor=self.grid_factor)


@dataclass
class InitialData:
    """Initial field and velocity as lists of [k, (j,) amplitude] mode entries.

    ``random_modes`` adds seeded normal amplitudes decaying like k^-2 on the
    first modes of u0.
    """

    u0: List[List[float]] = field(default_factory=lambda: [[1, 1.0]])
    u1: List[List[float]] = field(default_factory=list)
    scale: float = 1.0
    random_modes: int = 0

    def _field(self, domain: SpectralDomain, entries: List[List[float]], name: str) -> np.ndarray:
        coeffs = np.zeros(domain.shape)
        for entry in entries:
            if len(entry) != domain.dimension + 1:
                raise ConfigurationError(
                    f"'{name}' entries need {domain.dimension} wavenumber(s) and an amplitude",
                    entry=list(entry),
                )
            index = tuple(int(k) - 1 for k in entry[:-1])
            if any(k < 0 or k >= domain.modes for k in index):
                raise ConfigurationError(f"'{name}' wavenumber outside the mode cutoff", entry=list(entry))
            coeffs[index] += float(entry[-1])
        return coeffs

    def fields(self, domain: SpectralDomain, seed: Optional[int] = None) -> Tuple[SpectralField, SpectralField]:
        u0 = self._field(domain, self.u0, "u0")
        if self.random_modes:
            rng = np.random.default_rng(seed)
            count = min(self.random_modes, domain.modes)
            k = np.arange(1, count + 1, dtype=float)
            head = (slice(0, count),) + (0,) * (domain.dimension - 1)
            u0[head] += rng.normal(size=count) / k ** 2
        u1 = self._field(domain, self.u1, "u1")
        return (
            SpectralField(domain=domain, coeffs=self.scale * u0),
            SpectralField(domain=domain, coeffs=self.scale * u1),
        )

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(u0=self.u0, u1=self.u1, scale=self.scale * factor, random_modes=self.random_modes)


@dataclass
class RateWindow:
    t_lo: float
    t_hi: float
    beta: float = 0.0
    along: str = "all"


@dataclass
class CaseConfig:
    """One regime case: problem, solver, data and diagnostics to run."""

    problem: ProblemConfig
    solver: str = "fode"
    mesh: MeshConfig = field(default_factory=MeshConfig)
    domain: DomainConfig = field(default_factory=DomainConfig)
    initial: InitialData = field(default_factory=InitialData)
    rate_windows: List[RateWindow] = field(default_factory=list)
    criterion_horizons: List[float] = field(default_factory=list)
    l: Optional[int] = None
    seed: Optional[int] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CaseConfig":
        _check_schema(data)
        body = {k: v for k, v in data.items() if k != "schema"}
        if "problem" not in body:
            raise ConfigurationError("missing 'problem' section")
        config = _build(cls, body, "case")
        config.problem = _build(ProblemConfig, config.problem, "problem")
        config.mesh = _build(MeshConfig, config.mesh, "mesh")
        config.domain = _build(DomainConfig, config.domain, "domain")
        config.initial = _build(InitialData, config.initial, "initial")
        config.rate_windows = [_build(RateWindow, w, "rate_windows") for w in config.rate_windows]
        if config.solver not in SOLVERS:
            raise ConfigurationError(f"unknown solver '{config.solver}'", choices=list(SOLVERS))
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {"schema": SCHEMA_VERSION, **asdict(self)}


@dataclass
class SweepConfig:
    """Grid over (alpha, gamma, p) and initial-data scales sharing one case template."""

    alphas: List[float]
    gammas: List[float]
    ps: List[float]
    scales: List[float] = field(default_factory=lambda: [1.0])
    template: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SweepConfig":
        _check_schema(data)
        config = _build(cls, {k: v for k, v in data.items() if k != "schema"}, "sweep")
        for name in ("alphas", "gammas", "ps", "scales"):
            if not isinstance(getattr(config, name), list):
                raise ConfigurationError(f"'{name}' must be a list")
        return config

    def cells(self) -> Iterator[Tuple[float, float, float, float]]:
        """Grid cells in deterministic (alpha, gamma, p, scale) order."""
        return itertools.product(self.alphas, self.gammas, self.ps, self.scales)

    def case_for(self, alpha: float, gamma: float, p: float, scale: float) -> CaseConfig:
        body = json.loads(json.dumps(self.template))
        problem = {**body.pop("problem", {}), "alpha": alpha, "gamma": gamma, "p": p}
        config = CaseConfig.from_dict({"schema": SCHEMA_VERSION, "problem": problem, **body})
        config.initial = config.initial.scaled(scale)
        return config

    def to_dict(self) -> Dict[str, Any]:
        return {"schema": SCHEMA_VERSION, **asdict(self)}


def _check_schema(data: Dict[str, Any]) -> None:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    version = data.get("schema")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(
            f"unsupported config schema {version!r}", expected=SCHEMA_VERSION,
        )


def load_json(path: Path) -> Dict[str, Any]:
    """Read a JSON config file.

    Raises:
        ConfigurationError: missing file or invalid JSON
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON in {path}: {e.msg}", line=e.lineno) from e


def load_case(path: Path) -> CaseConfig:
    return CaseConfig.from_dict(load_json(path))


def load_sweep(path: Path) -> SweepConfig:
    return SweepConfig.from_dict(load_json(path))
