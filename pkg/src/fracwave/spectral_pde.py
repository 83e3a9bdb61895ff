"""Spectral mild-solution solver for D^alpha u - Laplace u = I^gamma |u|^p on (0, pi)^d."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft, integrate

from fracwave.errors import (
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    StateError,
    StepFailureError,
)
from fracwave.fode import (
    BLOWUP,
    CONTRACTION_TARGET,
    DEFAULT_BASE_N,
    FIXED_POINT_TOL,
    GLOBAL,
    MAX_ADAPTIVE_STEPS,
    MAX_CORRECTOR_ITERATIONS,
    MAX_HALVINGS,
    REFINE_SWITCH,
    THRESHOLD_FACTOR,
    ProblemParams,
    refinement_study,
)
from fracwave.fracops import (
    KERNEL_TOL,
    MittagLefflerKernel,
    SampledPath,
    TimeMesh,
    caputo_left,
    frac_integral_left,
    second_differences,
)
from fracwave.log import get_logger
from fracwave.mlf import mittag_leffler

logger = get_logger(__name__)

DEFAULT_MODES_1D = 128
DEFAULT_MODES_2D = 64
DEFAULT_GRID_FACTOR = 4
JENSEN_TOL = 1e-8


def required_grid_factor(p: float) -> int:
    """Collocation oversampling needed to keep |u|^p alias-free on the retained modes."""
    return 2 if p <= 3 else 3


@dataclass(frozen=True)
class SpectralDomain:
    """Dirichlet sine basis on (0, pi) or (0, pi)^2 with a collocation grid.

    The grid has ``grid_factor * modes`` intervals per axis and includes both
    boundary nodes.
    """

    dimension: int = 1
    modes: int = DEFAULT_MODES_1D
    grid_factor: int = DEFAULT_GRID_FACTOR

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError("dimension must be 1 or 2", dimension=self.dimension)
        if self.modes < 1:
            raise DomainError("need at least one mode", modes=self.modes)
        if self.grid_factor < 2:
            raise DomainError("grid factor must be at least 2", grid_factor=self.grid_factor)

    @property
    def intervals(self) -> int:
        return self.grid_factor * self.modes

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.modes,) * self.dimension

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return (self.intervals + 1,) * self.dimension

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(0.0, math.pi, self.intervals + 1)

    @property
    def phys_grid(self) -> Tuple[np.ndarray, ...]:
        if self.dimension == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @property
    def eigenvalues(self) -> np.ndarray:
        k2 = np.arange(1, self.modes + 1, dtype=float) ** 2
        if self.dimension == 1:
            return k2
        return k2[:, None] + k2[None, :]

    @property
    def first_eigenvalue(self) -> float:
        return float(self.dimension)

    @property
    def moment_factor(self) -> float:
        """int sin(x) phi_1 over the domain, per unit first coefficient."""
        return (math.pi / 4.0) ** self.dimension

    def first_coefficient(self, coeffs: np.ndarray) -> float:
        return float(coeffs[(0,) * self.dimension])

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "modes": self.modes, "grid_factor": self.grid_factor}


def sine_transform(domain: SpectralDomain, samples: np.ndarray) -> np.ndarray:
    """Sine coefficients of grid samples (boundary samples are ignored).

    Raises:
        DomainError: samples do not match the collocation grid
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != domain.grid_shape:
        raise DomainError(
            "samples do not match the collocation grid",
            shape=list(samples.shape), expected=list(domain.grid_shape),
        )
    M = domain.intervals
    interior = samples[(slice(1, -1),) * domain.dimension]
    if domain.dimension == 1:
        full = fft.dst(interior, type=1) / M
    else:
        full = fft.dstn(interior, type=1) / M ** 2
    return full[(slice(0, domain.modes),) * domain.dimension].copy()


def inverse_sine_transform(domain: SpectralDomain, coeffs: np.ndarray) -> np.ndarray:
    """Grid samples of sum_k c_k sin(k x); boundary values are exactly zero.

    Raises:
        DomainError: coefficient array does not match the mode cutoff
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != domain.shape:
        raise DomainError("coefficients do not match the mode cutoff", shape=list(coeffs.shape))
    M = domain.intervals
    padded = np.zeros((M - 1,) * domain.dimension)
    padded[(slice(0, domain.modes),) * domain.dimension] = coeffs
    out = np.zeros(domain.grid_shape)
    if domain.dimension == 1:
        out[1:-1] = fft.dst(padded, type=1) / 2.0
    else:
        out[1:-1, 1:-1] = fft.dstn(padded, type=1) / 4.0
    return out


@dataclass
class SpectralField:
    """A field held both as sine coefficients and as grid samples."""

    domain: SpectralDomain
    coeffs: np.ndarray
    phys: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(self.domain.shape)
        self.phys = inverse_sine_transform(self.domain, self.coeffs)

    @classmethod
    def zeros(cls, domain: SpectralDomain) -> "SpectralField":
        return cls(domain=domain, coeffs=np.zeros(domain.shape))

    @classmethod
    def from_samples(cls, domain: SpectralDomain, samples: np.ndarray) -> "SpectralField":
        return cls(domain=domain, coeffs=sine_transform(domain, samples))

    @classmethod
    def from_function(cls, domain: SpectralDomain, fn: Callable[..., np.ndarray]) -> "SpectralField":
        samples = np.asarray(fn(*domain.phys_grid), dtype=float)
        return cls.from_samples(domain, np.broadcast_to(samples, domain.grid_shape))

    @classmethod
    def single_mode(cls, domain: SpectralDomain, index: Sequence[int], amplitude: float = 1.0) -> "SpectralField":
        """amplitude * sin(k x) (or sin(k x) sin(j y)) with 1-based wavenumbers."""
        coeffs = np.zeros(domain.shape)
        coeffs[tuple(k - 1 for k in index)] = amplitude
        return cls(domain=domain, coeffs=coeffs)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.phys)))

    def moment(self) -> float:
        """int u phi_1 dx with phi_1 normalized to unit integral."""
        return self.domain.moment_factor * self.domain.first_coefficient(self.coeffs)


# -- linear solution operators ----------------------------------------------

def _mode_factors(domain: SpectralDomain, alpha: float, beta: float, t: float) -> np.ndarray:
    z = -domain.eigenvalues * t ** alpha
    return mittag_leffler(z, alpha, beta, tol=KERNEL_TOL)


def apply_P(t: float, u: SpectralField, alpha: float) -> SpectralField:
    """P_alpha(t) u: mode k times E_alpha(-lambda_k t^alpha)."""
    if t < 0:
        raise DomainError("time must be nonnegative", t=t)
    if t == 0.0:
        return SpectralField(domain=u.domain, coeffs=u.coeffs.copy())
    return SpectralField(domain=u.domain, coeffs=u.coeffs * _mode_factors(u.domain, alpha, 1.0, t))


def apply_IP(t: float, u: SpectralField, alpha: float) -> SpectralField:
    """I^1 P_alpha(t) u: mode k times t E_{alpha,2}(-lambda_k t^alpha)."""
    if t < 0:
        raise DomainError("time must be nonnegative", t=t)
    if t == 0.0:
        return SpectralField.zeros(u.domain)
    return SpectralField(domain=u.domain, coeffs=u.coeffs * t * _mode_factors(u.domain, alpha, 2.0, t))


def apply_memory_operator(t: float, u: SpectralField, alpha: float, gamma: float) -> SpectralField:
    """I^gamma [t^(alpha-1) S_alpha(t) u]: mode k times t^(alpha+gamma-1) E_{alpha,alpha+gamma}(-lambda_k t^alpha)."""
    if t <= 0:
        raise DomainError("time must be positive", t=t)
    sigma = alpha + gamma
    factors = t ** (sigma - 1.0) * _mode_factors(u.domain, alpha, sigma, t)
    return SpectralField(domain=u.domain, coeffs=u.coeffs * factors)


def contour_solution_operator(alpha: float, lam: float, t: float, radius_factor: float = 0.5) -> float:
    """E_alpha(-lam t^alpha) from the Laplace-inversion contour integral of one mode.

    The Hankel path runs along rays at angle (pi/2 + pi/alpha)/2 joined by an
    arc of radius ``radius_factor * lam^(1/alpha)`` through the positive axis,
    so both poles of s^(alpha-1)/(s^alpha + lam) lie to its left. For checking
    the spectral operators only.
    """
    if not (1.0 < alpha < 2.0):
        raise DomainError("contour representation needs 1 < alpha < 2", alpha=alpha)
    if lam <= 0 or t <= 0:
        raise DomainError("lam and t must be positive", lam=lam, t=t)
    phi = 0.5 * (math.pi / 2.0 + math.pi / alpha)
    rho = radius_factor * lam ** (1.0 / alpha)

    def resolvent(s: complex) -> complex:
        return np.exp(s * t) * s ** (alpha - 1.0) / (s ** alpha + lam)

    ray_dir = complex(math.cos(phi), math.sin(phi))
    ray, _ = integrate.quad(lambda r: (resolvent(r * ray_dir) * ray_dir).imag, rho, np.inf, limit=400)
    arc, _ = integrate.quad(
        lambda th: (resolvent(rho * complex(math.cos(th), math.sin(th))) * rho * complex(math.cos(th), math.sin(th))).real,
        0.0, phi, limit=400,
    )
    return (ray + arc) / math.pi


# -- memory term -------------------------------------------------------------

class ModeKernels:
    """Collapsed memory kernels, one per distinct eigenvalue."""

    def __init__(self, domain: SpectralDomain, alpha: float, sigma: float, max_workers: int = 1):
        self.domain = domain
        self.unique, self.inverse = np.unique(domain.eigenvalues.ravel(), return_inverse=True)
        self.kernels = [MittagLefflerKernel(alpha=alpha, sigma=sigma, lam=float(lam)) for lam in self.unique]
        self.max_workers = max_workers
        self._toeplitz: Dict[Tuple[float, int], Tuple[np.ndarray, np.ndarray]] = {}

    def _map(self, fn: Callable[[MittagLefflerKernel], np.ndarray]) -> List[np.ndarray]:
        if self.max_workers <= 1:
            return [fn(k) for k in self.kernels]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(fn, self.kernels))

    def toeplitz(self, h: float, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-mode (first, rest) generators, shape (modes, n_max + 1)."""
        key = (h, n_max)
        if key not in self._toeplitz:
            pairs = self._map(lambda k: np.stack(k.toeplitz(h, n_max)))
            stacked = np.stack(pairs)[self.inverse]
            self._toeplitz[key] = (stacked[:, 0, :], stacked[:, 1, :])
        return self._toeplitz[key]

    def row(self, nodes: np.ndarray) -> np.ndarray:
        """Per-mode weights of the last node, shape (modes, len(nodes))."""
        last = np.array([nodes.size - 1])
        return np.stack(self._map(lambda k: k.weights(nodes, rows=last)[0]))[self.inverse]

    def largest_last_weight(self, h: float) -> float:
        return self.kernels[0].last_weight(h)


@dataclass
class EvolutionState:
    """Nodes, nonlinearity history and current field of a running solve."""

    domain: SpectralDomain
    kernels: ModeKernels
    nodes: List[float] = field(default_factory=lambda: [0.0])
    history: List[np.ndarray] = field(default_factory=list)
    current: Optional[SpectralField] = None
    base_step: Optional[float] = None
    base_count: int = 0
    adaptive_from: Optional[int] = None
    _row: Optional[Tuple[int, np.ndarray]] = field(default=None, repr=False)

    def weight_row(self, n: int) -> np.ndarray:
        if self._row is not None and self._row[0] == n:
            return self._row[1]
        on_base = self.base_step is not None and (self.adaptive_from is None or n < self.adaptive_from)
        if on_base:
            first, rest = self.kernels.toeplitz(self.base_step, self.base_count)
            row = np.empty((first.shape[0], n + 1))
            row[:, 0] = first[:, n]
            row[:, 1:] = rest[:, n - 1 :: -1][:, :n]
        else:
            row = self.kernels.row(np.asarray(self.nodes[: n + 1]))
        self._row = (n, row)
        return row


def memory_kernel_apply(state: EvolutionState, n: int, newest: Optional[np.ndarray] = None) -> SpectralField:
    """Per-mode product quadrature of the collapsed memory kernel at node n.

    Sums the weights of nodes 0..n-1 against the recorded nonlinearity
    coefficients; ``newest`` (flat coefficients at node n) adds the last term.

    Raises:
        StateError: node n is not on the state mesh or history stops before n-1
    """
    if n < 0 or n >= len(state.nodes):
        raise StateError("node is not on the evolution mesh", node=n, nodes=len(state.nodes))
    if len(state.history) < n:
        raise StateError("nonlinearity history is incomplete", node=n, history=len(state.history))
    domain = state.domain
    if n == 0:
        return SpectralField.zeros(domain)
    row = state.weight_row(n)
    past = np.asarray(state.history[:n])
    coeffs = np.einsum("kj,jk->k", row[:, :n], past)
    if newest is not None:
        coeffs = coeffs + row[:, n] * newest
    return SpectralField(domain=domain, coeffs=coeffs)


def nonlinearity_coefficients(domain: SpectralDomain, phys: np.ndarray, p: float) -> np.ndarray:
    """Retained sine coefficients of |u|^p formed on the collocation grid."""
    with np.errstate(over="ignore"):
        powered = np.power(np.abs(phys), p)
    return sine_transform(domain, powered).ravel()


# -- mild solutions ----------------------------------------------------------

@dataclass
class MildOutcome:
    """Coefficient trajectory and blow-up verdict of a mild solve."""

    domain: SpectralDomain
    params: ProblemParams
    mesh: TimeMesh
    coeffs: np.ndarray
    nonlinearity: np.ndarray
    sup_norm: SampledPath
    status: str
    u0: SpectralField
    u1: SpectralField
    threshold: float = math.inf
    crossing_time: Optional[float] = None
    t_star_estimate: Optional[float] = None
    refinement_history: List[Tuple[int, Optional[float]]] = field(default_factory=list)
    horizon: Optional[float] = None

    @property
    def blew_up(self) -> bool:
        return self.status == BLOWUP

    def field_at(self, j: int) -> SpectralField:
        return SpectralField(domain=self.domain, coeffs=self.coeffs[j])

    def mode_path(self, index: Sequence[int]) -> SampledPath:
        """Trajectory of one coefficient (1-based wavenumbers)."""
        flat = np.ravel_multi_index(tuple(k - 1 for k in index), self.domain.shape)
        return SampledPath(mesh=self.mesh, values=self.coeffs.reshape(len(self.mesh.nodes), -1)[:, flat])


def _linear_coeffs(u0: SpectralField, u1: SpectralField, alpha: float, t: float) -> np.ndarray:
    return (apply_P(t, u0, alpha).coeffs + apply_IP(t, u1, alpha).coeffs).ravel()


def solve_mild(
    u0: SpectralField,
    u1: SpectralField,
    params: ProblemParams,
    mesh: TimeMesh,
    threshold: Optional[float] = None,
    nonlinear: bool = True,
    max_workers: int = 1,
) -> MildOutcome:
    """Time-step the mild formulation mode by mode.

    u(t_n) = P(t_n) u0 + I^1 P(t_n) u1 + b * memory(t_n), with |u|^p formed on
    the collocation grid and transformed back (pseudo-spectral). Each step
    predicts from the previous nonlinearity and corrects by fixed-point
    iteration; above a sup-norm of 1e3 steps are halved until the corrector
    contracts.

    Args:
        u0: Initial field
        u1: Initial velocity
        params: Orders and power (``a`` is unused, the Laplacian supplies lambda_k)
        mesh: Base time mesh
        threshold: Sup-norm blow-up threshold (default 1e6 max(1, |u0|, |u1|))
        nonlinear: Set False to solve the linear problem only
        max_workers: Threads for per-mode weight construction

    Returns:
        MildOutcome

    Raises:
        DomainError: mismatched domains or threshold too small
        ConfigurationError: collocation grid too coarse for p
        StepFailureError: corrector did not converge
    """
    domain = u0.domain
    if u1.domain != domain:
        raise DomainError("u0 and u1 must share a domain")
    if domain.grid_factor < required_grid_factor(params.p):
        raise ConfigurationError(
            "collocation grid too coarse to de-alias |u|^p",
            grid_factor=domain.grid_factor, required=required_grid_factor(params.p), p=params.p,
        )
    if threshold is None:
        threshold = THRESHOLD_FACTOR * max(1.0, u0.sup_norm, u1.sup_norm)
    if threshold <= max(u0.sup_norm, 1.0):
        raise DomainError("threshold must exceed max(|u0|, 1)", threshold=threshold)

    alpha, p, b = params.alpha, params.p, params.b
    kernels = ModeKernels(domain, alpha, params.sigma, max_workers)
    state = EvolutionState(domain=domain, kernels=kernels, current=u0)
    if mesh.is_uniform:
        state.base_step = mesh.T / mesh.N
        state.base_count = mesh.N
    coeff_rows = [u0.coeffs.ravel().copy()]
    sups = [u0.sup_norm]
    state.history.append(nonlinearity_coefficients(domain, u0.phys, p))

    base_step = float(np.max(mesh.steps))
    step = base_step
    adaptive_steps = 0
    crossing: Optional[float] = None
    active = nonlinear and b != 0.0

    while state.nodes[-1] < mesh.T * (1 - 1e-14):
        n = len(state.nodes)
        if state.adaptive_from is not None:
            adaptive_steps += 1
            if adaptive_steps > MAX_ADAPTIVE_STEPS:
                raise StepFailureError(
                    "adaptive steps exhausted before the threshold or horizon",
                    node_index=n, last_value=sups[-1],
                )
            step = min(2.0 * step, base_step)
            scale = sups[-1] ** (p - 1.0)
            for _ in range(MAX_HALVINGS):
                if b * p * kernels.largest_last_weight(step) * scale <= CONTRACTION_TARGET:
                    break
                step /= 2.0
            t_new = min(state.nodes[-1] + step, mesh.T)
        else:
            t_new = float(mesh.nodes[n])
        state.nodes.append(t_new)

        linear = _linear_coeffs(u0, u1, alpha, t_new)
        if active:
            past = memory_kernel_apply(state, n).coeffs.ravel()
            w_nn = state.weight_row(n)[:, n]
            coeffs = linear + b * (past + w_nn * state.history[-1])
            for _ in range(MAX_CORRECTOR_ITERATIONS):
                phys = inverse_sine_transform(domain, coeffs.reshape(domain.shape))
                updated = linear + b * (past + w_nn * nonlinearity_coefficients(domain, phys, p))
                if not np.all(np.isfinite(updated)):
                    break
                if np.max(np.abs(updated - coeffs)) <= FIXED_POINT_TOL * max(1.0, np.max(np.abs(updated))):
                    coeffs = updated
                    break
                coeffs = updated
            else:
                raise StepFailureError(
                    f"corrector did not converge at node {n}", node_index=n, last_value=sups[-1],
                )
            if not np.all(np.isfinite(coeffs)):
                raise StepFailureError(f"corrector diverged at node {n}", node_index=n, last_value=sups[-1])
        else:
            coeffs = linear

        current = SpectralField(domain=domain, coeffs=coeffs)
        state.current = current
        state.history.append(nonlinearity_coefficients(domain, current.phys, p))
        coeff_rows.append(coeffs.copy())
        sups.append(current.sup_norm)

        if sups[-1] > threshold:
            crossing = t_new
            break
        if state.adaptive_from is None and sups[-1] > REFINE_SWITCH and active:
            state.adaptive_from = n + 1
            step = t_new - state.nodes[-2]
            logger.debug("mild solve: adaptive steps from t=%.6g (sup=%.3g)", t_new, sups[-1])

    on_base = len(state.nodes) == mesh.N + 1 and state.adaptive_from is None
    traj_mesh = mesh if on_base else TimeMesh.from_nodes(state.nodes)
    count = len(state.nodes)
    return MildOutcome(
        domain=domain,
        params=params,
        mesh=traj_mesh,
        coeffs=np.asarray(coeff_rows).reshape((count,) + domain.shape),
        nonlinearity=np.asarray(state.history).reshape((count,) + domain.shape),
        sup_norm=SampledPath(mesh=traj_mesh, values=np.asarray(sups)),
        status=BLOWUP if crossing is not None else GLOBAL,
        u0=u0,
        u1=u1,
        threshold=threshold,
        crossing_time=crossing,
        t_star_estimate=crossing,
        refinement_history=[(mesh.N, crossing)],
        horizon=mesh.T,
    )


def detect_blowup_mild(
    u0: SpectralField,
    u1: SpectralField,
    params: ProblemParams,
    horizon: float,
    base_n: int = DEFAULT_BASE_N,
    threshold: Optional[float] = None,
    max_workers: int = 3,
) -> MildOutcome:
    """Refinement protocol of the scalar solver applied to mild solves.

    Raises:
        IndeterminateError: refinement was inconsistent
    """
    return refinement_study(
        lambda m: solve_mild(u0, u1, params, m, threshold), horizon, base_n, max_workers,
    )


# -- eigenfunctional reduction ----------------------------------------------

@dataclass
class EigenfunctionalReport:
    """w(t) = int u phi_1 with the residual of its scalar inequality and the Jensen gap."""

    w: SampledPath
    residual: SampledPath
    jensen_gap: SampledPath
    jensen_holds: bool


def eigenfunctional(outcome: MildOutcome, scheme: str = "differentiate-integral") -> EigenfunctionalReport:
    """Project a mild solution onto phi_1.

    The residual is D^alpha w + lambda_1 w - b I^gamma(int |u|^p phi_1); the
    Jensen gap is I^gamma(int |u|^p phi_1) - I^gamma(|w|^p), with int |u|^p phi_1
    read off the sine transform of |u|^p on the physical grid. Truncation and
    quadrature errors show up as a negative gap.
    """
    domain = outcome.domain
    params = outcome.params
    mesh = outcome.mesh
    factor = domain.moment_factor
    first = (0,) * domain.dimension
    w = SampledPath(mesh=mesh, values=factor * outcome.coeffs[(slice(None),) + first])
    forcing = SampledPath(mesh=mesh, values=factor * outcome.nonlinearity[(slice(None),) + first])
    memory = frac_integral_left(forcing, params.gamma)

    m1 = outcome.u1.moment()
    if params.alpha == 2.0:
        derivative = second_differences(w.values, w.t)
    else:
        derivative = caputo_left(w, params.alpha, w.values[0], m1, scheme=scheme).values
    residual = derivative + domain.first_eigenvalue * w.values - params.b * memory.values

    left = memory.values
    right = frac_integral_left(SampledPath(mesh=mesh, values=np.abs(w.values) ** params.p), params.gamma).values
    gap = left - right
    scale = max(1.0, float(np.max(np.abs(left))))
    return EigenfunctionalReport(
        w=w,
        residual=SampledPath(mesh=mesh, values=residual),
        jensen_gap=SampledPath(mesh=mesh, values=gap),
        jensen_holds=bool(np.all(gap >= -JENSEN_TOL * scale)),
    )


# -- operator decay probes ---------------------------------------------------

@dataclass(frozen=True)
class DecayProbe:
    """Fitted log-log slopes of the three solution-operator norms."""

    p_exponent: float
    ip_exponent: float
    memory_exponent: float
    times: Tuple[float, ...]


def _slope(times: np.ndarray, norms: np.ndarray, label: str) -> float:
    if np.any(norms <= 0):
        raise DegenerateInputError(f"{label} sup-norm vanishes", operator=label)
    return float(np.polyfit(np.log(times), np.log(norms), 1)[0])


def operator_decay_probe(u0: SpectralField, alpha: float, gamma: float, times: Sequence[float]) -> DecayProbe:
    """Fit decay exponents of |P(t)u0|, |I^1 P(t)u0| and |I^gamma[t^(alpha-1) S(t)u0]| in sup-norm.

    Expected slopes are -alpha, -(alpha-1) and -(1-gamma).

    Raises:
        DomainError: alpha outside (1, 2), nonpositive times or fewer than two decades
        DegenerateInputError: a norm vanishes
    """
    if not (1.0 < alpha < 2.0):
        raise DomainError("decay probes need 1 < alpha < 2", alpha=alpha)
    t = np.asarray(times, dtype=float)
    if t.size < 3 or np.any(t <= 0):
        raise DomainError("need at least 3 positive times")
    if math.log10(t.max() / t.min()) < 2.0 - 1e-12:
        raise DomainError("times must span at least two decades", t_min=float(t.min()), t_max=float(t.max()))
    if u0.sup_norm == 0.0:
        raise DegenerateInputError("initial field is identically zero")
    p_norms = np.array([apply_P(s, u0, alpha).sup_norm for s in t])
    ip_norms = np.array([apply_IP(s, u0, alpha).sup_norm for s in t])
    mem_norms = np.array([apply_memory_operator(s, u0, alpha, gamma).sup_norm for s in t])
    return DecayProbe(
        p_exponent=_slope(t, p_norms, "P"),
        ip_exponent=_slope(t, ip_norms, "I1P"),
        memory_exponent=_slope(t, mem_norms, "memory"),
        times=tuple(float(s) for s in t),
    )
