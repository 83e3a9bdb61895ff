"""Scalar fractional ODE with memory: D^alpha w + a w = b I^gamma |w|^p."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from fracwave.errors import (
    DomainError,
    IndeterminateError,
    RateUndefinedError,
    StepFailureError,
)
from fracwave.fracops import (
    KERNEL_TOL,
    MittagLefflerKernel,
    SampledPath,
    TestFunctionSpec,
    TimeMesh,
    frac_integral_left,
    toeplitz_row,
)
from fracwave.log import get_logger
from fracwave.mlf import mittag_leffler

logger = get_logger(__name__)

GLOBAL = "global-to-horizon"
BLOWUP = "blowup"

THRESHOLD_FACTOR = 1e6
REFINE_SWITCH = 1e3
FIXED_POINT_TOL = 1e-10
MAX_CORRECTOR_ITERATIONS = 50
CONTRACTION_TARGET = 0.5
MAX_HALVINGS = 40
CROSSING_TOL = 0.05
DEFAULT_BASE_N = 256
MIN_NODES_BEFORE_CROSSING = 64
MAX_ADAPTIVE_STEPS = 20000


@dataclass(frozen=True)
class ProblemParams:
    """Orders, power and coefficients of the problem."""

    alpha: float
    gamma: float
    p: float
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise DomainError("alpha must lie in (1, 2]", alpha=self.alpha)
        if self.gamma <= 0:
            raise DomainError("gamma must be positive", gamma=self.gamma)
        if self.p <= 1:
            raise DomainError("p must exceed 1", p=self.p)
        if self.a < 0 or self.b < 0:
            raise DomainError("a and b must be nonnegative", a=self.a, b=self.b)

    @property
    def sigma(self) -> float:
        """Order alpha + gamma of the collapsed memory kernel."""
        return self.alpha + self.gamma

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "gamma": self.gamma, "p": self.p, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ScalarIVP:
    """Problem parameters with w(0) and w'(0)."""

    params: ProblemParams
    w0: float
    w1: float = 0.0

    def default_threshold(self) -> float:
        return THRESHOLD_FACTOR * max(1.0, abs(self.w0), abs(self.w1))


@dataclass(frozen=True)
class PowerForcing:
    """Closed-form forcing f(s) = coef * s^mu."""

    coef: float
    mu: float = 0.0


Forcing = Union[None, SampledPath, PowerForcing]


@dataclass
class SolveOutcome:
    """Trajectory and blow-up verdict of one solve or one refinement study."""

    trajectory: SampledPath
    status: str
    t_star_estimate: Optional[float] = None
    refinement_history: List[Tuple[int, Optional[float]]] = field(default_factory=list)
    ivp: Optional[ScalarIVP] = None
    threshold: float = math.inf
    crossing_time: Optional[float] = None
    horizon: Optional[float] = None

    @property
    def blew_up(self) -> bool:
        return self.status == BLOWUP


@dataclass(frozen=True)
class RateFit:
    """Least-squares log-log slope over a time window."""

    exponent: float
    width: float
    t_lo: float
    t_hi: float
    points: int


@dataclass(frozen=True)
class AprioriResult:
    """Both sides of the a-priori inequality at horizon T."""

    holds: bool
    lhs: float
    rhs: float


# -- closed forms ------------------------------------------------------------

def linear_part(params: ProblemParams, w0: float, w1: float, t: np.ndarray) -> np.ndarray:
    """E_alpha(-a t^alpha) w0 + t E_{alpha,2}(-a t^alpha) w1."""
    t = np.asarray(t, dtype=float)
    z = -params.a * np.power(t, params.alpha)
    out = np.zeros(t.shape)
    if w0 != 0.0:
        out = out + w0 * mittag_leffler(z, params.alpha, 1.0, tol=KERNEL_TOL)
    if w1 != 0.0:
        out = out + w1 * t * mittag_leffler(z, params.alpha, 2.0, tol=KERNEL_TOL)
    return out


def memory_kernel(params: ProblemParams, lam: Optional[float] = None) -> MittagLefflerKernel:
    """Collapsed memory kernel tau^(alpha+gamma-1) E_{alpha,alpha+gamma}(-lam tau^alpha)."""
    return MittagLefflerKernel(alpha=params.alpha, sigma=params.sigma, lam=params.a if lam is None else lam)


def _convolve_path(kernel: MittagLefflerKernel, path: SampledPath, t: float) -> float:
    nodes = path.t[path.t < t]
    values = path.values[: nodes.size]
    nodes = np.append(nodes, t)
    values = np.append(values, np.interp(t, path.t, path.values))
    if nodes.size < 2:
        return 0.0
    row = kernel.weights(nodes, rows=np.array([nodes.size - 1]))[0]
    return float(row @ values)


def linear_solution(ivp: ScalarIVP, forcing: Forcing, t: float) -> float:
    """Value at t of the solution of D^alpha w + a w = I^gamma f.

    The memory term is evaluated in collapsed form against the kernel
    (t-s)^(alpha+gamma-1) E_{alpha,alpha+gamma}(-a (t-s)^alpha): exactly for a
    power forcing, by product quadrature for a sampled one.

    Args:
        ivp: Parameters and initial data (b is ignored)
        forcing: None, a PowerForcing or a SampledPath covering [0, t]
        t: Evaluation time

    Returns:
        w(t)

    Raises:
        DomainError: t < 0 or a sampled forcing that ends before t
    """
    if t < 0:
        raise DomainError("time must be nonnegative", t=t)
    params = ivp.params
    value = float(linear_part(params, ivp.w0, ivp.w1, np.array([t]))[0])
    if forcing is None or t == 0.0:
        return value
    if isinstance(forcing, PowerForcing):
        order = params.sigma + forcing.mu + 1.0
        ml = mittag_leffler(-params.a * t ** params.alpha, params.alpha, order, tol=KERNEL_TOL)
        return value + forcing.coef * special.gamma(forcing.mu + 1.0) * t ** (order - 1.0) * ml
    if t > forcing.mesh.T * (1 + 1e-12):
        raise DomainError("forcing path ends before t", t=t, T=forcing.mesh.T)
    return value + _convolve_path(memory_kernel(params), forcing, t)


def two_stage_memory(params: ProblemParams, inner: SampledPath, lam: Optional[float] = None) -> SampledPath:
    """int_0^t (t-s)^(alpha-1) E_{alpha,alpha}(-lam (t-s)^alpha) g(s) ds for g = I^gamma f given on a mesh.

    Used to cross-check the collapsed kernel against the two-stage form.
    """
    lam = params.a if lam is None else lam
    kernel = MittagLefflerKernel(alpha=params.alpha, sigma=params.alpha, lam=lam)
    weights = kernel.weights(inner.t)
    return SampledPath(mesh=inner.mesh, values=weights @ inner.values)


# -- time stepping -----------------------------------------------------------

class _WeightRows:
    """Weight rows of the memory kernel on a growing node list."""

    def __init__(self, kernel: MittagLefflerKernel, mesh: TimeMesh):
        self.kernel = kernel
        self.mesh = mesh
        self._toeplitz = kernel.toeplitz(mesh.T / mesh.N, mesh.N) if mesh.is_uniform else None

    def row(self, nodes: List[float], on_base_mesh: bool) -> np.ndarray:
        n = len(nodes) - 1
        if on_base_mesh and self._toeplitz is not None:
            return toeplitz_row(self._toeplitz[0], self._toeplitz[1], n)
        return self.kernel.weights(np.asarray(nodes), rows=np.array([n]))[0]


def _power(w: float, p: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.power(abs(w), p))


def _corrector(g: float, history: float, w_nn: float, b: float, p: float, guess: float, node: int) -> float:
    w = guess
    for _ in range(MAX_CORRECTOR_ITERATIONS):
        nxt = g + b * (history + w_nn * _power(w, p))
        if not math.isfinite(nxt):
            break
        if abs(nxt - w) <= FIXED_POINT_TOL * max(1.0, abs(nxt)):
            return nxt
        w = nxt
    raise StepFailureError(
        f"corrector did not converge at node {node}", node_index=node, last_value=float(w),
    )


def solve_volterra(ivp: ScalarIVP, mesh: TimeMesh, threshold: Optional[float] = None) -> SolveOutcome:
    """Time-step the Volterra form of the scalar problem on ``mesh``.

    Each step evaluates the linear part exactly, adds b times the product
    quadrature of the collapsed kernel against |w|^p, predicts the new value
    from the previous nonlinearity and corrects by fixed-point iteration.
    Once |w| exceeds 1e3 the remaining steps are chosen adaptively (halved
    until the corrector contracts) and appended to the mesh.

    Args:
        ivp: Problem parameters and initial data
        mesh: Base time mesh; its horizon bounds the run
        threshold: Blow-up threshold (default 1e6 max(1, |w0|, |w1|))

    Returns:
        SolveOutcome with status ``blowup`` when |w| crossed the threshold

    Raises:
        DomainError: threshold not above max(|w0|, 1)
        StepFailureError: corrector did not converge in 50 iterations
    """
    params = ivp.params
    threshold = ivp.default_threshold() if threshold is None else threshold
    if threshold <= max(abs(ivp.w0), 1.0):
        raise DomainError("threshold must exceed max(|w0|, 1)", threshold=threshold)

    kernel = memory_kernel(params)
    rows = _WeightRows(kernel, mesh)
    base_linear = linear_part(params, ivp.w0, ivp.w1, mesh.nodes)
    base_step = float(np.max(mesh.steps))
    horizon = mesh.T

    nodes: List[float] = [0.0]
    values: List[float] = [float(ivp.w0)]
    forcing: List[float] = [_power(ivp.w0, params.p)]
    adaptive = False
    adaptive_steps = 0
    step = base_step
    crossing: Optional[float] = None

    while nodes[-1] < horizon * (1 - 1e-14):
        n = len(nodes)
        if adaptive:
            adaptive_steps += 1
            if adaptive_steps > MAX_ADAPTIVE_STEPS:
                raise StepFailureError(
                    "adaptive steps exhausted before the threshold or horizon",
                    node_index=n, last_value=float(values[-1]),
                )
            step = min(2.0 * step, base_step)
            scale = abs(values[-1]) ** (params.p - 1.0)
            for _ in range(MAX_HALVINGS):
                if params.b * params.p * kernel.last_weight(step) * scale <= CONTRACTION_TARGET:
                    break
                step /= 2.0
            t_new = min(nodes[-1] + step, horizon)
            g = float(linear_part(params, ivp.w0, ivp.w1, np.array([t_new]))[0])
        else:
            t_new = float(mesh.nodes[n])
            g = float(base_linear[n])

        row = rows.row(nodes + [t_new], on_base_mesh=not adaptive)
        history = float(row[:-1] @ np.asarray(forcing))
        guess = g + params.b * (history + row[-1] * forcing[-1])
        w = _corrector(g, history, row[-1], params.b, params.p, guess, n)

        nodes.append(t_new)
        values.append(w)
        forcing.append(_power(w, params.p))

        if abs(w) > threshold:
            crossing = t_new
            break
        if not adaptive and abs(w) > REFINE_SWITCH:
            adaptive = True
            step = float(mesh.nodes[n] - mesh.nodes[n - 1])
            logger.debug("switching to adaptive steps at t=%.6g (|w|=%.3g)", t_new, abs(w))

    trajectory = SampledPath(
        mesh=mesh if not adaptive and len(nodes) == mesh.N + 1 else TimeMesh.from_nodes(nodes),
        values=np.asarray(values),
    )
    status = BLOWUP if crossing is not None else GLOBAL
    return SolveOutcome(
        trajectory=trajectory,
        status=status,
        t_star_estimate=crossing,
        refinement_history=[(mesh.N, crossing)],
        ivp=ivp,
        threshold=threshold,
        crossing_time=crossing,
        horizon=horizon,
    )


# -- refinement protocol -----------------------------------------------------

def extrapolate_crossing(times: Sequence[float]) -> float:
    """Aitken extrapolation of crossing times from meshes N, 2N, 4N.

    Falls back to the finest time when the differences are not geometric.
    """
    t1, t2, t4 = times
    d1, d2 = t2 - t1, t4 - t2
    if d1 != 0.0:
        ratio = d2 / d1
        if 0.0 < ratio < 1.0:
            return t4 + d2 * ratio / (1.0 - ratio)
    return t4


def refine_crossings(run: Callable[[TimeMesh], SolveOutcome], meshes: Sequence[TimeMesh], max_workers: int = 3) -> SolveOutcome:
    """Run the three-mesh protocol and merge it into one outcome.

    Blow-up is declared only when every mesh crosses the threshold and the
    successive relative changes of the crossing times stay below 5%; a
    global verdict needs every mesh to reach the horizon.

    Raises:
        IndeterminateError: the meshes disagree
    """
    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(meshes)))) as pool:
        outcomes = list(pool.map(run, meshes))
    crossings = [o.crossing_time for o in outcomes]
    history = [(m.N, c) for m, c in zip(meshes, crossings)]
    finest = outcomes[-1]
    horizon = meshes[-1].T

    if all(c is None for c in crossings):
        return replace(finest, refinement_history=history, t_star_estimate=None)
    if any(c is None for c in crossings):
        raise IndeterminateError("only some meshes crossed the threshold", crossing_times=crossings)

    changes = [abs(b - a) / b for a, b in zip(crossings[:-1], crossings[1:])]
    if any(change >= CROSSING_TOL for change in changes):
        raise IndeterminateError(
            "threshold crossing times did not converge under refinement",
            crossing_times=crossings, relative_changes=changes,
        )
    t_star = min(max(extrapolate_crossing(crossings), 0.0), horizon)
    logger.info("blow-up confirmed: crossings %s, T* ~ %.8e", crossings, t_star)
    return replace(finest, status=BLOWUP, t_star_estimate=t_star, refinement_history=history)


def refinement_study(
    run: Callable[[TimeMesh], SolveOutcome],
    horizon: float,
    base_n: int = DEFAULT_BASE_N,
    max_workers: int = 3,
) -> SolveOutcome:
    """Pilot solve, window zoom and three-mesh refinement for any solver.

    A pilot solve on N nodes locates a first crossing; when it comes early the
    study window shrinks to twice that time so the crossing is resolved by at
    least 64 base steps. The protocol then runs on N, 2N and 4N nodes.

    Raises:
        DomainError: horizon <= 0
        IndeterminateError: refinement was inconsistent
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive", horizon=horizon)
    pilot = run(TimeMesh(T=horizon, N=base_n))
    window = horizon
    if pilot.crossing_time is not None:
        resolved = pilot.crossing_time * base_n / horizon
        if resolved < MIN_NODES_BEFORE_CROSSING:
            window = min(horizon, 2.0 * pilot.crossing_time)
    meshes = [TimeMesh(T=window, N=base_n * f) for f in (1, 2, 4)]
    outcome = refine_crossings(run, meshes, max_workers)
    if outcome.status == GLOBAL and window < horizon:
        raise IndeterminateError(
            "pilot crossed the threshold but refined meshes did not",
            crossing_times=[pilot.crossing_time] + [c for _, c in outcome.refinement_history],
        )
    return replace(outcome, horizon=horizon)


def detect_blowup(
    ivp: ScalarIVP,
    horizon: float,
    base_n: int = DEFAULT_BASE_N,
    threshold: Optional[float] = None,
    max_workers: int = 3,
) -> SolveOutcome:
    """Decide blow-up versus global existence of the scalar problem up to ``horizon``.

    Raises:
        DomainError: horizon <= 0
        IndeterminateError: refinement was inconsistent
    """
    return refinement_study(lambda m: solve_volterra(ivp, m, threshold), horizon, base_n, max_workers)


# -- diagnostics -------------------------------------------------------------

def integrated_memory(outcome: SolveOutcome) -> SampledPath:
    """I^gamma |w|^p along the trajectory."""
    if outcome.ivp is None:
        raise DomainError("outcome carries no problem parameters")
    params = outcome.ivp.params
    path = outcome.trajectory
    powered = SampledPath(mesh=path.mesh, values=np.abs(path.values) ** params.p)
    return frac_integral_left(powered, params.gamma)


def _local_minima(values: np.ndarray) -> np.ndarray:
    size = np.abs(values)
    inner = np.flatnonzero((size[1:-1] <= size[:-2]) & (size[1:-1] <= size[2:])) + 1
    return inner


def estimate_rate(
    outcome: SolveOutcome,
    beta: float,
    window: Tuple[float, float],
    along: str = "all",
) -> RateFit:
    """Fit the log-log slope of w (beta = 0) or I^beta w over a time window.

    Args:
        outcome: A global run
        beta: Integration order applied before fitting
        window: (t_lo, t_hi) inside the simulated range
        along: ``all`` nodes or only local ``minima`` of |w|

    Returns:
        RateFit with the slope and twice its standard error

    Raises:
        DomainError: blow-up outcome, bad window or too few points
        RateUndefinedError: the quantity vanishes or changes sign in the window
    """
    if outcome.status != GLOBAL:
        raise DomainError("rates are only fitted on global runs", status=outcome.status)
    t_lo, t_hi = window
    path = outcome.trajectory
    if not (0 < t_lo < t_hi <= path.mesh.T * (1 + 1e-12)):
        raise DomainError("window must lie inside the simulated range", window=list(window))
    if beta < 0:
        raise DomainError("beta must be nonnegative", beta=beta)
    quantity = path if beta == 0 else frac_integral_left(path, beta)

    t = quantity.t
    selected = np.flatnonzero((t >= t_lo) & (t <= t_hi))
    if along == "minima":
        selected = np.intersect1d(selected, _local_minima(quantity.values))
    elif along != "all":
        raise DomainError(f"unknown selection {along!r}")
    if selected.size < 4:
        raise DomainError("window holds fewer than 4 points", points=int(selected.size))

    q = quantity.values[selected]
    if np.any(q == 0) or (np.any(q > 0) and np.any(q < 0)):
        raise RateUndefinedError(
            "quantity vanishes or changes sign inside the window",
            window=[t_lo, t_hi],
        )
    coeffs, cov = np.polyfit(np.log(t[selected]), np.log(np.abs(q)), 1, cov=True)
    return RateFit(
        exponent=float(coeffs[0]),
        width=float(2.0 * math.sqrt(max(cov[0, 0], 0.0))),
        t_lo=t_lo, t_hi=t_hi, points=int(selected.size),
    )


def apriori_check(
    outcome: SolveOutcome,
    spec: TestFunctionSpec,
    K1: float,
    K2: float,
    integral_weight: float = 1.0,
    w0_weight: float = 1.0,
    w1_weight: float = 1.0,
    slack: float = 0.05,
) -> AprioriResult:
    """Evaluate the a-priori inequality of the test-function method at T = spec.T.

    lhs = integral_weight int_0^T |w|^p psi_T + w0_weight w(0) T^(1-alpha-gamma)
          + w1_weight w'(0) T^(2-alpha-gamma)
    rhs = K1 T^(1-p gamma/(p-1)) + K2 T^(1-p(alpha+gamma)/(p-1))

    The weights come from blowup_lab.calibrate_constants; the defaults give
    the unnormalized textbook form. ``holds`` allows a relative slack.

    Raises:
        DomainError: trajectory shorter than T or missing parameters
    """
    if outcome.ivp is None:
        raise DomainError("outcome carries no problem parameters")
    path = outcome.trajectory
    T = spec.T
    if path.mesh.T < T * (1 - 1e-12):
        raise DomainError("trajectory ends before T", T=T, end=path.mesh.T)
    params = outcome.ivp.params
    p, sigma = params.p, params.sigma

    inside = path.t < T
    t = np.append(path.t[inside], T)
    w = np.append(path.values[inside], np.interp(T, path.t, path.values))
    psi = (1.0 - t / T) ** spec.l
    integral = float(integrate.trapezoid(np.abs(w) ** p * psi, t))

    lhs = (
        integral_weight * integral
        + w0_weight * outcome.ivp.w0 * T ** (1.0 - sigma)
        + w1_weight * outcome.ivp.w1 * T ** (2.0 - sigma)
    )
    rhs = K1 * T ** (1.0 - p * params.gamma / (p - 1.0)) + K2 * T ** (1.0 - p * sigma / (p - 1.0))
    return AprioriResult(holds=bool(lhs <= (1.0 + slack) * rhs), lhs=float(lhs), rhs=float(rhs))
