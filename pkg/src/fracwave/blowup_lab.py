"""Regime classification, explicit blow-up constants and parameter sweeps."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special

from fracwave.config import CaseConfig, SweepConfig
from fracwave.errors import DomainError, FracwaveError, IndeterminateError, StepFailureError
from fracwave.fode import (
    BLOWUP,
    GLOBAL,
    ProblemParams,
    ScalarIVP,
    SolveOutcome,
    detect_blowup,
    estimate_rate,
)
from fracwave.fracops import SampledPath
from fracwave.log import get_logger
from fracwave.spectral_pde import MildOutcome, SpectralField, detect_blowup_mild

logger = get_logger(__name__)

BLOWUP_VERDICT = "blowup"
GLOBAL_VERDICT = "global-small-data"
OUTSIDE_VERDICT = "outside-theorems"
UNCONFIRMED = "unconfirmed"

MOMENT_TOL = 1e-12
SIGMA_TOL = 1e-12
DECAY_FROM = 0.1
MAX_SCALE_HALVINGS = 20

ProgressCallback = Callable[[int, int, str], None]


@dataclass(frozen=True)
class MomentData:
    """Projections of the initial data on the normalized first eigenfunction."""

    m0: float
    m1: float = 0.0

    @classmethod
    def from_fields(cls, u0: SpectralField, u1: SpectralField) -> "MomentData":
        return cls(m0=u0.moment(), m1=u1.moment())


@dataclass(frozen=True)
class Hypothesis:
    name: str
    value: float
    holds: bool


@dataclass
class RegimePrediction:
    verdict: str
    theorem_case: Optional[str]
    hypotheses_used: List[Hypothesis] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CriterionConstants:
    """K1, K2 of the a-priori inequality with the weights of its left side."""

    K1: float
    K2: float
    l: int
    integral_weight: float
    w0_weight: float
    w1_weight: float
    derivation_trace: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RegimeReport:
    """Prediction, simulation and diagnostics of one case."""

    params: ProblemParams
    moments: MomentData
    prediction: RegimePrediction
    solver: str
    observed: str
    t_star: Optional[float] = None
    decay_observed: Optional[bool] = None
    rate_fits: List[Dict[str, Any]] = field(default_factory=list)
    criterion: List[Dict[str, Any]] = field(default_factory=list)
    constants: Optional[CriterionConstants] = None
    agreement: Optional[bool] = None
    refinement_history: List[Tuple[int, Optional[float]]] = field(default_factory=list)
    error: Optional[Dict[str, Any]] = None

    @property
    def verdict(self) -> str:
        return self.prediction.verdict

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "moments": asdict(self.moments),
            "prediction": self.prediction.verdict,
            "theorem_case": self.prediction.theorem_case,
            "hypotheses": [asdict(h) for h in self.prediction.hypotheses_used],
            "solver": self.solver,
            "observed": self.observed,
            "t_star": self.t_star,
            "decay_observed": self.decay_observed,
            "agreement": self.agreement,
            "rate_fits": self.rate_fits,
            "criterion": self.criterion,
            "constants": self.constants.to_dict() if self.constants else None,
            "refinement_history": [list(item) for item in self.refinement_history],
            "error": self.error,
        }


# -- classification ----------------------------------------------------------

def classify_regime(params: ProblemParams, moments: MomentData, alpha_is_2: bool = False) -> RegimePrediction:
    """Match the parameters against the blow-up and small-data global cases.

    Blow-up cases are checked first, in the order: wave case (alpha = 2), then
    (a) alpha+gamma > 2, (b) alpha+gamma <= 2 with m1 = 0, (c) alpha+gamma = 2
    with m1 > 0, (d) alpha+gamma < 2 with m1 > 0 and p < 1 + gamma/(alpha-1).
    The boundary p(1-gamma) = 1 counts as blow-up. Global cases need
    alpha < 2; the wave equation has no small-data global case here. Cells
    matching no case are reported as outside the theorems.

    Raises:
        DomainError: alpha_is_2 given with alpha != 2
    """
    alpha, gamma, p = params.alpha, params.gamma, params.p
    if alpha_is_2 and alpha != 2.0:
        raise DomainError("alpha_is_2 requires alpha == 2", alpha=alpha)
    sigma = alpha + gamma
    critical = p * (1.0 - gamma)
    m1_zero = abs(moments.m1) <= MOMENT_TOL
    m1_positive = moments.m1 > MOMENT_TOL
    sigma_is_2 = abs(sigma - 2.0) <= SIGMA_TOL

    hyps = [
        Hypothesis("p(1-gamma) <= 1", critical, critical <= 1.0),
        Hypothesis("alpha+gamma", sigma, True),
        Hypothesis("m1", moments.m1, True),
    ]
    if alpha == 2.0:
        if critical <= 1.0:
            return RegimePrediction(BLOWUP_VERDICT, "blowup-wave", hyps)
    else:
        fujita = 1.0 + gamma / (alpha - 1.0)
        hyps.append(Hypothesis("p < 1+gamma/(alpha-1)", fujita, p < fujita))
        if sigma > 2.0 and not sigma_is_2 and critical <= 1.0:
            return RegimePrediction(BLOWUP_VERDICT, "blowup-a", hyps)
        if (sigma < 2.0 or sigma_is_2) and m1_zero and critical <= 1.0:
            return RegimePrediction(BLOWUP_VERDICT, "blowup-b", hyps)
        if sigma_is_2 and m1_positive and critical <= 1.0:
            return RegimePrediction(BLOWUP_VERDICT, "blowup-c", hyps)
        if sigma < 2.0 and not sigma_is_2 and m1_positive and p < fujita:
            return RegimePrediction(BLOWUP_VERDICT, "blowup-d", hyps)

    if alpha == 2.0:
        return RegimePrediction(OUTSIDE_VERDICT, None, hyps)
    if (sigma > 2.0 or sigma_is_2) and critical > 1.0:
        return RegimePrediction(GLOBAL_VERDICT, "global-i", hyps)
    if sigma < 2.0 and not sigma_is_2:
        if critical > 1.0 and m1_zero:
            return RegimePrediction(GLOBAL_VERDICT, "global-ii", hyps)
        if p >= 1.0 + gamma / (alpha - 1.0):
            return RegimePrediction(GLOBAL_VERDICT, "global-iii", hyps)
    return RegimePrediction(OUTSIDE_VERDICT, None, hyps)


# -- explicit constants ------------------------------------------------------

def default_test_exponent(params: ProblemParams) -> int:
    """Smallest integer >= p(alpha+gamma)/(p-1), plus one."""
    return int(math.ceil(params.p * params.sigma / (params.p - 1.0))) + 1


def calibrate_constants(params: ProblemParams, l: Optional[int] = None) -> CriterionConstants:
    """Explicit K1, K2 of the a-priori inequality for psi_T = (1 - t/T)^l.

    Both cross terms int w D^(alpha+gamma) psi and a int w D^gamma psi are
    split by Young's inequality with epsilon = b/4, which leaves
    (b/2) int |w|^p psi on the left and

        K1 = C a^p' (G(l+1)/G(l+1-gamma))^p' / (l - gamma p' + 1)
        K2 = C (G(l+1)/G(l+1-alpha-gamma))^p' / (l - (alpha+gamma) p' + 1)

    on the right, with p' = p/(p-1) and C = (epsilon p)^(-p'/p) / p'.

    Raises:
        DomainError: l < p(alpha+gamma)/(p-1) or b = 0
    """
    p, gamma, sigma = params.p, params.gamma, params.sigma
    l = default_test_exponent(params) if l is None else int(l)
    if l < p * sigma / (p - 1.0):
        raise DomainError("test exponent too small for convergent Beta integrals", l=l, needed=p * sigma / (p - 1.0))
    if params.b <= 0:
        raise DomainError("constants need b > 0", b=params.b)
    conj = p / (p - 1.0)
    epsilon = params.b / 4.0
    young = (epsilon * p) ** (-conj / p) / conj
    ratio_gamma = special.gamma(l + 1.0) * special.rgamma(l + 1.0 - gamma)
    ratio_sigma = special.gamma(l + 1.0) * special.rgamma(l + 1.0 - sigma)
    beta_gamma = 1.0 / (l - gamma * conj + 1.0)
    beta_sigma = 1.0 / (l - sigma * conj + 1.0)
    K1 = young * params.a ** conj * abs(ratio_gamma) ** conj * beta_gamma
    K2 = young * abs(ratio_sigma) ** conj * beta_sigma
    c0 = special.gamma(l + 1.0) * special.rgamma(l + 2.0 - sigma)
    c1 = special.gamma(l + 1.0) * special.rgamma(l + 3.0 - sigma)
    trace = {
        "epsilon": epsilon,
        "p_conjugate": conj,
        "young_constant": young,
        "gamma_ratio_gamma": float(ratio_gamma),
        "gamma_ratio_sigma": float(ratio_sigma),
        "beta_integral_gamma": beta_gamma,
        "beta_integral_sigma": beta_sigma,
        "exponent_K1": 1.0 - p * gamma / (p - 1.0),
        "exponent_K2": 1.0 - p * sigma / (p - 1.0),
    }
    return CriterionConstants(
        K1=float(K1), K2=float(K2), l=l,
        integral_weight=params.b / 2.0, w0_weight=float(c0), w1_weight=float(c1),
        derivation_trace=trace,
    )


def remark_criterion(T: float, moments: MomentData, constants: CriterionConstants, params: ProblemParams) -> bool:
    """Sufficient condition for T* < T from the a-priori inequality.

    c1 T m1 + c0 m0 > K1 T^(alpha+gamma-p gamma/(p-1)) + K2 T^(-(alpha+gamma)/(p-1))
    """
    if T <= 0:
        raise DomainError("horizon must be positive", T=T)
    p, gamma, sigma = params.p, params.gamma, params.sigma
    left = constants.w1_weight * T * moments.m1 + constants.w0_weight * moments.m0
    right = constants.K1 * T ** (sigma - p * gamma / (p - 1.0)) + constants.K2 * T ** (-sigma / (p - 1.0))
    return bool(left > right)


# -- cases -------------------------------------------------------------------

def _decay_observed(path: SampledPath, horizon: float) -> bool:
    t, size = path.t, np.abs(path.values)
    early = size[(t >= DECAY_FROM * horizon) & (t <= 0.5 * horizon)]
    late = size[t >= 0.5 * horizon]
    if early.size == 0 or late.size == 0:
        return False
    return bool(late.max() <= early.max())


def _agreement(verdict: str, observed: str) -> Optional[bool]:
    if observed == UNCONFIRMED or verdict == OUTSIDE_VERDICT:
        return None
    if verdict == BLOWUP_VERDICT:
        return observed == BLOWUP
    if observed == GLOBAL:
        return True
    # a blow-up under the small-data theorems means the data was not small
    return None


def scalar_reduction(params: ProblemParams, moments: MomentData, first_eigenvalue: float = 1.0) -> ScalarIVP:
    """Scalar problem for w = int u phi_1: a = lambda_1, b = 1, w0 = m0, w1 = m1."""
    reduced = replace(params, a=first_eigenvalue, b=1.0)
    return ScalarIVP(params=reduced, w0=moments.m0, w1=moments.m1)


class LabRunner:
    """Runs regime cases and sweeps with optional progress reporting."""

    def __init__(self, max_workers: int = 1, on_progress: Optional[ProgressCallback] = None):
        """Initialize the runner.

        Args:
            max_workers: Threads for sweep cells and refinement meshes
            on_progress: Optional callback(current, total, label)
        """
        self._workers = max(1, int(max_workers))
        self._on_progress = on_progress

    def _simulate(self, config: CaseConfig, params: ProblemParams, u0: SpectralField, u1: SpectralField, moments: MomentData):
        mesh = config.mesh
        workers = min(3, self._workers)
        if config.solver == "pde":
            return detect_blowup_mild(
                u0, u1, params, mesh.horizon, mesh.base_n, mesh.threshold, max_workers=workers,
            )
        ivp = scalar_reduction(params, moments, u0.domain.first_eigenvalue)
        return detect_blowup(ivp, mesh.horizon, mesh.base_n, mesh.threshold, max_workers=workers)

    @staticmethod
    def _tracked_path(outcome) -> Tuple[SampledPath, SampledPath]:
        if isinstance(outcome, MildOutcome):
            first = (slice(None),) + (0,) * outcome.domain.dimension
            w = SampledPath(mesh=outcome.mesh, values=outcome.domain.moment_factor * outcome.coeffs[first])
            return w, outcome.sup_norm
        return outcome.trajectory, outcome.trajectory

    def run_case(self, config: CaseConfig) -> RegimeReport:
        """Classify, simulate and fit one case.

        Indeterminate refinement and corrector failures are recorded as an
        ``unconfirmed`` observation, never raised.
        """
        params = config.problem.to_params()
        domain = config.domain.to_domain()
        u0, u1 = config.initial.fields(domain, seed=config.seed)
        moments = MomentData.from_fields(u0, u1)
        prediction = classify_regime(params, moments, alpha_is_2=params.alpha == 2.0)
        scalar_params = scalar_reduction(params, moments, domain.first_eigenvalue).params
        report = RegimeReport(
            params=params, moments=moments, prediction=prediction,
            solver=config.solver, observed=UNCONFIRMED,
        )
        logger.info(
            "case alpha=%g gamma=%g p=%g: predicted %s (%s)",
            params.alpha, params.gamma, params.p, prediction.verdict, prediction.theorem_case,
        )

        try:
            outcome = self._simulate(config, params, u0, u1, moments)
        except (IndeterminateError, StepFailureError) as e:
            report.error = e.to_dict()
            logger.warning("case unconfirmed: %s", e)
            outcome = None

        if outcome is not None:
            report.observed = outcome.status
            report.t_star = outcome.t_star_estimate
            report.refinement_history = list(outcome.refinement_history)
            w, size = self._tracked_path(outcome)
            if outcome.status == GLOBAL:
                report.decay_observed = _decay_observed(size, config.mesh.horizon)
                scalar = SolveOutcome(trajectory=w, status=GLOBAL)
                for window in config.rate_windows:
                    entry: Dict[str, Any] = asdict(window)
                    try:
                        fit = estimate_rate(scalar, window.beta, (window.t_lo, window.t_hi), window.along)
                        entry.update(exponent=fit.exponent, width=fit.width, points=fit.points)
                    except FracwaveError as e:
                        entry["error"] = e.to_dict()
                    report.rate_fits.append(entry)

        if config.criterion_horizons:
            try:
                report.constants = calibrate_constants(scalar_params, config.l)
            except DomainError as e:
                report.error = report.error or e.to_dict()
            else:
                for T in config.criterion_horizons:
                    holds = remark_criterion(T, moments, report.constants, scalar_params)
                    consistent = None
                    if holds and report.observed != UNCONFIRMED:
                        consistent = report.observed == BLOWUP and report.t_star is not None and report.t_star < T
                    report.criterion.append({"T": T, "holds": holds, "consistent": consistent})

        report.agreement = _agreement(prediction.verdict, report.observed)
        return report

    def find_global_scale(self, config: CaseConfig, max_halvings: int = MAX_SCALE_HALVINGS) -> Tuple[Optional[float], List[Tuple[float, str]]]:
        """Halve the initial-data scale until a global, decaying run is observed.

        Returns:
            (largest verified scale or None, attempted (scale, observation) pairs)
        """
        attempts: List[Tuple[float, str]] = []
        current = config
        for _ in range(max_halvings + 1):
            report = self.run_case(current)
            attempts.append((current.initial.scale, report.observed))
            if report.observed == GLOBAL and report.decay_observed:
                return current.initial.scale, attempts
            current = replace(current, initial=current.initial.scaled(0.5))
        return None, attempts

    def _sweep_cell(self, sweep_config: SweepConfig, cell: Tuple[float, float, float, float]) -> Dict[str, Any]:
        alpha, gamma, p, scale = cell
        row: Dict[str, Any] = {
            "alpha": alpha, "gamma": gamma, "p": p, "scale": scale,
            "prediction": None, "theorem_case": None, "observed": None,
            "t_star": None, "agreement": None, "error": None,
        }
        try:
            report = self.run_case(sweep_config.case_for(alpha, gamma, p, scale))
        except FracwaveError as e:
            row["error"] = e.kind
            return row
        except ArithmeticError as e:
            row["error"] = type(e).__name__
            return row
        row.update(
            prediction=report.prediction.verdict,
            theorem_case=report.prediction.theorem_case,
            observed=report.observed,
            t_star=report.t_star,
            agreement=report.agreement,
            error=report.error["error"] if report.error else None,
        )
        return row

    def sweep(self, config: SweepConfig) -> List[Dict[str, Any]]:
        """Evaluate every grid cell; failures become rows, never exceptions.

        Rows come back in grid order regardless of completion order.
        """
        cells = list(config.cells())
        total = len(cells)
        if not cells:
            return []
        rows: List[Optional[Dict[str, Any]]] = [None] * total
        with ThreadPoolExecutor(max_workers=self._workers) as pool:
            futures = [pool.submit(self._sweep_cell, config, cell) for cell in cells]
            for i, future in enumerate(futures):
                rows[i] = future.result()
                if self._on_progress:
                    alpha, gamma, p, scale = cells[i]
                    self._on_progress(i + 1, total, f"alpha={alpha:g} gamma={gamma:g} p={p:g} scale={scale:g}")
        return [row for row in rows if row is not None]


def run_case(config: CaseConfig) -> RegimeReport:
    return LabRunner().run_case(config)


def sweep(config: SweepConfig, max_workers: int = 1) -> List[Dict[str, Any]]:
    return LabRunner(max_workers=max_workers).sweep(config)
