"""Two-parameter Mittag-Leffler function E_{alpha,beta}(z)."""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special

from fracwave.errors import DomainError, MLOverflowError
from fracwave.log import get_logger

logger = get_logger(__name__)

Number = Union[float, complex]

DEFAULT_TOL = 1e-12
SWITCH_RADIUS = 10.0
MAX_SERIES_TERMS = 5000
MAX_ASYMPTOTIC_TERMS = 40
LAPLACE_CHUNK = 4096

_EPS = float(np.finfo(float).eps)
_LOG_MAX = math.log(np.finfo(float).max)

BRANCHES = ("series", "asymptotic", "asymptotic-alpha2", "laplace", "explicit")
_EXPLICIT = {(1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)}


@dataclass(frozen=True)
class MLParams:
    """Orders and evaluation point of E_{alpha,beta}(z)."""

    alpha: float
    beta: float
    z: Number

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise DomainError(f"alpha must lie in (0, 2], got {self.alpha}", alpha=self.alpha)
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite", beta=self.beta)
        if not np.isfinite(self.z):
            raise DomainError("z must be finite", z=str(self.z))


@dataclass(frozen=True)
class MLValue:
    """An evaluated value with the branch that produced it."""

    value: Number
    branch: str
    est_error: float


@dataclass(frozen=True)
class PositivityResult:
    """Outcome of a sign scan of E_{alpha,rho}(-x)."""

    positive: bool
    first_violation: Optional[float]
    min_value: float


def series_radius(alpha: float) -> float:
    """Radius up to which the power series is the production branch."""
    return SWITCH_RADIUS ** min(alpha, 1.0)


def _validate_orders(alpha: float, beta: float) -> None:
    if not (0.0 < alpha <= 2.0):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}", alpha=alpha)
    if not math.isfinite(beta):
        raise DomainError("beta must be finite", beta=beta)


def _log_abs_rgamma(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(special.rgamma(x)))


# -- series ------------------------------------------------------------------

def _series(z: np.ndarray, alpha: float, beta: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Kahan-summed power series evaluated in log-magnitude form.

    Returns complex values and an error estimate (truncation plus a rounding
    bound proportional to the largest term).
    """
    mag = np.abs(z)
    with np.errstate(divide="ignore"):
        log_mag = np.log(mag)
    angle = np.angle(z)

    total = np.full(z.shape, special.rgamma(beta), dtype=complex)
    comp = np.zeros(z.shape, dtype=complex)
    largest = np.abs(total)
    last = np.abs(total)
    peak = np.ceil(np.maximum(0.0, (mag ** (1.0 / alpha) - beta) / alpha)) + 2
    done = mag == 0

    k = 0
    while not done.all():
        k += 1
        if k > MAX_SERIES_TERMS:
            logger.warning("series did not converge within %d terms", MAX_SERIES_TERMS)
            break
        arg = alpha * k + beta
        if arg > 0:
            log_term = k * log_mag - special.gammaln(arg)
            if np.any(log_term > _LOG_MAX - 2.0):
                raise MLOverflowError(
                    "Mittag-Leffler series term overflows double precision",
                    alpha=alpha, beta=beta,
                )
            term = np.exp(log_term + 1j * k * angle)
        else:
            term = z ** k * special.rgamma(arg)
        term = np.where(done, 0.0, term)

        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t

        size = np.abs(term)
        largest = np.maximum(largest, size)
        last = np.where(done, last, size)
        small = size <= np.maximum(0.1 * tol * np.abs(total), 0.5 * _EPS * largest)
        done = done | ((k > peak) & small)

    if np.any(~np.isfinite(total)):
        raise MLOverflowError("Mittag-Leffler series is not finite", alpha=alpha, beta=beta)
    rounding = 2.0 * _EPS * largest
    return total, 2.0 * last + rounding


# -- asymptotic expansion ----------------------------------------------------

def _pole_terms(z: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Residue contributions (1/alpha) zeta^(1-beta) exp(zeta) of the poles s^alpha = z.

    Only poles on the principal sheet (|arg z + 2 pi m| < alpha pi) count.
    """
    mag = np.abs(z)
    arg = np.angle(z)
    out = np.zeros(z.shape, dtype=complex)
    for m in (-1, 0, 1):
        theta = arg + 2.0 * math.pi * m
        inside = np.abs(theta) < alpha * math.pi
        if not inside.any():
            continue
        zeta = mag ** (1.0 / alpha) * np.exp(1j * theta / alpha)
        if np.any(inside & (zeta.real > _LOG_MAX - 2.0)):
            raise MLOverflowError("pole contribution overflows double precision", alpha=alpha, beta=beta)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            contrib = zeta ** (1.0 - beta) * np.exp(zeta) / alpha
        out += np.where(inside, contrib, 0.0)
    return out


def _algebraic_terms(z: np.ndarray, alpha: float, beta: float, count: int) -> np.ndarray:
    """Terms -z^{-k} / Gamma(beta - alpha k), k = 1..count, as a (len(z), count) array."""
    k = np.arange(1, count + 1)
    coef = special.rgamma(beta - alpha * k)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        log_size = -np.outer(np.log(np.abs(z)), k) + _log_abs_rgamma(beta - alpha * k)[None, :]
        phase = np.exp(-1j * np.outer(np.angle(z), k))
        terms = -np.sign(coef)[None, :] * np.exp(log_size) * phase
    return np.where(coef[None, :] == 0.0, 0.0, terms)


def _alpha2_leading(x: np.ndarray, beta: float) -> np.ndarray:
    """Oscillatory leading term x^{(1-beta)/2} cos(sqrt(x) + pi (1-beta)/2)."""
    root = np.sqrt(x)
    return x ** ((1.0 - beta) / 2.0) * np.cos(root + math.pi * (1.0 - beta) / 2.0)


def _asymptotic_optimal(z: np.ndarray, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Expansion truncated just before its smallest nonzero algebraic term."""
    terms = _algebraic_terms(z, alpha, beta, MAX_ASYMPTOTIC_TERMS)
    size = np.abs(terms)
    masked = np.where(size > 0.0, size, np.inf)
    stop = np.argmin(masked, axis=1)
    est = masked[np.arange(z.size), stop]
    all_zero = ~np.isfinite(est)
    stop = np.where(all_zero, MAX_ASYMPTOTIC_TERMS, stop)
    est = np.where(all_zero, 0.0, est)
    keep = np.arange(MAX_ASYMPTOTIC_TERMS)[None, :] < stop[:, None]
    total = np.sum(np.where(keep, terms, 0.0), axis=1)
    poles = _pole_terms(z, alpha, beta)
    value = poles + total
    rounding = 4.0 * _EPS * (np.abs(poles) + np.sum(np.where(keep, size, 0.0), axis=1))
    return value, est + rounding


# -- Laplace (Hankel contour) representation ---------------------------------

def _on_cut(z: np.ndarray, alpha: float) -> np.ndarray:
    """Points whose poles sit on the branch cut (arg z = +-alpha pi mod 2 pi)."""
    arg = np.angle(z)
    hit = np.zeros(z.shape, dtype=bool)
    for m in (-1, 0, 1):
        hit |= np.isclose(np.abs(arg + 2.0 * math.pi * m), alpha * math.pi, rtol=0.0, atol=1e-12)
    return hit


def _laplace(z: np.ndarray, alpha: float, beta: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse-Laplace evaluation: pole residues plus the integral along the cut.

    beta is first shifted down by multiples of alpha so the cut integral
    converges at the origin, then E_{a,b+a} = (E_{a,b} - 1/Gamma(b)) / z maps back.
    """
    shift = 0
    b = beta
    while b > alpha + 0.5:
        b -= alpha
        shift += 1
    m = 1.0 / (1.0 + alpha - b)
    rot_minus = np.exp(-1j * math.pi * alpha)
    rot_plus = np.conj(rot_minus)
    pre_minus = np.exp(-1j * math.pi * (alpha - b))
    pre_plus = np.conj(pre_minus)
    n = z.size

    def integrand(u: float) -> np.ndarray:
        with np.errstate(all="ignore"):
            r = np.power(u, m)
            ra = np.power(r, alpha)
            jump = pre_minus / (ra * rot_minus - z) - pre_plus / (ra * rot_plus - z)
            val = jump * z * np.exp(-r)
        val = np.where(np.isfinite(val), val, 0.0)
        return np.concatenate([val.real, val.imag])

    res, err = integrate.quad_vec(
        integrand, 0.0, np.inf,
        epsabs=max(1e-2 * tol, 1e-15), epsrel=max(tol, 1e-13),
        norm="max", limit=20000,
    )
    cut = (res[:n] + 1j * res[n:]) * m / (2j * math.pi) / z
    est = float(err) * m / (2.0 * math.pi) / np.abs(z)
    values = cut + _pole_terms(z, alpha, b)
    est = est + 4.0 * _EPS * (np.abs(values) + np.abs(cut))
    for j in range(shift):
        values = (values - special.rgamma(b + j * alpha)) / z
        est = est / np.abs(z)
    return values, est


def _laplace_chunked(z: np.ndarray, alpha: float, beta: float, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    values = np.empty(z.shape, dtype=complex)
    errors = np.empty(z.shape)
    for start in range(0, z.size, LAPLACE_CHUNK):
        part = slice(start, start + LAPLACE_CHUNK)
        values[part], errors[part] = _laplace(z[part], alpha, beta, tol)
    return values, errors


# -- closed forms ------------------------------------------------------------

def _explicit(z: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    if np.any(z.real > _LOG_MAX - 2.0):
        raise MLOverflowError("exponential overflows double precision", alpha=alpha, beta=beta)
    with np.errstate(invalid="ignore", divide="ignore"):
        if alpha == 1.0 and beta == 1.0:
            return np.exp(z)
        if alpha == 1.0:
            return np.where(z == 0, 1.0, np.expm1(z) / np.where(z == 0, 1.0, z))
        root = np.sqrt(z)
        if beta == 1.0:
            return np.cosh(root)
        return np.where(z == 0, 1.0, np.sinh(root) / np.where(z == 0, 1.0, root))


# -- dispatch ----------------------------------------------------------------

def _evaluate(
    z: np.ndarray,
    alpha: float,
    beta: float,
    tol: float,
    use_explicit: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate a flat complex array, returning values, errors and branch tags."""
    values = np.zeros(z.shape, dtype=complex)
    errors = np.zeros(z.shape)
    branches = np.empty(z.shape, dtype=object)
    if z.size == 0:
        return values, errors, branches

    if use_explicit and (float(alpha), float(beta)) in _EXPLICIT:
        values[:] = _explicit(z, alpha, beta)
        errors[:] = 4.0 * _EPS * np.abs(values)
        branches[:] = "explicit"
        return values, errors, branches

    mag = np.abs(z)
    right_half = np.abs(np.angle(z)) <= math.pi / 2
    near = (mag <= series_radius(alpha)) | right_half
    far = ~near
    cut = _on_cut(z, alpha)

    if near.any():
        idx = np.flatnonzero(near)
        val, err = _series(z[idx], alpha, beta, tol)
        values[idx], errors[idx] = val, err
        branches[idx] = "series"
        retry = idx[(err > tol * np.abs(val)) & ~right_half[idx] & (mag[idx] >= 1.0) & ~cut[idx]]
        if retry.size:
            lval, lerr = _laplace_chunked(z[retry], alpha, beta, tol)
            better = lerr < errors[retry]
            pick = retry[better]
            values[pick], errors[pick] = lval[better], lerr[better]
            branches[pick] = "laplace"
            logger.debug("series fallback to laplace at %d of %d points", pick.size, retry.size)

    if far.any():
        idx = np.flatnonzero(far)
        val, err = _asymptotic_optimal(z[idx], alpha, beta)
        negative_axis = (z[idx].imag == 0) & (z[idx].real < 0)
        tag = np.where((alpha == 2.0) & negative_axis, "asymptotic-alpha2", "asymptotic")
        values[idx], errors[idx], branches[idx] = val, err, tag
        retry = idx[(err > tol * np.abs(val)) & ~cut[idx]]
        if retry.size:
            lval, lerr = _laplace_chunked(z[retry], alpha, beta, tol)
            better = lerr < errors[retry]
            pick = retry[better]
            values[pick], errors[pick] = lval[better], lerr[better]
            branches[pick] = "laplace"

    return values, errors, branches


def mittag_leffler(
    z: Union[Number, Sequence[Number], np.ndarray],
    alpha: float,
    beta: float = 1.0,
    tol: float = DEFAULT_TOL,
    use_explicit: bool = True,
) -> Union[Number, np.ndarray]:
    """Vectorized E_{alpha,beta}(z).

    Real input gives real output. Used by every solver in the package; see
    :func:`ml_eval` for the scalar form that reports branch and error.

    Args:
        z: Scalar or array of evaluation points
        alpha: Order in (0, 2]
        beta: Second parameter
        tol: Relative accuracy requested from the series/asymptotic switch
        use_explicit: Use closed forms for (1,1), (1,2), (2,1), (2,2)

    Returns:
        Values with the shape of ``z``.

    Raises:
        DomainError: alpha outside (0, 2] or tol <= 0
        MLOverflowError: value not representable in double precision
    """
    _validate_orders(alpha, beta)
    if tol <= 0:
        raise DomainError("tol must be positive", tol=tol)
    arr = np.asarray(z)
    is_real = not np.iscomplexobj(arr)
    flat = arr.astype(complex).ravel()
    values, _, _ = _evaluate(flat, alpha, beta, tol, use_explicit)
    out = values.real if is_real else values
    out = out.reshape(arr.shape)
    if arr.ndim == 0:
        return out.item()
    return out


def ml_eval(params: MLParams, tol: float = DEFAULT_TOL, use_explicit: bool = True) -> MLValue:
    """Evaluate E_{alpha,beta}(z) at one point with branch and error estimate.

    Args:
        params: Orders and evaluation point
        tol: Requested accuracy
        use_explicit: Allow closed forms for the classical cases

    Returns:
        MLValue with the value, the branch tag and a nonnegative error estimate

    Raises:
        DomainError: tol <= 0
        MLOverflowError: value not representable in double precision
    """
    if tol <= 0:
        raise DomainError("tol must be positive", tol=tol)
    z = np.array([params.z], dtype=complex)
    values, errors, branches = _evaluate(z, params.alpha, params.beta, tol, use_explicit)
    value: Number = complex(values[0])
    if isinstance(params.z, (int, float, np.floating, np.integer)):
        value = value.real
    return MLValue(value=value, branch=str(branches[0]), est_error=float(errors[0]))


def ml_asymptotic_tail(params: MLParams, N: int) -> MLValue:
    """N-term asymptotic expansion for large |z| away from the positive sector.

    The algebraic part is -sum_{k=1..N} z^{-k}/Gamma(beta - alpha k). The
    exponentially small pole contributions are added as well; for alpha = 2
    they form the oscillatory term x^{(1-beta)/2} cos(sqrt(x) + pi (1-beta)/2).

    Raises:
        DomainError: z = 0, N < 1, alpha = 2 with z off the negative axis,
            or |arg z| <= pi alpha / 2 for alpha < 2
    """
    if N < 1:
        raise DomainError("N must be a positive integer", N=N)
    z = complex(params.z)
    if z == 0:
        raise DomainError("asymptotic expansion undefined at z = 0")
    alpha, beta = params.alpha, params.beta
    arr = np.array([z])
    terms = _algebraic_terms(arr, alpha, beta, N + 1)[0]
    tail = complex(np.sum(terms[:N]))
    if alpha == 2.0:
        if z.imag != 0.0 or z.real >= 0.0:
            raise DomainError("alpha = 2 expansion needs a negative real argument", z=str(z))
        lead = float(_alpha2_leading(np.array([-z.real]), beta)[0])
        value: Number = lead + tail.real
        branch = "asymptotic-alpha2"
    else:
        if abs(math.atan2(z.imag, z.real)) <= math.pi * alpha / 2:
            raise DomainError(
                "asymptotic expansion needs |arg z| > pi alpha / 2",
                alpha=alpha, arg=math.atan2(z.imag, z.real),
            )
        value = complex(_pole_terms(arr, alpha, beta)[0]) + tail
        branch = "asymptotic"
        if isinstance(params.z, (int, float, np.floating, np.integer)):
            value = value.real
    return MLValue(value=value, branch=branch, est_error=float(abs(terms[N])))


def default_positivity_grid(points: int = 200, x_max: float = 1e6) -> List[float]:
    """Zero followed by a log-spaced grid up to x_max."""
    return [0.0] + list(np.logspace(-3.0, math.log10(x_max), points - 1))


def positivity_scan(alpha: float, rho: float, grid: Sequence[float]) -> PositivityResult:
    """Check E_{alpha,rho}(-x) > 0 on a grid of x >= 0.

    A point counts as a violation only when the value stays negative after
    adding its error estimate, so exact zeros of a nonnegative function are
    not reported.

    Raises:
        DomainError: alpha outside (1, 2] or a negative grid point
    """
    if not (1.0 < alpha <= 2.0):
        raise DomainError("positivity scan needs 1 < alpha <= 2", alpha=alpha)
    xs = np.asarray(grid, dtype=float)
    if np.any(xs < 0):
        raise DomainError("grid points must be nonnegative")
    if xs.size == 0:
        return PositivityResult(positive=True, first_violation=None, min_value=math.inf)
    values, errors, _ = _evaluate((-xs).astype(complex), alpha, rho, DEFAULT_TOL, True)
    real = values.real
    bad = np.flatnonzero(real + errors < 0.0)
    first = float(xs[bad[0]]) if bad.size else None
    return PositivityResult(positive=first is None, first_violation=first, min_value=float(real.min()))
