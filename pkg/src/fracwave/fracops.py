"""Discrete Riemann-Liouville integrals, Caputo derivatives and test-function kernels."""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from fracwave.errors import DomainError, PreconditionError
from fracwave.log import get_logger
from fracwave.mlf import mittag_leffler

logger = get_logger(__name__)

Primitive = Callable[[np.ndarray], np.ndarray]

BOUNDARY_TOL = 1e-8
KERNEL_TOL = 1e-10


@dataclass(frozen=True)
class TimeMesh:
    """Time grid on [0, T] with nodes T (j/N)^r and a convolution-weight cache."""

    T: float
    N: int
    grading: float = 1.0
    explicit_nodes: Optional[Tuple[float, ...]] = field(default=None, repr=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weight_cache: Dict[Hashable, np.ndarray] = field(
        init=False, default_factory=dict, repr=False, compare=False,
    )

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError("mesh horizon must be positive", T=self.T)
        if self.N < 1:
            raise DomainError("mesh needs at least one interval", N=self.N)
        if self.grading < 1.0:
            raise DomainError("grading exponent must be >= 1", grading=self.grading)
        if self.explicit_nodes is not None:
            nodes = np.array(self.explicit_nodes, dtype=float)
            if nodes.size != self.N + 1 or nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
                raise DomainError("explicit nodes must start at 0 and increase strictly")
            if nodes[-1] != self.T:
                raise DomainError("last explicit node must equal the horizon", T=self.T)
        else:
            frac = np.arange(self.N + 1) / self.N
            nodes = self.T * frac if self.grading == 1.0 else self.T * frac ** self.grading
            nodes[0], nodes[-1] = 0.0, self.T
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_nodes(cls, nodes: Sequence[float]) -> "TimeMesh":
        """Mesh on arbitrary nodes (e.g. a uniform grid with appended refined steps)."""
        values = tuple(float(t) for t in nodes)
        return cls(T=values[-1], N=len(values) - 1, explicit_nodes=values)

    @classmethod
    def graded_for(cls, T: float, N: int, gamma: float) -> "TimeMesh":
        """Graded mesh r = 2 / min(gamma, 1) for paths with a t^gamma start-up."""
        return cls(T=T, N=N, grading=2.0 / min(gamma, 1.0))

    @property
    def is_uniform(self) -> bool:
        return self.grading == 1.0 and self.explicit_nodes is None

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def refined(self, factor: int = 2) -> "TimeMesh":
        if self.explicit_nodes is not None:
            raise DomainError("explicit-node meshes cannot be refined")
        return TimeMesh(T=self.T, N=self.N * factor, grading=self.grading)

    def left_weights(self, order: float) -> np.ndarray:
        """Cached product-trapezoid matrix of the left integral of ``order``."""
        key = ("left", float(order))
        if key not in self.weight_cache:
            self.weight_cache[key] = power_weights(self.nodes, order)
        return self.weight_cache[key]

    def right_weights(self, order: float) -> np.ndarray:
        """Cached weights of the right integral, built on the reflected mesh."""
        key = ("right", float(order))
        if key not in self.weight_cache:
            reflected = self.T - self.nodes[::-1]
            self.weight_cache[key] = power_weights(reflected, order)
        return self.weight_cache[key]


@dataclass
class SampledPath:
    """Grid function aligned with the nodes of a mesh."""

    mesh: TimeMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.mesh.nodes.shape:
            raise DomainError(
                "path length does not match mesh",
                values=int(self.values.size), nodes=int(self.mesh.nodes.size),
            )

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes

    @classmethod
    def from_function(cls, mesh: TimeMesh, fn: Callable[[np.ndarray], np.ndarray]) -> "SampledPath":
        return cls(mesh=mesh, values=np.broadcast_to(fn(mesh.nodes), mesh.nodes.shape).copy())


@dataclass(frozen=True)
class TestFunctionSpec:
    """Parameters of psi_T(t) = (1 - t/T)^l."""

    __test__ = False

    l: float
    T: float
    gamma: float
    alpha: float

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError("test-function horizon must be positive", T=self.T)
        if self.l < 2:
            raise DomainError("test-function exponent must be at least 2", l=self.l)
        if self.gamma < 0 or self.alpha <= 0:
            raise DomainError("orders must be nonnegative", gamma=self.gamma, alpha=self.alpha)

    def admissible_for(self, p: float) -> bool:
        """True when l >= p (alpha + gamma) / (p - 1)."""
        return self.l >= p * (self.alpha + self.gamma) / (p - 1.0)


# -- weights -----------------------------------------------------------------

def product_trapezoid_weights(
    nodes: np.ndarray,
    primitive1: Primitive,
    primitive2: Primitive,
    rows: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Product-trapezoid weights for int_0^{t_n} k(t_n - s) f(s) ds.

    ``primitive1`` and ``primitive2`` are the first and second antiderivatives
    of the kernel vanishing at 0. f is interpolated linearly between nodes,
    so the rule is exact for piecewise-linear f.

    Args:
        nodes: Strictly increasing nodes starting at 0
        primitive1: K1(tau) = int_0^tau k
        primitive2: K2(tau) = int_0^tau K1
        rows: Node indices to build (default all)

    Returns:
        Array of shape (len(rows), len(nodes)); row i holds the weights of t_{rows[i]}.
    """
    nodes = np.asarray(nodes, dtype=float)
    rows = np.arange(nodes.size) if rows is None else np.asarray(rows)
    out = np.zeros((rows.size, nodes.size))
    for i, n in enumerate(rows):
        if n == 0:
            continue
        tau = nodes[n] - nodes[: n + 1]
        k1 = primitive1(tau)
        k2 = primitive2(tau)
        h = nodes[1 : n + 1] - nodes[:n]
        # interval [t_j, t_{j+1}]: A = t_n - t_j, B = t_n - t_{j+1}
        moment = (k2[:n] - k2[1:] - h * k1[1:]) / h
        out[i, 1 : n + 1] += moment
        out[i, :n] += (k1[:n] - k1[1:]) - moment
    return out


def toeplitz_weights(h: float, n_max: int, primitive1: Primitive, primitive2: Primitive) -> Tuple[np.ndarray, np.ndarray]:
    """Weight generators for a uniform mesh.

    Returns (first, rest) so that on t_j = j h the weight of f_j in row n is
    ``rest[n - j]`` for 0 < j and ``first[n]`` for j = 0 (and rest[0] for j = n).
    """
    tau = h * np.arange(n_max + 1)
    k1 = primitive1(tau)
    k2 = primitive2(tau)
    # index m: interval [t_{n-m}, t_{n-m+1}]
    moment = np.zeros(n_max + 1)
    moment[1:] = (k2[1:] - k2[:-1] - h * k1[:-1]) / h
    mass = np.zeros(n_max + 1)
    mass[1:] = k1[1:] - k1[:-1]
    rest = np.zeros(n_max + 1)
    rest[0] = moment[1] if n_max >= 1 else 0.0
    if n_max >= 2:
        rest[1:-1] = moment[2:] + (mass[1:-1] - moment[1:-1])
    first = np.zeros(n_max + 1)
    first[1:] = mass[1:] - moment[1:]
    return first, rest


def toeplitz_row(first: np.ndarray, rest: np.ndarray, n: int) -> np.ndarray:
    """Row n of the uniform-mesh weight matrix from :func:`toeplitz_weights`."""
    row = np.zeros(n + 1)
    if n == 0:
        return row
    row[1:] = rest[n - 1 :: -1][:n]
    row[0] = first[n]
    return row


def power_primitives(order: float) -> Tuple[Primitive, Primitive]:
    """Antiderivatives of tau^(order-1)/Gamma(order)."""
    g1 = special.gamma(order + 1.0)
    g2 = special.gamma(order + 2.0)
    return (lambda tau: np.power(tau, order) / g1, lambda tau: np.power(tau, order + 1.0) / g2)


def power_weights(nodes: np.ndarray, order: float) -> np.ndarray:
    """Full lower-triangular weight matrix of the left RL integral of ``order``."""
    if order <= 0:
        raise DomainError("fractional order must be positive", order=order)
    k1, k2 = power_primitives(order)
    return product_trapezoid_weights(nodes, k1, k2)


# -- integrals ---------------------------------------------------------------

def frac_integral_left(path: SampledPath, order: float) -> SampledPath:
    """Grid values of 0_I_t^order f by product-trapezoid quadrature.

    Raises:
        DomainError: order <= 0
    """
    if order <= 0:
        raise DomainError("fractional order must be positive", order=order)
    weights = path.mesh.left_weights(order)
    return SampledPath(mesh=path.mesh, values=weights @ path.values)


def frac_integral_right(path: SampledPath, order: float) -> SampledPath:
    """Grid values of t_I_T^order g, computed on the reflected mesh.

    Raises:
        DomainError: order <= 0
    """
    if order <= 0:
        raise DomainError("fractional order must be positive", order=order)
    weights = path.mesh.right_weights(order)
    return SampledPath(mesh=path.mesh, values=(weights @ path.values[::-1])[::-1])


def trapezoid(path: SampledPath) -> float:
    """Trapezoid rule over the whole mesh."""
    return float(integrate.trapezoid(path.values, path.t))


def interpolate(path: SampledPath, t: float) -> float:
    """Piecewise-linear value of the path at time t."""
    if t < 0 or t > path.mesh.T * (1 + 1e-12):
        raise DomainError("time outside mesh", t=t, T=path.mesh.T)
    return float(np.interp(t, path.t, path.values))


# -- Caputo derivatives ------------------------------------------------------

def second_differences(values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Nonuniform three-point second derivatives with one-sided end stencils."""
    if values.size < 3:
        raise DomainError("second differences need at least 3 nodes", nodes=int(values.size))
    h = np.diff(nodes)
    out = np.empty_like(values)
    hl, hr = h[:-1], h[1:]
    out[1:-1] = 2.0 * (hr * values[:-2] - (hl + hr) * values[1:-1] + hl * values[2:]) / (hl * hr * (hl + hr))
    out[0] = 2.0 * (h[1] * values[0] - (h[0] + h[1]) * values[1] + h[0] * values[2]) / (h[0] * h[1] * (h[0] + h[1]))
    out[-1] = 2.0 * (h[-1] * values[-3] - (h[-2] + h[-1]) * values[-2] + h[-2] * values[-1]) / (
        h[-2] * h[-1] * (h[-2] + h[-1])
    )
    return out


def caputo_left(
    path: SampledPath,
    alpha: float,
    w0: float,
    w1: float,
    scheme: str = "integrate-differences",
) -> SampledPath:
    """Grid values of the Caputo derivative 0_D_t^alpha g for 1 < alpha < 2.

    ``integrate-differences`` applies 0_I^{2-alpha} to second differences of
    g - w1 t - w0. ``differentiate-integral`` takes second differences of
    0_I^{2-alpha}(g - w1 t - w0) instead, which is far more accurate when g
    has a t^alpha start-up.

    Raises:
        DomainError: alpha outside (1, 2), fewer than 3 nodes, unknown scheme
    """
    if not (1.0 < alpha < 2.0):
        raise DomainError("Caputo derivative needs 1 < alpha < 2", alpha=alpha)
    if path.values.size < 3:
        raise DomainError("Caputo derivative needs at least 3 nodes", nodes=int(path.values.size))
    t = path.t
    jet_free = path.values - w1 * t - w0
    if scheme == "integrate-differences":
        curvature = SampledPath(mesh=path.mesh, values=second_differences(jet_free, t))
        return frac_integral_left(curvature, 2.0 - alpha)
    if scheme == "differentiate-integral":
        smoothed = frac_integral_left(SampledPath(mesh=path.mesh, values=jet_free), 2.0 - alpha)
        return SampledPath(mesh=path.mesh, values=second_differences(smoothed.values, t))
    raise DomainError(f"unknown Caputo scheme {scheme!r}")


def caputo_right(path: SampledPath, alpha: float) -> SampledPath:
    """Right Caputo derivative t_D_T^alpha g for g with g(T) = g'(T) = 0, 1 < alpha <= 2."""
    if not (1.0 < alpha <= 2.0):
        raise DomainError("right Caputo derivative needs 1 < alpha <= 2", alpha=alpha)
    curvature = SampledPath(mesh=path.mesh, values=second_differences(path.values, path.t))
    if alpha == 2.0:
        return curvature
    return frac_integral_right(curvature, 2.0 - alpha)


# -- test functions ----------------------------------------------------------

def test_fn_derivatives(spec: TestFunctionSpec, t: float) -> Tuple[float, float, float]:
    """Exact psi_T, t_D_T^gamma psi_T and t_D_T^{alpha+gamma} psi_T at time t.

    Raises:
        DomainError: t outside [0, T]
    """
    if t < 0 or t > spec.T:
        raise DomainError("test function is defined on [0, T]", t=t, T=spec.T)
    l, T = spec.l, spec.T
    gap = T - t
    psi = (gap / T) ** l
    d_gamma = _right_power_derivative(l, spec.gamma, T, gap)
    d_total = _right_power_derivative(l, spec.alpha + spec.gamma, T, gap)
    return psi, d_gamma, d_total


test_fn_derivatives.__test__ = False


def _right_power_derivative(l: float, order: float, T: float, gap: float) -> float:
    coef = special.gamma(l + 1.0) * special.rgamma(l + 1.0 - order)
    exponent = l - order
    if gap == 0.0:
        if exponent > 0:
            return 0.0
        return math.inf if coef != 0 else 0.0
    return float(coef * T ** (-l) * gap ** exponent)


def test_fn_moments(spec: TestFunctionSpec) -> Tuple[float, float]:
    """Closed forms of int_0^T t_D_T^{alpha+gamma} psi_T dt and int_0^T t * t_D_T^{alpha+gamma} psi_T dt."""
    l, T = spec.l, spec.T
    sigma = spec.alpha + spec.gamma
    c0 = special.gamma(l + 1.0) * special.rgamma(l + 2.0 - sigma)
    c1 = special.gamma(l + 1.0) * special.rgamma(l + 3.0 - sigma)
    return float(c0 * T ** (1.0 - sigma)), float(c1 * T ** (2.0 - sigma))


test_fn_moments.__test__ = False


def test_function_path(mesh: TimeMesh, l: float) -> SampledPath:
    """psi_T sampled on a mesh."""
    return SampledPath(mesh=mesh, values=(1.0 - mesh.nodes / mesh.T) ** l)


test_function_path.__test__ = False


# -- integration by parts ----------------------------------------------------

def ibp_residual(f: SampledPath, g: SampledPath, alpha: float, f0: float, f1: float) -> float:
    """Discrepancy of the fractional integration-by-parts identity.

    Computes |int (0_D^alpha f) g - int (f - f1 t - f0)(t_D_T^alpha g)| with
    the module's quadratures.

    Raises:
        DomainError: alpha outside (1, 2]
        PreconditionError: g(T) or g'(T) not zero within tolerance
    """
    if not (1.0 < alpha <= 2.0):
        raise DomainError("integration by parts needs 1 < alpha <= 2", alpha=alpha)
    if f.mesh is not g.mesh and not np.array_equal(f.t, g.t):
        raise DomainError("paths must share a mesh")
    scale = max(float(np.max(np.abs(g.values))), 1.0)
    h = g.t[-1] - g.t[-2]
    T = g.mesh.T
    slope = (g.values[-1] - g.values[-2]) / h
    # a one-sided difference of a function with g'(T) = 0 is O(h)
    slope_tol = scale * (BOUNDARY_TOL + 2.0 * h / T) / T
    if abs(g.values[-1]) > BOUNDARY_TOL * scale or abs(slope) > slope_tol:
        raise PreconditionError(
            "g must satisfy g(T) = g'(T) = 0",
            g_T=float(g.values[-1]), slope_T=float(slope),
        )
    jet_free = f.values - f1 * f.t - f0
    if alpha == 2.0:
        left_d = second_differences(jet_free, f.t)
    else:
        left_d = caputo_left(f, alpha, f0, f1).values
    right_d = caputo_right(g, alpha).values
    lhs = integrate.trapezoid(left_d * g.values, f.t)
    rhs = integrate.trapezoid(jet_free * right_d, f.t)
    return float(abs(lhs - rhs))


# -- Mittag-Leffler memory kernel --------------------------------------------

@dataclass(frozen=True)
class MittagLefflerKernel:
    """Kernel tau^(sigma-1) E_{alpha,sigma}(-lam tau^alpha) with its primitives.

    Integrating once or twice raises the second Mittag-Leffler parameter by
    one, so both primitives stay in closed form. ``lam = 0`` gives the plain
    Riemann-Liouville kernel of order sigma.
    """

    alpha: float
    sigma: float
    lam: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError("kernel order must be positive", sigma=self.sigma)
        if self.lam < 0:
            raise DomainError("kernel rate must be nonnegative", lam=self.lam)

    def _shifted(self, tau: np.ndarray, shift: float) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        power = np.power(tau, self.sigma + shift - 1.0)
        if self.lam == 0.0:
            return power * special.rgamma(self.sigma + shift)
        ml = mittag_leffler(-self.lam * np.power(tau, self.alpha), self.alpha, self.sigma + shift, tol=KERNEL_TOL)
        return power * ml

    def __call__(self, tau: np.ndarray) -> np.ndarray:
        return self._shifted(tau, 0.0)

    def primitive1(self, tau: np.ndarray) -> np.ndarray:
        return self._shifted(tau, 1.0)

    def primitive2(self, tau: np.ndarray) -> np.ndarray:
        return self._shifted(tau, 2.0)

    def weights(self, nodes: np.ndarray, rows: Optional[np.ndarray] = None) -> np.ndarray:
        return product_trapezoid_weights(nodes, self.primitive1, self.primitive2, rows=rows)

    def toeplitz(self, h: float, n_max: int) -> Tuple[np.ndarray, np.ndarray]:
        return toeplitz_weights(h, n_max, self.primitive1, self.primitive2)

    def last_weight(self, h: float) -> float:
        """Weight of the newest node for a step of length h."""
        return float(self.primitive2(np.array([h]))[0] / h)
