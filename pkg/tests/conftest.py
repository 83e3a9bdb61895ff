"""Test fixtures for fracwave."""

import mpmath
import pytest

from fracwave.fracops import TimeMesh
from fracwave.spectral_pde import SpectralDomain


def ml_reference(z, alpha: float, beta: float, dps: int = 60) -> complex:
    """High-precision Mittag-Leffler value by direct series summation."""
    with mpmath.workdps(dps):
        z = mpmath.mpc(z)
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = z ** k * mpmath.rgamma(a * k + b)
            total += term
            if k > 10 and abs(term) < mpmath.mpf(10) ** (-dps + 5) * max(abs(total), 1):
                break
            k += 1
        return complex(total)


@pytest.fixture
def ml_oracle():
    """Reference E_{alpha,beta}(z); raise dps for large |z|."""
    return ml_reference


@pytest.fixture
def uniform_mesh():
    """Uniform mesh on [0, 2] with 400 steps."""
    return TimeMesh(T=2.0, N=400)


@pytest.fixture
def graded_mesh():
    """Quadratically graded mesh on [0, 1] with 2048 steps."""
    return TimeMesh(T=1.0, N=2048, grading=2.0)


@pytest.fixture
def small_domain():
    """1D sine basis with 8 modes."""
    return SpectralDomain(dimension=1, modes=8, grid_factor=4)


@pytest.fixture
def small_domain_2d():
    """2D sine basis with 8 modes per axis."""
    return SpectralDomain(dimension=2, modes=8, grid_factor=4)
