import math

import numpy as np
import pytest

from apfronts import _kernels
from apfronts.coeff import CoefficientField

SQ2 = math.sqrt(2.0)


def constant_field(a=1.0, c=1.0):
    return CoefficientField.constant(a, c)


def periodic_field():
    # c(x) = 1 + 0.5 sin(2 pi x)
    return CoefficientField.periodic(1.0, c_mean=1.0, c_terms=[(0.5, 1, -math.pi / 2)], name="periodic")


def quasi_field(eps=0.1):
    # c(x) = 1 + eps (cos x + cos sqrt2 x)
    return CoefficientField.quasiperiodic([1.0, SQ2], c_mean=1.0, c_amps=[eps, eps], name="quasi")


def periodic_a_field():
    # constant c, periodic diffusivity a(x) = 1 + 0.3 cos(2 pi x)
    return CoefficientField.periodic(1.0, a_mean=1.0, a_terms=[(0.3, 1, 0.0)], c_mean=1.0, name="periodic-a")


@pytest.fixture
def const():
    return constant_field()


@pytest.fixture
def per():
    return periodic_field()


@pytest.fixture
def qp():
    return quasi_field()


@pytest.fixture(params=["numba", "numpy"])
def impl(request):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba not installed")
    return getattr(_kernels, f"{request.param}_impl")


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# independent oracles


def monodromy(field, lam, period, rtol=1e-11):
    """Monodromy matrix of (a phi')' + (c - lam) phi = 0 over one period (solve_ivp)."""
    from scipy.integrate import solve_ivp

    def rhs(x, y):
        # y = (phi, a phi')
        return [y[1] / field.a(x), (lam - field.c(x)) * y[0]]

    cols = []
    for y0 in ([1.0, 0.0], [0.0, 1.0]):
        sol = solve_ivp(rhs, (0.0, period), y0, rtol=rtol, atol=1e-13, method="DOP853")
        cols.append(sol.y[:, -1])
    return np.array(cols).T


def floquet_lambda1(field, period, lo, hi):
    """Top of the spectrum: largest lam with |trace| <= 2 (bisection on trace - 2)."""
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.trace(monodromy(field, mid, period)) > 2.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def floquet_mu(field, gamma, period):
    """Decay exponent: log of the largest monodromy multiplier per unit length."""
    ev = np.linalg.eigvals(monodromy(field, gamma, period))
    return float(np.log(np.max(np.abs(ev))) / period)


def cell_operator(field, period, n, p=0.0):
    """Dense periodic-cell matrix of the tilted operator L_p (centered differences)."""
    h = period / n
    x = h * np.arange(n)
    a = field.a(x)
    ap = field.a_prime(x)
    b = ap - 2 * a * p
    ct = a * p * p - ap * p + field.c(x)
    M = np.zeros((n, n))
    for i in range(n):
        M[i, i] = -2 * a[i] / h**2 + ct[i]
        M[i, (i + 1) % n] += a[i] / h**2 + b[i] / (2 * h)
        M[i, (i - 1) % n] += a[i] / h**2 - b[i] / (2 * h)
    return x, M


def cell_principal(field, period, n=400, p=0.0):
    x, M = cell_operator(field, period, n, p)
    w, V = np.linalg.eig(M)
    k = int(np.argmax(w.real))
    v = np.abs(V[:, k].real)
    return float(w[k].real), x, v
