import math

import numpy as np
import pytest

from sizestruct.coeffs import GeneralKernel, ModelParams, SeparableKernel, constant


def closed_form_k(lam, b, mu=0.5, c1=0.0, m=1.0):
    """Direct integration of K for gamma1 = 1, beta1 = b, beta2 = 1 and constant rates."""
    a = lam + mu + c1
    x = a * m
    if abs(x) < 1e-3:
        # Taylor series of (1/a)[m - (1 - exp(-a m))/a] avoids cancellation near a = 0
        return b * m * m * (1 / 2 - x / 6 + x * x / 24 - x ** 3 / 120)
    return (b / a) * (m + math.expm1(-x) / a)


def bisect_closed_form(b, tol=1e-14, mu=0.5):
    lo, hi = -20.0, 20.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if closed_form_k(mid, b, mu) > 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def product_kernel(m=1.0, n_nodes=11):
    return GeneralKernel.from_function(lambda s, y: s * y, m, n_nodes)


def with_kernel(beta, *, gamma1=1.0, gamma2=1.0, mu=0.2, c1=0.5, c2=0.5, m=1.0):
    c = lambda v: constant(v, m)  # noqa: E731
    return ModelParams(c(gamma1), c(gamma2), c(mu), c(c1), c(c2), beta, m)


@pytest.fixture
def decoupled_params():
    """gamma1 = 1, mu = 0.5, no transfer, beta = 2 * 1 (lambda* = -0.5)."""
    return ModelParams.constant(gamma1=1.0, mu=0.5, beta=(2.0, 1.0))


@pytest.fixture
def aeg_params():
    return ModelParams.constant(gamma1=1.0, gamma2=1.0, mu=0.2, c1=1.0, c2=1.0, beta=1.0)


@pytest.fixture
def zero_birth():
    return SeparableKernel.rank_one(constant(0.0), constant(1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
