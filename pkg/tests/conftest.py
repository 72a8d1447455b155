import numpy as np
import pytest

from ssq.fields import ComplexField, ReflectionCoefficient
from ssq.soliton import one_soliton_data, soliton_field


def periodic_grid(X, n):
    return -X + 2 * X / n * np.arange(n)


@pytest.fixture(scope="session")
def one_sd():
    return one_soliton_data()


@pytest.fixture(scope="session")
def soliton0(one_sd):
    """One-soliton (pole 0.8i) on the periodic grid used by the PDE runs."""
    return soliton_field(one_sd, periodic_grid(40.0, 2048), 0.0)


@pytest.fixture(scope="session")
def zero_field():
    xs = np.linspace(-20, 20, 401)
    return ComplexField(xs, np.zeros_like(xs, dtype=complex), 0.0)


def smooth_gamma(scale=0.3, phase=0.4):
    """A smooth reflection coefficient obeying gamma(k) = conj(gamma(-k)) sigma1."""
    k = np.linspace(-6, 6, 1201)
    g1 = scale * np.exp(-(k - 0.3) ** 2) * np.exp(1j * phase * k)
    g2 = np.conj(g1[::-1])
    return ReflectionCoefficient(k, np.stack([g1, g2], axis=1))
