import math

import mpmath
import numpy as np
import pytest

from conftest import periodic_grid
from oracles import linear_fourier
from ssq.errors import FitDegenerate, NoConvergence
from ssq.fields import ComplexField
from ssq.painleve2 import (C3, airy_reference, airy_reference_prime, linear_profile, match_kappa_from_pde,
                           solve_painleve)

mpmath.mp.dps = 40


def test_airy_at_zero():
    ref = mpmath.mpf(3) ** (-mpmath.mpf(2) / 3) / mpmath.gamma(mpmath.mpf(2) / 3)
    assert airy_reference(0.0) == pytest.approx(float(ref), abs=1e-16)
    assert airy_reference(0.0) == pytest.approx(0.3550280538878172, abs=1e-15)


def test_airy_against_mpmath():
    ys = np.concatenate([np.linspace(-25, 25, 201), [-12.0001, -11.9999, 11.9999, 12.0001]])
    for y in ys:
        assert abs(airy_reference(y) - float(mpmath.airyai(y))) < 1e-12
        assert abs(airy_reference_prime(y) - float(mpmath.airyai(y, derivative=1))) < 1e-12 * max(1, abs(y))


def test_airy_wronskian():
    for y in np.linspace(-10, 6, 33):
        bi, bip = float(mpmath.airybi(y)), float(mpmath.airybi(y, derivative=1))
        w = airy_reference(y) * bip - airy_reference_prime(y) * bi
        assert abs(w - 1 / math.pi) < 1e-10 * max(1.0, abs(bi))


def test_airy_monotone_decay():
    v = airy_reference(np.linspace(1.0, 20.0, 400))
    assert np.all(np.diff(v) < 0) and np.all(v > 0)


def test_zero_kappa():
    s = solve_painleve(0.0)
    assert np.all(s.up == 0) and np.all(s(np.linspace(-5, 5, 11)) == 0)


@pytest.mark.parametrize("kappa", [0.1, 0.5, 1.0, -0.7 + 0.4j, 1.5j])
def test_residual(kappa):
    s = solve_painleve(kappa)
    assert s.residual_max < 1e-8
    assert s.residual_l2sq < 1e-14


def test_linear_regime():
    kappa = 1e-4
    s = solve_painleve(kappa)
    ys = np.linspace(-2, s.y_max, 800)
    ref = linear_profile(kappa, ys)
    assert np.max(np.abs(s(ys) - ref) / np.abs(ref)) < 1e-6


@pytest.mark.parametrize("kappa", [1e-3, -4e-4j, 2e-4 + 2e-4j])
def test_linear_envelope(kappa):
    s = solve_painleve(kappa)
    ys = np.linspace(-2, s.y_max, 800)
    assert np.max(np.abs(s(ys) - linear_profile(kappa, ys))) <= 50 * abs(kappa) ** 3


def test_refinement_and_left_edge():
    a = solve_painleve(0.8)
    b = solve_painleve(0.8, n=1280)
    c = solve_painleve(0.8, y_min=-20.0)
    ys = np.linspace(-10, a.y_max, 500)
    assert np.max(np.abs(a(ys) - b(ys))) < 1e-8
    assert np.max(np.abs(a(ys) - c(ys))) < 1e-6


def test_airy_rate_at_the_right():
    s = solve_painleve(0.6)
    y = s.y_match - 0.4
    h = 1e-3
    ld = (np.log(np.abs(s(y + h))) - np.log(np.abs(s(y - h)))) / (2 * h)
    ref = C3 * airy_reference_prime(C3 * y) / airy_reference(C3 * y)
    assert abs(ld[0] - ref) < 1e-5


def test_cubic_coefficient_rescaling():
    """U solves the 12-version iff U/sqrt(2) solves the 24-version (tail amplitude scaled alike)."""
    kappa = 0.9
    u12 = solve_painleve(kappa, cubic=12.0)
    u24 = solve_painleve(kappa / math.sqrt(2))
    ys = np.linspace(-12, 6, 300)
    assert np.max(np.abs(u12(ys) - math.sqrt(2) * u24(ys))) < 1e-9


def test_large_kappa_fails_cleanly():
    with pytest.raises(NoConvergence):
        solve_painleve(5.0, continuation_steps=4)


def linear_runs(u0f, ts=(50.0, 100.0, 200.0)):
    xs = periodic_grid(4000.0, 2**15)
    u0 = u0f(xs)
    return [(t, ComplexField(xs, linear_fourier(xs, u0, t), t)) for t in ts], u0, xs


def test_match_kappa_zero_data():
    runs, _, _ = linear_runs(lambda x: 0 * x + 0j)
    assert match_kappa_from_pde(runs).kappa == 0


def test_match_kappa_linear_oracle():
    """Linear evolution: t^{1/3} u(y t^{1/3}, t) -> 3^{-1/3} (int u0) Ai(3^{-1/3} y)."""
    runs, u0, xs = linear_runs(lambda x: 0.05 * np.exp(-x**2) * (1 + 0.3j))
    exact = C3 * np.sum(u0) * (xs[1] - xs[0])
    fit = match_kappa_from_pde(runs)
    assert abs(fit.kappa - exact) < 0.01 * abs(exact)
    assert fit.spread < 0.02


def test_match_kappa_rejects_non_airy_data():
    xs = np.linspace(-100, 100, 4001)
    junk = [(t, ComplexField(xs, np.sin(xs) * np.exp(-(xs / 30) ** 2) + 0j, t)) for t in (1.0, 2.0)]
    with pytest.raises(FitDegenerate):
        match_kappa_from_pde(junk)
