import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from oracles import pde_residual
from ssq.errors import SymmetryBroken, SystemSingular
from ssq.fields import ScatteringData, pair_norming, paired_norming
from ssq.soliton import (ConeSpec, assemble_and_solve, assemble_full_system, cone_filter, mu_of_cone,
                         random_admissible, reconstruct, soliton_field, soliton_values,
                         soliton_velocity)

seeds = st.integers(0, 2**32 - 1)


def test_no_poles():
    sd = ScatteringData([], [])
    sol = assemble_and_solve(sd, 1.0, 2.0)
    assert np.allclose(sol.M(np.array([0.3 + 1j])), np.eye(3))
    assert reconstruct(sol) == 0
    assert np.all(soliton_field(sd, np.linspace(-1, 1, 5), 0.0).values == 0)


def test_single_pole_matches_dense_solve():
    sd = ScatteringData([0.8j], [np.array([1, 1]) / np.sqrt(2)])
    sol = assemble_and_solve(sd, 0.0, 0.0)
    A, b = assemble_full_system(sd.poles, sd.norming, 0.0, 0.0)
    assert A.shape == (9, 9)
    z = np.linalg.solve(A, b)
    assert np.allclose(sol.alpha.reshape(-1), z[:6], atol=1e-13)
    assert np.allclose(sol.beta.reshape(-1), z[6:], atol=1e-13)


@given(seeds, st.floats(-3, 3), st.floats(-0.5, 0.5))
@settings(max_examples=25, deadline=None)
def test_reduced_solve_matches_dense_solve(seed, x, t):
    sd = random_admissible(np.random.default_rng(seed), 1, 1)
    sol = assemble_and_solve(sd, x, t)
    A, b = assemble_full_system(sd.poles, sd.norming, x, t)
    z = np.linalg.solve(A, b)
    scale = np.max(np.abs(z))
    assert np.max(np.abs(np.concatenate([sol.alpha.reshape(-1), sol.beta.reshape(-1)]) - z)) < 1e-9 * scale
    assert sol.full_residual() < 1e-10


def test_non_admissible_norming_breaks_symmetry():
    sd = ScatteringData([0.8j], [np.array([1, 1]) / np.sqrt(2)])
    with pytest.raises(SymmetryBroken):
        reconstruct(assemble_and_solve(sd, 0.0, 0.0))


def test_duplicate_poles_singular():
    sd = ScatteringData([0.5j, 0.5j], [paired_norming(1.0), paired_norming(2.0)])
    with pytest.raises(SystemSingular):
        assemble_and_solve(sd, 0.0, 0.0)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_companion_is_conjugate(seed):
    sd = random_admissible(np.random.default_rng(seed), 2, 1)
    xs = np.linspace(-6, 6, 25)
    u, w = soliton_values(sd, xs, 0.3, check_symmetry=False)
    assert np.max(np.abs(w - np.conj(u))) < 1e-10


@given(seeds, st.floats(0, 2 * np.pi))
@settings(max_examples=20, deadline=None)
def test_common_phase_rotates_u(seed, ph):
    """The admissible common phase is c -> c diag(e^{i ph}, e^{-i ph}); it maps u to e^{-i ph} u."""
    sd = random_admissible(np.random.default_rng(seed), 1, 1)
    xs = np.linspace(-5, 5, 21)
    u1, _ = soliton_values(sd, xs, 0.1)
    u2, _ = soliton_values(sd.with_norming(sd.norming * np.exp([1j * ph, -1j * ph])), xs, 0.1)
    assert np.max(np.abs(np.abs(u1) - np.abs(u2))) < 1e-10
    assert np.max(np.abs(u2 - np.exp(-1j * ph) * u1)) < 1e-10


@given(seeds, st.floats(-2, 2), st.floats(-0.3, 0.3))
@settings(max_examples=20, deadline=None)
def test_space_time_translation_covariance(seed, s, tau):
    """u(x + s, t + tau | c) = u(x, t | c exp(2i k s + 8i k^3 tau))."""
    sd = random_admissible(np.random.default_rng(seed), 1, 1)
    xs = np.linspace(-4, 4, 17)
    u1, _ = soliton_values(sd, xs + s, 0.2 + tau)
    k = sd.poles
    moved = sd.with_norming(sd.norming * np.exp(2j * k * s + 8j * k**3 * tau)[:, None])
    u2, _ = soliton_values(moved, xs, 0.2)
    assert np.max(np.abs(u1 - u2)) < 1e-9 * max(1.0, np.max(np.abs(u1)))


def test_det_M_is_one():
    sd = random_admissible(np.random.default_rng(11), 1, 1)
    sol = assemble_and_solve(sd, 0.4, 0.1)
    ks = np.array([0.3 + 0.2j, -1 + 2j, 0.5 - 0.4j, 2.0, 40j])
    assert np.allclose(np.linalg.det(sol.M(ks)), 1, atol=1e-12)


def test_multi_soliton_solves_the_equation():
    sd = random_admissible(np.random.default_rng(5), 1, 1)

    def u_of(x, t):
        return soliton_values(sd, np.atleast_1d(x), t)[0]

    xs = np.linspace(-4, 4, 9)
    u = np.abs(u_of(xs, 0.05)).max()
    assert np.max(np.abs(pde_residual(u_of, xs, 0.05))) < 1e-5 * max(u, u**3) * 10


def test_one_soliton_profile_symmetric_about_peak(one_sd):
    xs = np.linspace(-15, 15, 3001)

    def mod(x, data=one_sd):
        return np.abs(soliton_values(data, np.atleast_1d(x), 0.0)[0])

    x0 = minimize_scalar(lambda x: -mod(x)[0], bracket=(-2, 0, 2), tol=1e-12).x
    s = np.linspace(0.1, 5, 50)
    assert np.max(np.abs(mod(x0 + s) - mod(x0 - s))) < 1e-8
    # scaling |c| by lam shifts the core by log(lam)/(2 eta)
    lam = 3.0
    g = soliton_field(one_sd.with_norming(one_sd.norming * lam), xs, 0.0)
    x1 = xs[np.argmax(np.abs(g.values))]
    assert abs((x1 - x0) - np.log(lam) / 1.6) < 0.02


def test_isospectral_l2(one_sd):
    sd = random_admissible(np.random.default_rng(2), 1, 1, im_range=(0.5, 0.9), re_range=(0.1, 0.3))
    xs = np.linspace(-120, 120, 24001)
    for data in (one_sd, sd):
        q = [trapezoid(np.abs(soliton_field(data, xs, t).values) ** 2, xs) for t in (0.0, 1.0, 5.0)]
        assert np.max(np.abs(np.array(q) - q[0])) / q[0] < 1e-8


def test_far_field_is_finite(one_sd):
    sd = random_admissible(np.random.default_rng(8), 2, 1)
    u, _ = soliton_values(sd, np.array([-3000.0, -500.0, 500.0, 3000.0]), 10.0)
    assert np.all(np.isfinite(u)) and np.max(np.abs(u)) < 1e-8


def test_velocity_and_band():
    assert soliton_velocity(0.8j) == pytest.approx(2.56)
    cone = ConeSpec(-12.0, -16.0)
    assert cone.band == (3.0, 4.0)
    assert not cone.in_band(np.array([1 + 1j]))[0]


def test_mu_of_cone_examples():
    cone = ConeSpec(-12.0, -16.0)  # band [3, 4]
    assert mu_of_cone(ScatteringData([1 + 1j, -1 + 1j], [[1, 0], [0, -1]]), cone) == pytest.approx(1.0)
    inside = ScatteringData([1.1 + 0.1j, -1.1 + 0.1j], [[1, 0], [0, -1]])
    assert mu_of_cone(inside, cone) == np.inf
    sd = ScatteringData([0.5j, 1 + 0.5j, -1 + 0.5j], [[1, -1], [1, 0], [0, -1]])
    cone2 = ConeSpec(0.0, -0.4)  # band [0, 0.1]
    brute = min(0.5 * max(0 - s, s - 0.1, 0) for s in (-0.25, 2.75) if max(0 - s, s - 0.1, 0) > 0)
    assert mu_of_cone(sd, cone2) == pytest.approx(brute)


def test_cone_filter_identity_without_reflection(one_sd):
    cone = ConeSpec(3.0, 2.0)
    out, approx = cone_filter(one_sd, cone, k0=None, region="II")
    assert out.m == 1 and np.array_equal(out.norming, one_sd.norming) and not approx
    out, approx = cone_filter(one_sd, cone, k0=0.5, region="I")
    assert np.array_equal(out.norming, one_sd.norming)


def test_cone_ray_localization():
    """Dropping a pole whose soliton runs off to the left leaves an O(exp(-8 mu t)) error."""
    k1 = 0.2 + 0.9j
    c1 = np.array([0.6 + 0.1j, 0.2 - 0.3j])
    sd = ScatteringData([k1, -np.conj(k1), 0.35j], [c1, pair_norming(c1), paired_norming(0.8 - 0.3j)])
    v = soliton_velocity(k1)
    cone = ConeSpec(v + 0.3, v - 0.3)
    filt, _ = cone_filter(sd, cone, region="II")
    assert filt.m == 2
    mu = mu_of_cone(sd, cone)
    ts = np.array([2.0, 4.0, 8.0])
    d = [abs(soliton_values(sd, [v * t], t)[0][0] - soliton_values(filt, [v * t], t)[0][0]) for t in ts]
    slope = np.polyfit(ts, np.log(d), 1)[0]
    assert slope <= -8 * mu * 0.9
