"""Conjugation data on the segment [-k0, k0] and the parabolic-cylinder coefficients.

    nu        = -(1/2pi) log(1 + |gamma(k0)|^2)
    X(k)      = (1/2pi i) int_{-k0}^{k0} log((1+|gamma(xi)|^2)/(1+|gamma(k0)|^2)) dxi/(xi-k)
    det d(k)  = ((k-k0)/(k+k0))^{i nu} exp(X(k))        (principal branch, cut on [-k0,k0])

The 2x2 factor delta(k) is built entrywise as expm of the Cauchy transform of
log(I + gamma^dagger gamma); this is exact only when gamma^dagger gamma
commutes with itself along the segment, otherwise the result is flagged.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import expm
from scipy.special import gamma as Gamma

from .errors import OnCutEvaluation, QuadratureFailure
from .fields import SIGMA1, ReflectionCoefficient

CUT_TOL = 1e-8
QUAD_TOL = 1e-10
VARSIGMA = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)


def compute_nu(gamma_at_k0) -> float:
    g = np.asarray(gamma_at_k0, complex).ravel()
    return float(-np.log1p(np.sum(np.abs(g) ** 2)) / (2 * np.pi))


def _cauchy(fun, k0: float, k: complex) -> Tuple[complex, float]:
    """(1/2pi i) int_{-k0}^{k0} fun(xi)/(xi - k) dxi for real-line fun, k off the segment.

    When Re k lies inside the segment the linear Taylor part of fun at Re k is
    subtracted and added back in closed form, so the integrand stays smooth
    however close k is to the cut.
    """
    k = complex(k)
    if abs(k.imag) < CUT_TOL and -k0 - CUT_TOL <= k.real <= k0 + CUT_TOL:
        raise OnCutEvaluation(f"k = {k} lies on the cut [-{k0}, {k0}]")
    logratio = np.log((k - k0) / (k + k0))
    kr = k.real
    f0, f1 = _taylor1(fun, kr, k0) if -k0 < kr < k0 else (0.0, 0.0)

    def integrand(xi):
        return (fun(xi) - f0 - f1 * (xi - kr)) / (xi - k)

    pts = [kr] if -k0 < kr < k0 else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(integrand, -k0, k0, complex_func=True, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)
    # int (f0 + f1 (xi - kr))/(xi - k) = (f0 + f1 (k - kr)) log + 2 k0 f1
    val = val + (f0 + f1 * (k - kr)) * logratio + 2 * k0 * f1
    return val / (2j * np.pi), float(abs(err)) / (2 * np.pi)


def _taylor1(fun, x, k0):
    h = 1e-4 * k0
    a, b = max(x - h, -k0), min(x + h, k0)
    return fun(x), (fun(b) - fun(a)) / (b - a)


def _gauss_cauchy(fun, k0, k, n):
    """Fixed n-point Gauss-Legendre version of _cauchy (used for halving checks)."""
    xg, wg = np.polynomial.legendre.leggauss(n)
    xi = k0 * xg
    k = complex(k)
    kr = k.real
    f0, f1 = _taylor1(fun, kr, k0) if -k0 < kr < k0 else (0.0, 0.0)
    vals = (np.array([fun(x) for x in xi]) - f0 - f1 * (xi - kr)) / (xi - k)
    s = k0 * np.sum(wg * vals) + (f0 + f1 * (k - kr)) * np.log((k - k0) / (k + k0)) + 2 * k0 * f1
    return s / (2j * np.pi)


class ConjugationFactor:
    """Evaluators for nu, X(k), det delta(k) and delta(k) built from sampled gamma."""

    def __init__(self, gamma: ReflectionCoefficient, k0: float):
        if k0 <= 0:
            raise ValueError("k0 must be positive")
        self.gamma = gamma
        self.k0 = float(k0)
        self.g_k0 = gamma(np.array(self.k0))
        self.nu = compute_nu(self.g_k0)
        self._f0 = float(np.log1p(np.sum(np.abs(self.g_k0) ** 2)))
        self._zero = gamma.is_zero()

    # scalar pieces
    def f(self, xi) -> float:
        g = self.gamma(np.asarray(xi, float))
        return float(np.log1p(np.sum(np.abs(g) ** 2)) - self._f0)

    def chi(self, k, with_error: bool = False):
        if self._zero:
            return (0j, 0.0) if with_error else 0j
        val, err = _cauchy(self.f, self.k0, k)
        if err > QUAD_TOL:
            raise QuadratureFailure(f"X({k}) error estimate {err:.2g}")
        return (val, err) if with_error else val

    def chi_fixed(self, k, n: int = 400) -> complex:
        return 0j if self._zero else complex(_gauss_cauchy(self.f, self.k0, complex(k), n))

    def det_delta(self, k) -> complex:
        k = complex(k)
        if self._zero:
            return 1.0 + 0j
        X = self.chi(k)
        return complex(np.exp(1j * self.nu * np.log((k - self.k0) / (k + self.k0)) + X))

    def chi_endpoint(self, sign: int = -1) -> complex:
        """X(+-k0), the finite endpoint limit (integrand vanishes at the endpoints)."""
        if self._zero:
            return 0j
        kk = sign * self.k0

        def integrand(xi):
            return self.f(xi) / (xi - kk)

        val, err = quad(integrand, -self.k0, self.k0, epsabs=1e-13, epsrel=1e-12, limit=400)
        if err > QUAD_TOL:
            raise QuadratureFailure(f"X({kk}) error estimate {err:.2g}")
        return complex(val / (2j * np.pi))

    # matrix factor
    def log_jump(self, xi) -> np.ndarray:
        """log(I + gamma^dagger gamma) at real xi (2x2 Hermitian)."""
        v = self.gamma(np.asarray(xi, float)).reshape(2)
        s = float(np.sum(np.abs(v) ** 2))
        if s == 0:
            return np.zeros((2, 2), complex)
        return (np.log1p(s) / s) * np.outer(np.conj(v), v)

    def is_commuting(self, n: int = 201, tol: float = 1e-10) -> bool:
        if self._zero:
            return True
        xs = np.linspace(-self.k0, self.k0, n)
        Ls = np.array([self.log_jump(x) for x in xs])
        ref = Ls[np.argmax(np.linalg.norm(Ls, axis=(1, 2)))]
        scale = max(np.linalg.norm(ref) ** 2, 1e-300)
        comm = np.einsum("nij,jk->nik", Ls, ref) - np.einsum("ij,njk->nik", ref, Ls)
        return bool(np.max(np.linalg.norm(comm, axis=(1, 2))) <= tol * max(scale, 1.0))

    def delta(self, k) -> Tuple[np.ndarray, bool]:
        """2x2 delta(k) by entrywise Plemelj; flag is True when only approximate."""
        if self._zero:
            return np.eye(2, dtype=complex), False
        C = np.zeros((2, 2), complex)
        for i in range(2):
            for j in range(2):
                C[i, j] = _cauchy(lambda x, i=i, j=j: self.log_jump(x)[i, j], self.k0, k)[0]
        return expm(C), not self.is_commuting()

    def delta_inverse(self, k) -> Tuple[np.ndarray, bool]:
        d, flag = self.delta(k)
        return np.linalg.inv(d), flag


@dataclass(frozen=True)
class ConjugationScalars:
    k0: float
    nu: float
    factor: ConjugationFactor

    def chi_at(self, k):
        return self.factor.chi(k)

    def det_delta_at(self, k):
        return self.factor.det_delta(k)


def conjugation_scalars(gamma: ReflectionCoefficient, k0: float) -> ConjugationScalars:
    cf = ConjugationFactor(gamma, k0)
    return ConjugationScalars(cf.k0, cf.nu, cf)


def compute_chi(gamma: ReflectionCoefficient, k0: float, k) -> complex:
    return ConjugationFactor(gamma, k0).chi(k)


def compute_det_delta(nu: float, chi: complex, k, k0: float) -> complex:
    """((k-k0)/(k+k0))^{i nu} e^{chi}, principal branch."""
    k = complex(k)
    if abs(k.imag) < CUT_TOL and -k0 - CUT_TOL <= k.real <= k0 + CUT_TOL:
        raise OnCutEvaluation(f"k = {k} lies on the cut")
    return complex(np.exp(1j * nu * np.log((k - k0) / (k + k0)) + chi))


def gamma_kernel_identity(nu: float) -> float:
    """|Gamma(i nu)|^2 nu sinh(pi nu) / pi, identically 1."""
    return float(abs(Gamma(1j * nu)) ** 2 * nu * np.sinh(np.pi * nu) / np.pi)


@dataclass(frozen=True)
class LocalModelCoeffs:
    nu: float
    k0: float
    t: float
    tau: float
    chi_minus: complex
    beta12: np.ndarray  # (2,1)
    beta21: np.ndarray  # (1,2)
    delta_A: complex
    M1_A0: np.ndarray  # 3x3
    M1_B0: np.ndarray  # 3x3


def compute_local_coeffs(gamma_minus_k0, gamma_plus_k0, nu: float, chi_minus_k0: complex, k0: float,
                         t: float) -> LocalModelCoeffs:
    """Coefficients of the parabolic-cylinder models at -k0 (A0) and +k0 (B0).

    tau = k0^3 t, delta_A = exp(X(-k0) - 8 i tau) (192 tau)^{i nu/2},
    beta12 = nu Gamma(-i nu) e^{pi nu/2} e^{-i pi/4}/sqrt(2pi) * gamma(-k0)^dagger,
    beta21 = -beta12^dagger,
    M1_A0 = [[0, i delta_A^2 beta12], [-i delta_A^{-2} beta21, 0]],
    M1_B0 = -varsigma conj(M1_A0) varsigma.
    gamma_plus_k0 is accepted for symmetry checks only; with the sigma1
    symmetry gamma(-k0)^dagger = sigma1 gamma(k0)^T.
    """
    if t <= 0 or k0 <= 0:
        raise ValueError("need t > 0 and k0 > 0")
    gm = np.asarray(gamma_minus_k0, complex).reshape(2)
    tau = k0**3 * t
    delta_A = complex(np.exp(chi_minus_k0 - 8j * tau) * np.exp(0.5j * nu * np.log(192 * tau)))
    if nu == 0.0:
        pref = 0j
    else:
        pref = nu * Gamma(-1j * nu) * np.exp(np.pi * nu / 2) * np.exp(-1j * np.pi / 4) / math.sqrt(2 * np.pi)
    beta12 = (pref * np.conj(gm)).reshape(2, 1)
    beta21 = -np.conj(beta12).T
    M = np.zeros((3, 3), complex)
    M[:2, 2:] = 1j * delta_A**2 * beta12
    M[2:, :2] = -1j * delta_A ** (-2) * beta21
    MB = -VARSIGMA @ np.conj(M) @ VARSIGMA
    return LocalModelCoeffs(nu, k0, t, tau, complex(chi_minus_k0), beta12, beta21, delta_A, M, MB)
