"""Region classification and the leading-order long-time formulas.

Region I   (x < 0, |y| > Y_cut):  u ~ u_sol(x,t | sigma_d(I)) + 2i t^{-1/2} h
Region II  (x > 0, |y| > Y_cut):  u ~ u_sol(x,t | sigma_d(I))            (error O(1/t))
Region III (|y| <= Y_cut):        u ~ t^{-1/3} u_P(x t^{-1/3})
with y = x t^{-1/3}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .conjugation import ConjugationFactor, compute_local_coeffs
from .errors import NonpositiveTime
from .fields import ReflectionCoefficient, ScatteringData
from .soliton import ConeSpec, assemble_and_solve, cone_filter, reconstruct

Y_CUT = 2.0


@dataclass(frozen=True)
class RegionTag:
    region: str  # "I", "II" or "III"
    x: float
    t: float
    xi: float
    y: float
    k0: complex  # real for x < 0, i*sqrt(x/12t) for x > 0


@dataclass(frozen=True)
class AsymptoticEvaluation:
    region: RegionTag
    leading: complex
    correction: complex
    claimed_error_order: float
    approximate: bool = False
    details: dict = field(default_factory=dict)

    @property
    def value(self) -> complex:
        return self.leading + self.correction


def classify(x: float, t: float, y_cut: float = Y_CUT) -> RegionTag:
    if not t > 0:
        raise NonpositiveTime(f"t = {t} must be positive")
    y = x / t ** (1 / 3)
    xi = x / t
    if x < 0:
        k0 = complex(math.sqrt(-x / (12 * t)))
    else:
        k0 = 1j * math.sqrt(x / (12 * t))
    if abs(y) <= y_cut:
        reg = "III"
    elif x < 0:
        reg = "I"
    else:
        reg = "II"
    return RegionTag(reg, float(x), float(t), xi, y, k0)


def re_i_theta(k, k0):
    """Re(i theta(k)) = 4 (Im^2 k - 3 Re^2 k + 3 k0^2) Im k, theta = 4(k^3 - 3 k0^2 k)."""
    k = np.asarray(k, complex)
    return 4 * (k.imag**2 - 3 * k.real**2 + 3 * k0**2) * k.imag


def two_i_t_theta(k, k0, t):
    """2 i t theta(k) with theta = 4(k^3 - 3 k0^2 k)."""
    k = np.asarray(k, complex)
    return 8j * t * (k**3 - 3 * k0**2 * k)


def painleve_phase(zeta, tau):
    """8i(zeta^3 - 3 tau^{2/3} zeta): the phase in the scaled variable zeta = k t^{1/3}."""
    zeta = np.asarray(zeta, complex)
    return 8j * (zeta**3 - 3 * tau ** (2 / 3) * zeta)


def _point_cone(x, t):
    v = x / t
    return ConeSpec(v, v)


def region1_evaluate(sigma_d: ScatteringData, gamma: Optional[ReflectionCoefficient], cone: Optional[ConeSpec],
                     x: float, t: float) -> AsymptoticEvaluation:
    tag = classify(x, t, y_cut=-1.0)
    if x >= 0:
        raise ValueError("region I formula needs x < 0")
    cone = cone or _point_cone(x, t)
    if not cone.contains(x, t):
        raise ValueError(f"(x, t) = ({x}, {t}) lies outside the cone [{cone.v2}, {cone.v1}]")
    gamma = sigma_d.gamma if gamma is None else gamma
    k0 = float(tag.k0.real)
    filtered, approx = cone_filter(sigma_d, cone, k0=k0, region="I", gamma=gamma)
    sol = assemble_and_solve(filtered, x, t)
    leading = reconstruct(sol)
    if gamma.is_zero():
        return AsymptoticEvaluation(tag, leading, 0j, -0.75, approx, {"h": 0j, "nu": 0.0})
    cf = ConjugationFactor(gamma, k0)
    g_m = gamma(np.array(-k0))
    g_p = gamma(np.array(k0))
    co = compute_local_coeffs(g_m, g_p, cf.nu, cf.chi_endpoint(-1), k0, t)
    Mm = sol.M(-k0)
    Mp = sol.M(k0)
    H = Mm @ co.M1_A0 @ np.linalg.inv(Mm) + Mp @ co.M1_B0 @ np.linalg.inv(Mp)
    h = H[0, 2] / math.sqrt(48 * k0)
    corr = 2j * h / math.sqrt(t)
    return AsymptoticEvaluation(tag, leading, complex(corr), -0.75, approx,
                                {"h": complex(h), "nu": cf.nu, "delta_A": co.delta_A, "k0": k0,
                                 "n_poles_kept": filtered.m})


def region2_evaluate(sigma_d: ScatteringData, cone: Optional[ConeSpec], x: float, t: float) -> AsymptoticEvaluation:
    tag = classify(x, t, y_cut=-1.0)
    if x <= 0:
        raise ValueError("region II formula needs x > 0")
    cone = cone or _point_cone(x, t)
    if not cone.contains(x, t):
        raise ValueError(f"(x, t) = ({x}, {t}) lies outside the cone [{cone.v2}, {cone.v1}]")
    filtered, _ = cone_filter(sigma_d, cone, region="II")
    leading = reconstruct(assemble_and_solve(filtered, x, t))
    return AsymptoticEvaluation(tag, leading, 0j, -1.0, False, {"n_poles_kept": filtered.m})


def region3_evaluate(painleve_solution, x: float, t: float, p: float = 8.0) -> AsymptoticEvaluation:
    if not p > 4:
        raise ValueError("p must exceed 4")
    tag = classify(x, t, y_cut=np.inf)
    y = x / t ** (1 / 3)
    if painleve_solution is None:
        up = 0j
    else:
        up = complex(painleve_solution(np.array([y]))[0])
    return AsymptoticEvaluation(tag, t ** (-1 / 3) * up, 0j, 2 / (3 * p) - 0.5, False, {"y": y})


def evaluate_point(x: float, t: float, sigma_d: ScatteringData, y_cut: float = Y_CUT, cone: Optional[ConeSpec] = None,
                   painleve_solution=None, p: float = 8.0) -> AsymptoticEvaluation:
    """Classify (x, t) and apply the matching formula."""
    tag = classify(x, t, y_cut)
    if tag.region == "III":
        ev = region3_evaluate(painleve_solution, x, t, p)
    elif tag.region == "I":
        c = cone if (cone is not None and cone.contains(x, t)) else None
        ev = region1_evaluate(sigma_d, sigma_d.gamma, c, x, t)
    else:
        c = cone if (cone is not None and cone.contains(x, t)) else None
        ev = region2_evaluate(sigma_d, c, x, t)
    return AsymptoticEvaluation(tag, ev.leading, ev.correction, ev.claimed_error_order, ev.approximate, ev.details)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    stderr: float
    ci_low: float
    ci_high: float
    intercept: float


def fit_power_law(ts: Sequence[float], values: Sequence[float], confidence: float = 0.95) -> PowerLawFit:
    """Least-squares slope of log|values| against log t, with a Student-t interval."""
    lt = np.log(np.asarray(ts, float))
    lv = np.log(np.abs(np.asarray(values, float)))
    r = stats.linregress(lt, lv)
    dof = max(lt.size - 2, 1)
    q = stats.t.ppf(0.5 + confidence / 2, dof) if lt.size > 2 else np.inf
    half = q * r.stderr if lt.size > 2 else np.inf
    return PowerLawFit(float(r.slope), float(r.stderr), float(r.slope - half), float(r.slope + half), float(r.intercept))
