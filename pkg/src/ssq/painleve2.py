"""Modified Painleve II boundary-value problem 3u'' - y u + c|u|^2 u = 0 (c = 24 by default).

The solution is fixed by its linear tail, u ~ kappa Ai(3^{-1/3} y) as y -> +inf.
Real u is computed and the phase of kappa is applied afterwards (the cubic
term is phase covariant).  Discretization: Chebyshev collocation on
[y_min, y_max]; value and slope are imposed at y_max, the ODE is collocated at
every other node including y_min, and the nonlinear system is solved by damped
Newton from the Airy initial guess.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Sequence, Tuple

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import BlowUp, FitDegenerate, NoConvergence
from .fields import ComplexField

CUBIC = 24.0
C3 = 3.0 ** (-1.0 / 3.0)

# Ai(0) and -Ai'(0)
_AI0 = "0.35502805388781723926006318600418317639797917419917724058332651"
_AIP0 = "0.25881940379280679840518356018920396347909113835493458221000181"
_SERIES_MAX = 12.0


def _airy_series(z: float) -> Tuple[float, float]:
    """Ai(z), Ai'(z) by the Maclaurin series in 60-digit decimal arithmetic."""
    with localcontext() as ctx:
        ctx.prec = 60
        x = Decimal(repr(float(z)))
        c1, c2 = Decimal(_AI0), Decimal(_AIP0)
        # f = sum a_k, g = sum b_k with a_0 = 1, b_0 = x; a_{k+1} = a_k x^3/((3k+2)(3k+3)), b_{k+1} = b_k x^3/((3k+3)(3k+4))
        x3 = x * x * x
        a, b = Decimal(1), x
        f, g = a, b
        fp, gp = Decimal(0), Decimal(1)  # derivatives: f' = sum 3k a_k/x, g' = sum (3k+1) b_k/x
        eps = Decimal(10) ** -58
        k = 0
        while True:
            a = a * x3 / ((3 * k + 2) * (3 * k + 3))
            b = b * x3 / ((3 * k + 3) * (3 * k + 4))
            k += 1
            f += a
            g += b
            # derivative terms use the coefficient before multiplication by x
            fp += (3 * k) * a / x if x != 0 else 0
            gp += (3 * k + 1) * b / x if x != 0 else 0
            if abs(a) + abs(b) < eps * (abs(f) + abs(g) + 1) and k > 3:
                break
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        return float(ai), float(aip)


def _u_coeffs(n):
    u = [1.0]
    for k in range(1, n):
        u.append(math.exp(math.lgamma(3 * k + 0.5) - k * math.log(54.0) - math.lgamma(k + 1) - math.lgamma(k + 0.5)))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, n)]
    return u, v


_U, _V = _u_coeffs(40)


def _airy_asymptotic(z: float) -> Tuple[float, float]:
    if z > 0:
        zeta = 2.0 / 3.0 * z**1.5
        s = sp = 0.0
        term_min = np.inf
        for k in range(40):
            t = (-1) ** k * _U[k] / zeta**k
            if abs(t) > term_min:
                break
            term_min = abs(t)
            s += t
            sp += (-1) ** k * _V[k] / zeta**k
        e = math.exp(-zeta) / (2 * math.sqrt(math.pi))
        return e * s / z**0.25, -e * z**0.25 * sp
    x = -z
    zeta = 2.0 / 3.0 * x**1.5
    ce, so, cv, sv = 0.0, 0.0, 0.0, 0.0
    for k in range(19):
        ce += (-1) ** k * _U[2 * k] / zeta ** (2 * k)
        so += (-1) ** k * _U[2 * k + 1] / zeta ** (2 * k + 1)
        cv += (-1) ** k * _V[2 * k] / zeta ** (2 * k)
        sv += (-1) ** k * _V[2 * k + 1] / zeta ** (2 * k + 1)
    ph = zeta - math.pi / 4
    ai = (math.cos(ph) * ce + math.sin(ph) * so) / (math.sqrt(math.pi) * x**0.25)
    aip = x**0.25 * (math.sin(ph) * cv - math.cos(ph) * sv) / math.sqrt(math.pi)
    return ai, aip


def _airy_pair(z: float) -> Tuple[float, float]:
    return _airy_series(z) if abs(z) <= _SERIES_MAX else _airy_asymptotic(z)


def airy_reference(y):
    """Ai(y): decimal Maclaurin series for |y| <= 12, asymptotic expansions beyond."""
    y = np.asarray(y, dtype=float)
    out = np.array([_airy_pair(float(v))[0] for v in y.ravel()])
    return out.reshape(y.shape) if y.ndim else float(out[0])


def airy_reference_prime(y):
    y = np.asarray(y, dtype=float)
    out = np.array([_airy_pair(float(v))[1] for v in y.ravel()])
    return out.reshape(y.shape) if y.ndim else float(out[0])


def linear_profile(kappa, y):
    """kappa Ai(3^{-1/3} y), the linearized solution."""
    return kappa * airy_reference(C3 * np.asarray(y, float))


def _cheb(n, a, b):
    """Chebyshev points (descending, from b to a) and differentiation matrix on [a, b]."""
    N = n - 1
    j = np.arange(n)
    x = np.cos(np.pi * j / N)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** j
    X = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    y = a + (b - a) * (x + 1) / 2
    return y, D * (2.0 / (b - a))


def _cc_weights(n, a, b):
    """Clenshaw-Curtis weights matching _cheb nodes."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[1:-1]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    w[1:-1] = 2 * v / N
    return w * (b - a) / 2


@dataclass(frozen=True)
class PainleveSolution:
    ys: np.ndarray  # ascending nodes on [y_min, y_match] (interfaces listed once)
    up: np.ndarray  # complex samples
    kappa: complex
    residual_max: float
    residual_l2sq: float
    cubic: float = CUBIC
    iterations: int = 0
    breaks: np.ndarray = None  # element boundaries
    y_max: float = None

    @property
    def y_match(self) -> float:
        return float(self.breaks[-1])

    def __call__(self, y):
        """u_P(y): element-wise polynomial on [y_min, y_match], Airy tail beyond, NaN below y_min."""
        y = np.atleast_1d(np.asarray(y, float))
        out = np.full(y.shape, np.nan + 0j)
        p = (self.ys.size - 1) // (self.breaks.size - 1)
        for e in range(self.breaks.size - 1):
            lo, hi = self.breaks[e], self.breaks[e + 1]
            m = (y >= lo) & (y <= hi) if e == 0 else (y > lo) & (y <= hi)
            if np.any(m):
                nodes = self.ys[e * p:(e + 1) * p + 1]
                vals = self.up[e * p:(e + 1) * p + 1]
                out[m] = BarycentricInterpolator(nodes, vals)(y[m])
        tail = y > self.breaks[-1]
        if np.any(tail):
            out[tail] = linear_profile(self.kappa, y[tail])
        return out


def default_y_max(kappa, floor: float = 1e-12) -> float:
    """Smallest y >= 8 with |kappa| Ai(3^{-1/3} y) below floor."""
    a = abs(kappa)
    if a == 0:
        return 8.0
    y = 8.0
    while a * airy_reference(C3 * y) > floor:
        y += 0.5
    return y


def _match_point(amp, y_max, level=1e-7):
    """Where the tail is linear to round-off: |kappa| Ai(3^{-1/3} y) <= level (and y >= 4)."""
    y = 4.0
    while y < y_max and amp * airy_reference(C3 * y) > level:
        y += 0.25
    return min(y, y_max)


def solve_painleve(kappa, y_min: float = -15.0, y_max: float = None, n: int = 640, max_newton_iters: int = 60,
                   tol: float = 1e-12, cubic: float = CUBIC, p: int = 16,
                   continuation_steps: int = 20) -> PainleveSolution:
    """Solve 3u'' - y u + cubic |u|^2 u = 0 with u ~ kappa Ai(3^{-1/3} y) as y -> +inf.

    n is the total number of collocation nodes (split into elements of p+1 nodes).
    """
    kappa = complex(kappa)
    amp = abs(kappa)
    phase = kappa / amp if amp > 0 else 1.0
    if y_max is None:
        y_max = default_y_max(kappa)
    if amp * abs(airy_reference(C3 * y_max)) >= 1e-10:
        raise ValueError("y_max too small: kappa Ai(3^{-1/3} y_max) must be below 1e-10")
    y_r = _match_point(amp, y_max)
    if y_min >= y_r:
        raise ValueError("need y_min below the matching point")
    K = max(n // (p + 1), 2)
    breaks = np.linspace(y_min, y_r, K + 1)
    yl, Dl = _cheb(p + 1, -1.0, 1.0)
    yl, Dl = yl[::-1], Dl[::-1, ::-1]  # ascending
    h = np.diff(breaks) / 2
    ys_el = [breaks[e] + h[e] * (yl + 1) for e in range(K)]
    D1 = [Dl / h[e] for e in range(K)]
    D2 = [d @ d for d in D1]
    N = K * (p + 1)
    Y = np.concatenate(ys_el)
    wq = np.concatenate([_cc_weights(p + 1, breaks[e], breaks[e + 1])[::-1] for e in range(K)])

    def idx(e, i):
        return e * (p + 1) + i

    # linear part of the system, rows: ODE interior nodes, interface matching, right-end data
    L = np.zeros((N, N))
    ode_rows, ode_nodes = [], []
    r = 0
    for e in range(K):
        sl = slice(idx(e, 0), idx(e, p) + 1)
        for i in range(1, p):
            L[r, sl] = 3 * D2[e][i]
            L[r, idx(e, i)] -= Y[idx(e, i)]
            ode_rows.append(r)
            ode_nodes.append(idx(e, i))
            r += 1
    for e in range(K - 1):
        L[r, idx(e, p)] = 1.0
        L[r, idx(e + 1, 0)] = -1.0
        r += 1
        L[r, idx(e, 0):idx(e, p) + 1] = D1[e][p]
        L[r, idx(e + 1, 0):idx(e + 1, p) + 1] -= D1[e + 1][0]
        r += 1
    L[r, idx(K - 1, p)] = 1.0
    r_val = r
    r += 1
    L[r, idx(K - 1, 0):idx(K - 1, p) + 1] = D1[K - 1][p]
    r_der = r
    ode_rows = np.array(ode_rows)
    ode_nodes = np.array(ode_nodes)
    rhs = np.zeros(N)

    if amp == 0:
        return PainleveSolution(_dedupe_nodes(Y, p, K), np.zeros(K * p + 1, complex), 0j, 0.0, 0.0, cubic, 0,
                                breaks, y_max)
    def F(u):
        res = L @ u - rhs
        res[ode_rows] += cubic * u[ode_nodes] ** 3
        return res

    def J(u):
        M = L.copy()
        M[ode_rows, ode_nodes] += 3 * cubic * u[ode_nodes] ** 2
        return M

    def newton(amp_, u):
        rhs[r_val] = amp_ * airy_reference(C3 * y_r)
        rhs[r_der] = amp_ * C3 * airy_reference_prime(C3 * y_r)
        res = F(u)
        scale = np.max(np.abs(L), axis=1)
        for it in range(1, max_newton_iters + 1):
            s = np.linalg.solve(J(u), -res)
            nr = np.linalg.norm(res / scale)
            floor = 1e3 * np.finfo(float).eps * max(np.max(np.abs(u)), amp_) * np.sqrt(N)
            lam = 1.0
            while True:
                cand = u + lam * s
                rc = F(cand)
                nc = np.linalg.norm(rc / scale)
                if np.all(np.isfinite(rc)) and (nc <= (1 - 1e-4 * lam) * nr or nc <= floor):
                    break
                lam /= 2
                if lam < 1e-6:
                    raise BlowUp(f"damped Newton stalled (kappa = {kappa}); likely beyond the bounded-solution regime")
            u, res = cand, rc
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 1e3:
                raise BlowUp(f"iteration diverged for kappa = {kappa}")
            if lam * np.max(np.abs(s)) <= tol * max(1.0, np.max(np.abs(u))):
                return u, it
        raise NoConvergence(f"Newton did not converge in {max_newton_iters} iterations")

    try:
        u, it = newton(amp, amp * airy_reference(C3 * Y))
    except (BlowUp, NoConvergence):
        # continuation in the amplitude on the same grid
        u = np.zeros(N)
        it = 0
        for a_ in amp * np.linspace(0, 1, continuation_steps + 1)[1:]:
            u, k_ = newton(a_, u if np.any(u) else a_ * airy_reference(C3 * Y))
            it += k_
    # ODE residual at every node of every element (interface and end nodes included, though not imposed)
    full = np.concatenate([3 * (D2[e] @ u[idx(e, 0):idx(e, p) + 1]) for e in range(K)]) - Y * u + cubic * u**3
    inner = np.ones(N, bool)
    inner[0] = False
    rmax = float(np.max(np.abs(full[inner])))
    l2 = float(np.sum(wq * full**2))
    return PainleveSolution(_dedupe_nodes(Y, p, K), phase * _dedupe_nodes(u, p, K).astype(complex), kappa, rmax, l2,
                            cubic, it, breaks, y_max)


def _dedupe_nodes(v, p, K):
    """Drop the duplicated interface entries (keep one per interface)."""
    keep = np.ones(K * (p + 1), bool)
    keep[np.arange(1, K) * (p + 1)] = False
    return v[keep]


@dataclass(frozen=True)
class KappaFit:
    kappa: complex
    per_run: np.ndarray
    spread: float
    residual: float


def match_kappa_from_pde(pde_runs: Sequence[Tuple[float, ComplexField]], y_window=(2.0, 5.0), ny: int = 61,
                         max_residual: float = 0.1) -> KappaFit:
    """Least-squares kappa with t^{1/3} u(y t^{1/3}, t) ~ kappa Ai(3^{-1/3} y) on the tail window."""
    ys = np.linspace(*y_window, ny)
    A = airy_reference(C3 * ys)
    per, num, den, sig, resid = [], 0j, 0.0, 0.0, 0.0
    rows = []
    for t, fld in pde_runs:
        v = t ** (1 / 3) * fld(ys * t ** (1 / 3))
        rows.append(v)
        per.append(np.vdot(A, v) / np.vdot(A, A))
        num += np.vdot(A, v)
        den += float(np.vdot(A, A).real)
    per = np.array(per, complex)
    kappa = num / den if den else 0j
    for v in rows:
        resid += float(np.sum(np.abs(v - kappa * A) ** 2))
        sig += float(np.sum(np.abs(v) ** 2))
    if sig == 0:
        return KappaFit(0j, per, 0.0, 0.0)
    rel = math.sqrt(resid / sig)
    spread = float(np.max(np.abs(per - kappa)) / abs(kappa)) if kappa != 0 else 0.0
    if rel > max_residual:
        raise FitDegenerate(f"Airy-tail fit residual {rel:.3g} exceeds {max_residual:g}")
    return KappaFit(complex(kappa), per, spread, rel)
