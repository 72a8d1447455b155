"""Direct scattering for the 3x3 spectral problem Psi_x = -ik[sigma, Psi] + U Psi.

sigma = diag(1, 1, -1), U = [[0, q], [-q^dagger, 0]], q = (u, conj u)^T.
Psi_-(k, x) -> I as x -> -inf, and at the right edge
    a(k) = Psi_-[:2, :2](x_R),  b(k) = exp(-2ikx_R) Psi_-[2, :2](x_R),
    gamma(k) = b(k) a(k)^{-1}.

Two ODE formulations are used:
  * interaction picture, tilde Psi = e^{ikx sigma} Psi e^{-ikx sigma}; its
    coefficients are bounded for real k, so it gives the full scattering
    matrix S(k) = tilde Psi(x_R) on the real line;
  * plain form restricted to the columns that decay in the direction of
    integration; used for det a(k) and Jost columns at complex k.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import (ContinuationUnreliable, DegenerateZero, NonDecayingProfile,
                     RootCountMismatch, StepFailure)
from .fields import SIGMA1, ComplexField, ReflectionCoefficient, ScatteringData

SIGMA = np.array([1.0, 1.0, -1.0])
EDGE_WARN = 1e-10
EDGE_FAIL = 1e-4
RTOL, ATOL = 1e-10, 1e-12
ROOT_RTOL, ROOT_ATOL = 1e-12, 1e-14
MIN_IMAG = 1e-3


def check_edges(field: ComplexField):
    e = field.edge_amplitude()
    if e > EDGE_FAIL:
        raise NonDecayingProfile(f"|u| = {e:.3g} at the grid edge")
    if e > EDGE_WARN:
        warnings.warn(f"profile not fully decayed at grid edge (|u| = {e:.3g})", stacklevel=3)


class _Potential:
    """u(x) from grid samples: cubic spline, or piecewise constant ('previous')."""

    def __init__(self, field: ComplexField, interpolation: str = "cubic"):
        self.xs = field.xs
        self.vals = field.values
        self.kind = interpolation
        if interpolation == "cubic":
            self.sp = CubicSpline(field.xs, field.values)
        elif interpolation != "previous":
            raise ValueError("interpolation must be 'cubic' or 'previous'")

    def __call__(self, x):
        if self.kind == "cubic":
            return complex(self.sp(x))
        i = np.searchsorted(self.xs, x, side="right") - 1
        return complex(self.vals[min(max(i, 0), self.vals.size - 1)])

    def breakpoints(self):
        """Jump locations of the piecewise-constant potential (none for splines)."""
        if self.kind == "cubic":
            return np.empty(0)
        jumps = np.nonzero(np.diff(self.vals) != 0)[0] + 1
        return self.xs[jumps] if jumps.size <= 64 else np.empty(0)


def _rhs(pot, ks, colsig, shape, kind):
    kcol = np.asarray(ks, complex)[:, None]
    if kind == "interaction":
        def f(x, y):
            Y = y.view(complex).reshape(shape)
            u = pot(x)
            e = np.exp(2j * kcol * x)
            d = np.empty_like(Y)
            d[:, 0, :] = u * e * Y[:, 2, :]
            d[:, 1, :] = np.conj(u) * e * Y[:, 2, :]
            d[:, 2, :] = (-np.conj(u) * Y[:, 0, :] - u * Y[:, 1, :]) / e
            return d.reshape(-1).view(float)
        return f
    # plain form: -ik(sigma_i - sigma_j) Psi_ij + (U Psi)_ij
    lin = -1j * kcol[:, :, None] * (SIGMA[None, :, None] - np.asarray(colsig)[None, None, :])

    def f(x, y):
        Y = y.view(complex).reshape(shape)
        u = pot(x)
        d = lin * Y
        d[:, 0, :] += u * Y[:, 2, :]
        d[:, 1, :] += np.conj(u) * Y[:, 2, :]
        d[:, 2, :] += -np.conj(u) * Y[:, 0, :] - u * Y[:, 1, :]
        return d.reshape(-1).view(float)
    return f


def _integrate(pot, ks, y0, span, kind, colsig=(1, 1, -1), x_eval=None, rtol=RTOL, atol=ATOL):
    """Integrate columns y0 (nk,3,nc) across span for every k in one system.

    Returns (state at span end, dict x -> state for each x in x_eval).
    """
    shape = y0.shape
    f = _rhs(pot, ks, colsig, shape, kind)
    x0, x1 = span
    sgn = 1.0 if x1 > x0 else -1.0
    bps = pot.breakpoints()
    bps = bps[(bps - x0) * sgn > 0]
    bps = bps[(x1 - bps) * sgn > 0]
    nodes = np.concatenate([[x0], np.sort(bps)[:: int(sgn)], [x1]])
    xe = np.empty(0) if x_eval is None else np.atleast_1d(np.asarray(x_eval, float))
    y = np.ascontiguousarray(y0, complex).reshape(-1).view(float).copy()
    saved = {}
    for a, b in zip(nodes[:-1], nodes[1:]):
        inside = xe[((xe - a) * sgn >= 0) & ((b - xe) * sgn > 0)]
        te = np.concatenate([np.sort(inside)[:: int(sgn)], [b]])
        sol = solve_ivp(f, (a, b), y, method="RK45", rtol=rtol, atol=atol, t_eval=te)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            raise StepFailure(f"ODE integrator failed: {sol.message}")
        for i, xv in enumerate(te[:-1]):
            saved[float(xv)] = np.ascontiguousarray(sol.y[:, i]).view(complex).reshape(shape)
        y = sol.y[:, -1].copy()
    return y.view(complex).reshape(shape), saved


# ---------------------------------------------------------------------------
# Jost solutions


def jost_integrate(field: ComplexField, k, direction: str = "from_minus_inf", interpolation: str = "cubic"):
    """Jost matrix Psi_-(k, x_R) or Psi_+(k, x_L), normalized to I at the start edge.

    For non-real k only the columns that are analytic in k's half-plane are
    returned; the others are NaN.
    """
    check_edges(field)
    if direction not in ("from_minus_inf", "from_plus_inf"):
        raise ValueError("direction must be from_minus_inf or from_plus_inf")
    pot = _Potential(field, interpolation)
    k = complex(k)
    xl, xr = field.xs[0], field.xs[-1]
    span = (xl, xr) if direction == "from_minus_inf" else (xr, xl)
    xend = span[1]
    if k.imag == 0:
        Y, _ = _integrate(pot, [k], np.eye(3, dtype=complex)[None], span, "interaction")
        ph = np.exp(-1j * k * xend * SIGMA)
        return ph[:, None] * Y[0] / ph[None, :]
    out = np.full((3, 3), np.nan + 0j)
    left = (direction == "from_minus_inf") == (k.imag > 0)
    cols = [0, 1] if left else [2]
    Y, _ = _integrate(pot, [k], np.eye(3, dtype=complex)[None][:, :, cols], span, "plain", colsig=SIGMA[cols])
    out[:, cols] = Y[0]
    return out


@dataclass(frozen=True)
class TransitionData:
    k_grid: np.ndarray
    a_samples: np.ndarray  # (nk,2,2)
    b_samples: np.ndarray  # (nk,2)
    det_S: np.ndarray  # (nk,)
    failed: np.ndarray  # (nk,) bool

    @property
    def gamma(self) -> np.ndarray:
        out = np.full((self.k_grid.size, 2), np.nan + 0j)
        ok = ~self.failed
        out[ok] = np.linalg.solve(np.swapaxes(self.a_samples[ok], 1, 2), self.b_samples[ok][:, :, None])[:, :, 0]
        return out

    def reflection(self) -> ReflectionCoefficient:
        g = self.gamma
        if np.any(self.failed):
            raise ValueError("transition data has failed grid points")
        return ReflectionCoefficient(self.k_grid, g)

    def _mirror(self):
        if not np.allclose(self.k_grid, -self.k_grid[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(self.k_grid).max())):
            raise ValueError("symmetry checks need a grid symmetric about 0")
        return slice(None, None, -1)

    def a_symmetry_residual(self) -> float:
        r = self._mirror()
        mir = SIGMA1 @ np.conj(self.a_samples[r]) @ SIGMA1
        return float(np.max(np.abs(self.a_samples - mir)[~self.failed]))

    def b_symmetry_residual(self) -> float:
        r = self._mirror()
        mir = np.conj(self.b_samples[r]) @ SIGMA1
        return float(np.max(np.abs(self.b_samples - mir)[~self.failed]))

    def det_S_residual(self) -> float:
        return float(np.max(np.abs(self.det_S - 1)[~self.failed]))

    def singular_points(self, tol: float = 1e-8) -> np.ndarray:
        """Indices where det a(k) vanishes on the real grid (to tol)."""
        return np.nonzero(np.abs(np.linalg.det(self.a_samples)) < tol)[0]


def compute_transition(field: ComplexField, k_grid, interpolation: str = "cubic", chunk: int = 128,
                       rtol=RTOL, atol=ATOL) -> TransitionData:
    """a(k), b(k) on a real k grid.  Chunks that fail are flagged, not fatal."""
    check_edges(field)
    if abs(field.time) > 0:
        warnings.warn("scattering data is defined from the t = 0 profile", stacklevel=2)
    k = np.asarray(k_grid, float)
    pot = _Potential(field, interpolation)
    nk = k.size
    S = np.full((nk, 3, 3), np.nan + 0j)
    failed = np.zeros(nk, bool)
    for s in range(0, nk, chunk):
        sl = slice(s, min(s + chunk, nk))
        n = sl.stop - sl.start
        try:
            Y, _ = _integrate(pot, k[sl], np.broadcast_to(np.eye(3, dtype=complex), (n, 3, 3)).copy(),
                              (field.xs[0], field.xs[-1]), "interaction", rtol=rtol, atol=atol)
            S[sl] = Y
        except StepFailure:
            failed[sl] = True
    det_S = np.linalg.det(np.where(np.isfinite(S), S, 0))
    return TransitionData(k, S[:, :2, :2], S[:, 2, :2], det_S, failed)


# ---------------------------------------------------------------------------
# discrete spectrum


def _left_columns_at(pot, field, ks, x_eval=None, rtol=ROOT_RTOL, atol=ROOT_ATOL):
    """Psi_- first two columns (plain form) at x_R, for Im k > 0."""
    ks = np.atleast_1d(np.asarray(ks, complex))
    y0 = np.zeros((ks.size, 3, 2), complex)
    y0[:, 0, 0] = y0[:, 1, 1] = 1.0
    return _integrate(pot, ks, y0, (field.xs[0], field.xs[-1]), "plain", colsig=(1.0, 1.0),
                      x_eval=x_eval, rtol=rtol, atol=atol)


def det_a(field: ComplexField, ks, interpolation: str = "cubic", rtol=ROOT_RTOL, atol=ROOT_ATOL) -> np.ndarray:
    """det a(k) for k in the closed upper half-plane (vectorized)."""
    pot = _Potential(field, interpolation)
    Y, _ = _left_columns_at(pot, field, ks, rtol=rtol, atol=atol)
    return np.linalg.det(Y[:, :2, :])


def _fd_derivative(f, k, h):
    """Fourth-order central difference (Richardson of two central steps)."""
    d1 = (f(k + h) - f(k - h)) / (2 * h)
    d2 = (f(k + h / 2) - f(k - h / 2)) / h
    return (4 * d2 - d1) / 3


def winding_number(field: ComplexField, box, n0: int = 64, max_pts: int = 8192, interpolation="cubic") -> int:
    """Zeros of det a inside box = (re_min, re_max, im_min, im_max), by the argument principle."""
    x0, x1, y0, y1 = box
    corners = np.array([x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1, x0 + 1j * y0])
    s = np.concatenate([np.linspace(corners[i], corners[i + 1], n0, endpoint=False) for i in range(4)])
    s = np.append(s, s[0])
    vals = det_a(field, s, interpolation)
    for _ in range(12):
        if np.any(np.abs(vals) < 1e-12):
            raise RootCountMismatch("det a vanishes on the search-box boundary; move the box")
        ratio = vals[1:] / vals[:-1]
        bad = np.nonzero((np.abs(np.angle(ratio)) > np.pi / 6) | (np.abs(np.log(np.abs(ratio))) > 0.5))[0]
        if bad.size == 0:
            break
        if s.size + bad.size > max_pts:
            raise RootCountMismatch("argument principle did not resolve along the boundary")
        mids = 0.5 * (s[bad] + s[bad + 1])
        mvals = det_a(field, mids, interpolation)
        s = np.insert(s, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
    total = np.sum(np.angle(vals[1:] / vals[:-1]))
    return int(round(total / (2 * np.pi)))


def _newton(field, seeds, box, interpolation, iters=40, h=1e-4):
    k = np.asarray(seeds, complex).copy()
    alive = np.ones(k.size, bool)
    pot = _Potential(field, interpolation)

    def F(kk):
        Y, _ = _left_columns_at(pot, field, kk)
        return np.linalg.det(Y[:, :2, :])

    for _ in range(iters):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        kk = k[idx]
        stack = np.concatenate([kk, kk + h, kk - h, kk + h / 2, kk - h / 2])
        v = F(stack).reshape(5, -1)
        d = (4 * (v[3] - v[4]) / h - (v[1] - v[2]) / (2 * h)) / 3
        step = np.where(d != 0, v[0] / np.where(d != 0, d, 1), 0)
        knew = kk - step
        out = (knew.real < box[0] - 0.5) | (knew.real > box[1] + 0.5) | (knew.imag < box[2] * 0.5) | (knew.imag > box[3] + 0.5)
        k[idx] = knew
        done = (np.abs(step) < 1e-12 * max(1.0, np.max(np.abs(kk)))) | out
        alive[idx[done]] = False
        alive[idx[out]] = False
    return k


def find_discrete_spectrum(field: ComplexField, search_box=(-4.0, 4.0, 0.02, 4.0), seeds_per_side: int = 6,
                           interpolation: str = "cubic", return_info: bool = False):
    """Simple zeros of det a(k) in the box, Newton-refined to |det a| < 1e-10."""
    check_edges(field)
    x0, x1, y0, y1 = search_box
    if y0 < MIN_IMAG:
        raise ValueError("search box must keep a margin of 1e-3 from the real axis")
    count = winding_number(field, search_box, interpolation=interpolation)
    roots = np.empty(0, complex)
    n = seeds_per_side
    while count > 0:
        gx = np.linspace(x0, x1, n + 2)[1:-1]
        gy = np.linspace(y0, y1, n + 2)[1:-1]
        seeds = (gx[None, :] + 1j * gy[:, None]).ravel()
        ks = _newton(field, seeds, search_box, interpolation)
        inside = (ks.real > x0) & (ks.real < x1) & (ks.imag > y0) & (ks.imag < y1)
        ks = ks[inside & np.isfinite(ks)]
        if ks.size:
            res = np.abs(det_a(field, ks, interpolation))
            ks = ks[res < 1e-10]
        roots = _dedupe(np.concatenate([roots, ks]))
        if roots.size >= count or n > 4 * seeds_per_side:
            break
        n *= 2
    if roots.size != count:
        raise RootCountMismatch(f"winding number {count} but {roots.size} converged roots")
    roots = roots[np.lexsort((roots.imag, roots.real))]
    dets = []
    for k in roots:
        if k.imag < MIN_IMAG:
            raise DegenerateZero(f"zero at {k} is too close to the real axis")
        d = _fd_derivative(lambda z: det_a(field, [z], interpolation)[0], k, 1e-3)
        if abs(d) < 1e-8:
            raise DegenerateZero(f"zero at {k} appears non-simple (|d det a| = {abs(d):.2g})")
        dets.append(d)
    for k in roots:
        mk = -np.conj(k)
        if x0 < mk.real < x1 and np.min(np.abs(roots - mk)) > 1e-6 * max(1.0, abs(k)):
            raise RootCountMismatch(f"spectrum not closed under k -> -conj(k) (missing {mk})")
    if return_info:
        return roots, {"winding": count, "ddet": np.array(dets)}
    return roots


def _dedupe(ks, tol=1e-6):
    out = []
    for k in ks:
        if all(abs(k - o) > tol * max(1.0, abs(k)) for o in out):
            out.append(k)
    return np.array(out, complex)


# ---------------------------------------------------------------------------
# norming constants


def edge_decay_rate(field: ComplexField, frac: float = 0.1, floor: float = 1e-13) -> float:
    """Smallest exponential decay rate of |u| fitted on the outer `frac` of each side.

    Returns inf when too few points sit above the noise floor (compact support).
    """
    a = np.abs(field.values)
    amax = a.max() if a.size else 0.0
    if amax == 0:
        return np.inf
    n = field.n
    w = max(int(frac * n), 2)
    rates = []
    for sl in (slice(0, w), slice(n - w, n)):
        x = np.abs(field.xs[sl])
        y = a[sl]
        keep = y > floor * amax
        if keep.sum() < 5:
            continue
        slope = np.polyfit(x[keep], np.log(y[keep]), 1)[0]
        rates.append(-slope)
    return float(min(rates)) if rates else np.inf


def _b_adj_matching(pot, field, ks, x_match):
    """b(k) adj a(k) at zeros of det a, from Psi_-L adj(a) = exp(2ikx) Psi_+R b adj(a)."""
    ks = np.atleast_1d(np.asarray(ks, complex))
    YL, saved = _left_columns_at(pot, field, ks, x_eval=[x_match])
    a = YL[:, :2, :]
    adj = np.empty_like(a)
    adj[:, 0, 0] = a[:, 1, 1]
    adj[:, 1, 1] = a[:, 0, 0]
    adj[:, 0, 1] = -a[:, 0, 1]
    adj[:, 1, 0] = -a[:, 1, 0]
    w = saved[float(x_match)] @ adj  # (nk,3,2)
    y0 = np.zeros((ks.size, 3, 1), complex)
    y0[:, 2, 0] = 1.0
    psiR, _ = _integrate(pot, ks, y0, (field.xs[-1], x_match), "plain", colsig=(-1.0,),
                         rtol=ROOT_RTOL, atol=ROOT_ATOL)
    psi = psiR[:, :, 0]
    coef = np.einsum("ni,nij->nj", np.conj(psi), w) / np.sum(np.abs(psi) ** 2, axis=1)[:, None]
    return np.exp(-2j * ks * x_match)[:, None] * coef, np.linalg.det(a)


def _b_adj_continuation(pot, field, ks):
    ks = np.atleast_1d(np.asarray(ks, complex))
    y0 = np.zeros((ks.size, 3, 2), complex)
    y0[:, 0, 0] = y0[:, 1, 1] = 1.0
    Y, _ = _integrate(pot, ks, y0, (field.xs[0], field.xs[-1]), "interaction", rtol=ROOT_RTOL, atol=ROOT_ATOL)
    a = Y[:, :2, :]
    b = Y[:, 2, :]
    adj = np.empty_like(a)
    adj[:, 0, 0] = a[:, 1, 1]
    adj[:, 1, 1] = a[:, 0, 0]
    adj[:, 0, 1] = -a[:, 0, 1]
    adj[:, 1, 0] = -a[:, 1, 0]
    return np.einsum("ni,nij->nj", b, adj), np.linalg.det(a)


def compute_norming_constants(field: ComplexField, poles, method: str = "matching", h0: float = 1e-2,
                              interpolation: str = "cubic", return_info: bool = False):
    """c_j = b(k_j) adj a(k_j) / (d/dk det a)(k_j).

    method 'matching' (default) obtains b adj(a) at the zero from the bound-state
    relation with the right Jost column at an interior point; 'continuation'
    integrates b(k) at complex k directly and needs fast edge decay.
    """
    poles = np.atleast_1d(np.asarray(poles, complex))
    if poles.size == 0:
        out = np.zeros((0, 2), complex)
        return (out, {"rel_change": np.zeros(0)}) if return_info else out
    check_edges(field)
    pot = _Potential(field, interpolation)
    if method == "continuation":
        rate = edge_decay_rate(field)
        need = 2 * np.max(poles.imag)
        if rate < 0.9 * need:
            raise ContinuationUnreliable(f"edge decay rate {rate:.3g} below 2 Im k_j = {need:.3g}")
        badj, _ = _b_adj_continuation(pot, field, poles)
    elif method == "matching":
        w = np.abs(field.values) ** 2
        xm = float(np.sum(field.xs * w) / np.sum(w)) if np.sum(w) > 0 else 0.0
        xm = float(field.xs[np.argmin(np.abs(field.xs - xm))])
        badj, _ = _b_adj_matching(pot, field, poles, xm)
    else:
        raise ValueError("method must be 'matching' or 'continuation'")

    def F(kk):
        return det_a(field, kk, interpolation)

    # adaptive derivative step: halve until the derivative settles
    h = h0
    d_prev = _fd_derivative(F, poles, h)
    rel = np.full(poles.size, np.inf)
    for _ in range(8):
        h /= 2
        d = _fd_derivative(F, poles, h)
        rel = np.abs(d - d_prev) / np.abs(d)
        d_prev = d
        if np.all(rel < 1e-8):
            break
    if np.any(np.abs(d_prev) < 1e-8):
        raise DegenerateZero("vanishing derivative of det a at a pole")
    c = badj / d_prev[:, None]
    if return_info:
        return c, {"rel_change": rel, "h": h, "ddet": d_prev}
    return c


def scatter(field: ComplexField, k_grid, search_box=(-4.0, 4.0, 0.02, 4.0), method: str = "matching",
            interpolation: str = "cubic"):
    """Full scattering data; returns (ScatteringData, TransitionData)."""
    td = compute_transition(field, k_grid, interpolation=interpolation)
    poles = find_discrete_spectrum(field, search_box, interpolation=interpolation)
    c = compute_norming_constants(field, poles, method=method, interpolation=interpolation)
    g = td.gamma
    g[td.failed] = 0.0
    return ScatteringData(poles, c, ReflectionCoefficient(td.k_grid, g)), td
