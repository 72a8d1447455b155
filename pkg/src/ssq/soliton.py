"""Reflectionless inverse problem: residue linear system and N-soliton fields.

Unknowns per pole k_j: a 3x2 block alpha_j (residue of the first two columns
of M at k_j) and a 3-vector beta_j (residue of the third column at conj(k_j)).
Every row of alpha_j is forced to be a scalar multiple of gamma_j, so the
solve is done on an equivalent reduced system of 2m scalars per row, with the
three rows sharing one matrix.  Exponentials are carried in log form and the
reduced matrix is equilibrated before any exp() is taken, which keeps far
fields (|Re phi| in the hundreds or thousands) finite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ExponentOverflow, SymmetryBroken, SystemSingular
from .fields import ComplexField, ScatteringData, pair_norming, paired_norming

COND_MAX = 1e14
SYMMETRY_TOL = 1e-8
_RUIZ_ITERS = 25
_REFINE_STEPS = 3
_PHI_CAP = 1e6  # beyond this even log-domain bookkeeping is meaningless


def t_theta(k, x, t):
    """t*theta(k) = k x + 4 k^3 t, finite at t = 0."""
    k = np.asarray(k, dtype=complex)
    return k * x + 4.0 * k**3 * t


@dataclass(frozen=True)
class PhaseParams:
    x: float
    t: float

    def t_theta(self, k):
        return t_theta(k, self.x, self.t)

    def theta(self, k):
        if self.t == 0:
            raise ZeroDivisionError("theta = k x/t + 4k^3 is undefined at t = 0; use t_theta")
        return self.t_theta(k) / self.t


def phase_exponent(poles, x, t):
    """phi_j = 2 i t theta(k_j); gamma_j = c_j exp(phi_j)."""
    return 2j * t_theta(poles, x, t)


def soliton_velocity(k):
    """Velocity of the soliton carried by pole k: x = v t along its core."""
    k = np.asarray(k, dtype=complex)
    return -4.0 * (3 * k.real**2 - k.imag**2)


@dataclass(frozen=True)
class ConeSpec:
    """Cone x = v t, v between v2 and v1 (v2 <= v1); spectral band I = [-v1/4, -v2/4]."""

    v1: float
    v2: float

    def __post_init__(self):
        if self.v2 > self.v1:
            raise ValueError("cone needs v2 <= v1")

    @property
    def band(self):
        return (-self.v1 / 4.0, -self.v2 / 4.0)

    def contains(self, x, t) -> bool:
        v = x / t
        return self.v2 <= v <= self.v1

    def in_band(self, poles) -> np.ndarray:
        lo, hi = self.band
        s = 3 * np.real(poles) ** 2 - np.imag(poles) ** 2
        return (s >= lo) & (s <= hi)


# ---------------------------------------------------------------------------
# linear algebra


def _log_abs(z):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


def _reduced_blocks(poles, c, phi):
    """Reduced matrix as base * exp(E), plus the beta-row right-hand sides.

    poles (m,), c (m,2), phi (nb,m).  Returns base (nb,2m,2m), E (nb,2m,2m),
    rhs_base (nb,2m,3), rhs_E (nb,2m).
    """
    nb, m = phi.shape
    cdt = np.result_type(poles, phi, complex)
    rdt = np.finfo(cdt).dtype
    kj = poles[:, None]
    kt = poles[None, :]
    C = 1.0 / (kj - np.conj(kt))  # eq1: a_j - sum_t C_jt b_t = delta_r3
    cc = c @ np.conj(c).T  # cc[t, j] = c_t . conj(c_j)
    re, im = phi.real, phi.imag
    # eq2: b_j - sum_t D_jt a_t = tilde-gamma_{j,r};  D_jt = gamma_t . tilde-gamma_j / (conj k_j - k_t)
    Dbase = -(cc.T)[None] * np.exp(1j * (im[:, None, :] - im[:, :, None])) / (np.conj(kj) - kt)[None]
    DE = re[:, None, :] + re[:, :, None]

    base = np.zeros((nb, 2 * m, 2 * m), cdt)
    E = np.zeros((nb, 2 * m, 2 * m), rdt)
    eye = np.eye(m)
    base[:, :m, :m] = eye
    base[:, m:, m:] = eye
    base[:, :m, m:] = -C
    base[:, m:, :m] = -Dbase
    E[:, m:, :m] = DE

    rhs_base = np.zeros((nb, 2 * m, 3), cdt)
    rhs_base[:, :m, 2] = 1.0
    rhs_base[:, m:, :2] = -np.conj(c)[None] * np.exp(-1j * im)[:, :, None]
    rhs_E = np.zeros((nb, 2 * m), rdt)
    rhs_E[:, m:] = re
    return base, E, rhs_base, rhs_E


def _ruiz_log(L):
    """Row/column log-scalings making every row and column max-modulus ~1."""
    nb, n, _ = L.shape
    rho = np.zeros((nb, n), L.dtype)
    kap = np.zeros((nb, n), L.dtype)
    for _ in range(_RUIZ_ITERS):
        S = L + rho[:, :, None] + kap[:, None, :]
        rho -= 0.5 * np.max(S, axis=2)
        S = L + rho[:, :, None] + kap[:, None, :]
        kap -= 0.5 * np.max(S, axis=1)
    return rho, kap


def _solve_reduced(poles, c, x, t):
    """Batched solve over x (array).  Returns log-scaled pieces for a and b.

    The system is assembled in extended precision and solved by double-precision
    LU with extended-precision residual refinement, so close poles (Cauchy-type
    ill-conditioning) do not cost the usual cond * eps in the solution.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phi = phase_exponent(poles[None, :], x[:, None], t)
    if not np.all(np.isfinite(phi)) or np.any(np.abs(phi.real) > _PHI_CAP):
        raise ExponentOverflow("phase exponent too large for the rescaled residue system")
    P = np.asarray(poles, np.clongdouble)
    phiL = 2j * (P[None, :] * np.asarray(x, np.longdouble)[:, None] + 4 * (P * P * P)[None, :] * np.longdouble(t))
    base, E, rhs_base, rhs_E = _reduced_blocks(P, np.asarray(c, np.clongdouble), phiL)
    L = np.where(base != 0, _log_abs(base) + E, -np.inf)
    rho, kap = (v.astype(np.longdouble) for v in _ruiz_log(L.astype(float)))  # any exact scaling will do
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        A = np.where(base != 0, base * np.exp(E + rho[:, :, None] + kap[:, None, :]), 0.0)
        R = rhs_base * np.exp(rhs_E + rho)[:, :, None]
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(R))):
        raise ExponentOverflow("non-finite entries after equilibration")
    Ad = A.astype(complex)
    cond = np.linalg.cond(Ad)
    bad = np.nonzero(~(cond <= COND_MAX))[0]
    if bad.size:
        raise SystemSingular(f"residue system ill-conditioned (cond {np.max(cond[bad]):.3g}) at {bad.size} point(s)",
                             indices=bad)
    Z = np.linalg.solve(Ad, R.astype(complex)).astype(np.clongdouble)
    for _ in range(_REFINE_STEPS):
        Z += np.linalg.solve(Ad, (R - A @ Z).astype(complex))
    res = np.linalg.norm((R - A @ Z).astype(complex), axis=(1, 2)) / (
        np.linalg.norm(Ad, axis=(1, 2)) * np.linalg.norm(Z.astype(complex), axis=(1, 2))
        + np.linalg.norm(R.astype(complex), axis=(1, 2)))
    return phi, Z, kap, cond, res


def _unscale(Zpart, logscale):
    """Zpart * exp(logscale) without forming exp of large arguments separately."""
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        out = np.where(Zpart != 0, np.exp(np.log(Zpart + 0j) + logscale), 0.0)
    return out


@dataclass(frozen=True)
class ResidueSystem:
    """Solved residue system at one (x, t)."""

    poles: np.ndarray
    norming: np.ndarray
    x: float
    t: float
    phi: np.ndarray  # (m,)
    alpha: np.ndarray  # (m,3,2)
    beta: np.ndarray  # (m,3)
    cond: float
    residual: float

    @property
    def m(self):
        return int(self.poles.size)

    @property
    def gamma(self):
        with np.errstate(over="ignore"):
            return self.norming * np.exp(self.phi)[:, None]

    @property
    def gamma_tilde(self):
        return -np.conj(self.gamma)

    @property
    def u(self) -> complex:
        return complex(2j * np.sum(self.beta[:, 0]))

    @property
    def u_companion(self) -> complex:
        return complex(2j * np.sum(self.beta[:, 1]))

    def M(self, k):
        """Plemelj-form M(k) = I + sum alpha_j/(k-k_j) + sum beta_j/(k-conj k_j); shape (...,3,3)."""
        k = np.asarray(k, dtype=complex)
        out = np.zeros(k.shape + (3, 3), complex)
        out[..., 0, 0] = out[..., 1, 1] = out[..., 2, 2] = 1.0
        for j in range(self.m):
            out[..., :, :2] += self.alpha[j] / (k[..., None, None] - self.poles[j])
            out[..., :, 2] += self.beta[j] / (k[..., None] - np.conj(self.poles[j]))
        return out

    def full_residual(self) -> float:
        """Relative residual of the unreduced 9m-scalar system (only if exponents are moderate)."""
        A, b = assemble_full_system(self.poles, self.norming, self.x, self.t)
        z = np.concatenate([self.alpha.reshape(-1), self.beta.reshape(-1)])
        return float(np.linalg.norm(A @ z - b) / (np.linalg.norm(A) * np.linalg.norm(z) + np.linalg.norm(b)))


def _check_poles(sd: ScatteringData):
    p = sd.poles
    if p.size > 1:
        d = np.abs(p[:, None] - p[None, :]) + np.eye(p.size)
        if np.min(d) < 1e-10 * max(1.0, np.max(np.abs(p))):
            raise SystemSingular("duplicate poles make the residue system singular")


def _empty(sd, x, t):
    return ResidueSystem(sd.poles, sd.norming, float(x), float(t), np.zeros(0, complex),
                         np.zeros((0, 3, 2), complex), np.zeros((0, 3), complex), 1.0, 0.0)


def assemble_and_solve(sigma_d: ScatteringData, x: float, t: float) -> ResidueSystem:
    if sigma_d.m == 0:
        return _empty(sigma_d, x, t)
    _check_poles(sigma_d)
    p, c = sigma_d.poles, sigma_d.norming
    m = p.size
    phi, Z, kap, cond, res = _solve_reduced(p, c, x, t)
    beta = _unscale(Z[0, m:, :], kap[0, m:][:, None]).astype(complex)  # (m,3)
    # alpha_j[r, :] = a_j^{(r)} gamma_j, with exp(phi) folded into the log
    alpha = np.empty((m, 3, 2), complex)
    for col in range(2):
        alpha[:, :, col] = c[:, col][:, None] * _unscale(Z[0, :m, :], (kap[0, :m] + phi[0])[:, None])
    return ResidueSystem(p, c, float(x), float(t), phi[0], alpha, beta, float(cond[0]), float(res[0]))


def reconstruct(solution: ResidueSystem) -> complex:
    u = solution.u
    if abs(solution.u_companion - np.conj(u)) > SYMMETRY_TOL:
        raise SymmetryBroken(f"2i sum beta_2 = {solution.u_companion:.6g} differs from conj(u) = {np.conj(u):.6g}")
    return u


def soliton_values(sigma_d: ScatteringData, xs, t, check_symmetry=True, chunk=4096):
    """Vectorized u(x, t) over an array of x, returning (u, companion)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if sigma_d.m == 0:
        z = np.zeros(xs.shape, complex)
        return z, z.copy()
    _check_poles(sigma_d)
    p, c = sigma_d.poles, sigma_d.norming
    m = p.size
    u = np.empty(xs.size, complex)
    w = np.empty(xs.size, complex)
    for s in range(0, xs.size, chunk):
        sl = slice(s, s + chunk)
        try:
            _, Z, kap, _, _ = _solve_reduced(p, c, xs[sl], t)
        except SystemSingular as err:
            raise SystemSingular(str(err), indices=np.asarray(err.indices) + s) from None
        beta = _unscale(Z[:, m:, :2], kap[:, m:, None])
        u[sl] = 2j * beta[:, :, 0].sum(axis=1)
        w[sl] = 2j * beta[:, :, 1].sum(axis=1)
    if check_symmetry:
        bad = np.nonzero(np.abs(w - np.conj(u)) > SYMMETRY_TOL)[0]
        if bad.size:
            raise SymmetryBroken(f"reconstruction symmetry violated at {bad.size} point(s), first index {bad[0]}")
    return u, w


def soliton_field(sigma_d: ScatteringData, xs, t: float) -> ComplexField:
    u, _ = soliton_values(sigma_d, xs, t)
    return ComplexField(np.asarray(xs, float), u, t)


def assemble_full_system(poles, norming, x, t):
    """Unreduced system for (alpha, beta), unknowns ordered alpha_j[r,c] then beta_j[r].

    Dense and unscaled; meant for brute-force checks at moderate |Re phi|.
    """
    poles = np.asarray(poles, complex)
    norming = np.asarray(norming, complex).reshape(-1, 2)
    m = poles.size
    g = norming * np.exp(phase_exponent(poles, x, t))[:, None]
    gt = -np.conj(g)
    N = 9 * m
    A = np.zeros((N, N), complex)
    b = np.zeros(N, complex)

    def ia(j, r, col):
        return 6 * j + 2 * r + col

    def ib(j, r):
        return 6 * m + 3 * j + r

    for j in range(m):
        for r in range(3):
            for col in range(2):
                row = ia(j, r, col)
                A[row, row] = 1.0
                if r == 2:
                    b[row] = g[j, col]
                for s in range(m):
                    A[row, ib(s, r)] -= g[j, col] / (poles[j] - np.conj(poles[s]))
        for r in range(3):
            row = ib(j, r)
            A[row, row] = 1.0
            if r < 2:
                b[row] = gt[j, r]
            for s in range(m):
                for col in range(2):
                    A[row, ia(s, r, col)] -= gt[j, col] / (np.conj(poles[j]) - poles[s])
    return A, b


# ---------------------------------------------------------------------------
# cone localization


def mu_of_cone(sigma_d: ScatteringData, cone: ConeSpec) -> float:
    """min over excluded poles of Im k_j * dist(3Re^2 - Im^2, I); inf if none excluded."""
    lo, hi = cone.band
    out = np.inf
    for k in sigma_d.poles:
        s = 3 * k.real**2 - k.imag**2
        d = max(lo - s, s - hi, 0.0)
        if d > 0:
            out = min(out, k.imag * d)
    return float(out)


def cone_filter(sigma_d: ScatteringData, cone: ConeSpec, k0: Optional[float] = None, region: str = "I",
                gamma=None):
    """Keep in-band poles; in region I also dress c_j with the conjugation factor.

    Returns (filtered ScatteringData, approximate_flag).  With gamma zero (or
    region II) the norming rows are passed through unchanged.
    """
    mask = cone.in_band(sigma_d.poles)
    out = sigma_d.subset(mask)
    g = sigma_d.gamma if gamma is None else gamma
    if region == "II" or out.m == 0 or g.is_zero():
        return out, False
    if region != "I":
        raise ValueError("region must be 'I' or 'II'")
    if k0 is None or k0 <= 0:
        raise ValueError("region I filtering needs the phase point k0 > 0")
    from .conjugation import ConjugationFactor

    cf = ConjugationFactor(g, k0)
    new = np.empty_like(out.norming)
    approx = False
    for j, kj in enumerate(out.poles):
        dinv, flag = cf.delta_inverse(kj)
        approx |= flag
        new[j] = out.norming[j] @ dinv / cf.det_delta(kj)
    return ScatteringData(out.poles, new, out.gamma), approx


# ---------------------------------------------------------------------------
# test-data generators


def one_soliton_data(k1=0.8j, c=(0.6 + 0.3j)) -> ScatteringData:
    return ScatteringData([k1], [paired_norming(c)])


def random_admissible(rng: np.random.Generator, n_pairs: int = 1, n_imag: int = 1,
                      re_range=(0.1, 1.0), im_range=(0.2, 1.0), cmax=2.0) -> ScatteringData:
    """Random pole set closed under k -> -conj(k) with admissible norming rows."""
    poles, norm = [], []
    while len(poles) < 2 * n_pairs + n_imag:
        poles.clear()
        norm.clear()
        for _ in range(n_pairs):
            k = rng.uniform(*re_range) + 1j * rng.uniform(*im_range)
            cj = (rng.normal(size=2) + 1j * rng.normal(size=2)) * cmax / 2
            poles += [k, -np.conj(k)]
            norm += [cj, pair_norming(cj)]
        for _ in range(n_imag):
            k = 1j * rng.uniform(*im_range)
            poles.append(k)
            norm.append(paired_norming((rng.normal() + 1j * rng.normal()) * cmax / 2))
        p = np.array(poles)
        d = np.abs(p[:, None] - p[None, :]) + np.eye(p.size)
        if np.min(d) < 0.05:
            poles.clear()
    return ScatteringData(np.array(poles), np.array(norm))
