"""Core data containers: sampled fields and scattering data."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ComplexField:
    """Complex profile u(x_i) on a uniform grid at time ``time``.

    The two-component potential is always q = (u, conj(u)), so only u is kept.
    """

    xs: np.ndarray
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if xs.ndim != 1 or xs.shape != vals.shape:
            raise ValueError("xs and values must be 1-d arrays of equal length")
        if xs.size < 2:
            raise ValueError("need at least two grid points")
        d = np.diff(xs)
        # rounding in the coordinates themselves is tolerated at the ulp level
        tol = 1e-12 * abs(d[0]) + 8 * np.finfo(float).eps * np.max(np.abs(xs))
        if np.any(d <= 0) or np.max(np.abs(d - d[0])) > tol:
            raise ValueError("grid spacing is not uniform")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time", float(self.time))

    @property
    def dx(self) -> float:
        return float((self.xs[-1] - self.xs[0]) / (self.xs.size - 1))

    @property
    def n(self) -> int:
        return int(self.xs.size)

    def edge_amplitude(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def interpolant(self) -> CubicSpline:
        return CubicSpline(self.xs, self.values)

    def __call__(self, x):
        """Cubic interpolation of u; zero outside the grid."""
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.interpolant()(x), dtype=complex)
        out = np.where((x < self.xs[0]) | (x > self.xs[-1]), 0.0, out)
        return out


@dataclass(frozen=True)
class ReflectionCoefficient:
    """Row-vector valued gamma(k) sampled on a real grid; zero off the grid."""

    k: np.ndarray
    values: np.ndarray  # shape (nk, 2)

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (k.size, 2):
            raise ValueError("gamma samples must have shape (nk, 2)")
        if k.size > 1 and np.any(np.diff(k) <= 0):
            raise ValueError("k grid must be increasing")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    @classmethod
    def zero(cls, kmax: float = 10.0, nk: int = 3) -> "ReflectionCoefficient":
        k = np.linspace(-kmax, kmax, nk)
        return cls(k, np.zeros((nk, 2), complex))

    def is_zero(self) -> bool:
        return not np.any(self.values)

    @cached_property
    def _spline(self):
        return CubicSpline(self.k, self.values, axis=0)

    def __call__(self, kk):
        kk = np.asarray(kk, dtype=float)
        if self.is_zero() or self.k.size < 2:
            return np.zeros(kk.shape + (2,), complex)
        out = np.asarray(self._spline(kk), dtype=complex)
        outside = (kk < self.k[0]) | (kk > self.k[-1])
        out[outside] = 0.0
        return out

    def sup_norm(self, kmax: Optional[float] = None) -> float:
        sel = slice(None) if kmax is None else (np.abs(self.k) <= kmax)
        v = self.values[sel]
        return float(np.max(np.linalg.norm(v, axis=-1))) if v.size else 0.0

    def symmetry_residual(self) -> float:
        """max |gamma(k) - conj(gamma(-k)) sigma1| on a symmetric grid."""
        if not np.allclose(self.k, -self.k[::-1], rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(self.k)))):
            raise ValueError("symmetry check needs a grid symmetric about 0")
        mirrored = np.conj(self.values[::-1]) @ SIGMA1
        return float(np.max(np.abs(self.values - mirrored)))


@dataclass(frozen=True)
class ScatteringData:
    """Discrete poles k_j (upper half-plane), 1x2 norming rows c_j, and gamma(k)."""

    poles: np.ndarray
    norming: np.ndarray
    gamma: ReflectionCoefficient = field(default_factory=ReflectionCoefficient.zero)

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        c = np.asarray(self.norming, dtype=complex).reshape(-1, 2) if np.size(self.norming) else np.zeros((0, 2), complex)
        if p.ndim != 1 or c.shape != (p.size, 2):
            raise ValueError("need one 1x2 norming row per pole")
        if np.any(p.imag <= 0):
            raise ValueError("poles must lie strictly in the upper half-plane")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
            raise ValueError("poles and norming constants must be finite")
        object.__setattr__(self, "poles", p)
        object.__setattr__(self, "norming", c)

    @property
    def m(self) -> int:
        return int(self.poles.size)

    def is_closed(self, tol: float = 1e-8) -> bool:
        """True if the pole set is closed under k -> -conj(k)."""
        for k in self.poles:
            if np.min(np.abs(self.poles + np.conj(k))) > tol * max(1.0, abs(k)):
                return False
        return True

    def subset(self, mask) -> "ScatteringData":
        mask = np.asarray(mask, dtype=bool)
        return ScatteringData(self.poles[mask], self.norming[mask], self.gamma)

    def with_norming(self, norming) -> "ScatteringData":
        return ScatteringData(self.poles, norming, self.gamma)

    def reflectionless(self) -> "ScatteringData":
        return ScatteringData(self.poles, self.norming)


def paired_norming(c: complex) -> np.ndarray:
    """Admissible norming row for a self-paired imaginary pole: (c, -conj(c))."""
    return np.array([c, -np.conj(c)], dtype=complex)


def pair_norming(cj) -> np.ndarray:
    """Norming row of the partner pole -conj(k_j) given the row at k_j."""
    cj = np.asarray(cj, dtype=complex)
    return -np.conj(cj) @ SIGMA1
