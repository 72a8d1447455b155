"""Independent reference computations used by several test modules."""
import numpy as np
from scipy.linalg import expm

SIG = np.diag([1.0, 1.0, -1.0])


def box_scattering(A, L, k):
    """Scattering matrix of u = A on [0, L): S = e^{ikL sigma} expm((-ik sigma + U) L)."""
    U = np.array([[0, 0, A], [0, 0, np.conj(A)], [-np.conj(A), -A, 0]], complex)
    S = np.diag(np.exp(1j * k * L * np.diag(SIG))) @ expm((-1j * k * SIG + U) * L)
    return S[:2, :2], S[2, :2]


def linear_fourier(xs, u0, t):
    """Exact solution of u_t + u_xxx = 0 on the periodic grid."""
    dx = xs[1] - xs[0]
    kap = 2 * np.pi * np.fft.fftfreq(xs.size, d=dx)
    return np.fft.ifft(np.fft.fft(u0) * np.exp(1j * kap**3 * t))


def pde_residual(u_of, x, t, h=1e-3):
    """u_t + u_xxx + 6|u|^2 u_x + 3 u (|u|^2)_x by central differences (fourth order)."""
    def d(f, var):
        if var == "t":
            g = lambda s: f(x, t + s)
        else:
            g = lambda s: f(x + s, t)
        return g

    gt = d(u_of, "t")
    gx = d(u_of, "x")
    ut = (-gt(2 * h) + 8 * gt(h) - 8 * gt(-h) + gt(-2 * h)) / (12 * h)
    ux = (-gx(2 * h) + 8 * gx(h) - 8 * gx(-h) + gx(-2 * h)) / (12 * h)
    uxxx = (-gx(3 * h) + 8 * gx(2 * h) - 13 * gx(h) + 13 * gx(-h) - 8 * gx(-2 * h) + gx(-3 * h)) / (8 * h**3)
    r = lambda s: np.abs(gx(s)) ** 2
    rx = (-r(2 * h) + 8 * r(h) - 8 * r(-h) + r(-2 * h)) / (12 * h)
    u = gx(0.0)
    return ut + uxxx + 6 * np.abs(u) ** 2 * ux + 3 * u * rx
