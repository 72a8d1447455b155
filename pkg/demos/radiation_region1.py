"""Radiation on the left: the t^{-1/2} formula against the exact linear flow for tiny data."""
import numpy as np

from ssq.asymptotics import region1_evaluate
from ssq.direct_scattering import compute_transition
from ssq.fields import ComplexField, ScatteringData

u0f = lambda x: 0.01 * np.exp(-x**2) * (1 + 0.5j * x)
X, n, t = 3000.0, 2**15, 60.0
xs = -X + 2 * X / n * np.arange(n)
kap = 2 * np.pi * np.fft.fftfreq(n, d=xs[1] - xs[0])
ut = np.fft.ifft(np.fft.fft(u0f(xs)) * np.exp(1j * kap**3 * t))  # cubic terms are O(0.01^3)

xx = np.linspace(-15, 15, 601)
g = compute_transition(ComplexField(xx, u0f(xx), 0.0), np.linspace(-6, 6, 601)).reflection()
sd = ScatteringData([], [], g)
for x in (-170.0, -120.0, -80.0, -50.0):
    j = int(np.argmin(np.abs(xs - x)))
    ev = region1_evaluate(sd, g, None, xs[j], t)
    print(f"x = {xs[j]:8.2f}  |u| = {abs(ut[j]):.3e}  |formula - linear flow| = {abs(ev.value - ut[j]):.1e}"
          f"  nu = {ev.details['nu']:.2e}")
