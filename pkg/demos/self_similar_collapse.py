"""Small Gaussian data: rescaled profiles near x = 0 collapse onto a Painleve II solution.

A lighter version of the acceptance run (X = 4096, n = 2^15, t up to 100).
"""
import numpy as np

from ssq.painleve2 import match_kappa_from_pde, solve_painleve
from ssq.pde_oracle import EvolutionConfig, initial_field, run_evolution

cfg = EvolutionConfig(X=4096.0, n=2**15, t_end=100.0)
u0 = initial_field(cfg, lambda x: 0.05 * np.exp(-x**2))
res = run_evolution(u0, cfg, save_times=[25.0, 50.0])
runs = [(t, res.snapshots[t]) for t in (25.0, 50.0, 100.0)]

fit = match_kappa_from_pde(runs)
sol = solve_painleve(fit.kappa)
ys = np.linspace(-5, 5, 401)
ref = sol(ys)
print(f"kappa = {fit.kappa:.5f}  (linear estimate {3 ** (-1 / 3) * 0.05 * np.sqrt(np.pi):.5f}), "
      f"spread {fit.spread:.2%}")
for t, f in runs:
    prof = t ** (1 / 3) * f(ys * t ** (1 / 3))
    print(f"t = {t:5.1f}  rel. Linf distance to u_P: {np.max(np.abs(prof - ref)) / np.max(np.abs(ref)):.2%}")
