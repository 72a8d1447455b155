import numpy as np
import pytest

from conftest import periodic_grid
from oracles import linear_fourier
from ssq.errors import Instability, NonPeriodicInput
from ssq.fields import ComplexField
from ssq.pde_oracle import EvolutionConfig, conserved_l2, initial_field, run_evolution
from ssq.soliton import soliton_field


def gauss(x):
    return 0.3 * np.exp(-x**2) * (1 + 0.4j * x)


def test_zero_stays_zero():
    cfg = EvolutionConfig(20.0, 256, 1.0, dt=0.01)
    res = run_evolution(initial_field(cfg, lambda x: 0 * x), cfg)
    assert np.all(res.final.values == 0) and res.l2_drift() == 0


def test_linear_mode_matches_fourier():
    cfg = EvolutionConfig(40.0, 1024, 1.0, dt=0.05, nonlinearity_on=False)
    u0 = initial_field(cfg, gauss)
    res = run_evolution(u0, cfg)
    ref = linear_fourier(cfg.grid(), u0.values, 1.0)
    assert np.max(np.abs(res.final.values - ref)) < 1e-6
    # modulus of every Fourier mode is untouched by the exact linear flow
    a, b = np.abs(np.fft.fft(u0.values)), np.abs(np.fft.fft(res.final.values))
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(a)


def test_one_soliton_transport(one_sd, soliton0):
    cfg = EvolutionConfig(40.0, 2048, 1.0)
    res = run_evolution(soliton0, cfg)
    exact = soliton_field(one_sd, cfg.grid(), 1.0).values
    assert np.max(np.abs(res.final.values - exact)) < 1e-4
    assert res.l2_drift() < 1e-8


def test_l2_drift_nonlinear():
    cfg = EvolutionConfig(40.0, 1024, 3.0)
    res = run_evolution(initial_field(cfg, gauss), cfg, save_times=[1.0, 2.0])
    assert res.l2_drift() < 1e-8
    assert conserved_l2(res.final) == pytest.approx(res.l2_log[0][1], rel=1e-8)


def test_dt_halving_order():
    X, n, T = 30.0, 512, 0.5
    u0 = initial_field(EvolutionConfig(X, n, T), gauss)
    out = {dt: run_evolution(u0, EvolutionConfig(X, n, T, dt=dt)).final.values for dt in (0.02, 0.01, 0.005, 0.00125)}
    ref = out[0.00125]
    e = [np.max(np.abs(out[dt] - ref)) for dt in (0.02, 0.01, 0.005)]
    assert np.log2(e[0] / e[1]) >= 1.9 and np.log2(e[1] / e[2]) >= 1.9


def test_n_doubling():
    X, T = 30.0, 0.5
    a = run_evolution(initial_field(EvolutionConfig(X, 512, T), gauss), EvolutionConfig(X, 512, T, dt=0.005))
    b = run_evolution(initial_field(EvolutionConfig(X, 1024, T), gauss), EvolutionConfig(X, 1024, T, dt=0.005))
    assert np.max(np.abs(a.final.values - b.final.values[::2])) < 1e-9


def test_non_periodic_input_rejected():
    cfg = EvolutionConfig(10.0, 256, 1.0)
    with pytest.raises(NonPeriodicInput):
        run_evolution(ComplexField(np.linspace(-10, 10, 256), np.zeros(256, complex), 0.0), cfg)
    with pytest.raises(NonPeriodicInput):
        run_evolution(initial_field(cfg, lambda x: 0.1 / np.cosh(0.2 * x)), cfg)


def test_instability_retry_and_failure(soliton0):
    cfg = EvolutionConfig(40.0, 2048, 2.0, dt=0.5, check_every=1)
    with pytest.warns(UserWarning):
        with pytest.raises(Instability):
            run_evolution(soliton0, cfg)
    with pytest.warns(UserWarning):
        with pytest.raises(Instability):
            run_evolution(soliton0, cfg, retry=False)


def test_snapshots_at_exact_times():
    cfg = EvolutionConfig(20.0, 256, 1.0, dt=0.03)
    res = run_evolution(initial_field(cfg, gauss), cfg, save_times=[0.1, 0.35, 0.7])
    assert sorted(res.snapshots) == [0.1, 0.35, 0.7, 1.0]
    for t, f in res.snapshots.items():
        assert f.time == t
    assert [t for t, _ in res.l2_log] == [0.0, 0.1, 0.35, 0.7, 1.0]
