import math

import numpy as np
import pytest

from jcsim import fock
from jcsim.density import DensityMatrix, state_coherent, state_fock
from jcsim.evolve import (
    IntegrationError,
    IntegratorConfig,
    _hermitize,
    integrate,
    integrate_piecewise_const,
    observable_series,
    unitary_oracle,
)
from jcsim.genspec import PolynomialOperatorSpec, preset, spec, term
from jcsim.lindblad import ModelSpec

NONE = PolynomialOperatorSpec()


def driven(nu=6, gamma=0.1, p=0.2, omega_p=1.0):
    return ModelSpec(
        1.0, 1.0, p, gamma, preset("pump_collapse_revival", omega_p=omega_p), (preset("photon_loss_D1"),), nu
    )


def test_config_validation():
    with pytest.raises(ValueError, match="unknown integrator method"):
        IntegratorConfig(t_max=1.0, method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(t_max=1.0, dt=2.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_max=1.0, record_every=0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_max=1.0, method="piecewise_const")
    m = ModelSpec(2.0, 1.0, 0.0, 0.0, NONE, (), 2)
    assert IntegratorConfig(t_max=1.0).step(m) == pytest.approx(1e-3 * math.pi)


def test_stationary_vacuum():
    m = ModelSpec(1.0, 1.0, 0.0, 0.0, NONE, (), 5)
    rho0 = state_fock(0, "+", 5)
    rec = integrate(m, rho0, IntegratorConfig(t_max=2.0, dt=0.01, record_every=20))
    assert np.array_equal(rec.final.data, rho0.data)
    rows = {o.row() for o in rec.observables}
    assert len(rows) == 1


def test_photon_loss_decay():
    m = ModelSpec(1.0, 1.0, 0.0, 1.0, NONE, (preset("photon_loss_D1"),), 3)
    rec = integrate(m, state_fock(1, "+", 3), IntegratorConfig(t_max=3.0, dt=1e-3, record_every=50))
    n = observable_series(rec, "photon_number")
    assert np.max(np.abs(n - np.exp(-np.array(rec.times)))) <= 1e-6


def test_trace_conserved_and_hermitian():
    m = driven(nu=8)
    rec = integrate(m, state_coherent(1.0, "+", 8), IntegratorConfig(t_max=3.0, dt=1e-3, record_every=100))
    assert rec.max_trace_drift <= 1e-8
    assert rec.max_hermiticity_defect <= 1e-10 * m.dim
    assert rec.min_eigenvalue_seen >= -1e-8
    # pure unit-trace start: HS norm cannot grow while trace and positivity hold
    assert rec.hs_norm_max_ratio <= 1 + 1e-6


def test_record_layout():
    m = driven(nu=3)
    rho0 = state_fock(0, "+", 3)
    rec = integrate(m, rho0, IntegratorConfig(t_max=1.0, dt=0.01, record_every=7))
    assert rec.steps == 100
    assert len(rec.times) == 1 + 100 // 7 + 1
    assert rec.times[0] == 0.0 and rec.times[-1] == 1.0
    assert all(b > a for a, b in zip(rec.times, rec.times[1:]))
    rec = integrate(m, rho0, IntegratorConfig(t_max=1.0, dt=0.01, record_every=10))
    assert len(rec.times) == 11
    assert len(rec.observables) == len(rec.times)


def test_snapshots_and_checkpoints():
    m = driven(nu=3)
    cfg = IntegratorConfig(t_max=1.0, dt=0.01, record_every=25, store_snapshots=True)
    rec = integrate(m, state_fock(0, "+", 3), cfg, checkpoints=(0.0, 0.333, 1.0))
    assert [t for t, _ in rec.snapshots] == rec.times
    assert set(rec.checkpoints) == {0.0, 0.333, 1.0}
    assert np.array_equal(rec.checkpoints[1.0].data, rec.final.data)


def test_level_mismatch():
    with pytest.raises(ValueError):
        integrate(driven(nu=4), state_fock(0, "+", 3), IntegratorConfig(t_max=1.0))


def test_nan_detection():
    bad = np.full((4, 4), np.nan, dtype=complex)
    with pytest.raises(IntegrationError, match="non-finite"):
        _hermitize(bad, 0.5)


def test_rk45_underflow():
    m = driven(nu=2)
    cfg = IntegratorConfig(t_max=1.0, method="rk45", dt=0.1, rel_tol=1e-60, abs_tol=1e-60)
    with pytest.raises(IntegrationError, match="underflow") as info:
        integrate(m, state_coherent(0.5, "+", 2), cfg)
    assert info.value.t < 1.0


def test_rk45_matches_rk4():
    m = driven(nu=6)
    rho0 = state_coherent(1.0, "+", 6)
    a = integrate(m, rho0, IntegratorConfig(t_max=2.0, dt=1e-3, record_every=10**6)).final.data
    rec = integrate(m, rho0, IntegratorConfig(t_max=2.0, method="rk45", dt=0.01, record_every=5))
    assert np.linalg.norm(rec.final.data - a) <= 1e-6
    assert rec.times[-1] == 2.0
    assert rec.max_trace_drift <= 1e-8


def unitary_model(nu=8, p=0.1):
    return ModelSpec(1.0, 1.0, p, 0.0, preset("pump_displacement"), (), nu)


def test_unitary_oracle_basics():
    m = unitary_model()
    rho0 = state_coherent(1.0, "+", 8)
    assert np.allclose(unitary_oracle(m, rho0, 0.0).data, rho0.data, atol=1e-14)
    for t in (0.5, 3.0, 40.0):
        assert abs(unitary_oracle(m, rho0, t).hs_norm() - rho0.hs_norm()) <= 1e-12
        assert abs(unitary_oracle(m, rho0, t).trace() - 1) <= 1e-12


def test_unitary_oracle_preconditions():
    with pytest.raises(ValueError, match="gamma"):
        unitary_oracle(driven(nu=3, omega_p=1.0), state_fock(0, "+", 3), 1.0)
    m = ModelSpec(1.0, 1.0, 0.1, 0.0, preset("pump_collapse_revival", omega_p=1.0), (), 3)
    with pytest.raises(ValueError, match="time-constant"):
        unitary_oracle(m, state_fock(0, "+", 3), 1.0)


def test_unitary_oracle_vs_rk4():
    m = unitary_model(nu=8)
    rho0 = state_coherent(1.0, "+", 8)
    rec = integrate(m, rho0, IntegratorConfig(t_max=2.0, dt=1e-3, record_every=10**6))
    assert np.linalg.norm(rec.final.data - unitary_oracle(m, rho0, 2.0).data) <= 1e-8
    ex = integrate(m, rho0, IntegratorConfig(t_max=2.0, method="unitary_exact", dt=0.1, record_every=5))
    assert np.linalg.norm(ex.final.data - unitary_oracle(m, rho0, 2.0).data) <= 1e-13
    assert len(ex.times) == 5


def test_rk4_order_small():
    m = unitary_model(nu=6)
    rho0 = state_coherent(1.5, "+", 6)
    exact = unitary_oracle(m, rho0, 1.0).data
    errs = [
        np.linalg.norm(integrate(m, rho0, IntegratorConfig(t_max=1.0, dt=dt, record_every=10**6)).final.data - exact)
        for dt in (0.02, 0.01)
    ]
    assert 10 <= errs[0] / errs[1] <= 24


def test_piecewise_constant_on_autonomous_model():
    m = unitary_model(nu=5, p=0.3)
    rho0 = state_coherent(1.0, "+", 5)
    cfg = IntegratorConfig(t_max=1.0, dt=1e-3, record_every=10**6)
    a = integrate(m, rho0, cfg).final.data
    b = integrate_piecewise_const(m, rho0, IntegratorConfig(t_max=1.0, dt=1e-3, record_every=10**6, method="piecewise_const", epsilon=0.1)).final.data
    assert np.max(np.abs(a - b)) <= 1e-13


def test_piecewise_single_window_is_frozen_model():
    m = driven(nu=4, omega_p=2.0)
    rho0 = state_coherent(0.8, "+", 4)
    cfg = IntegratorConfig(t_max=1.0, dt=1e-3, record_every=10**6, method="piecewise_const", epsilon=5.0)
    a = integrate(m, rho0, cfg).final.data
    b = integrate(m.frozen_at(0.0), rho0, IntegratorConfig(t_max=1.0, dt=1e-3, record_every=10**6)).final.data
    assert np.max(np.abs(a - b)) <= 1e-13


def test_negative_eigenvalues_are_recorded_not_clipped():
    m = ModelSpec(1.0, 1.0, 0.0, 0.0, NONE, (), 2)
    rho = np.diag([1.0, -0.25, 0.25, 0, 0, 0]).astype(complex)
    rec = integrate(m, DensityMatrix(rho), IntegratorConfig(t_max=0.1, dt=0.01))
    assert rec.min_eigenvalue_seen == pytest.approx(-0.25, abs=1e-12)


def test_nonhermitian_pump_shows_defect():
    m = ModelSpec(1.0, 1.0, 0.5, 0.0, spec(term(0, 0, fock.pauli2("+"))), (), 3, validate=False)
    rec = integrate(m, state_coherent(1.0, "-", 3), IntegratorConfig(t_max=0.5, dt=1e-3))
    assert rec.max_hermiticity_defect > 1e-10 * m.dim
