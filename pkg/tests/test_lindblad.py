import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcsim import fock
from jcsim.genspec import PolynomialOperatorSpec, evaluate, preset, spec, term
from jcsim.lindblad import (
    ModelSpec,
    PumpNotHermitianError,
    bandwidth,
    dissipator_apply,
    eigenbasis_form,
    generator_apply,
    hamiltonian,
    quadratic_form_D,
    quadratic_form_K,
    symmetrized_form,
)

NONE = PolynomialOperatorSpec()


def rand_herm(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (m + m.conj().T)


def jc_model(nu=6, p=0.3, gamma=0.2, pump=None, dissipators=None):
    return ModelSpec(
        1.0,
        0.8,
        p,
        gamma,
        preset("pump_collapse_revival", omega_p=0.9) if pump is None else pump,
        (preset("photon_loss_D1"),) if dissipators is None else dissipators,
        nu,
    )


def test_hamiltonian_diagonal_entry():
    m = ModelSpec(1.0, 0.5, 0.0, 0.0, NONE, (), 5)
    h = hamiltonian(m, 0.0)
    k = fock.flat_index(3, "+", 5)
    assert h[k, k] == pytest.approx(3.25, abs=1e-15)
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
    assert np.array_equal(h, hamiltonian(m, 4.2))


def test_hamiltonian_pump_entry():
    m = ModelSpec(1.0, 1.0, 0.1, 0.0, preset("pump_collapse_revival", omega_p=1.0), (), 4)
    h = hamiltonian(m, 0.0)
    assert h[fock.flat_index(0, "+", 4), fock.flat_index(0, "-", 4)] == pytest.approx(0.1, abs=1e-16)


def test_hamiltonian_is_hermitian():
    m = jc_model(nu=9)
    for t in (0.0, 0.4, 3.3):
        h = hamiltonian(m, t)
        assert np.linalg.norm(h - h.conj().T) <= 1e-12 * m.dim


def test_model_rejects_nonhermitian_pump():
    with pytest.raises(PumpNotHermitianError):
        ModelSpec(1.0, 1.0, 0.1, 0.0, spec(term(0, 0, fock.pauli2("+"))), (), 3)
    # validation can be bypassed for negative controls
    ModelSpec(1.0, 1.0, 0.1, 0.0, spec(term(0, 0, fock.pauli2("+"))), (), 3, validate=False)


@pytest.mark.parametrize("kwargs", [dict(omega_c=0.0), dict(omega_a=-1.0), dict(gamma=-0.1)])
def test_model_parameter_checks(kwargs):
    base = dict(omega_c=1.0, omega_a=1.0, p=0.0, gamma=0.0, pump=NONE, dissipators=(), nu=2)
    base.update(kwargs)
    with pytest.raises(ValueError):
        ModelSpec(**base)


def test_dissipator_vacuum_and_one_photon():
    nu = 4
    v = evaluate(preset("photon_loss_D1"), nu, 0.0)
    vac = np.outer(fock.basis_vector(0, "+", nu), fock.basis_vector(0, "+", nu))
    one = np.outer(fock.basis_vector(1, "+", nu), fock.basis_vector(1, "+", nu))
    assert not np.any(dissipator_apply(v, vac))
    assert np.allclose(dissipator_apply(v, one), vac - one, atol=1e-15)
    with pytest.raises(ValueError):
        dissipator_apply(v, np.eye(4))


def test_dissipator_traceless_hermitian():
    rng = np.random.default_rng(1)
    nu = 8
    v = fock.annihilation(nu) + 0.3 * fock.monomial(nu, 0, 2, fock.pauli2("+"))
    for _ in range(100):
        rho = rand_herm(rng, 18)
        out = dissipator_apply(v, rho)
        norm = np.linalg.norm(rho)
        assert abs(np.trace(out)) <= 1e-12 * norm * np.linalg.norm(v, 2) ** 2
        assert np.linalg.norm(out - out.conj().T) <= 1e-12 * 18 * norm * np.linalg.norm(v, 2) ** 2


def test_generator_zero_on_stationary_states():
    m = ModelSpec(1.0, 0.7, 0.0, 0.0, NONE, (), 5)
    rho = np.diag(np.exp(-np.diag(hamiltonian(m, 0.0)).real)).astype(complex)
    assert not np.any(np.abs(generator_apply(m, 1.0, rho)) > 1e-15)
    vac = np.outer(fock.basis_vector(0, "+", 5), fock.basis_vector(0, "+", 5))
    assert not np.any(generator_apply(m, 0.0, vac))


def test_generator_dimension_mismatch():
    with pytest.raises(ValueError):
        generator_apply(jc_model(nu=3), 0.0, np.eye(4))


def test_generator_linear_traceless_hermitian():
    rng = np.random.default_rng(2)
    m = jc_model(nu=7, dissipators=(preset("photon_loss_D1"), spec(term(0, 2, np.eye(2), 0.5))))
    for _ in range(30):
        t = rng.uniform(0, 10)
        r1, r2 = rand_herm(rng, m.dim), rand_herm(rng, m.dim)
        out = generator_apply(m, t, r1)
        n = np.linalg.norm(r1)
        assert abs(np.trace(out)) <= 1e-12 * m.dim * n
        assert np.linalg.norm(out - out.conj().T) <= 1e-12 * m.dim * n * 10
        lin = generator_apply(m, t, r1 + r2) - out - generator_apply(m, t, r2)
        assert np.max(np.abs(lin)) <= 1e-12 * np.max(np.abs(out))


def test_quadratic_form_K_vanishes():
    rng = np.random.default_rng(3)
    m = jc_model(nu=12)
    assert quadratic_form_K(m, 0.0, np.zeros((m.dim, m.dim))) == 0.0
    for _ in range(500):
        t = rng.uniform(0, 20)
        rho = rand_herm(rng, m.dim)
        h = hamiltonian(m, t)
        assert abs(quadratic_form_K(m, t, rho)) <= 1e-12 * np.linalg.norm(rho) ** 2 * np.linalg.norm(h, 2)


def brute_eigen_form(v, rho):
    """Loop form of 2 sum_ik |V_ik|^2 rho_k (rho_i - rho_k) in rho's eigenbasis."""
    w, u = np.linalg.eigh(rho)
    vt = u.conj().T @ v @ u
    total = 0.0
    for i in range(len(w)):
        for k in range(len(w)):
            total += 2 * abs(vt[i, k]) ** 2 * w[k] * (w[i] - w[k])
    return total


def test_quadratic_form_D_examples():
    nu = 1
    rho = np.zeros((4, 4), dtype=complex)
    rho[fock.flat_index(1, "+", nu), fock.flat_index(1, "+", nu)] = 1
    assert quadratic_form_D(fock.annihilation(nu), rho) == pytest.approx(-2.0, abs=1e-14)

    v = fock.annihilation(nu) + fock.creation(nu)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0], rho[2, 2] = 2.0, 1.0
    assert quadratic_form_D(v, rho) == pytest.approx(-2.0, abs=1e-12)
    assert symmetrized_form(v, rho) == pytest.approx(-2.0, abs=1e-12)
    assert brute_eigen_form(v, rho) == pytest.approx(-2.0, abs=1e-12)

    nu = 6
    rho = np.zeros((14, 14), dtype=complex)
    rho[0, 0], rho[2, 2] = 2.0, 1.0
    assert quadratic_form_D(fock.annihilation(nu), rho) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("which", ["a", "a+a^dag", "a^2"])
def test_eigenbasis_form_matches_direct(which):
    rng = np.random.default_rng(4)
    nu = 10
    a = fock.annihilation(nu)
    v = {"a": a, "a+a^dag": a + a.conj().T, "a^2": a @ a}[which]
    for _ in range(100):
        rho = rand_herm(rng, 22)
        direct = quadratic_form_D(v, rho)
        scale = np.linalg.norm(rho) ** 2 * np.linalg.norm(v, 2) ** 2
        assert abs(eigenbasis_form(v, rho) - direct) <= 1e-10 * scale
    rho = rand_herm(rng, 22)
    assert eigenbasis_form(v, rho) == pytest.approx(brute_eigen_form(v, rho), rel=1e-10, abs=1e-10)


def test_forms_vanish_on_multiples_of_identity():
    v = fock.annihilation(5)
    rho = 0.3 * np.eye(12)
    assert abs(quadratic_form_D(v, rho)) < 1e-15
    assert abs(eigenbasis_form(v, rho)) < 1e-15


def test_rank_one_form():
    rng = np.random.default_rng(6)
    nu = 8
    a = fock.annihilation(nu)
    psi = rng.standard_normal(18) + 1j * rng.standard_normal(18)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    expected = 2 * (abs(psi.conj() @ a @ psi) ** 2 - (psi.conj() @ a.conj().T @ a @ psi).real)
    assert quadratic_form_D(a, rho) == pytest.approx(expected, abs=1e-12)
    assert eigenbasis_form(a, rho) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), nu=st.integers(1, 6))
def test_hermitian_V_form_is_nonpositive(seed, nu):
    rng = np.random.default_rng(seed)
    d = 2 * (nu + 1)
    v = rand_herm(rng, d)
    rho = rand_herm(rng, d)
    scale = np.linalg.norm(rho) ** 2 * np.linalg.norm(v, 2) ** 2
    qd = quadratic_form_D(v, rho)
    assert qd <= 1e-10 * scale
    assert abs(qd - symmetrized_form(v, rho)) <= 1e-10 * scale


def test_bandwidth_examples():
    m = ModelSpec(1.0, 1.0, 0.2, 0.5, preset("pump_displacement"), (preset("photon_loss_D1"),), 8)
    r = bandwidth(m)
    assert (r.empirical, r.formula) == (2, 2)

    m = ModelSpec(1.0, 1.0, 0.2, 0.0, preset("pump_number"), (), 8)
    r = bandwidth(m)
    assert r.empirical == 1
    assert r.empirical <= 2 * 2

    m = ModelSpec(1.0, 1.0, 0.0, 1.0, NONE, (spec(term(0, 2, np.eye(2))),), 8)
    r = bandwidth(m)
    assert (r.empirical, r.formula) == (4, 2)


def test_bandwidth_time_dependent():
    m = jc_model(nu=5)
    r = bandwidth(m)
    assert len(r.sample_times) == 8
    assert r.empirical == 2
