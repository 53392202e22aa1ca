"""Hamiltonian, dissipators and the generator of the truncated master equation.

The generator acts as

    A(t) rho = -i [H(t), rho] + gamma * sum_j ([V_j rho, V_j^dag] + [V_j, rho V_j^dag])

with ``H(t) = w_c a^dag a + w_a/2 sigma_3 + p ((a + a^dag) sigma_1 + A_e(t))``.
The dissipator is taken in the double-commutator form as written, which
is twice the usual Lindblad dissipator for the same ``V``; see
:func:`jcsim.genspec.preset` for the ``V = a/sqrt(2)`` photon-loss convention.
Everything is matrix-free: the d^2 x d^2 superoperator is never assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import fock
from .genspec import (
    PolynomialOperatorSpec,
    default_sample_times,
    frequency_components,
    validate_pump_hermitian,
)


class PumpNotHermitianError(ValueError):
    def __init__(self, report):
        super().__init__(report.message())
        self.report = report


def slowest_period(frequencies) -> float:
    nonzero = [abs(w) for w in frequencies if w != 0.0]
    return 2 * math.pi / min(nonzero) if nonzero else 1.0


@dataclass(frozen=True)
class ModelSpec:
    omega_c: float
    omega_a: float
    p: float
    gamma: float
    pump: PolynomialOperatorSpec
    dissipators: tuple
    nu: int
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dissipators", tuple(self.dissipators))
        for name in ("omega_c", "omega_a", "p", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, float(v))
        if self.omega_c <= 0 or self.omega_a <= 0:
            raise ValueError("omega_c and omega_a must be > 0")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        fock.dimension(self.nu)
        if self.validate:
            report = validate_pump_hermitian(
                self.pump, self.nu, default_sample_times(slowest_period(self.pump.frequencies()))
            )
            if not report.ok:
                raise PumpNotHermitianError(report)

    @property
    def dim(self) -> int:
        return fock.dimension(self.nu)

    @property
    def is_time_constant(self) -> bool:
        return self.pump.is_time_constant and all(v.is_time_constant for v in self.dissipators)

    def frequencies(self) -> set:
        out = set(self.pump.frequencies())
        for v in self.dissipators:
            out |= v.frequencies()
        return out

    def with_level(self, nu: int) -> "ModelSpec":
        return ModelSpec(
            self.omega_c, self.omega_a, self.p, self.gamma, self.pump, self.dissipators, nu, self.validate
        )

    def frozen_at(self, t: float) -> "ModelSpec":
        """Autonomous model whose coefficients are those of ``self`` at time ``t``."""
        return ModelSpec(
            self.omega_c,
            self.omega_a,
            self.p,
            self.gamma,
            self.pump.frozen_at(t),
            tuple(v.frozen_at(t) for v in self.dissipators),
            self.nu,
            self.validate,
        )


def _phased_sum(components, t: float) -> np.ndarray:
    it = iter(components)
    w, m = next(it)
    out = m * np.exp(1j * w * t) if w else m.copy()
    for w, m in it:
        out += m * np.exp(1j * w * t)
    return out


class _Dissipator:
    def __init__(self, components: dict, d: int):
        self.constant = all(w == 0.0 for w in components)
        self.components = list(components.items()) or [(0.0, np.zeros((d, d), dtype=complex))]
        if self.constant:
            self.v = _phased_sum(self.components, 0.0)
            self.vd = self.v.conj().T.copy()
            self.vdv = self.vd @ self.v

    def matrices(self, t: float):
        if self.constant:
            return self.v, self.vd, self.vdv
        v = _phased_sum(self.components, t)
        vd = v.conj().T
        return v, vd, vd @ v


class Generator:
    """Precompiled generator of one :class:`ModelSpec`.

    Time dependence enters only through ``exp(i w t)`` phases, so every
    frequency component is assembled once.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        nu = model.nu
        a = fock.annihilation(nu)
        static = (
            model.omega_c * fock.number(nu)
            + 0.5 * model.omega_a * fock.pauli("3", nu)
            + model.p * ((a + a.conj().T) @ fock.pauli("1", nu))
        )
        comps = {0.0: static}
        for w, m in frequency_components(model.pump, nu).items():
            comps[w] = comps[w] + model.p * m if w in comps else model.p * m
        self._h = list(comps.items())
        self._h_constant = all(w == 0.0 for w in comps)
        self._d = [_Dissipator(frequency_components(v, nu), model.dim) for v in model.dissipators]

    def hamiltonian(self, t: float) -> np.ndarray:
        return _phased_sum(self._h, t)

    def dissipator_ops(self, t: float) -> list:
        return [d.matrices(t)[0] for d in self._d]

    def apply(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian(t)
        hr = h @ rho
        # -i[H, rho]; rho H = (H rho)^dag only when both are Hermitian, so multiply out.
        out = -1j * (hr - rho @ h)
        if self.model.gamma and self._d:
            acc = np.zeros_like(out)
            for d in self._d:
                v, vd, vdv = d.matrices(t)
                acc += 2.0 * (v @ rho @ vd) - vdv @ rho - rho @ vdv
            out += self.model.gamma * acc
        return out


@lru_cache(maxsize=64)
def compile_model(model: ModelSpec) -> Generator:
    return Generator(model)


def hamiltonian(model: ModelSpec, t: float) -> np.ndarray:
    return compile_model(model).hamiltonian(t)


def _check_pair(x: np.ndarray, y: np.ndarray):
    if x.shape != y.shape or x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def dissipator_apply(v: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``[V rho, V^dag] + [V, rho V^dag] = 2 V rho V^dag - V^dag V rho - rho V^dag V``."""
    v = np.asarray(v)
    rho = np.asarray(rho)
    _check_pair(v, rho)
    vd = v.conj().T
    vdv = vd @ v
    return 2.0 * (v @ rho @ vd) - vdv @ rho - rho @ vdv


def generator_apply(model: ModelSpec, t: float, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"dimension mismatch: rho {rho.shape} vs model dimension {model.dim}")
    return compile_model(model).apply(t, rho)


def trace_product(x: np.ndarray, y: np.ndarray) -> complex:
    """``tr(x y)`` without forming the product."""
    return complex(np.einsum("ij,ji->", x, y))


def quadratic_form_K(model: ModelSpec, t: float, rho: np.ndarray) -> float:
    """``Re tr(rho (-i[H(t), rho]))``; zero for Hermitian ``rho``."""
    h = hamiltonian(model, t)
    return trace_product(rho, -1j * (h @ rho - rho @ h)).real


def quadratic_form_D(v: np.ndarray, rho: np.ndarray) -> float:
    return trace_product(rho, dissipator_apply(v, rho)).real


def _eig_frame(v: np.ndarray, rho: np.ndarray):
    _check_pair(np.asarray(v), np.asarray(rho))
    try:
        w, u = np.linalg.eigh(rho)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigendecomposition of rho failed: {exc}") from exc
    vt = u.conj().T @ v @ u
    return w, np.abs(vt) ** 2


def eigenbasis_form(v: np.ndarray, rho: np.ndarray) -> float:
    """``2 sum_{ik} |V_ik|^2 rho_k (rho_i - rho_k)`` with V written in rho's eigenbasis.

    Exact for every V; equals :func:`quadratic_form_D` up to roundoff.
    """
    w, v2 = _eig_frame(v, rho)
    return float(2.0 * np.sum(v2 * w[None, :] * (w[:, None] - w[None, :])))


def symmetrized_form(v: np.ndarray, rho: np.ndarray) -> float:
    """``-sum_{ik} |V_ik|^2 (rho_i - rho_k)^2`` in rho's eigenbasis.

    Agrees with :func:`eigenbasis_form` only when ``|V_ik| = |V_ki|`` there,
    e.g. for Hermitian V.
    """
    w, v2 = _eig_frame(v, rho)
    return float(-np.sum(v2 * (w[:, None] - w[None, :]) ** 2))


@dataclass(frozen=True)
class BandwidthReport:
    empirical: int
    formula: int
    nu: int
    sample_times: tuple


def bandwidth(model: ModelSpec, tolerance: float = 1e-13, samples: int = 8) -> BandwidthReport:
    """Largest ``|k - n| + |k' - n'|`` over nonzero couplings of ``|k,r><k',r'|`` into entry ``(n, n')``.

    Scans every basis projector at ``samples`` times spread over one period
    of the slowest coefficient frequency. ``formula`` is
    ``max(2, deg pump, max deg V)`` for comparison.
    """
    gen = compile_model(model)
    d = model.dim
    if model.is_time_constant:
        times = (0.0,)
    else:
        period = slowest_period(model.frequencies())
        times = tuple((j + 0.3) * period / samples for j in range(samples))
    photon = np.repeat(np.arange(model.nu + 1), 2)
    width = 0
    e = np.zeros((d, d), dtype=complex)
    for t in times:
        for i in range(d):
            for j in range(d):
                e[i, j] = 1.0
                out = gen.apply(t, e)
                e[i, j] = 0.0
                rows, cols = np.nonzero(np.abs(out) > tolerance)
                if rows.size:
                    dist = np.abs(photon[rows] - photon[i]) + np.abs(photon[cols] - photon[j])
                    width = max(width, int(dist.max()))
    formula = max([2, model.pump.degree] + [v.degree for v in model.dissipators])
    return BandwidthReport(width, formula, model.nu, times)
