"""Time-dependent normal-ordered polynomials in ``a, a^dag`` with 2x2 coefficients.

A :class:`PolynomialOperatorSpec` is ``sum_terms c(t) (a^dag)^l a^lp`` where every
coefficient ``c(t) = sum_k C_k exp(i w_k t)`` is a finite trigonometric
polynomial with 2x2 complex matrices ``C_k``. Pumps and dissipation
polynomials are both described this way and evaluated on a truncated space
with :func:`evaluate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import fock

PRESETS = (
    "photon_loss_D1",
    "photon_loss_raw",
    "pump_collapse_revival",
    "pump_displacement",
    "pump_number",
)


def _as_matrix_tuple(c) -> tuple:
    arr = np.asarray(c, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"coefficient matrix must be 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficient matrix has non-finite entries")
    return tuple(complex(x) for x in arr.ravel())


@dataclass(frozen=True)
class TrigTerm:
    """One ``C exp(i omega t)`` summand; ``matrix`` holds C row-major."""

    matrix: tuple
    omega: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix_tuple(np.reshape(self.matrix, (2, 2))))
        if not math.isfinite(self.omega):
            raise ValueError(f"frequency must be finite, got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=complex).reshape(2, 2)


@dataclass(frozen=True)
class TrigCoefficient:
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("a trigonometric coefficient needs at least one term")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def constant(cls, c) -> "TrigCoefficient":
        return cls((TrigTerm(c, 0.0),))

    @classmethod
    def of(cls, pairs: Iterable) -> "TrigCoefficient":
        return cls(tuple(TrigTerm(c, w) for c, w in pairs))

    def value(self, t: float) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        for term in self.terms:
            out += term.array * np.exp(1j * term.omega * t)
        return out

    def frequencies(self) -> set:
        return {term.omega for term in self.terms}


@dataclass(frozen=True)
class PolyTerm:
    l: int
    lp: int
    coeff: TrigCoefficient

    def __post_init__(self):
        for name in ("l", "lp"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 0:
                raise ValueError(f"power {name} must be an integer >= 0, got {v!r}")
            object.__setattr__(self, name, int(v))


@dataclass(frozen=True)
class PolynomialOperatorSpec:
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def degree(self) -> int:
        return max((t.l + t.lp for t in self.terms), default=0)

    def __add__(self, other: "PolynomialOperatorSpec") -> "PolynomialOperatorSpec":
        return PolynomialOperatorSpec(self.terms + other.terms)

    def frequencies(self) -> set:
        out = set()
        for t in self.terms:
            out |= t.coeff.frequencies()
        return out

    @property
    def is_time_constant(self) -> bool:
        return all(w == 0.0 for w in self.frequencies())

    def frozen_at(self, t: float) -> "PolynomialOperatorSpec":
        """Same polynomial with every coefficient fixed at its value at time ``t``."""
        return PolynomialOperatorSpec(
            tuple(PolyTerm(x.l, x.lp, TrigCoefficient.constant(x.coeff.value(t))) for x in self.terms)
        )


def term(l: int, lp: int, c, omega: float = 0.0) -> PolyTerm:
    return PolyTerm(l, lp, TrigCoefficient.of([(c, omega)]))


def spec(*terms: PolyTerm) -> PolynomialOperatorSpec:
    return PolynomialOperatorSpec(tuple(terms))


def frequency_components(s: PolynomialOperatorSpec, nu: int) -> dict:
    """Split ``evaluate(s, nu, t)`` as ``sum_w M_w exp(i w t)``; returns ``{w: M_w}``."""
    out: dict = {}
    for x in s.terms:
        for tt in x.coeff.terms:
            m = fock.monomial(nu, x.l, x.lp, tt.array)
            if tt.omega in out:
                out[tt.omega] = out[tt.omega] + m
            else:
                out[tt.omega] = m
    return out


def evaluate(s: PolynomialOperatorSpec, nu: int, t: float) -> np.ndarray:
    """Matrix of the polynomial at time ``t`` with ``a, a^dag`` replaced by ``a_nu, a_nu^dag``."""
    d = fock.dimension(nu)
    out = np.zeros((d, d), dtype=complex)
    for x in s.terms:
        out += fock.monomial(nu, x.l, x.lp, x.coeff.value(t))
    return out


@dataclass(frozen=True)
class HermiticityReport:
    ok: bool
    tolerance: float
    violations: tuple  # (t, ||A - A^dag||_HS) pairs above tolerance

    def message(self) -> str:
        if self.ok:
            return "pump is Hermitian at all sampled times"
        worst = max(self.violations, key=lambda v: v[1])
        return (
            f"pump is not Hermitian at {len(self.violations)} sampled time(s); "
            f"largest defect {worst[1]:.3e} at t={worst[0]:.6g} (tolerance {self.tolerance:.1e})"
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "tolerance": self.tolerance,
            "violations": [{"t": t, "defect": d} for t, d in self.violations],
        }


def default_sample_times(t_max: float, count: int = 32) -> list:
    return [float(x) for x in np.linspace(0.0, t_max, count)]


def validate_pump_hermitian(
    s: PolynomialOperatorSpec, nu: int, sample_times: Sequence[float], tolerance: float | None = None
) -> HermiticityReport:
    """Sample ``||A(t) - A(t)^dag||_HS``; returns a report rather than raising."""
    times = list(sample_times)
    if not times:
        raise ValueError("sample_times must be nonempty")
    tol = 1e-10 * fock.dimension(nu) if tolerance is None else tolerance
    bad = []
    for t in times:
        a = evaluate(s, nu, t)
        defect = float(np.linalg.norm(a - a.conj().T))
        if defect > tol:
            bad.append((float(t), defect))
    return HermiticityReport(not bad, tol, tuple(bad))


def preset(name: str, omega_p: float = 1.0) -> PolynomialOperatorSpec:
    """Named polynomials.

    ``photon_loss_D1`` is ``V = a/sqrt(2)``: the double-commutator dissipator
    ``[V rho, V^dag] + [V, rho V^dag]`` equals ``2 V rho V^dag - {V^dag V, rho}``,
    so this choice reproduces ``a rho a^dag - (a^dag a rho + rho a^dag a)/2``.
    ``photon_loss_raw`` keeps ``V = a`` and gives twice that.
    """
    eye = np.eye(2)
    if name == "photon_loss_D1":
        return spec(term(0, 1, eye / math.sqrt(2)))
    if name == "photon_loss_raw":
        return spec(term(0, 1, eye))
    if name == "pump_collapse_revival":
        return spec(
            term(0, 0, fock.pauli2("+"), -float(omega_p)),
            term(0, 0, fock.pauli2("-"), float(omega_p)),
        )
    if name == "pump_displacement":
        return spec(term(1, 0, eye), term(0, 1, eye))
    if name == "pump_number":
        return spec(term(1, 1, eye))
    raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
