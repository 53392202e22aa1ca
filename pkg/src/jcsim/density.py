"""Density matrices on ``X_nu``: Hilbert-Schmidt geometry, truncation, standard states."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import fock

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
PSD_TOL_CONSTRUCT = 1e-12
PSD_TOL_TRAJECTORY = 1e-8


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - m.conj().T))


class DensityMatrix:
    """Hermitian matrix on ``X_nu`` with entries ``rho[n,s; n',s']`` in the flat basis.

    Construction checks shape and Hermiticity (defect <= 1e-12 * d * ||rho||);
    the array is stored read-only.
    """

    __slots__ = ("nu", "data")

    def __init__(self, data, nu: int | None = None, *, check: bool = True):
        arr = np.array(data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 or arr.shape[0] < 4:
            raise ValueError(f"density matrix must be square of even size >= 4, got {arr.shape}")
        level = arr.shape[0] // 2 - 1
        if nu is not None and nu != level:
            raise ValueError(f"matrix of size {arr.shape[0]} does not match truncation level {nu}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("density matrix has non-finite entries")
        if check:
            scale = max(1.0, float(np.linalg.norm(arr)))
            defect = hermiticity_defect(arr)
            if defect > HERMITIAN_TOL * arr.shape[0] * scale:
                raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
        arr.flags.writeable = False
        self.nu = level
        self.data = arr

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.data)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def is_psd(self, tol: float = PSD_TOL_TRAJECTORY) -> bool:
        return self.min_eigenvalue() >= -tol

    def entry(self, n: int, s: str, n2: int, s2: str) -> complex:
        return complex(self.data[fock.flat_index(n, s, self.nu), fock.flat_index(n2, s2, self.nu)])

    def __add__(self, other: "DensityMatrix") -> "DensityMatrix":
        return DensityMatrix(self.data + other.data)

    def __mul__(self, c: float) -> "DensityMatrix":
        return DensityMatrix(self.data * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        return f"DensityMatrix(nu={self.nu}, trace={self.trace().real:.6g}, hs_norm={self.hs_norm():.6g})"


def _raw(x):
    return x.data if isinstance(x, DensityMatrix) else np.asarray(x)


def hs_inner(rho1, rho2) -> float:
    """``tr(rho1 rho2)``; the imaginary residue of Hermitian inputs is checked and dropped."""
    x, y = _raw(rho1), _raw(rho2)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    val = complex(np.einsum("ij,ji->", x, y))
    scale = max(1.0, float(np.linalg.norm(x) * np.linalg.norm(y)))
    if abs(val.imag) > 1e-12 * scale:
        raise ValueError(f"tr(rho1 rho2) has imaginary part {val.imag:.3e}; inputs not Hermitian")
    return val.real


def hs_norm_entrywise(rho) -> float:
    """``sqrt(sum |rho_ij|^2)``, the entrywise route to the HS norm."""
    x = _raw(rho)
    return math.sqrt(float(np.sum(x.real**2 + x.imag**2)))


def truncate(rho: DensityMatrix, nu_small: int) -> DensityMatrix:
    """Keep entries with ``n, n' <= nu_small``; never increases the HS norm."""
    if nu_small > rho.nu:
        raise ValueError(f"cannot truncate level {rho.nu} to larger level {nu_small}")
    d = fock.dimension(nu_small)
    return DensityMatrix(rho.data[:d, :d], check=False)


def embed(rho: DensityMatrix, nu_big: int) -> DensityMatrix:
    """Zero-pad to level ``nu_big``."""
    if nu_big < rho.nu:
        raise ValueError(f"cannot embed level {rho.nu} into smaller level {nu_big}")
    d = fock.dimension(nu_big)
    out = np.zeros((d, d), dtype=complex)
    out[: rho.dim, : rho.dim] = rho.data
    return DensityMatrix(out, check=False)


def _atomic_projector(s: str) -> np.ndarray:
    p = np.zeros((2, 2))
    p[fock.SIGNS.index(s), fock.SIGNS.index(s)] = 1.0
    return p


def _check_sign(s: str):
    if s not in fock.SIGNS:
        raise ValueError(f"atomic level must be '+' or '-', got {s!r}")


def state_fock(n: int, s: str, nu: int) -> DensityMatrix:
    if not 0 <= n <= nu:
        raise ValueError(f"photon number {n} outside 0..{nu}")
    v = fock.basis_vector(n, s, nu)
    return DensityMatrix(np.outer(v, v.conj()), check=False)


def state_pure(psi) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    return DensityMatrix(np.outer(psi, psi.conj()), check=False)


def state_coherent(alpha: complex, s: str, nu: int) -> DensityMatrix:
    """Coherent state ``|alpha>`` on photon levels ``0..nu``, renormalized after truncation."""
    _check_sign(s)
    fock.dimension(nu)
    n = np.arange(nu + 1)
    # alpha^n / sqrt(n!) through logs so large nu does not overflow
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    if alpha == 0:
        amp = (n == 0).astype(complex)
    else:
        amp = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact)
    kept = float(np.sum(np.abs(amp) ** 2)) * math.exp(-abs(alpha) ** 2)
    log.debug("coherent alpha=%s nu=%d: truncation tail %.3e", alpha, nu, 1.0 - kept)
    amp = amp / np.linalg.norm(amp)
    photon = np.outer(amp, amp.conj())
    return DensityMatrix(np.kron(photon, _atomic_projector(s)), check=False)


def state_thermal(mean_n: float, s: str, nu: int) -> DensityMatrix:
    """Geometric photon distribution ``p_n ∝ (m/(1+m))^n``, renormalized on ``0..nu``."""
    _check_sign(s)
    fock.dimension(nu)
    if not mean_n >= 0:
        raise ValueError(f"mean photon number must be >= 0, got {mean_n}")
    x = mean_n / (1.0 + mean_n)
    p = x ** np.arange(nu + 1, dtype=float)
    log.debug("thermal mean_n=%s nu=%d: truncation tail %.3e", mean_n, nu, x ** (nu + 1))
    p /= p.sum()
    return DensityMatrix(np.kron(np.diag(p), _atomic_projector(s)).astype(complex), check=False)


@dataclass(frozen=True)
class ObservableSet:
    trace: complex
    hs_norm: float
    purity: float
    min_eigenvalue: float
    inversion: float
    photon_number: float

    def row(self) -> tuple:
        return (
            self.trace.real,
            self.trace.imag,
            self.hs_norm,
            self.purity,
            self.min_eigenvalue,
            self.inversion,
            self.photon_number,
        )


def observables(rho: DensityMatrix) -> ObservableSet:
    x = rho.data
    diag = np.diag(x).real
    photons = np.repeat(np.arange(rho.nu + 1, dtype=float), 2)
    signs = np.tile([1.0, -1.0], rho.nu + 1)
    norm = rho.hs_norm()
    return ObservableSet(
        trace=rho.trace(),
        hs_norm=norm,
        purity=norm**2,
        min_eigenvalue=rho.min_eigenvalue(),
        inversion=float(np.dot(signs, diag)),
        photon_number=float(np.dot(photons, diag)),
    )
