"""Time integration of the truncated master equation.

Explicit Runge-Kutta on the d x d matrix ODE ``rho' = A(t) rho``. After every
accepted step ``rho`` is replaced by ``(rho + rho^dag)/2`` and the defect that
was removed is recorded. Negative eigenvalues are recorded, never clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .density import DensityMatrix, ObservableSet, hermiticity_defect, observables
from .lindblad import ModelSpec, compile_model

METHODS = ("rk4", "rk45", "unitary_exact", "piecewise_const")


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (reached t={t:.17g})")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    t_max: float
    method: str = "rk4"
    dt: float | None = None  # None: 1e-3 * 2*pi/omega_c
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    record_every: int = 1
    epsilon: float | None = None
    store_snapshots: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator method {self.method!r}; expected one of {', '.join(METHODS)}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.dt is not None and not (math.isfinite(self.dt) and 0 < self.dt <= self.t_max):
            raise ValueError(f"dt must satisfy 0 < dt <= t_max, got {self.dt}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be > 0")
        if isinstance(self.record_every, bool) or int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be an integer >= 1, got {self.record_every}")
        if self.method == "piecewise_const" and self.epsilon is None:
            raise ValueError("piecewise_const needs epsilon")
        if self.epsilon is not None and not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")

    def step(self, model: ModelSpec) -> float:
        return self.dt if self.dt is not None else 1e-3 * 2 * math.pi / model.omega_c


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    observables: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    checkpoints: dict = field(default_factory=dict)
    max_hermiticity_defect: float = 0.0
    min_eigenvalue_seen: float = math.inf
    hs_norm_max_ratio: float = 0.0
    first_norm_exceedance: float | None = None
    max_trace_drift: float = 0.0
    steps: int = 0
    final: DensityMatrix | None = None


class _Recorder:
    def __init__(self, rho0: np.ndarray, cfg: IntegratorConfig, checkpoints, norm_slack: float = 1e-6):
        self.rec = TrajectoryRecord()
        self.cfg = cfg
        self.norm0 = float(np.linalg.norm(rho0))
        self.trace0 = complex(np.trace(rho0))
        self.checkpoints = set(checkpoints)
        self.norm_slack = norm_slack
        self.last_recorded = None

    def _observe(self, t: float, rho: np.ndarray):
        dm = DensityMatrix(rho, check=False)
        obs = observables(dm)
        self.rec.times.append(t)
        self.rec.observables.append(obs)
        self.rec.min_eigenvalue_seen = min(self.rec.min_eigenvalue_seen, obs.min_eigenvalue)
        if self.cfg.store_snapshots:
            self.rec.snapshots.append((t, dm))
        self.last_recorded = t

    def start(self, t: float, rho: np.ndarray):
        self.rec.hs_norm_max_ratio = 1.0 if self.norm0 > 0 else 0.0
        self._observe(t, rho)
        if t in self.checkpoints:
            self.rec.checkpoints[t] = DensityMatrix(rho.copy(), check=False)

    def step(self, t: float, rho: np.ndarray, defect: float, at_breakpoint: bool):
        rec = self.rec
        rec.steps += 1
        rec.max_hermiticity_defect = max(rec.max_hermiticity_defect, defect)
        rec.max_trace_drift = max(rec.max_trace_drift, abs(complex(np.trace(rho)) - self.trace0))
        if self.norm0 > 0:
            ratio = float(np.linalg.norm(rho)) / self.norm0
            if ratio > rec.hs_norm_max_ratio:
                rec.hs_norm_max_ratio = ratio
            if ratio > 1 + self.norm_slack and rec.first_norm_exceedance is None:
                rec.first_norm_exceedance = t
        if rec.steps % self.cfg.record_every == 0:
            self._observe(t, rho)
        if at_breakpoint and t in self.checkpoints:
            rec.checkpoints[t] = DensityMatrix(rho.copy(), check=False)

    def finish(self, t: float, rho: np.ndarray) -> TrajectoryRecord:
        if self.last_recorded != t:
            self._observe(t, rho)
        self.rec.final = DensityMatrix(rho.copy(), check=False)
        return self.rec


def _hermitize(rho: np.ndarray, t: float):
    if not np.all(np.isfinite(rho)):
        raise IntegrationError("non-finite entries in rho", t)
    defect = hermiticity_defect(rho)
    return 0.5 * (rho + rho.conj().T), defect


def _rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _breakpoints(t_max: float, extra) -> list:
    pts = sorted({float(t) for t in extra if 0.0 < t < t_max} | {float(t_max)})
    return pts


def _rk4_segments(rhs_for, rho, bounds, dt, recorder):
    """Fixed-step RK4 over consecutive segments; ``rhs_for(t0)`` gives the rhs on [t0, t1]."""
    t0 = 0.0
    for t1 in bounds:
        f = rhs_for(t0)
        n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
        h = (t1 - t0) / n
        for k in range(n):
            t = t0 + k * h
            rho = _rk4_step(f, t, rho, h)
            t_new = t1 if k == n - 1 else t0 + (k + 1) * h
            rho, defect = _hermitize(rho, t_new)
            recorder.step(t_new, rho, defect, k == n - 1)
        t0 = t1
    return rho


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def _dp_step(f, t, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y.copy()
        for a, k in zip(_DP_A[i], ks):
            if a:
                yi += (h * a) * k
        ks.append(f(t + _DP_C[i] * h, yi))
    y_new = y.copy()
    for b, k in zip(_DP_B, ks):
        if b:
            y_new += (h * b) * k
    err = np.zeros_like(y)
    for e, k in zip(_DP_E, ks):
        if e:
            err += (h * e) * k
    return y_new, err, ks[-1]


def _rk45_segments(f, rho, bounds, cfg, h0, recorder):
    t = 0.0
    h = h0
    k1 = f(t, rho)
    for t1 in bounds:
        while t < t1:
            last = False
            if t + h >= t1 or (t1 - (t + h)) < 1e-12 * max(1.0, t1):
                h = t1 - t
                last = True
            y_new, err, k_last = _dp_step(f, t, rho, h, k1)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(rho), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))
            if not math.isfinite(err_norm):
                raise IntegrationError("non-finite error estimate in rk45", t)
            if err_norm <= 1.0:
                t = t1 if last else t + h
                rho, defect = _hermitize(y_new, t)
                recorder.step(t, rho, defect, last)
                k1 = f(t, rho)
                factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            else:
                factor = max(0.2, 0.9 * err_norm ** -0.2)
            h *= factor
            if h < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError("rk45 step size underflow", t)
    return rho


def _initial_array(model: ModelSpec, rho0: DensityMatrix) -> np.ndarray:
    if rho0.nu != model.nu:
        raise ValueError(f"initial state level {rho0.nu} does not match model level {model.nu}")
    return np.array(rho0.data, dtype=complex)


def integrate(model: ModelSpec, rho0: DensityMatrix, cfg: IntegratorConfig, checkpoints=()) -> TrajectoryRecord:
    """Integrate from ``rho0`` at t=0 to ``cfg.t_max`` with ``cfg.method``.

    ``checkpoints`` are extra times at which the full state is kept in
    ``record.checkpoints``; fixed-step methods land on them exactly.
    """
    if cfg.method == "piecewise_const":
        return integrate_piecewise_const(model, rho0, cfg, checkpoints)
    rho = _initial_array(model, rho0)
    gen = compile_model(model)
    bounds = _breakpoints(cfg.t_max, checkpoints)
    recorder = _Recorder(rho, cfg, checkpoints)
    recorder.start(0.0, rho)
    if cfg.method == "rk4":
        rho = _rk4_segments(lambda t0: gen.apply, rho, bounds, cfg.step(model), recorder)
    elif cfg.method == "rk45":
        rho = _rk45_segments(gen.apply, rho, bounds, cfg, cfg.step(model), recorder)
    else:
        rho = _unitary_segments(model, rho, bounds, cfg.step(model), recorder)
    return recorder.finish(cfg.t_max, rho)


def integrate_piecewise_const(
    model: ModelSpec, rho0: DensityMatrix, cfg: IntegratorConfig, checkpoints=()
) -> TrajectoryRecord:
    """Coefficients frozen at ``t = eps*n`` on each window ``[eps*n, eps*(n+1))``, RK4 substeps inside.

    All time dependence of the generator sits in the coefficient phases, so
    freezing the coefficients is the same as evaluating the generator at the
    window start.
    """
    if cfg.epsilon is None:
        raise ValueError("piecewise-constant integration needs cfg.epsilon")
    rho = _initial_array(model, rho0)
    gen = compile_model(model)
    eps = cfg.epsilon
    n_windows = max(1, math.ceil(cfg.t_max / eps - 1e-9))
    edges = [min(k * eps, cfg.t_max) for k in range(1, n_windows + 1)]
    bounds = _breakpoints(cfg.t_max, list(checkpoints) + edges)
    recorder = _Recorder(rho, cfg, checkpoints)
    recorder.start(0.0, rho)

    def rhs_for(t0):
        window_start = math.floor(t0 / eps + 1e-9) * eps
        return lambda t, y: gen.apply(window_start, y)

    rho = _rk4_segments(rhs_for, rho, bounds, cfg.step(model), recorder)
    return recorder.finish(cfg.t_max, rho)


@lru_cache(maxsize=16)
def _spectral(model: ModelSpec):
    h = compile_model(model).hamiltonian(0.0)
    return np.linalg.eigh(h)


def _check_unitary_model(model: ModelSpec):
    if model.gamma != 0.0:
        raise ValueError(f"unitary oracle needs gamma = 0, got {model.gamma}")
    if not model.pump.is_time_constant:
        raise ValueError("unitary oracle needs a time-constant pump")


def unitary_oracle(model: ModelSpec, rho0: DensityMatrix, t: float) -> DensityMatrix:
    """``exp(-iHt) rho0 exp(iHt)`` through one Hermitian eigendecomposition of H."""
    _check_unitary_model(model)
    rho = _initial_array(model, rho0)
    e, u = _spectral(model)
    ut = (u * np.exp(-1j * e * t)) @ u.conj().T
    out = ut @ rho @ ut.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


def _unitary_segments(model, rho, bounds, dt, recorder):
    _check_unitary_model(model)
    e, u = _spectral(model)
    rho_e = u.conj().T @ rho @ u
    gap = e[:, None] - e[None, :]
    t0 = 0.0
    for t1 in bounds:
        n = max(1, math.ceil((t1 - t0) / dt - 1e-9))
        h = (t1 - t0) / n
        for k in range(n):
            t = t1 if k == n - 1 else t0 + (k + 1) * h
            out = u @ (rho_e * np.exp(-1j * gap * t)) @ u.conj().T
            out, defect = _hermitize(out, t)
            recorder.step(t, out, defect, k == n - 1)
        t0 = t1
        rho = out
    return rho


def observable_series(record: TrajectoryRecord, name: str) -> np.ndarray:
    return np.array([getattr(o, name) for o in record.observables])


__all__ = [
    "IntegrationError",
    "IntegratorConfig",
    "ObservableSet",
    "TrajectoryRecord",
    "integrate",
    "integrate_piecewise_const",
    "observable_series",
    "unitary_oracle",
]
