"""JSON run configuration: parsing, validation and canonical serialization.

Every validation error names the JSON path of the offending field, e.g.
``integrator.method`` or ``model.dissipators[1].terms[0].lp``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import genspec
from .density import DensityMatrix, embed, state_coherent, state_fock, state_thermal, truncate
from .evolve import METHODS, IntegratorConfig
from .genspec import PolynomialOperatorSpec, PolyTerm, TrigCoefficient, TrigTerm
from .lindblad import ModelSpec, slowest_period
from .serial import decode_complex, decode_matrix, dumps, encode_complex, encode_matrix

MODES = ("evolve", "sweep", "check")
CLAIMS = ("dissipator_sign", "k_orthogonality", "trace_annihilation", "contraction", "trace_and_positivity")
DEFAULT_ALLOW = ("dissipator_sign",)
DEFAULT_OUTPUTS = {
    "observables_csv": "observables.csv",
    "snapshots_json": "snapshots.json",
    "summary_json": "summary.json",
    "sweep_csv": "sweep.csv",
    "sweep_json": "sweep_summary.json",
    "report_json": "report.json",
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, report: dict | None = None):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.report = report

    def to_dict(self) -> dict:
        out = {"error": "config", "path": self.path, "message": str(self)}
        if self.report is not None:
            out["hermiticity_report"] = self.report
        return out


def _get(obj: dict, key: str, path: str, kind=None, default=...):
    if key not in obj:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    v = obj[key]
    where = f"{path}.{key}" if path else key
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(where, f"expected a finite number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(where, f"expected an integer, got {v!r}")
        return v
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(where, f"expected {kind.__name__}, got {type(v).__name__}")
    return v


def _check_keys(obj: dict, allowed, path: str):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _wrap(path: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_poly(obj, path: str) -> PolynomialOperatorSpec:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object with 'preset' or 'terms'")
    if "preset" in obj:
        _check_keys(obj, ("preset", "omega_p"), path)
        name = _get(obj, "preset", path, str)
        if name not in genspec.PRESETS:
            raise ConfigError(f"{path}.preset", f"unknown preset {name!r}")
        omega_p = _get(obj, "omega_p", path, float, 1.0)
        return genspec.preset(name, omega_p=omega_p)
    _check_keys(obj, ("terms",), path)
    terms = _get(obj, "terms", path, list)
    out = []
    for i, t in enumerate(terms):
        tp = f"{path}.terms[{i}]"
        if not isinstance(t, dict):
            raise ConfigError(tp, "expected an object")
        _check_keys(t, ("l", "lp", "coeff"), tp)
        l = _get(t, "l", tp, int)
        lp = _get(t, "lp", tp, int)
        for name, v in (("l", l), ("lp", lp)):
            if v < 0:
                raise ConfigError(f"{tp}.{name}", f"power must be >= 0, got {v}")
        coeff = _get(t, "coeff", tp, list)
        if not coeff:
            raise ConfigError(f"{tp}.coeff", "needs at least one (C, omega) pair")
        parts = []
        for j, c in enumerate(coeff):
            cp = f"{tp}.coeff[{j}]"
            if not isinstance(c, dict):
                raise ConfigError(cp, "expected an object with C and omega")
            _check_keys(c, ("C", "omega"), cp)
            m = _wrap(f"{cp}.C", decode_matrix, _get(c, "C", cp), f"{cp}.C")
            if m.shape != (2, 2):
                raise ConfigError(f"{cp}.C", f"expected a 2x2 matrix, got shape {m.shape}")
            parts.append(_wrap(cp, TrigTerm, m, _get(c, "omega", cp, float, 0.0)))
        out.append(PolyTerm(l, lp, TrigCoefficient(tuple(parts))))
    return PolynomialOperatorSpec(tuple(out))


def poly_to_dict(s: PolynomialOperatorSpec) -> dict:
    return {
        "terms": [
            {
                "l": t.l,
                "lp": t.lp,
                "coeff": [{"C": encode_matrix(tt.array), "omega": tt.omega} for tt in t.coeff.terms],
            }
            for t in s.terms
        ]
    }


def parse_model(obj, path: str, t_max: float) -> ModelSpec:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _check_keys(obj, ("omega_c", "omega_a", "p", "gamma", "nu", "pump", "dissipators"), path)
    vals = {k: _get(obj, k, path, float) for k in ("omega_c", "omega_a", "p", "gamma")}
    for k in ("omega_c", "omega_a"):
        if vals[k] <= 0:
            raise ConfigError(f"{path}.{k}", f"must be > 0, got {vals[k]}")
    if vals["gamma"] < 0:
        raise ConfigError(f"{path}.gamma", f"must be >= 0, got {vals['gamma']}")
    nu = _get(obj, "nu", path, int)
    if nu < 1:
        raise ConfigError(f"{path}.nu", f"must be >= 1, got {nu}")
    pump = parse_poly(_get(obj, "pump", path, dict, {"terms": []}), f"{path}.pump")
    diss = _get(obj, "dissipators", path, list, [])
    dissipators = tuple(parse_poly(d, f"{path}.dissipators[{i}]") for i, d in enumerate(diss))
    times = genspec.default_sample_times(t_max) + genspec.default_sample_times(slowest_period(pump.frequencies()))
    report = genspec.validate_pump_hermitian(pump, nu, times)
    if not report.ok:
        raise ConfigError(f"{path}.pump", report.message(), report.to_dict())
    return ModelSpec(vals["omega_c"], vals["omega_a"], vals["p"], vals["gamma"], pump, dissipators, nu, validate=False)


def model_to_dict(m: ModelSpec) -> dict:
    return {
        "omega_c": m.omega_c,
        "omega_a": m.omega_a,
        "p": m.p,
        "gamma": m.gamma,
        "nu": m.nu,
        "pump": poly_to_dict(m.pump),
        "dissipators": [poly_to_dict(v) for v in m.dissipators],
    }


@dataclass(frozen=True)
class InitialState:
    kind: str
    n: int = 0
    s: str = "+"
    alpha: complex = 0j
    mean_n: float = 0.0
    matrix: tuple | None = None  # nested lists of complex, for kind == "matrix"

    def build(self, nu: int) -> DensityMatrix:
        if self.kind == "fock":
            return state_fock(self.n, self.s, nu)
        if self.kind == "coherent":
            return state_coherent(self.alpha, self.s, nu)
        if self.kind == "thermal":
            return state_thermal(self.mean_n, self.s, nu)
        rho = DensityMatrix(np.array(self.matrix, dtype=complex))
        return embed(rho, nu) if rho.nu <= nu else truncate(rho, nu)

    def to_dict(self) -> dict:
        if self.kind == "fock":
            return {"kind": "fock", "n": self.n, "s": self.s}
        if self.kind == "coherent":
            return {"kind": "coherent", "alpha": encode_complex(self.alpha), "s": self.s}
        if self.kind == "thermal":
            return {"kind": "thermal", "mean_n": self.mean_n, "s": self.s}
        return {"kind": "matrix", "entries": encode_matrix(np.array(self.matrix, dtype=complex))}


def parse_initial(obj, path: str, nu: int) -> InitialState:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    kind = _get(obj, "kind", path, str)
    if kind == "matrix":
        _check_keys(obj, ("kind", "entries"), path)
        m = _wrap(f"{path}.entries", decode_matrix, _get(obj, "entries", path), f"{path}.entries")
        _wrap(f"{path}.entries", DensityMatrix, m)
        state = InitialState("matrix", matrix=tuple(tuple(complex(z) for z in row) for row in m))
    else:
        allowed = {"fock": ("n",), "coherent": ("alpha",), "thermal": ("mean_n",)}
        if kind not in allowed:
            raise ConfigError(f"{path}.kind", f"unknown initial state kind {kind!r}")
        _check_keys(obj, ("kind", "s") + allowed[kind], path)
        s = _get(obj, "s", path, str, "+")
        if s not in ("+", "-"):
            raise ConfigError(f"{path}.s", f"atomic level must be '+' or '-', got {s!r}")
        if kind == "fock":
            n = _get(obj, "n", path, int)
            if not 0 <= n <= nu:
                raise ConfigError(f"{path}.n", f"photon number must be in 0..{nu}, got {n}")
            state = InitialState("fock", n=n, s=s)
        elif kind == "coherent":
            state = InitialState("coherent", s=s, alpha=_wrap(f"{path}.alpha", decode_complex, _get(obj, "alpha", path), f"{path}.alpha"))
        else:
            mean_n = _get(obj, "mean_n", path, float)
            if mean_n < 0:
                raise ConfigError(f"{path}.mean_n", f"must be >= 0, got {mean_n}")
            state = InitialState("thermal", s=s, mean_n=mean_n)
    _wrap(path, state.build, nu)
    return state


def parse_integrator(obj, path: str) -> IntegratorConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    fields_ = ("method", "dt", "t_max", "rel_tol", "abs_tol", "record_every", "epsilon", "store_snapshots")
    _check_keys(obj, fields_, path)
    method = _get(obj, "method", path, str, "rk4")
    if method not in METHODS:
        raise ConfigError(f"{path}.method", f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    dt = obj.get("dt")
    dt = None if dt is None else _get(obj, "dt", path, float)
    eps = obj.get("epsilon")
    eps = None if eps is None else _get(obj, "epsilon", path, float)
    kwargs = dict(
        t_max=_get(obj, "t_max", path, float),
        method=method,
        dt=dt,
        rel_tol=_get(obj, "rel_tol", path, float, 1e-8),
        abs_tol=_get(obj, "abs_tol", path, float, 1e-10),
        record_every=_get(obj, "record_every", path, int, 1),
        epsilon=eps,
        store_snapshots=_get(obj, "store_snapshots", path, bool, False),
    )
    try:
        return IntegratorConfig(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        for name in fields_:
            if msg.startswith(name) or f" {name} " in f" {msg} ":
                raise ConfigError(f"{path}.{name}", msg) from exc
        raise ConfigError(path, msg) from exc


def integrator_to_dict(c: IntegratorConfig) -> dict:
    return {
        "method": c.method,
        "dt": c.dt,
        "t_max": c.t_max,
        "rel_tol": c.rel_tol,
        "abs_tol": c.abs_tol,
        "record_every": c.record_every,
        "epsilon": c.epsilon,
        "store_snapshots": c.store_snapshots,
    }


@dataclass(frozen=True)
class SweepSettings:
    levels: tuple
    probe_entries: tuple
    probe_times: tuple
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "probe_entries": [list(e) for e in self.probe_entries],
            "probe_times": list(self.probe_times),
            "workers": self.workers,
        }


def parse_sweep(obj, path: str, t_max: float) -> SweepSettings:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _check_keys(obj, ("levels", "probe_entries", "probe_times", "workers"), path)
    levels = _get(obj, "levels", path, list)
    for i, nu in enumerate(levels):
        if isinstance(nu, bool) or not isinstance(nu, int) or nu < 1:
            raise ConfigError(f"{path}.levels[{i}]", f"expected an integer >= 1, got {nu!r}")
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"{path}.levels", "must be nonempty and strictly increasing")
    entries = []
    for i, e in enumerate(_get(obj, "probe_entries", path, list)):
        ep = f"{path}.probe_entries[{i}]"
        if not (isinstance(e, list) and len(e) == 4):
            raise ConfigError(ep, "expected [n, s, n2, s2]")
        n, s, n2, s2 = e
        for v in (n, n2):
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v <= levels[0]:
                raise ConfigError(ep, f"photon numbers must be integers in 0..{levels[0]} (smallest level)")
        for v in (s, s2):
            if v not in ("+", "-"):
                raise ConfigError(ep, f"atomic level must be '+' or '-', got {v!r}")
        entries.append((n, s, n2, s2))
    if not entries:
        raise ConfigError(f"{path}.probe_entries", "need at least one probe entry")
    times = []
    for i, t in enumerate(_get(obj, "probe_times", path, list)):
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 <= t <= t_max:
            raise ConfigError(f"{path}.probe_times[{i}]", f"must be a number in [0, {t_max}]")
        times.append(float(t))
    if not times:
        raise ConfigError(f"{path}.probe_times", "need at least one probe time")
    workers = _get(obj, "workers", path, int, 1)
    if workers < 1:
        raise ConfigError(f"{path}.workers", "must be >= 1")
    return SweepSettings(tuple(levels), tuple(entries), tuple(times), workers)


@dataclass(frozen=True)
class CheckSettings:
    claims: tuple = CLAIMS
    allow_violated: tuple = DEFAULT_ALLOW
    trials: int = 200

    def to_dict(self) -> dict:
        return {"claims": list(self.claims), "allow_violated": list(self.allow_violated), "trials": self.trials}


def parse_check(obj, path: str) -> CheckSettings:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _check_keys(obj, ("claims", "allow_violated", "trials"), path)
    claims = _get(obj, "claims", path, list, list(CLAIMS))
    allow = _get(obj, "allow_violated", path, list, list(DEFAULT_ALLOW))
    for key, names in (("claims", claims), ("allow_violated", allow)):
        for i, c in enumerate(names):
            if c not in CLAIMS:
                raise ConfigError(f"{path}.{key}[{i}]", f"unknown claim {c!r}")
    trials = _get(obj, "trials", path, int, 200)
    if trials < 1:
        raise ConfigError(f"{path}.trials", "must be >= 1")
    return CheckSettings(tuple(claims), tuple(allow), trials)


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    initial_state: InitialState
    integrator: IntegratorConfig
    mode: str = "evolve"
    sweep: SweepSettings | None = None
    check: CheckSettings = field(default_factory=CheckSettings)
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.model),
            "initial_state": self.initial_state.to_dict(),
            "integrator": integrator_to_dict(self.integrator),
            "mode": self.mode,
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "check": self.check.to_dict(),
            "outputs": dict(self.outputs),
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return dumps(self.to_dict())


def config_from_dict(obj, mode: str | None = None, seed: int | None = None) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("$", "top level must be a JSON object")
    _check_keys(obj, ("model", "initial_state", "integrator", "mode", "sweep", "check", "outputs", "seed"), "")
    integrator = parse_integrator(_get(obj, "integrator", ""), "integrator")
    model = parse_model(_get(obj, "model", ""), "model", integrator.t_max)
    initial = parse_initial(_get(obj, "initial_state", ""), "initial_state", model.nu)
    mode = mode if mode is not None else _get(obj, "mode", "", str, "evolve")
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    sweep = obj.get("sweep")
    sweep = None if sweep is None else parse_sweep(sweep, "sweep", integrator.t_max)
    if mode == "sweep" and sweep is None:
        raise ConfigError("sweep", "sweep mode needs a sweep block")
    check_obj = obj.get("check")
    check = CheckSettings() if check_obj is None else parse_check(check_obj, "check")
    outputs = dict(DEFAULT_OUTPUTS)
    out_obj = _get(obj, "outputs", "", dict, {})
    _check_keys(out_obj, DEFAULT_OUTPUTS, "outputs")
    for k, v in out_obj.items():
        if not isinstance(v, str) or not v:
            raise ConfigError(f"outputs.{k}", "expected a nonempty relative path")
        outputs[k] = v
    if seed is None:
        seed = _get(obj, "seed", "", int, 0)
    if seed < 0:
        raise ConfigError("seed", "must be an unsigned integer")
    return RunConfig(model, initial, integrator, mode, sweep, check, outputs, seed)


def parse_config(path, mode: str | None = None, seed: int | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("$", f"cannot read config {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError("$", f"config is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"malformed JSON: {exc}") from exc
    return config_from_dict(obj, mode=mode, seed=seed)
