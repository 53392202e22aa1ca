"""Randomized and targeted checks of structural claims about the generator.

Each check returns a :class:`ClaimReport`. A violated claim carries a
witness from which the offending value can be recomputed with
:func:`replay`; a false claim therefore shows up as a pinned witness, not
as a crash.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fock
from .density import PSD_TOL_TRAJECTORY, DensityMatrix
from .evolve import IntegratorConfig, integrate
from .genspec import PolynomialOperatorSpec, evaluate
from .lindblad import (
    ModelSpec,
    compile_model,
    quadratic_form_D,
    quadratic_form_K,
    slowest_period,
)
from .serial import decode_matrix, encode_matrix

SIGN_TOL = 1e-10
IDENTITY_TOL = 1e-12
NORM_SLACK = 1e-6
TRACE_TOL = 1e-8
HERMITIAN_STEP_TOL = 1e-10  # times d

HOLDS = "holds_within_tol"
VIOLATED = "violated"


@dataclass
class ClaimReport:
    claim: str
    trials: int
    max_violation: float
    verdict: str
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.witness is not None) != (self.verdict == VIOLATED):
            raise ValueError("a witness is present exactly when the claim is violated")

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self) -> dict:
        out = {
            "claim": self.claim,
            "trials": self.trials,
            "max_violation": self.max_violation,
            "verdict": self.verdict,
            "details": self.details,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (m + m.conj().T)


def targeted_states(nu: int, rng: np.random.Generator) -> list:
    """Fixed corpus: a diagonal two-level state, maximally mixed, random rank-1, random diagonal."""
    d = fock.dimension(nu)
    two_level = np.zeros((d, d), dtype=complex)
    two_level[fock.flat_index(0, "+", nu), fock.flat_index(0, "+", nu)] = 2.0
    two_level[fock.flat_index(1, "+", nu), fock.flat_index(1, "+", nu)] = 1.0
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return [
        ("diag(2,1,0,...)", two_level),
        ("maximally_mixed", np.eye(d, dtype=complex) / d),
        ("random_rank1", np.outer(psi, psi.conj())),
        ("random_diagonal", np.diag(rng.random(d)).astype(complex)),
    ]


def _spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def check_dissipator_sign(
    v_spec: PolynomialOperatorSpec, nu: int, trials: int, seed: int, t: float = 0.0
) -> ClaimReport:
    """Is ``tr(rho D rho) <= 0`` for the dissipator built from ``v_spec``?

    Each sample is scored by ``tr(rho D rho) / (||rho||_HS^2 ||V||^2)``; the
    claim holds if every score is ``<= 1e-10``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    v = evaluate(v_spec, nu, t)
    vnorm2 = _spectral_norm(v) ** 2
    samples = targeted_states(nu, rng)
    samples += [(f"random[{i}]", random_hermitian(rng, v.shape[0])) for i in range(trials)]
    worst = (-math.inf, None, None, None)
    targeted = {}
    positive = 0
    for label, rho in samples:
        value = quadratic_form_D(v, rho)
        positive += value > 0
        scale = float(np.linalg.norm(rho)) ** 2 * vnorm2
        score = value / scale if scale > 0 else 0.0
        if not label.startswith("random["):
            targeted[label] = value
        if score > worst[0]:
            worst = (score, label, rho, value)
    score, label, rho, value = worst
    details = {"nu": nu, "t": t, "targeted_values": targeted, "positive_samples": int(positive)}
    if score > SIGN_TOL:
        witness = {"label": label, "rho": encode_matrix(rho), "V": encode_matrix(v), "t": t, "value": value}
        return ClaimReport("dissipator_sign", len(samples), score, VIOLATED, witness, details)
    return ClaimReport("dissipator_sign", len(samples), max(score, 0.0), HOLDS, None, details)


def check_k_orthogonality(model: ModelSpec, trials: int, seed: int) -> ClaimReport:
    """``|tr(rho (-i[H(t), rho]))| <= 1e-12 ||rho||^2 ||H(t)||`` on random Hermitian rho and times."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    gen = compile_model(model)
    period = slowest_period(model.frequencies())
    worst = (0.0, None, None, 0.0)
    samples = [("H(0)", 0.0, gen.hamiltonian(0.0))]
    for i in range(trials):
        samples.append((f"random[{i}]", float(rng.uniform(0, period)), random_hermitian(rng, model.dim)))
    for label, t, rho in samples:
        value = quadratic_form_K(model, t, rho)
        scale = float(np.linalg.norm(rho)) ** 2 * _spectral_norm(gen.hamiltonian(t))
        score = abs(value) / scale if scale > 0 else 0.0
        if score > worst[0]:
            worst = (score, label, (t, rho), value)
    score, label, data, value = worst
    details = {"nu": model.nu}
    if score > IDENTITY_TOL:
        t, rho = data
        witness = {"label": label, "rho": encode_matrix(rho), "t": t, "value": value}
        return ClaimReport("k_orthogonality", len(samples), score, VIOLATED, witness, details)
    return ClaimReport("k_orthogonality", len(samples), score, HOLDS, None, details)


def generator_scale(model: ModelSpec, t: float) -> float:
    """Magnitude of the generator at ``t``: ``||H(t)|| + 2 gamma sum_j ||V_j(t)||^2``."""
    gen = compile_model(model)
    s = _spectral_norm(gen.hamiltonian(t))
    s += 2 * model.gamma * sum(_spectral_norm(v) ** 2 for v in gen.dissipator_ops(t))
    return s


def check_trace_annihilation(model: ModelSpec, trials: int, seed: int) -> ClaimReport:
    """``|tr A(t) rho| <= 1e-12 ||rho||_HS * generator_scale`` on random Hermitian rho and times."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    gen = compile_model(model)
    period = slowest_period(model.frequencies())
    worst = (0.0, None, None, 0.0)
    for i in range(trials):
        t = float(rng.uniform(0, period))
        rho = random_hermitian(rng, model.dim)
        value = complex(np.trace(gen.apply(t, rho)))
        scale = float(np.linalg.norm(rho)) * generator_scale(model, t)
        score = abs(value) / scale if scale > 0 else 0.0
        if score > worst[0]:
            worst = (score, f"random[{i}]", (t, rho), value)
    score, label, data, value = worst
    if score > IDENTITY_TOL:
        t, rho = data
        witness = {"label": label, "rho": encode_matrix(rho), "t": t, "value": [value.real, value.imag]}
        return ClaimReport("trace_annihilation", trials, score, VIOLATED, witness, {"nu": model.nu})
    return ClaimReport("trace_annihilation", trials, score, HOLDS, None, {"nu": model.nu})


def _labelled(states) -> list:
    out = []
    for i, s in enumerate(states):
        if isinstance(s, tuple):
            out.append(s)
        else:
            out.append((f"state[{i}]", s))
    if not out:
        raise ValueError("states must be nonempty")
    return out


def check_contraction(model: ModelSpec, states: Sequence, cfg: IntegratorConfig) -> ClaimReport:
    """Does ``||rho(t)||_HS <= ||rho(0)||_HS`` hold along the trajectories (slack 1e-6)?"""
    worst = None
    per_state = {}
    for label, rho0 in _labelled(states):
        rec = integrate(model, rho0, cfg)
        per_state[label] = rec.hs_norm_max_ratio
        if worst is None or rec.hs_norm_max_ratio > worst[0]:
            worst = (rec.hs_norm_max_ratio, label, rho0, rec.first_norm_exceedance)
    ratio, label, rho0, t_first = worst
    details = {"max_ratio_per_state": per_state}
    if ratio > 1 + NORM_SLACK:
        witness = {"label": label, "rho0": encode_matrix(rho0.data), "ratio": ratio, "t_first_exceedance": t_first}
        return ClaimReport("contraction", len(per_state), ratio - 1.0, VIOLATED, witness, details)
    return ClaimReport("contraction", len(per_state), max(ratio - 1.0, 0.0), HOLDS, None, details)


def check_trace_and_positivity(model: ModelSpec, states: Sequence, cfg: IntegratorConfig) -> ClaimReport:
    """Trace drift <= 1e-8, min eigenvalue >= -1e-8, per-step Hermiticity defect <= 1e-10 d.

    ``max_violation`` is the largest of the three measures divided by its
    tolerance, so values above 1 mean violated.
    """
    herm_tol = HERMITIAN_STEP_TOL * model.dim
    worst = None
    per_state = {}
    for label, rho0 in _labelled(states):
        rec = integrate(model, rho0, cfg)
        measures = {
            "trace_drift": rec.max_trace_drift,
            "negative_eigenvalue": max(0.0, -rec.min_eigenvalue_seen),
            "hermiticity_defect": rec.max_hermiticity_defect,
        }
        per_state[label] = dict(measures, min_eigenvalue=rec.min_eigenvalue_seen)
        scores = {
            "trace_drift": measures["trace_drift"] / TRACE_TOL,
            "negative_eigenvalue": measures["negative_eigenvalue"] / PSD_TOL_TRAJECTORY,
            "hermiticity_defect": measures["hermiticity_defect"] / herm_tol,
        }
        which = max(scores, key=scores.get)
        if worst is None or scores[which] > worst[0]:
            worst = (scores[which], label, rho0, which, measures[which])
    score, label, rho0, which, measure = worst
    details = {"per_state": per_state}
    if score > 1.0:
        witness = {"label": label, "rho0": encode_matrix(rho0.data), "failed": which, "value": measure}
        return ClaimReport("trace_and_positivity", len(per_state), score, VIOLATED, witness, details)
    return ClaimReport("trace_and_positivity", len(per_state), score, HOLDS, None, details)


def replay(report: ClaimReport, model: ModelSpec | None = None, cfg: IntegratorConfig | None = None) -> float:
    """Recompute the witness value of a violated report from the witness alone (plus model/cfg for dynamics)."""
    w = report.witness
    if w is None:
        raise ValueError(f"claim {report.claim} has no witness")
    if report.claim == "dissipator_sign":
        return quadratic_form_D(decode_matrix(w["V"]), decode_matrix(w["rho"]))
    if report.claim == "k_orthogonality":
        return quadratic_form_K(model, w["t"], decode_matrix(w["rho"]))
    if report.claim == "trace_annihilation":
        return abs(complex(np.trace(compile_model(model).apply(w["t"], decode_matrix(w["rho"])))))
    rho0 = DensityMatrix(decode_matrix(w["rho0"]))
    rec = integrate(model, rho0, cfg)
    if report.claim == "contraction":
        return rec.hs_norm_max_ratio
    if report.claim == "trace_and_positivity":
        return {
            "trace_drift": rec.max_trace_drift,
            "negative_eigenvalue": max(0.0, -rec.min_eigenvalue_seen),
            "hermiticity_defect": rec.max_hermiticity_defect,
        }[w["failed"]]
    raise ValueError(f"unknown claim {report.claim!r}")
