"""Truncation-convergence diagnostics across increasing levels ``nu``.

Every level starts from the same reference state, built at
``max(levels) + 16`` and cut down with :func:`jcsim.density.truncate`, and
selected matrix entries are compared between consecutive levels. Decaying
differences only suggest convergence of the full sequence; the verdict is
a heuristic and is labelled as such.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from . import fock
from .density import DensityMatrix, truncate
from .evolve import IntegratorConfig, integrate
from .lindblad import ModelSpec

THRESHOLD = 1e-6
REFERENCE_MARGIN = 16
VERDICT_NOTE = "heuristic: decaying successive differences, not a proof of convergence"


class SweepError(RuntimeError):
    def __init__(self, level: int, cause: Exception):
        super().__init__(f"level nu={level}: {cause}")
        self.level = level
        self.cause = cause


@dataclass(frozen=True)
class ProbeEntry:
    n: int
    s: str
    n2: int
    s2: str

    def label(self) -> str:
        return f"{self.n}{self.s};{self.n2}{self.s2}"


@dataclass(frozen=True)
class SweepPlan:
    model: ModelSpec  # its nu is ignored
    levels: tuple
    probe_entries: tuple
    probe_times: tuple
    integrator: IntegratorConfig

    def __post_init__(self):
        levels = tuple(int(x) for x in self.levels)
        if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"levels must be nonempty and strictly increasing, got {levels}")
        for nu in levels:
            fock.dimension(nu)
        entries = tuple(e if isinstance(e, ProbeEntry) else ProbeEntry(*e) for e in self.probe_entries)
        if not entries:
            raise ValueError("need at least one probe entry")
        for e in entries:
            for n, s in ((e.n, e.s), (e.n2, e.s2)):
                if s not in fock.SIGNS:
                    raise ValueError(f"probe entry {e.label()}: bad atomic level {s!r}")
                if not 0 <= n <= levels[0]:
                    raise ValueError(f"probe entry {e.label()} not inside the smallest level nu={levels[0]}")
        times = tuple(float(t) for t in self.probe_times)
        if not times or any(t < 0 or t > self.integrator.t_max for t in times):
            raise ValueError(f"probe times must lie in [0, {self.integrator.t_max}], got {times}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "probe_entries", entries)
        object.__setattr__(self, "probe_times", times)


@dataclass(frozen=True)
class ProbeRow:
    entry: ProbeEntry
    t: float
    levels: tuple
    values: tuple  # complex, one per level
    diffs: tuple  # |value[i] - value[i+1]|

    @property
    def strictly_decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.diffs, self.diffs[1:]))

    @property
    def verdict(self) -> str:
        if not self.diffs:
            return "undetermined"
        last = self.diffs[-1]
        ok = last <= min(self.diffs) and last <= THRESHOLD
        return "converging" if ok else "not_converging"


@dataclass(frozen=True)
class ConvergenceTable:
    rows: tuple
    note: str = VERDICT_NOTE

    def csv_rows(self):
        """``(entry, t, nu, re, im, diff_to_next)`` with ``None`` for the last level."""
        for row in self.rows:
            for i, nu in enumerate(row.levels):
                v = row.values[i]
                diff = row.diffs[i] if i < len(row.diffs) else None
                yield (row.entry.label(), row.t, nu, v.real, v.imag, diff)

    def row(self, entry, t: float) -> ProbeRow:
        e = entry if isinstance(entry, ProbeEntry) else ProbeEntry(*entry)
        for r in self.rows:
            if r.entry == e and r.t == t:
                return r
        raise KeyError((e, t))


def reference_state(initial: Callable[[int], DensityMatrix], levels: Sequence[int]) -> DensityMatrix:
    return initial(max(levels) + REFERENCE_MARGIN)


def _run_level(plan: SweepPlan, ref: DensityMatrix, nu: int) -> dict:
    try:
        rec = integrate(plan.model.with_level(nu), truncate(ref, nu), plan.integrator, checkpoints=plan.probe_times)
    except Exception as exc:
        raise SweepError(nu, exc) from exc
    out = {}
    for t in plan.probe_times:
        rho = rec.final if t == plan.integrator.t_max else rec.checkpoints[t]
        for e in plan.probe_entries:
            out[(e, t)] = rho.entry(e.n, e.s, e.n2, e.s2)
    return out


def sweep(plan: SweepPlan, initial: Callable[[int], DensityMatrix], workers: int = 1) -> ConvergenceTable:
    """Integrate every level of ``plan`` and tabulate the probe entries.

    ``initial(nu)`` builds the initial state at level ``nu``; it is called
    once at the reference level only.
    """
    ref = reference_state(initial, plan.levels)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda nu: _run_level(plan, ref, nu), plan.levels))
    else:
        results = [_run_level(plan, ref, nu) for nu in plan.levels]
    rows = []
    for e in plan.probe_entries:
        for t in plan.probe_times:
            values = tuple(res[(e, t)] for res in results)
            diffs = tuple(abs(a - b) for a, b in zip(values, values[1:]))
            rows.append(ProbeRow(e, t, plan.levels, values, diffs))
    return ConvergenceTable(tuple(rows))
