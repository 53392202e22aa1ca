"""Command-line entry point: ``jcsim --config run.json [--output-dir out] [--mode ...] [--seed N]``.

Exit codes: 0 success; 1 check mode found a violated claim that is not
allow-listed; 2 any error (a structured JSON error goes to stderr and to
``error.json`` in the output directory).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import claims as claims_mod
from .config import MODES, ConfigError, RunConfig, parse_config
from .converge import SweepPlan, sweep
from .evolve import integrate
from .serial import dumps, encode_matrix, format_float

log = logging.getLogger("jcsim")

OBSERVABLE_COLUMNS = ("t", "trace_re", "trace_im", "hs_norm", "purity", "min_eig", "inversion", "photon_number")
SWEEP_COLUMNS = ("entry", "t", "nu", "re", "im", "diff_to_next")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if x is None else format_float(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def run_evolve(cfg: RunConfig) -> dict:
    rho0 = cfg.initial_state.build(cfg.model.nu)
    rec = integrate(cfg.model, rho0, cfg.integrator)
    rows = [(t,) + obs.row() for t, obs in zip(rec.times, rec.observables)]
    files = {cfg.outputs["observables_csv"]: _csv_text(OBSERVABLE_COLUMNS, rows)}
    summary = {
        "steps": rec.steps,
        "rows": len(rows),
        "max_hermiticity_defect": rec.max_hermiticity_defect,
        "min_eigenvalue_seen": rec.min_eigenvalue_seen,
        "hs_norm_max_ratio": rec.hs_norm_max_ratio,
        "first_norm_exceedance": rec.first_norm_exceedance,
        "max_trace_drift": rec.max_trace_drift,
    }
    files[cfg.outputs["summary_json"]] = dumps(summary) + "\n"
    if cfg.integrator.store_snapshots:
        snaps = [{"t": t, "rho": encode_matrix(dm.data)} for t, dm in rec.snapshots]
        files[cfg.outputs["snapshots_json"]] = dumps({"nu": cfg.model.nu, "snapshots": snaps}) + "\n"
    return files


def run_sweep(cfg: RunConfig) -> dict:
    s = cfg.sweep
    plan = SweepPlan(cfg.model, s.levels, s.probe_entries, s.probe_times, cfg.integrator)
    table = sweep(plan, cfg.initial_state.build, workers=s.workers)
    files = {cfg.outputs["sweep_csv"]: _csv_text(SWEEP_COLUMNS, table.csv_rows())}
    summary = {
        "note": table.note,
        "rows": [
            {
                "entry": r.entry.label(),
                "t": r.t,
                "diffs": list(r.diffs),
                "strictly_decreasing": r.strictly_decreasing,
                "verdict": r.verdict,
            }
            for r in table.rows
        ],
    }
    files[cfg.outputs["sweep_json"]] = dumps(summary) + "\n"
    return files


def run_check(cfg: RunConfig) -> tuple:
    model = cfg.model
    chk = cfg.check
    state = cfg.initial_state.build(model.nu)
    states = [(cfg.initial_state.kind, state)]
    reports = []
    for name in chk.claims:
        if name == "dissipator_sign":
            for j, v in enumerate(model.dissipators):
                r = claims_mod.check_dissipator_sign(v, model.nu, chk.trials, cfg.seed + j)
                if len(model.dissipators) > 1:
                    r.claim = f"dissipator_sign[{j}]"
                reports.append(r)
        elif name == "k_orthogonality":
            reports.append(claims_mod.check_k_orthogonality(model, chk.trials, cfg.seed))
        elif name == "trace_annihilation":
            reports.append(claims_mod.check_trace_annihilation(model, chk.trials, cfg.seed))
        elif name == "contraction":
            reports.append(claims_mod.check_contraction(model, states, cfg.integrator))
        elif name == "trace_and_positivity":
            reports.append(claims_mod.check_trace_and_positivity(model, states, cfg.integrator))
    failed = [
        r.claim for r in reports if not r.holds and r.claim.split("[")[0] not in chk.allow_violated
    ]
    payload = {
        "seed": cfg.seed,
        "allow_violated": list(chk.allow_violated),
        "claims": [r.to_dict() for r in reports],
        "unexpected_violations": failed,
        "passed": not failed,
    }
    return {cfg.outputs["report_json"]: dumps(payload) + "\n"}, (0 if not failed else 1)


def run(cfg: RunConfig, output_dir) -> int:
    """Run the configured mode and write its artifacts; all files are written after computing."""
    code = 0
    if cfg.mode == "evolve":
        files = run_evolve(cfg)
    elif cfg.mode == "sweep":
        files = run_sweep(cfg)
    else:
        files, code = run_check(cfg)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        target = out / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(text.encode("utf-8"))
        log.info("wrote %s", target)
    return code


def _error(exc: Exception, output_dir) -> int:
    if isinstance(exc, ConfigError):
        payload = exc.to_dict()
    else:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        level = getattr(exc, "level", None)
        if level is not None:
            payload["level"] = level
    text = dumps(payload)
    print(text, file=sys.stderr)
    if output_dir is not None:
        try:
            Path(output_dir).mkdir(parents=True, exist_ok=True)
            (Path(output_dir) / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jcsim", description="Damped driven Jaynes-Cummings simulator and claim checker.")
    p.add_argument("--config", required=True, help="path to the JSON run configuration")
    p.add_argument("--output-dir", default=".", help="directory for output files (default: current directory)")
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config, mode=args.mode, seed=args.seed)
        return run(cfg, args.output_dir)
    except Exception as exc:  # every failure becomes a structured error and exit code 2
        return _error(exc, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
