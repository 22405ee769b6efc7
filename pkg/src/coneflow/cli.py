"""Command line driver: data generation, simulation, verification, sweeps."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ExperimentConfig, load_config
from .cones import Cone
from .errors import ConstructionError

_INIT_LABEL = "init"
_FINAL_LABEL = "final"


def _thread_setup():
    val = os.environ.get("CONEFLOW_THREADS")
    if val:
        from .spectral import set_fft_workers
        try:
            set_fft_workers(int(val))
        except ValueError:
            print(f"ignoring non-integer CONEFLOW_THREADS={val!r}",
                  file=sys.stderr)


def _grid(cfg: ExperimentConfig):
    from .spectral import SpectralGrid
    return SpectralGrid(cfg.grid.n, cfg.grid.L, cfg.grid.pad_factor)


def _outdir(cfg: ExperimentConfig, override: str | None) -> str:
    return override if override else cfg.output.directory


def _build_data(cfg: ExperimentConfig, outdir: str, alpha: float | None = None,
                write: bool = True):
    """Construct (u0, E0) per the config, scale, optionally checkpoint.

    The structural gates run on the unscaled construction; the amplitude
    scale is applied afterwards so reported norms are exactly linear in it.
    """
    from .dynamics import FlowState
    from .initial_data import build_E0, build_profile_f, build_u0, \
        build_v_lambda
    from . import checkpoint as ckpt

    a = cfg.data.amplitude_scale if alpha is None else alpha
    grid = _grid(cfg)
    f = build_profile_f(cfg.data.m0, grid)
    v = build_v_lambda(f, cfg.data.lam)
    u0 = build_u0(v)
    cone = Cone((0.0, 0.0, 1.0), cfg.theta0)
    E0, rep = build_E0(u0, cfg.data.E0_t_end, cfg.data.E0_dt, cone=cone)
    u0s, E0s = a * u0, a * E0
    state = FlowState(u0s, E0s, t=0.0, mu=cfg.run.mu)
    prov = {
        "lambda": cfg.data.lam,
        "m0": cfg.data.m0,
        "theta0": cfg.theta0,
        "amplitude_scale": a,
        "construction": rep.as_dict(),
        "norms": {
            "l2_u": u0s.l2_norm(), "h2_u": u0s.sobolev_norm(2),
            "l2_E": E0s.l2_norm(), "h2_E": E0s.sobolev_norm(2),
        },
    }
    if write:
        os.makedirs(outdir, exist_ok=True)
        ckpt.write_state(outdir, state, _INIT_LABEL)
        with open(os.path.join(outdir, "provenance.json"), "w") as fh:
            json.dump(prov, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return state, prov


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args.out)
    try:
        state, prov = _build_data(cfg, outdir)
    except ConstructionError as e:
        print(f"construction failed: {e}", file=sys.stderr)
        for name, val in e.residuals.items():
            print(f"  {name} = {val:.6e}", file=sys.stderr)
        return 1
    print(f"wrote initial state to {outdir} "
          f"(|u0|_H2 = {prov['norms']['h2_u']:.6e}, "
          f"|E0|_H2 = {prov['norms']['h2_E']:.6e})")
    for name, val in prov["construction"].items():
        print(f"  {name} = {val}")
    return 0


def _load_or_build(cfg: ExperimentConfig, outdir: str):
    from . import checkpoint as ckpt
    paths = ckpt.state_paths(outdir, _INIT_LABEL)
    if all(os.path.exists(p) for p in paths.values()):
        return ckpt.read_state(outdir, _INIT_LABEL)
    state, _ = _build_data(cfg, outdir)
    return state


def _write_series(path: str, records) -> None:
    from .diagnostics import csv_header, csv_row
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_header() + "\n")
        for rec in records:
            fh.write(csv_row(rec) + "\n")


def _run_simulation(cfg: ExperimentConfig, state, outdir: str):
    from .dynamics import StepperConfig, simulate
    cone = Cone((0.0, 0.0, 1.0), cfg.theta0)
    scfg = StepperConfig(dt=cfg.run.dt)
    ckpt_dir = outdir if cfg.output.checkpoint_every else None
    return simulate(
        state, scfg, cfg.run.t_end,
        sample_every=cfg.run.sample_every,
        cone=cone,
        guard_factor=cfg.run.blowup_guard,
        checkpoint_dir=ckpt_dir,
        checkpoint_every=cfg.output.checkpoint_every,
    )


def _summary(res) -> dict:
    out = {
        "outcome": res.outcome,
        "t_stop": res.t_stop,
        "warnings": res.warnings,
        "samples": len(res.records),
    }
    if res.records:
        last = res.records[-1]
        out["energy0"] = last.energy0
        out["energy1"] = last.energy1
        out["energy_total"] = last.energy_total
        out["max_det_residual"] = max(r.det_residual for r in res.records)
        out["max_divET_residual"] = max(r.div_ET_residual for r in res.records)
        out["max_curl_residual"] = max(
            r.curl_structure_residual for r in res.records)
        out["max_leakage"] = max(
            max(r.cone_leakage_u, r.cone_leakage_E) for r in res.records)
    return out


def cmd_simulate(args) -> int:
    from . import checkpoint as ckpt
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args.out)
    os.makedirs(outdir, exist_ok=True)
    state = _load_or_build(cfg, outdir)
    res = _run_simulation(cfg, state, outdir)
    _write_series(os.path.join(outdir, "series.csv"), res.records)
    summary = _summary(res)
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if res.final_state is not None:
        ckpt.write_state(outdir, res.final_state, _FINAL_LABEL)
    print(f"outcome: {res.outcome} at t={res.t_stop:.6g} "
          f"({len(res.records)} samples)")
    for w in res.warnings:
        print(f"warning: {w}")
    return 0 if res.outcome == "completed" else 1


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    all_ok = True
    for name in names:
        results = run_suite(name, args.seed)
        for r in results:
            flag = "PASS" if r.passed else "FAIL"
            all_ok &= r.passed
            print(f"[{flag}] {name}.{r.name}: measured {r.measured:.3e} "
                  f"allowed {r.allowed:.3e}"
                  + (f" ({r.detail})" if r.detail else ""))
    print("verify: all checks passed" if all_ok
          else "verify: FAILURES detected")
    return 0 if all_ok else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(cfg, args.out)
    try:
        alphas = [float(x) for x in args.alphas.split(",") if x.strip()]
    except ValueError:
        print(f"could not parse --alphas {args.alphas!r}", file=sys.stderr)
        return 1
    if len(alphas) < 2 or any(a <= 0 for a in alphas) \
            or any(b <= a for a, b in zip(alphas, alphas[1:])):
        print("--alphas needs >= 2 strictly increasing positive values",
              file=sys.stderr)
        return 1
    os.makedirs(outdir, exist_ok=True)
    base, _ = _build_data(cfg, outdir, alpha=1.0, write=False)

    from .dynamics import FlowState
    rows = []
    for a in alphas:
        run_dir = os.path.join(outdir, f"alpha_{a:g}")
        os.makedirs(run_dir, exist_ok=True)
        state = FlowState(a * base.u, a * base.E, t=0.0, mu=cfg.run.mu)
        try:
            res = _run_simulation(cfg, state, run_dir)
            _write_series(os.path.join(run_dir, "series.csv"), res.records)
            sup_e = max((r.energy_total for r in res.records), default=0.0)
            init_e = res.records[0].energy_total if res.records else 0.0
            row = {
                "alpha": a, "outcome": res.outcome, "t_stop": res.t_stop,
                "initial_energy": init_e, "sup_energy_total": sup_e,
                "growth": sup_e / init_e if init_e > 0 else float("nan"),
            }
        except Exception as e:   # per-row failures become labels, not aborts
            row = {"alpha": a, "outcome": f"error:{type(e).__name__}",
                   "t_stop": float("nan"), "initial_energy": float("nan"),
                   "sup_energy_total": float("nan"), "growth": float("nan")}
        rows.append(row)
        print(f"alpha={a:g}: {row['outcome']} t_stop={row['t_stop']:.6g} "
              f"growth={row['growth']:.6g}")

    cols = ["alpha", "outcome", "t_stop", "initial_energy",
            "sup_energy_total", "growth"]
    with open(os.path.join(outdir, "sweep.csv"), "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(
                row["outcome"] if c == "outcome" else f"{row[c]:.17e}"
                for c in cols) + "\n")

    completed = [r["alpha"] for r in rows if r["outcome"] == "completed"]
    failed = [r["alpha"] for r in rows if r["outcome"] != "completed"]
    if completed:
        print(f"largest completing alpha: {max(completed):g}")
    else:
        print("no run completed")
    if failed:
        print(f"smallest failing alpha: {min(failed):g}")
    else:
        print("no run failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coneflow",
        description="structure-preserving spectral viscoelastic flow runs")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="construct and checkpoint (u0, E0)")
    g.add_argument("--config", required=True)
    g.add_argument("--out", default=None)
    g.set_defaults(fn=cmd_gen_data)

    s = sub.add_parser("simulate", help="march the full system, write series")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_simulate)

    v = sub.add_parser("verify", help="run a randomized verification suite")
    v.add_argument("--suite", default="all",
                   help="spectral|cancellations|cone|data|dynamics|all")
    v.add_argument("--seed", type=int, default=1234)
    v.set_defaults(fn=cmd_verify)

    w = sub.add_parser("sweep", help="amplitude ladder over alpha values")
    w.add_argument("--config", required=True)
    w.add_argument("--alphas", required=True,
                   help="comma-separated increasing positive scales")
    w.add_argument("--out", default=None)
    w.set_defaults(fn=cmd_sweep)
    return p


def main(argv=None) -> int:
    _thread_setup()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
