"""Command-line front end: run, verify, sweep and report."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config, diagnostics, inflow, io, kinetic, micro, plotting, verify
from .diagnostics import DiagnosticsRecord
from .growth import classify_growth
from .wasserstein import w1_distance

log = logging.getLogger("growing_consensus")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
RUNTIME_ERRORS = (micro.ResourceLimitError, micro.NonFiniteStateError, FloatingPointError)
EXPAND_LIMIT = 2_000_000


def _write_trajectory(path: Path, records: list[DiagnosticsRecord], dim: int) -> Path:
    return io.write_csv(path, DiagnosticsRecord.header(dim), (r.row() for r in records))


def _write_snapshots(out: Path, snaps: list[micro.Snapshot], dim: int) -> None:
    xs = [f"x_{i + 1}" for i in range(dim)]
    for i, s in enumerate(snaps):
        M = int(s.counts.sum())
        if M <= EXPAND_LIMIT:
            pos = np.repeat(s.positions, s.counts, axis=0)
            birth = np.repeat(s.birth_times, s.counts)
            rows = ([j, birth[j], *pos[j]] for j in range(M))
            io.write_csv(out / f"snapshot_{i:05d}.csv", ["agent_index", "birth_time", *xs], rows)
        else:
            # too many agents to list one by one; one row per group with its multiplicity
            first = np.concatenate(([0], np.cumsum(s.counts)[:-1]))
            rows = ([first[g], s.birth_times[g], *s.positions[g], s.counts[g]] for g in range(len(s.counts)))
            io.write_csv(out / f"snapshot_{i:05d}.csv", ["agent_index", "birth_time", *xs, "count"], rows)


def execute(sc: config.Scenario, out: Path) -> dict:
    """Run one scenario and write its outputs into ``out``; returns the summary dict."""
    out.mkdir(parents=True, exist_ok=True)
    sim = sc.sim
    dim = sim.dim
    if sc.mode == "both":
        sim.record_snapshots = True
    summary: dict = {"scenario": sc.name, "regime": classify_growth(sim.rate), "mode": sc.mode, "outputs": []}
    checks: dict = {}
    tr = kt = None
    if sc.mode in ("micro", "both"):
        tr = micro.run(sim)
        summary["outputs"].append(str(_write_trajectory(out / sc.trajectory_name, tr.records, dim)))
        summary["final"] = tr.records[-1].to_dict()
        summary["clusters"] = diagnostics.detect_clusters(tr.ensemble, sc.link_radius).to_dict()
        summary["confinement"] = {"bound": tr.confinement_bound, "max_abs": tr.max_abs, "violations": tr.confinement_violations}
        checks["lemma1_bound_ok"] = tr.confinement_violations == 0
        if sc.write_snapshots:
            _write_snapshots(out / "snapshots", tr.snapshots, dim)
        path = tr.path
    if sc.mode in ("kinetic", "both"):
        f0 = kinetic.empirical_of_micro(micro.initial_ensemble(sim)) if tr is not None else None
        kt = kinetic.run_kinetic(sim, measure=f0, w_min=sc.w_min)
        name = sc.trajectory_name if tr is None else "kinetic_" + sc.trajectory_name
        summary["outputs"].append(str(_write_trajectory(out / name, kt.records, dim)))
        kin = {"final": kt.records[-1].to_dict(), "max_mass_error": kt.max_mass_error,
               "clusters": diagnostics.detect_clusters(kt.measure, sc.link_radius, kt.path.N[-1]).to_dict(),
               "support_violations": kt.support_violations}
        if tr is None:
            summary["final"], summary["clusters"] = kin["final"], kin["clusters"]
            checks["lemma1_bound_ok"] = kt.support_violations == 0
        else:
            summary["kinetic"] = kin
            checks["lemma1_bound_ok"] = checks["lemma1_bound_ok"] and kt.support_violations == 0
        if sc.measure_dump:
            xs = [f"x_{i + 1}" for i in range(dim)]
            summary["outputs"].append(str(io.write_csv(out / "measure.csv", ["weight", *xs], kt.measure.rows())))
        path = kt.path
    if tr is not None and kt is not None:
        times, gaps = [], []
        for s, (_, mu) in zip(tr.snapshots, kt.snapshots):
            times.append(s.t)
            gaps.append(w1_distance(s.positions, s.counts / s.counts.sum(), mu.atoms, mu.weights))
        summary["outputs"].append(str(io.write_csv(out / "w1_micro_vs_kinetic.csv", ["t", "w1"], zip(times, gaps))))
        summary["w1_micro_vs_kinetic_max"] = max(gaps)
    checks["c1_holds"] = inflow.c1_holds(sim.profile, path, sc.c1_window, sc.c1_tol)
    summary["checks"] = checks
    summary["outputs"].append(str(out / sc.summary_name))
    # relative names keep the summary identical across output directories
    summary["outputs"] = [str(Path(p).relative_to(out)) for p in summary["outputs"]]
    io.write_json(out / sc.summary_name, summary)
    return summary


def cmd_run(args) -> int:
    try:
        sc = config.load(args.config, seed=args.seed)
    except config.ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        summary = execute(sc, out)
    except RUNTIME_ERRORS as exc:
        log.error("run aborted: %s", exc)
        return EXIT_RUNTIME
    print(json.dumps({"scenario": summary["scenario"], "regime": summary["regime"], "checks": summary["checks"]}))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_suite(args.suite, echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.out:
        rows = ([r.criterion, r.name, r.measured, r.relation, r.limit, int(r.passed)] for r in results)
        io.write_csv(Path(args.out) / f"verify_{args.suite}.csv",
                     ["criterion", "check", "measured", "relation", "limit", "passed"], rows)
    return EXIT_FAIL if failed else EXIT_OK


def _parse_values(text: str) -> list:
    text = text.strip()
    if text.startswith("["):
        return list(json.loads(text))
    vals = []
    for tok in (x.strip() for x in text.split(",")):
        if not tok:
            continue
        try:
            vals.append(json.loads(tok))
        except json.JSONDecodeError:
            vals.append(tok)
    return vals


def _sweep_cell(raw: dict, axis: str, value, out_dir: str) -> dict:
    row = {"value": value, "status": "ok", "error": ""}
    try:
        sc = config.from_dict(config.set_path(raw, axis, value))
        summary = execute(sc, Path(out_dir))
    except config.ConfigError as exc:
        return {**row, "status": "invalid", "error": str(exc)}
    except RUNTIME_ERRORS as exc:
        return {**row, "status": "aborted", "error": str(exc)}
    final = summary["final"]
    row.update(regime=summary["regime"], t_end=final["t"], N_T=final["N"], M_T=final["M"], V_T=final["V"],
               V_X_T=final["V_X"], D_T=final["D"], J=summary["clusters"]["J"])
    traj = io.read_csv_columns(Path(out_dir) / sc.trajectory_name)
    t, V = traj["t"], traj["V"]
    try:
        row["decay_exponent"] = diagnostics.fit_decay_exponent(t, V, (0.1 * t[-1], t[-1]))
    except ValueError:
        row["decay_exponent"] = math.nan
    row["w1_micro_vs_kinetic_max"] = summary.get("w1_micro_vs_kinetic_max", math.nan)
    return row


SWEEP_COLUMNS = ["value", "status", "regime", "t_end", "N_T", "M_T", "V_T", "V_X_T", "D_T", "J",
                 "decay_exponent", "w1_micro_vs_kinetic_max", "error"]


def cmd_sweep(args) -> int:
    values = _parse_values(args.values)
    if not values:
        log.error("sweep needs at least one value")
        return EXIT_CONFIG
    try:
        raw = config.load_raw(args.config)
        if args.seed is not None:
            raw.setdefault("numerics", {})["seed"] = args.seed
        config.from_dict(config.set_path(raw, args.axis, values[0]))
    except config.ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    out = Path(args.out)
    dirs = [str(out / f"cell_{i:03d}") for i in range(len(values))]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, [raw] * len(values), [args.axis] * len(values), values, dirs))
    else:
        rows = [_sweep_cell(raw, args.axis, v, d) for v, d in zip(values, dirs)]
    io.write_csv(out / "sweep.csv", [args.axis if c == "value" else c for c in SWEEP_COLUMNS],
                 ([r.get(c, "") for c in SWEEP_COLUMNS] for r in rows))
    for r in rows:
        print(f"{args.axis}={r['value']}: {r['status']}"
              + (f" decay_exponent={r['decay_exponent']:.4f}" if r["status"] == "ok" else f" {r['error']}"))
    return EXIT_FAIL if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_report(args) -> int:
    target = Path(args.target)
    out = Path(args.out)
    if not target.is_dir():
        try:
            sc = config.load(args.target, seed=args.seed)
        except config.ConfigError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        try:
            execute(sc, out)
        except RUNTIME_ERRORS as exc:
            log.error("run aborted: %s", exc)
            return EXIT_RUNTIME
        target = out
    written = []
    for traj in sorted(target.glob("*trajectory*.csv")):
        prefix = traj.stem.replace("trajectory", "").strip("_")
        written += plotting.render_trajectory(io.read_csv_columns(traj), out, f"{prefix}_" if prefix else "")
    w1 = target / "w1_micro_vs_kinetic.csv"
    if w1.exists():
        cols = io.read_csv_columns(w1)
        written += plotting.render_series(cols["t"], cols["w1"], out, "w1_micro_vs_kinetic", "W1")
    sweep = target / "sweep.csv"
    if sweep.exists():
        import csv

        with open(sweep, newline="") as fh:
            rows = list(csv.DictReader(fh))
        axis = next(iter(rows[0])) if rows else "value"
        ok = [r for r in rows if r["status"] == "ok"]
        try:
            xs = [float(r[axis]) for r in ok]
            written += plotting.render_sweep(xs, [float(r["decay_exponent"]) for r in ok], out, axis,
                                             "decay_exponent")
        except ValueError:
            log.warning("sweep axis is not numeric; no sweep figure")
    if not written:
        log.error("nothing to report in %s", target)
        return EXIT_CONFIG
    for p in written:
        print(p)
    return EXIT_OK


def _common(suppress: bool) -> argparse.ArgumentParser:
    # the flags are accepted before or after the subcommand; subparsers must not
    # overwrite values given before it, hence SUPPRESS defaults there
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--out", default=d("out"), help="output directory (default: out)")
    c.add_argument("--workers", type=int, default=d(1), help="parallel sweep cells (default: 1)")
    c.add_argument("--seed", type=int, default=d(None), help="override the scenario seed")
    c.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="growing-consensus", parents=[_common(suppress=False)],
                                description="Consensus dynamics with a growing population of agents.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run a scenario file or bundled scenario")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("verify", parents=[common], help="run an acceptance battery")
    v.add_argument("suite", choices=sorted(verify.SUITES))
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("sweep", parents=[common], help="run one scenario per parameter value")
    s.add_argument("config")
    s.add_argument("--axis", required=True, help="dotted key, e.g. growth.alpha")
    s.add_argument("--values", required=True, help="comma-separated values or a JSON list")
    s.set_defaults(func=cmd_sweep)
    rp = sub.add_parser("report", parents=[common], help="write .dat series and PNG figures")
    rp.add_argument("target", help="output directory of a run or sweep, or a scenario to run first")
    rp.set_defaults(func=cmd_report)
    sub.add_parser("list", parents=[common], help="list bundled scenarios").set_defaults(func=cmd_list)
    return p


def cmd_list(args) -> int:
    for p in config.bundled_scenarios():
        raw = config.load_raw(str(p))
        print(f"{p.stem:<32} {raw.get('description', '')}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
                        format="%(levelname)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
