"""Experiment runner and report emitter.

Ties the library modules together behind the ``mane-lab`` command: seeded
suites over the symbolic, weak-KAM, shadowing, and periodic-orbit testbeds,
each writing CSV/JSON artifacts into a run directory, plus a reporter that
summarizes the artifacts and renders SVG decay plots with fitted rates.

Exit codes: 0 ok, 2 config error, 3 assertion or invariant failure.  The
environment variable MANE_LAB_WORKERS caps the thread pool used for
instance sweeps; a fixed (config, seed) pair gives bit-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .sft import (Sft, golden_mean_shift, random_sft, entropy,
                  word_count_entropy, shortest_periodic_orbit)
from .ergopt import (random_instance, min_mean_cycle, discrete_aubry,
                     class_one_search, alga_condition,
                     build_channel_discrete, verify_locking)
from .lagrangian import pendulum, free_particle
from .weakkam import (build_action_graph, critical_value, lax_oleinik,
                      classify_and_extract_sets, mane_potential,
                      closed_curve_actions)
from .shadowing import (cat_map, cat_periodic_orbit, shadow_pseudo_orbit,
                        exponential_closeness, torus_delta, CAT_LOG_LAMBDA)
from .orbitlab import CatMapTestbed, horizon_sweep, measure_constants

SCHEMA_VERSION = 1


class CliError(ValueError):
    """Configuration problem: bad JSON, schema violation, missing input."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _workers() -> int:
    raw = os.environ.get("MANE_LAB_WORKERS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise CliError(f"MANE_LAB_WORKERS: not an integer: {raw!r}")
    return min(4, os.cpu_count() or 1)


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _map_indexed(fn, n: int):
    """Deterministic sweep: run fn(i) for i in range(n) on the pool and
    return results in index order."""
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(fn, range(n)))


# ---------------------------------------------------------------------------
# suites (shared by the direct subcommands and `run` pipeline stages)
# ---------------------------------------------------------------------------


def suite_sft(out: Path, seed: int = 0, count: int = 200,
              max_symbols: int = 10) -> dict:
    """Girth bound on random subshifts plus the golden-mean entropy pair."""
    t0 = time.time()

    def one(i):
        rng = np.random.default_rng([seed, i])
        s = random_sft(rng, max_symbols)
        orbit = shortest_periodic_orbit(s)
        h = entropy(s)
        bound = 1.0 + s.alphabet_size * math.exp(1.0 - h)
        return (i, s.alphabet_size, h, orbit.period, bound,
                int(orbit.period <= bound))

    rows = _map_indexed(one, count)
    _write_csv(out / "sft_girth.csv",
               ["module", "op", "instance", "symbols", "entropy",
                "period", "bound", "ok"],
               [("sft", "shortest_periodic_orbit") + r for r in rows])
    gm = golden_mean_shift()
    h_spec = entropy(gm)
    h_word = word_count_entropy(gm, 24)
    h_true = math.log((1.0 + math.sqrt(5.0)) / 2.0)
    _write_csv(out / "sft_entropy.csv",
               ["module", "op", "estimator", "value", "reference"],
               [("sft", "entropy", "spectral", h_spec, h_true),
                ("sft", "word_count_entropy", "word_count_24", h_word,
                 h_true)])
    return {"instances": count,
            "girth_violations": sum(1 for r in rows if not r[-1]),
            "spectral_error": abs(h_spec - h_true),
            "word_count_error": abs(h_word - h_spec),
            "runtime": time.time() - t0}


def suite_ergopt(out: Path, seed: int = 0, count: int = 100,
                 eps: float = 0.1) -> dict:
    """Locking suite: class-I search, channel, exact locking verdict per
    random rational instance."""
    t0 = time.time()

    def one(i):
        rng = np.random.default_rng([seed, i])
        f = random_instance(rng)
        mm = min_mean_cycle(f)
        aubry = discrete_aubry(f, mm.mean)
        orbit = class_one_search(f, eps)
        cond = alga_condition(orbit, f, aubry, eps)
        if cond["gap"] > 0:
            phi = build_channel_discrete(orbit, eps)
        else:
            # fixed points and single cycles have zero shift gap; the
            # channel width must then be chosen outright
            phi = build_channel_discrete(orbit, eps, rho=0.0625,
                                         gamma_bar=0.5)
        locked, cert = verify_locking(f, phi, orbit)
        return (i, orbit.period, cond["holds"], locked, str(mm.mean),
                cert.get("reason", ""), cert)

    results = _map_indexed(one, count)
    _write_csv(out / "lock_suite.csv",
               ["module", "op", "instance", "period", "alga", "locked",
                "min_mean", "reason"],
               [("ergopt", "verify_locking", i, p, int(a), int(lk), mean,
                 reason) for i, p, a, lk, mean, reason, _ in results])
    with open(out / "lock_certificates.json", "w") as fh:
        json.dump([{"instance": i, "certificate": cert}
                   for i, *_rest, cert in results], fh, indent=1)
    return {"instances": count,
            "alga_failures": sum(1 for r in results if not r[2]),
            "not_locked": sum(1 for r in results if not r[3]),
            "runtime": time.time() - t0}


def suite_weakkam(out: Path, grid: int = 200) -> dict:
    """Pendulum critical value, weak-KAM fields, flagged invariant sets,
    free-particle action-potential probes, closed-curve nonnegativity."""
    t0 = time.time()
    model = pendulum()
    graph = build_action_graph(model, n_nodes=grid)
    cv = critical_value(model, graph)
    c = cv["value"]
    u = lax_oleinik(model, c, graph)
    (out / "weakkam_field.csv").write_text(u.to_csv())
    ubar = lax_oleinik(model, c, graph, backward=True)
    (out / "weakkam_field_backward.csv").write_text(ubar.to_csv())
    mather, aubry, mane = classify_and_extract_sets(model, c, u, graph)
    rows = []
    for s in (mather, aubry, mane):
        for x, v in s.points:
            rows.append(("weakkam", "classify_and_extract_sets", s.kind,
                         float(x), float(v)))
    _write_csv(out / "invariant_sets.csv",
               ["module", "op", "kind", "x", "v"], rows)
    free = free_particle()
    probes = []
    for k in (0.125, 0.5, 2.0):
        got = mane_potential(free, k, 0.0, 0.5)
        probes.append(("weakkam", "mane_potential", k, got,
                       0.5 * math.sqrt(2.0 * k)))
    _write_csv(out / "free_particle_potential.csv",
               ["module", "op", "k", "phi", "reference"], probes)
    curve_actions = closed_curve_actions(model, c, 1000, seed=0,
                                         graph=graph)
    _write_csv(out / "closed_curve_actions.csv",
               ["module", "op", "curve", "action"],
               [("weakkam", "closed_curve_actions", i, float(a))
                for i, a in enumerate(curve_actions)])
    return {"critical_value": c, "bracket": cv["bracket"],
            "mather_nodes": len(mather.points),
            "aubry_nodes": len(aubry.points),
            "mane_cells": len(mane.points),
            "min_closed_curve_action": float(np.min(curve_actions)),
            "runtime": time.time() - t0}


def suite_shadow(out: Path, seed: int = 0, per_delta: int = 50,
                 length: int = 200) -> dict:
    """Shadowing error against jump size and two-sided closeness decay."""
    t0 = time.time()
    model = cat_map()
    base = cat_periodic_orbit(length)
    deltas = (1e-2, 1e-3, 1e-4)
    jobs = [(d, i) for d in deltas for i in range(per_delta)]

    def one(j):
        d, i = jobs[j]
        rng = np.random.default_rng([seed, int(1 / d), i])
        noise = rng.uniform(-d / 4.0, d / 4.0, size=base.shape)
        pts = np.mod(base + noise, 1.0)
        jump = float(np.max(np.linalg.norm(
            torus_delta(np.roll(pts, -1, axis=0), model.step(pts)),
            axis=1)))
        res = shadow_pseudo_orbit(model, pts)
        return (d, i, jump, res.sup_error)

    rows = _map_indexed(one, len(jobs))
    _write_csv(out / "shadow_errors.csv",
               ["module", "op", "delta", "instance", "jump", "sup_error"],
               [("shadowing", "shadow_pseudo_orbit") + r for r in rows])
    logs = np.log([r[2] for r in rows]), np.log([r[3] for r in rows])
    slope = float(np.polyfit(logs[0], logs[1], 1)[0])

    close_rows, rates = [], {}
    rng = np.random.default_rng([seed, 7])
    for window in (5, 10, 20):
        x = rng.random(2)
        amp = 0.02 * math.exp(-CAT_LOG_LAMBDA * window)
        y = np.mod(x + amp * model.e_u, 1.0)
        prof = exponential_closeness(model, x, y, window=window)
        for t, dist in zip(prof.times, prof.distances):
            if t >= 0:
                close_rows.append(("shadowing", "exponential_closeness",
                                   window, int(t), float(dist)))
        rates[window] = float(abs(prof.decay_rate))
    _write_csv(out / "closeness_profiles.csv",
               ["module", "op", "window", "time", "distance"], close_rows)
    worst = max(abs(r[3]) / r[0] for r in rows)
    return {"instances": len(jobs), "max_error_over_delta": worst,
            "loglog_slope": slope,
            "closeness_rates": rates,
            "rate_floor": 0.9 * CAT_LOG_LAMBDA,
            "runtime": time.time() - t0}


def suite_palga(out: Path, eps: float = 0.1,
                horizons=(4, 6, 8, 10)) -> dict:
    """Cut-and-shadow pipeline sweep on the cat-map testbed."""
    t0 = time.time()
    testbed = CatMapTestbed()
    rows = horizon_sweep(testbed, eps, horizons=tuple(horizons))
    _write_csv(out / "palga_summary.csv",
               ["module", "op", "horizon", "initial_period", "final_period",
                "final_action", "final_aubry_distance", "final_gap",
                "rounds", "terminal"],
               [("orbitlab", "palga_pipeline", r["horizon"],
                 r["initial_period"], r["final_period"],
                 float(r["final_action"]), float(r["final_aubry_distance"]),
                 float(r["final_gap"]), r["rounds"], int(r["terminal"]))
                for r in rows])
    with open(out / "palga_rounds.json", "w") as fh:
        json.dump([r["log"] for r in rows], fh, indent=1)
    ledger = measure_constants(testbed, eps)
    with open(out / "palga_constants.json", "w") as fh:
        json.dump({k: float(v) for k, v in vars(ledger).items()}, fh,
                  indent=1)
    return {"horizons": list(horizons),
            "final_actions": [float(r["final_action"]) for r in rows],
            "final_distances": [float(r["final_aubry_distance"])
                                for r in rows],
            "terminal": [bool(r["terminal"]) for r in rows],
            "runtime": time.time() - t0}


STAGES = {
    "sft": (suite_sft, {"seed": int, "count": int, "max_symbols": int}),
    "ergopt": (suite_ergopt, {"seed": int, "count": int, "eps": float}),
    "weakkam": (suite_weakkam, {"grid": int}),
    "shadow": (suite_shadow, {"seed": int, "per_delta": int, "length": int}),
    "palga": (suite_palga, {"eps": float, "horizons": list}),
}


# ---------------------------------------------------------------------------
# run / report
# ---------------------------------------------------------------------------


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"config: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(f"config: invalid JSON in {path}: {exc}")
    if not isinstance(cfg, dict):
        raise CliError("config: top level must be an object")
    if int(cfg.get("schema", SCHEMA_VERSION)) != SCHEMA_VERSION:
        raise CliError(f"config.schema: expected {SCHEMA_VERSION}")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise CliError("config.seed: must be an integer")
    pipeline = cfg.get("pipeline", [])
    if not isinstance(pipeline, list):
        raise CliError("config.pipeline: must be a list of stages")
    for idx, stage in enumerate(pipeline):
        where = f"config.pipeline[{idx}]"
        if not isinstance(stage, dict) or "stage" not in stage:
            raise CliError(f"{where}: must be an object with a 'stage' key")
        name = stage["stage"]
        if name not in STAGES:
            raise CliError(f"{where}.stage: unknown stage {name!r}; "
                           f"known: {sorted(STAGES)}")
        params = stage.get("params", {})
        if not isinstance(params, dict):
            raise CliError(f"{where}.params: must be an object")
        _, schema = STAGES[name]
        for key in params:
            if key not in schema:
                raise CliError(f"{where}.params.{key}: unknown parameter "
                               f"for stage {name!r}")
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out or cfg.get("output_dir") or "run")
    out.mkdir(parents=True, exist_ok=True)
    seed = int(cfg.get("seed", 0))
    if not cfg.get("pipeline"):
        return 0
    manifest = {"schema": SCHEMA_VERSION, "seed": seed, "stages": []}
    failed = 0
    for stage in cfg.get("pipeline", []):
        name = stage["stage"]
        fn, schema = STAGES[name]
        params = dict(stage.get("params", {}))
        if "seed" in schema:
            params.setdefault("seed", seed)
        entry = {"stage": name, "params": params}
        try:
            entry["summary"] = fn(out, **params)
            entry["status"] = "ok"
        except (AssertionError, ValueError) as exc:
            entry["status"] = "error"
            entry["error"] = f"{type(exc).__name__}: {exc}"
            failed += 1
        manifest["stages"].append(entry)
        print(f"[{entry['status']}] {name}: "
              f"{entry.get('summary', entry.get('error'))}")
    with open(out / "run.json", "w") as fh:
        json.dump(manifest, fh, indent=1, default=float)
    return 3 if failed else 0


def _fit_line(x, y):
    slope, intercept = np.polyfit(np.asarray(x, float),
                                  np.asarray(y, float), 1)
    return float(slope), float(intercept)


def _read_csv(path: Path) -> list:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _plot_decay(path: Path, groups: dict, xlabel: str, ylabel: str,
                title: str, loglog: bool) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (x, y) in sorted(groups.items()):
        x, y = np.asarray(x, float), np.asarray(y, float)
        mask = y > 0
        if loglog:
            slope, _ = _fit_line(np.log(x[mask]), np.log(y[mask]))
            ax.loglog(x, y, "o", ms=3, label=f"{label} (slope {slope:.3f})")
        else:
            rate, _ = _fit_line(x[mask], np.log(y[mask]))
            ax.semilogy(x, y, "o-", ms=3,
                        label=f"{label} (rate {rate:.3f})")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "run.json"
    if not manifest_path.exists():
        if run_dir.is_dir() and not any(run_dir.iterdir()):
            print("warning: empty run, empty report", file=sys.stderr)
            return 0
        print(f"missing artifact: {manifest_path}", file=sys.stderr)
        return 2
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    report_dir = run_dir / "report"
    report_dir.mkdir(exist_ok=True)
    lines, missing = [], []
    for entry in manifest["stages"]:
        name, summary = entry["stage"], entry.get("summary", {})
        if entry["status"] != "ok":
            lines.append((name, "stage", entry.get("error", ""), "FAIL"))
            continue
        if name == "sft":
            lines.append((name, "girth_violations",
                          summary["girth_violations"],
                          "PASS" if summary["girth_violations"] == 0
                          else "FAIL"))
            lines.append((name, "spectral_error",
                          _fmt(summary["spectral_error"]),
                          "PASS" if summary["spectral_error"] < 1e-9
                          else "FAIL"))
        elif name == "ergopt":
            bad = summary["alga_failures"] + summary["not_locked"]
            lines.append((name, "unexplained_failures", bad,
                          "PASS" if bad == 0 else "FAIL"))
        elif name == "weakkam":
            err = abs(summary["critical_value"] - 1.0)
            lines.append((name, "critical_value_error", _fmt(err),
                          "PASS" if err < 0.02 else "FAIL"))
        elif name == "shadow":
            art = run_dir / "shadow_errors.csv"
            if not art.exists():
                missing.append(art)
                continue
            rows = _read_csv(art)
            groups = {}
            for r in rows:
                groups.setdefault("error vs delta", ([], []))
                groups["error vs delta"][0].append(float(r["delta"]))
                groups["error vs delta"][1].append(float(r["sup_error"]))
            _plot_decay(report_dir / "shadow_decay.svg", groups,
                        "delta", "sup error", "shadowing error", True)
            slope = summary["loglog_slope"]
            lines.append((name, "loglog_slope", _fmt(slope),
                          "PASS" if abs(slope - 1.0) <= 0.05 else "FAIL"))
            art2 = run_dir / "closeness_profiles.csv"
            if art2.exists():
                rows2 = _read_csv(art2)
                groups2 = {}
                for r in rows2:
                    key = f"window {r['window']}"
                    groups2.setdefault(key, ([], []))
                    groups2[key][0].append(int(r["time"]))
                    groups2[key][1].append(float(r["distance"]))
                _plot_decay(report_dir / "closeness_decay.svg", groups2,
                            "t", "distance", "closeness profile", False)
            ok = all(v >= summary["rate_floor"]
                     for v in summary["closeness_rates"].values())
            lines.append((name, "closeness_rates",
                          json.dumps(summary["closeness_rates"]),
                          "PASS" if ok else "FAIL"))
        elif name == "palga":
            acts = summary["final_actions"]
            dists = summary["final_distances"]
            mono = (all(b <= a + 1e-12 for a, b in zip(acts, acts[1:])) and
                    all(b <= a + 1e-12 for a, b in zip(dists, dists[1:])))
            lines.append((name, "trend_monotone", int(mono),
                          "PASS" if mono else "FAIL"))
    _write_csv(report_dir / "summary.csv",
               ["stage", "check", "value", "verdict"], lines)
    with open(report_dir / "summary.md", "w") as fh:
        fh.write("| stage | check | value | verdict |\n|---|---|---|---|\n")
        for row in lines:
            fh.write("| " + " | ".join(str(v) for v in row) + " |\n")
    for row in lines:
        print(f"{row[0]:>8s}  {row[1]:<24s} {row[3]}")
    if missing:
        for m in missing:
            print(f"missing artifact: {m}", file=sys.stderr)
        return 2
    return 3 if any(r[3] == "FAIL" for r in lines) else 0


def _direct(name):
    """Direct subcommand: run one suite into --out and print the summary."""

    def handler(args) -> int:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        fn, schema = STAGES[name]
        params = {k: getattr(args, k) for k in schema
                  if getattr(args, k, None) is not None}
        summary = fn(out, **params)
        print(json.dumps(summary, indent=1, default=float))
        bad = (summary.get("girth_violations", 0)
               + summary.get("alga_failures", 0)
               + summary.get("not_locked", 0)
               + sum(summary.get("terminal", [])))
        return 3 if bad else 0

    return handler


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mane-lab",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a JSON experiment config")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None)
    run_p.set_defaults(handler=cmd_run)

    rep_p = sub.add_parser("report", help="summarize a finished run")
    rep_p.add_argument("run_dir")
    rep_p.set_defaults(handler=cmd_report)

    for name, (_, schema) in STAGES.items():
        sp = sub.add_parser(name, help=f"run the {name} suite directly")
        sp.add_argument("--out", default=f"run-{name}")
        for key, kind in schema.items():
            if kind is list:
                sp.add_argument(f"--{key}", type=int, nargs="+",
                                default=None)
            else:
                sp.add_argument(f"--{key}", type=kind, default=None)
        sp.set_defaults(handler=_direct(name))
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except CliError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (AssertionError, ValueError) as exc:
        print(f"invariant failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
