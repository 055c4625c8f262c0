"""Command-line entry point.

    curiosity-critic run --method cc-neural --seed 1 --out results/
    curiosity-critic suite --seeds 1..5 --out results/ --jobs 4
    curiosity-critic verify-theory
    curiosity-critic plot --in results/ --fig error --out error.svg
    curiosity-critic heatmap --in results/ --window late --out late.svg

Exit codes: 0 ok, 2 usage or missing input, 3 numerical abort, 4 partial
suite failure, 5 theory violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from curiosity_critic import plotting, theory
from curiosity_critic.env import NOISE_FLOOR, STOCHASTIC_COL
from curiosity_critic.harness import (
    METHODS,
    NORMALIZERS,
    RunAborted,
    RunConfig,
    RunResult,
    run_experiment,
    run_suite,
    summarize,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_PARTIAL, EXIT_THEORY = 0, 2, 3, 4, 5

log = logging.getLogger("curiosity_critic")


def _fmt(x) -> str:
    # repr round-trips and never uses locale grouping.
    return "" if x is None else repr(float(x))


def parse_seeds(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    else:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def parse_methods(text: str) -> list[str]:
    if text == "all":
        return list(METHODS)
    names = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in names if m not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return names


def write_run(result: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{result.method}_seed{result.seed}"
    with open(out / f"run_{stem}.json", "w") as f:
        json.dump(result.to_dict(), f, sort_keys=True)
    with open(out / f"eval_{stem}.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["step", "mean_det_error"])
        for step_, err in result.eval_curve:
            w.writerow([step_, _fmt(err)])


def load_runs(directory: Path) -> dict[str, list[RunResult]]:
    runs: dict[str, list[RunResult]] = {}
    for path in sorted(directory.glob("run_*.json")):
        with open(path) as f:
            r = RunResult.from_dict(json.load(f))
        runs.setdefault(r.method, []).append(r)
    for rs in runs.values():
        rs.sort(key=lambda r: r.seed)
    return {m: runs[m] for m in METHODS if m in runs}


def write_table(summaries: dict, seeds: list[int], out: Path) -> None:
    with open(out / "table1.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["method"] + [f"seed{s}" for s in seeds] + ["mean", "std"])
        for m, s in summaries.items():
            w.writerow([m] + [_fmt(x) for x in s.finals] + [_fmt(s.mean), _fmt(s.std)])
    for m, s in summaries.items():
        with open(out / f"curve_{m}.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["step", "mean", "std"])
            for step_, mu, sd in s.mean_curve:
                w.writerow([step_, _fmt(mu), _fmt(sd)])
    summary = {
        m: {
            "finals": s.finals,
            "mean": s.mean,
            "std": s.std,
            "crossings": {str(k): v for k, v in s.crossings.items()},
            "crossings_per_seed": {str(k): v for k, v in s.crossings_per_seed.items()},
        }
        for m, s in summaries.items()
    }
    with open(out / "suite_summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)


def cmd_run(args) -> int:
    cfg = RunConfig(args.method, args.seed, total_steps=args.steps, normalizer=args.normalizer)
    try:
        result = run_experiment(cfg)
    except RunAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_run(result, Path(args.out))
    print(f"{args.method} seed {args.seed}: final mean deterministic error {result.final_error:.4f}")
    return EXIT_OK


def cmd_suite(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(method, seed, result):
        if result is None:
            print(f"{method} seed {seed}: FAILED", flush=True)
            return
        write_run(result, out)
        print(f"{method} seed {seed}: final {result.final_error:.4f}", flush=True)

    suite = run_suite(
        args.methods, args.seeds, total_steps=args.steps, jobs=args.jobs, progress=progress, normalizer=args.normalizer
    )
    write_table(suite.summaries, args.seeds, out)
    for m, s in suite.summaries.items():
        mean = "n/a" if s.mean is None else f"{s.mean:.3f} +- {s.std:.3f}"
        print(f"{m:12s} {mean}  first<3.0: {s.crossings.get(3.0)}")
    if suite.failures:
        for (m, s), msg in suite.failures.items():
            print(f"failed: {m} seed {s}: {msg}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_verify_theory(args) -> int:
    reports = theory.run_all(trials=args.trials, tmax=args.tmax, seed=args.seed)
    ok = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        note = f"  ({rep.note})" if rep.note else ""
        print(
            f"{status} {rep.name:24s} max|dev|={rep.max_deviation:.3e} "
            f"tol={rep.tolerance:.0e} cases={rep.cases}{note}"
        )
        if not rep.passed:
            ok = False
            if rep.offending is not None:
                print(json.dumps({"check": rep.name, "matrix": rep.offending}), file=sys.stderr)
    return EXIT_OK if ok else EXIT_THEORY


def _mean_std(rows):
    arr = np.asarray(rows, dtype=np.float64)
    return arr.mean(axis=0), arr.std(axis=0)


def _smoothed_fraction(r: RunResult, width: int = 10):
    steps = np.array([s for s, _ in r.det_fraction["curve"]])
    vals = np.array([v for _, v in r.det_fraction["curve"]])
    kernel = np.ones(min(width, vals.size)) / min(width, vals.size)
    sm = np.convolve(vals, kernel, mode="full")[: vals.size]
    counts = np.convolve(np.ones(vals.size), kernel, mode="full")[: vals.size]
    return steps, sm / counts


def cmd_plot(args) -> int:
    src = Path(args.inp)
    runs = load_runs(src) if src.is_dir() else {}
    if not runs:
        print(f"error: no run_*.json files in {src}", file=sys.stderr)
        return EXIT_USAGE
    total = max(r.total_steps for rs in runs.values() for r in rs)
    if args.fig == "error":
        series = {}
        for m, rs in runs.items():
            s = summarize(m, [r.seed for r in rs], {(m, r.seed): r for r in rs})
            series[m] = ([c[0] for c in s.mean_curve], [c[1] for c in s.mean_curve], [c[2] for c in s.mean_curve])
        svg = plotting.error_figure(series, total)
    elif args.fig == "fraction":
        series = {}
        for m, rs in runs.items():
            curves = [_smoothed_fraction(r) for r in rs]
            mu, sd = _mean_std([c[1] for c in curves])
            series[m] = (curves[0][0], np.clip(mu, 0, 1), sd)
        svg = plotting.fraction_figure(series, total)
    else:
        det, stoch = {}, {}
        for m, rs in runs.items():
            if m != "cc-neural" or not rs[0].critic_curves:
                continue
            steps = [c[0] for c in rs[0].critic_curves]
            mu, sd = _mean_std([[c[1] for c in r.critic_curves] for r in rs])
            det[m] = (steps, mu, sd)
            mu, sd = _mean_std([[c[2] for c in r.critic_curves] for r in rs])
            stoch[m] = (steps, mu, sd)
        if not det:
            print("error: no cc-neural runs with critic curves", file=sys.stderr)
            return EXIT_USAGE
        svg = plotting.critic_figure(det, stoch, total, NOISE_FLOOR)
    Path(args.out).write_text(svg)
    return EXIT_OK


WINDOWS = {"early": (0, 5000), "mid": (15000, 20000), "late": (30000, 35000)}


def visit_histogram(r: RunResult, window: str):
    if window == "last5k":
        return np.asarray(r.visit_log["last5k"])
    lo, hi = WINDOWS[window]
    for w in r.visit_log["windows"]:
        if w["start"] == lo and w["end"] == hi:
            return np.asarray(w["counts"])
    return None


def cmd_heatmap(args) -> int:
    src = Path(args.inp)
    runs = load_runs(src) if src.is_dir() else {}
    grids = {}
    for m, rs in runs.items():
        hs = [visit_histogram(r, args.window) for r in rs]
        hs = [h for h in hs if h is not None]
        if hs:
            grids[m] = np.sum(hs, axis=0)
    if not grids:
        print(f"error: no visit histograms for window {args.window!r} in {src}", file=sys.stderr)
        return EXIT_USAGE
    svg = plotting.heatmap_figure(grids, f"Visitation, {args.window} window", STOCHASTIC_COL)
    Path(args.out).write_text(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curiosity-critic", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one method for one seed")
    r.add_argument("--method", required=True, choices=METHODS)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--steps", type=int, default=35_000, help="main-loop steps (default: %(default)s)")
    r.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    r.add_argument(
        "--normalizer", choices=NORMALIZERS, default="centered", help="reward spread estimate (default: %(default)s)"
    )
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run methods x seeds and write table1.csv")
    s.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..5"), help="e.g. 1..5 or 1,3 (default: 1..5)")
    s.add_argument("--methods", type=parse_methods, default=list(METHODS), help="comma list or 'all' (default: all)")
    s.add_argument("--steps", type=int, default=35_000, help="main-loop steps (default: %(default)s)")
    s.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    s.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel runs (default: CPU count)")
    s.add_argument(
        "--normalizer", choices=NORMALIZERS, default="centered", help="reward spread estimate (default: %(default)s)"
    )
    s.set_defaults(func=cmd_suite)

    t = sub.add_parser("verify-theory", help="check the reward algebra numerically")
    t.add_argument("--trials", type=int, default=1000, help="random matrices per check (default: %(default)s)")
    t.add_argument("--tmax", type=int, default=32, help="largest horizon T (default: %(default)s)")
    t.add_argument("--seed", type=int, default=0, help="RNG seed (default: %(default)s)")
    t.set_defaults(func=cmd_verify_theory)

    pl = sub.add_parser("plot", help="render curves from run logs as SVG")
    pl.add_argument("--in", dest="inp", required=True, help="directory with run_*.json")
    pl.add_argument("--fig", required=True, choices=("error", "fraction", "critic"))
    pl.add_argument("--out", required=True, help="output .svg path")
    pl.set_defaults(func=cmd_plot)

    h = sub.add_parser("heatmap", help="render visitation heatmaps as SVG")
    h.add_argument("--in", dest="inp", required=True, help="directory with run_*.json")
    h.add_argument("--window", required=True, choices=("early", "mid", "late", "last5k"))
    h.add_argument("--out", required=True, help="output .svg path")
    h.set_defaults(func=cmd_heatmap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "steps", 100) <= 0 or getattr(args, "steps", 100) % 100:
        parser.error("--steps must be a positive multiple of 100")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    if getattr(args, "trials", 0) < 0:
        parser.error("--trials must be >= 0")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
