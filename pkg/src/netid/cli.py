"""Command-line interface.

Subcommands:

* simulate   - run the network simulator and dump node signals to CSV
* direct     - one-shot direct (prediction-error) estimate of a node's modules
* local      - local two-step identification of one module
* montecarlo - scenario batches with CSV/SVG emission
* truth      - exact frequency responses of T (and the target module of G)
* report     - summarize / re-render a previously emitted results.csv

Exit status is 0 on success and 1 on any error; error messages carry the
failing stage's label when one applies.  NETID_BACKEND selects the
simulation kernel ("numba" or "numpy"); NETID_WORKERS caps Monte-Carlo
concurrency.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .direct import DirectModelStructure, estimate_direct
from .experiments import (ResultTable, Scenario, default_network_file,
                          default_scenario_file, emit_results, load_scenarios,
                          read_results, run_local_pipeline, run_monte_carlo)
from .local import plan_experiment_for_model
from .iomap import true_T
from .model import ExcitationSpec, load_network
from .sim import simulate
from .tf import FreqGrid


def _load_model(args):
    path = Path(args.network) if args.network else default_network_file()
    return load_network(path)


def _select_scenarios(value: str | None) -> list[Scenario]:
    """--scenario accepts a scenario file path or an id in the shipped file."""
    if value is None:
        return load_scenarios(default_scenario_file())
    if Path(value).exists():
        return load_scenarios(Path(value))
    scenarios = [s for s in load_scenarios(default_scenario_file())
                 if s.id == value]
    if not scenarios:
        raise ValueError(
            f"--scenario {value!r} is neither a file nor a scenario id in "
            f"{default_scenario_file().name}")
    return scenarios


def _parse_target(text: str) -> tuple[int, int]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError(f"--target expects 'j,i', got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _cmd_simulate(args) -> int:
    model = _load_model(args)
    if args.scenario is not None:
        scn = _select_scenarios(args.scenario)[0]
        excited, r_var, v_var = scn.excited_nodes, scn.r_var, scn.v_var
    else:
        excited, r_var, v_var = tuple(range(1, model.L + 1)), 1.0, 1e-6
    spec = ExcitationSpec(excited, N=args.samples, seed=args.seed,
                          r_variance=r_var, v_variance=v_var)
    record = simulate(model, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "signals.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"w{j}" for j in range(1, model.L + 1)])
        for t in range(record.N):
            writer.writerow([t] + [repr(float(x)) for x in record.w[:, t]])
    print(f"simulated {model.L} nodes x {record.N} samples "
          f"(excited {','.join(map(str, excited))}, seed {record.seed})")
    print(f"wrote {path}")
    return 0


def _cmd_direct(args) -> int:
    model = _load_model(args)
    scn = _select_scenarios(args.scenario)[0]
    samples = args.samples if args.samples is not None else scn.samples_per_run
    seed = args.seed if args.seed is not None else scn.base_seed
    j, i = scn.target
    structure = DirectModelStructure.from_model(model, j)
    spec = ExcitationSpec(scn.excited_nodes, N=samples, seed=seed,
                          r_variance=scn.r_var, v_variance=scn.v_var)
    est = estimate_direct(simulate(model, spec), structure)
    print(f"scenario {scn.id}: direct estimate of modules into node {j} "
          f"({samples} samples, seed {seed})")
    for node in structure.regressor_nodes:
        coeffs = ", ".join(f"{c:.6g}" for c in est.coefficients_for(node))
        print(f"  module ({j},{node}): [{coeffs}]")
    print(f"  gram condition {est.gram_condition:.4g}  "
          f"informative {'yes' if est.informative else 'NO'}")
    return 0


def _cmd_local(args) -> int:
    model = _load_model(args)
    target = _parse_target(args.target)
    est = run_local_pipeline(
        model, target, samples=args.samples, seed=args.seed,
        fir_order=args.fir_order, grid_points=args.grid_points,
        exact_T=args.exact_t)
    plan = est.plan
    print(f"target module {target}: {plan.which}-side solve "
          f"(excite {{{','.join(map(str, plan.excite_set))}}}, "
          f"measure {{{','.join(map(str, plan.measure_set))}}}, "
          f"{plan.entry_count} T entries)")
    if est.entry_fit_scores:
        worst = min(est.entry_fit_scores.values())
        print(f"  worst T-entry fit score {worst:.6f} over "
              f"{len(est.entry_fit_scores)} entries")
    if est.dropped_points:
        print(f"  dropped {est.dropped_points} ill-conditioned grid points")
    coeffs = ", ".join(f"{c:.6g}" for c in est.coefficients)
    d0, d1 = est.band
    print(f"  coefficients (delays {d0}..{d1}): [{coeffs}]")
    return 0


def _cmd_montecarlo(args) -> int:
    model = _load_model(args)
    scenarios = _select_scenarios(args.scenario)
    rows = []
    for scn in scenarios:
        if args.seed is not None:
            scn = Scenario(id=scn.id, excited_nodes=scn.excited_nodes,
                           method=scn.method, target=scn.target,
                           runs=scn.runs, samples_per_run=scn.samples_per_run,
                           base_seed=args.seed, r_var=scn.r_var,
                           v_var=scn.v_var)
        row = run_monte_carlo(scn, model, runs=args.runs,
                              samples=args.samples,
                              fir_order=args.fir_order,
                              grid_points=args.grid_points)
        rows.append(row)
        m1, m2 = row.mean
        s1, s2 = row.std
        print(f"scenario {scn.id}: mean ({m1:.4f}, {m2:.4f})  "
              f"std ({s1:.4g}, {s2:.4g})  informative "
              f"{row.informative_rate:.0%}  runs {len(row.runs)}"
              + (f"  failed {row.failed_runs}" if row.failed_runs else ""))
    table = ResultTable(rows=tuple(rows))
    for path in emit_results(table, args.out, format=args.format):
        print(f"wrote {path}")
    return 0


def _cmd_truth(args) -> int:
    model = _load_model(args)
    target = _parse_target(args.target)
    plan = plan_experiment_for_model(model, target)
    grid = FreqGrid.uniform(args.grid_points)
    tmat = true_T(model, plan.rows, plan.cols, grid)
    j, i = target
    g_true = model.edge(j, i).eval_at(grid.as_array())
    header = ["omega"]
    for r in tmat.rows:
        for c in tmat.cols:
            header += [f"T_{r}_{c}_re", f"T_{r}_{c}_im"]
    header += [f"G_{j}_{i}_re", f"G_{j}_{i}_im"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "truth.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        om = grid.as_array()
        for k in range(len(grid)):
            row = [repr(float(om[k]))]
            for r in range(len(tmat.rows)):
                for c in range(len(tmat.cols)):
                    z = tmat.values[k, r, c]
                    row += [repr(float(z.real)), repr(float(z.imag))]
            row += [repr(float(g_true[k].real)), repr(float(g_true[k].imag))]
            writer.writerow(row)
    print(f"wrote {path} ({len(grid)} frequencies, "
          f"{len(tmat.rows)}x{len(tmat.cols)} T entries)")
    return 0


def _cmd_report(args) -> int:
    path = Path(args.out) / "results.csv"
    if not path.exists():
        raise FileNotFoundError(f"no results.csv under {args.out}; run "
                                f"'netid montecarlo --out {args.out}' first")
    per_scenario = read_results(path)
    print(f"{'scenario':>8}  {'runs':>5}  {'mean a1':>9}  {'mean a2':>9}  "
          f"{'std a1':>9}  {'std a2':>9}  {'informative':>11}")
    for sid, runs in per_scenario.items():
        a1 = np.array([r.a1 for r in runs])
        a2 = np.array([r.a2 for r in runs])
        inf_rate = sum(r.informative for r in runs) / len(runs)
        print(f"{sid:>8}  {len(runs):>5}  {np.nanmean(a1):>9.4f}  "
              f"{np.nanmean(a2):>9.4f}  {np.nanstd(a1):>9.4g}  "
              f"{np.nanstd(a2):>9.4g}  {inf_rate:>10.0%}")
    if args.format == "svg":
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            raise RuntimeError("svg output needs matplotlib; install the "
                               "'plot' extra") from None
        for sid, runs in per_scenario.items():
            fig, ax = plt.subplots(figsize=(5.0, 4.0))
            ax.scatter([r.a1 for r in runs], [r.a2 for r in runs],
                       s=12, alpha=0.6, edgecolors="none")
            ax.set_xlabel(r"$\hat{a}_1$")
            ax.set_ylabel(r"$\hat{a}_2$")
            ax.set_title(f"scenario {sid}: {len(runs)} runs")
            ax.grid(True, alpha=0.3)
            svg = Path(args.out) / f"scatter_scenario_{sid}.svg"
            fig.savefig(svg, format="svg")
            plt.close(fig)
            print(f"wrote {svg}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netid",
        description="identification of single modules in dynamic networks")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", metavar="FILE", default=None,
                        help="network file (default: shipped 20-node case study)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="simulate the network and dump signals")
    p.add_argument("--scenario", metavar="FILE|ID", default=None,
                   help="take excitation set and variances from a scenario")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="netid-out", metavar="DIR")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("direct", parents=[common],
                       help="one-shot direct estimate for a scenario")
    p.add_argument("--scenario", metavar="FILE|ID", default="1")
    p.add_argument("--samples", type=int, default=None,
                   help="override the scenario's sample count")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario's base seed")
    p.set_defaults(fn=_cmd_direct)

    p = sub.add_parser("local", parents=[common],
                       help="local two-step identification of one module")
    p.add_argument("--target", default="3,4", metavar="J,I",
                   help="module to identify, sink,source (default 3,4)")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fir-order", type=int, default=150)
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--exact-t", action="store_true",
                   help="solve from exact T samples (oracle path, no noise)")
    p.set_defaults(fn=_cmd_local)

    p = sub.add_parser("montecarlo", parents=[common],
                       help="Monte-Carlo scenario batches")
    p.add_argument("--scenario", metavar="FILE|ID", default=None,
                   help="scenario file or single id (default: all shipped)")
    p.add_argument("--runs", type=int, default=100,
                   help="runs per scenario (default 100; scenario files "
                        "carry the full counts)")
    p.add_argument("--samples", type=int, default=None,
                   help="override samples per run")
    p.add_argument("--seed", type=int, default=None,
                   help="override every scenario's base seed")
    p.add_argument("--fir-order", type=int, default=150)
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--out", default="netid-out", metavar="DIR")
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.set_defaults(fn=_cmd_montecarlo)

    p = sub.add_parser("truth", parents=[common],
                       help="exact T/G frequency responses for a target")
    p.add_argument("--target", default="3,4", metavar="J,I")
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--out", default="netid-out", metavar="DIR")
    p.set_defaults(fn=_cmd_truth)

    p = sub.add_parser("report", parents=[common],
                       help="summarize an emitted results.csv")
    p.add_argument("--out", default="netid-out", metavar="DIR")
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.set_defaults(fn=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
