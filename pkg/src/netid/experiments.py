"""Experiment harness: scenario files, Monte-Carlo batches, result emission.

A scenario bundles everything needed to reproduce an identification
experiment: which nodes are excited, which estimator runs, the target
module, run/sample counts, noise variances, and the base PRNG seed.  Run k
of a scenario uses seed base_seed + k, so a scenario file pins the entire
Monte-Carlo study bit-for-bit: rerunning `montecarlo` with the same file
produces byte-identical CSV.

Runs execute on a thread pool (the simulation kernel releases the GIL);
aggregation sorts by run index first, so concurrency never affects output.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .direct import DirectModelStructure, estimate_direct
from .local import (DEFAULT_FIR_ORDER, DEFAULT_GRID_POINTS, MethodChoice,
                    ParametricFit, estimate_T_entries, fit_parametric,
                    plan_experiment_for_model, solve_sink_side,
                    solve_source_side)
from .iomap import true_T
from .model import ExcitationSpec, NetworkModel
from .sim import simulate
from .tf import FreqGrid

SCENARIO_FORMAT_VERSION = 1
_SCENARIO_KEYS = frozenset(
    {"excite", "method", "target", "runs", "samples", "seed", "r_var", "v_var"})


@dataclass(frozen=True)
class Scenario:
    """One reproducible identification experiment."""

    id: str
    excited_nodes: tuple[int, ...]
    method: str  # "direct" or "local"
    target: tuple[int, int]
    runs: int
    samples_per_run: int
    base_seed: int
    r_var: float = 1.0
    v_var: float = 1e-6

    def __post_init__(self):
        if self.method not in ("direct", "local"):
            raise ValueError(f"scenario {self.id}: method must be 'direct' "
                             f"or 'local', got {self.method!r}")
        if self.runs < 1 or self.samples_per_run < 1:
            raise ValueError(f"scenario {self.id}: runs and samples must be >= 1")
        if not self.excited_nodes:
            raise ValueError(f"scenario {self.id}: excited_nodes is empty")
        if any(n < 1 for n in self.excited_nodes):
            raise ValueError(f"scenario {self.id}: node indices are 1-based")
        if self.r_var < 0 or self.v_var < 0:
            raise ValueError(f"scenario {self.id}: variances must be >= 0")


class ScenarioFormatError(ValueError):
    """Raised for malformed scenario files, with a line number."""


def _scn_error(path, lineno: int, msg: str) -> ScenarioFormatError:
    return ScenarioFormatError(f"{path}:{lineno}: {msg}")


def load_scenarios(path) -> list[Scenario]:
    """Parse a scenario file.

    Format: a `format <version>` line, then `scenario <id>` blocks whose
    indented-or-not `key value` lines set: excite (node list), method,
    target (j i), runs, samples, seed, and optional r_var / v_var.
    Unknown keys are rejected with their line number.
    """
    text = Path(path).read_text()
    scenarios: list[Scenario] = []
    current_id: str | None = None
    current: dict = {}
    current_line = 0
    seen_version = False
    ids = set()

    def finish(lineno):
        if current_id is None:
            return
        missing = {"excite", "method", "target", "runs", "samples", "seed"} \
            - current.keys()
        if missing:
            raise _scn_error(path, current_line,
                             f"scenario {current_id} is missing keys: "
                             f"{', '.join(sorted(missing))}")
        scenarios.append(Scenario(
            id=current_id,
            excited_nodes=current["excite"],
            method=current["method"],
            target=current["target"],
            runs=current["runs"],
            samples_per_run=current["samples"],
            base_seed=current["seed"],
            r_var=current.get("r_var", 1.0),
            v_var=current.get("v_var", 1e-6)))

    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0], parts[1:]
        if key == "format":
            if seen_version:
                raise _scn_error(path, lineno, "duplicate format line")
            if len(args) != 1 or not args[0].isdigit():
                raise _scn_error(path, lineno, "expected: format <version>")
            if int(args[0]) != SCENARIO_FORMAT_VERSION:
                raise _scn_error(path, lineno,
                                 f"unsupported format version {args[0]} "
                                 f"(this build reads version "
                                 f"{SCENARIO_FORMAT_VERSION})")
            seen_version = True
            continue
        if not seen_version:
            raise _scn_error(path, lineno,
                             "file must start with a 'format <version>' line")
        if key == "scenario":
            if len(args) != 1:
                raise _scn_error(path, lineno, "expected: scenario <id>")
            finish(lineno)
            current_id = args[0]
            if current_id in ids:
                raise _scn_error(path, lineno,
                                 f"duplicate scenario id {current_id}")
            ids.add(current_id)
            current = {}
            current_line = lineno
            continue
        if current_id is None:
            raise _scn_error(path, lineno,
                             f"key {key!r} before any 'scenario' line")
        if key not in _SCENARIO_KEYS:
            raise _scn_error(path, lineno, f"unknown key {key!r}")
        if key in current:
            raise _scn_error(path, lineno,
                             f"duplicate key {key!r} in scenario {current_id}")
        try:
            if key == "excite":
                nodes = tuple(int(a) for a in args)
                if not nodes or any(n < 1 for n in nodes):
                    raise ValueError
                current[key] = tuple(sorted(set(nodes)))
            elif key == "method":
                if len(args) != 1 or args[0] not in ("direct", "local"):
                    raise ValueError
                current[key] = args[0]
            elif key == "target":
                if len(args) != 2:
                    raise ValueError
                current[key] = (int(args[0]), int(args[1]))
                if any(n < 1 for n in current[key]):
                    raise ValueError
            elif key in ("runs", "samples", "seed"):
                if len(args) != 1:
                    raise ValueError
                current[key] = int(args[0])
            else:  # r_var / v_var
                if len(args) != 1:
                    raise ValueError
                current[key] = float(args[0])
                if current[key] < 0:
                    raise ValueError
        except ValueError:
            raise _scn_error(path, lineno,
                             f"invalid value for {key!r}: {' '.join(args)!r}"
                             ) from None
    finish(len(lines) + 1)
    if not scenarios:
        raise _scn_error(path, max(len(lines), 1), "no scenarios in file")
    return scenarios


def default_scenario_file() -> Path:
    """Path of the scenario file shipped with the package."""
    return Path(__file__).parent / "data" / "case_study_scenarios.scn"


def default_network_file() -> Path:
    """Path of the 20-node case-study network shipped with the package."""
    return Path(__file__).parent / "data" / "case_study_20.net"


# -- Monte-Carlo ------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    """Outcome of one Monte-Carlo run: two target coefficients, the
    informativity verdict, and the error message if the estimator failed."""

    run: int
    a1: float
    a2: float
    informative: bool
    error: str | None = None


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    """Aggregated Monte-Carlo outcome for one scenario."""

    scenario: Scenario
    runs: tuple[RunResult, ...]
    mean: tuple[float, float]
    std: tuple[float, float]
    informative_rate: float
    failed_runs: int


@dataclass(frozen=True, eq=False)
class ResultTable:
    rows: tuple[ScenarioResult, ...]

    def for_scenario(self, scenario_id: str) -> ScenarioResult:
        for row in self.rows:
            if row.scenario.id == scenario_id:
                return row
        raise KeyError(f"no results for scenario {scenario_id}")


def _worker_count(explicit: int | None = None) -> int:
    cap = os.environ.get("NETID_WORKERS")
    n = explicit if explicit is not None else min(os.cpu_count() or 1, 8)
    if cap is not None:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"NETID_WORKERS must be an integer, got {cap!r}")
    return max(n, 1)


def _aggregate(scenario: Scenario, results: list[RunResult]) -> ScenarioResult:
    results.sort(key=lambda r: r.run)
    ok = [(r.a1, r.a2) for r in results if r.error is None]
    if ok:
        arr = np.array(ok)
        mean = (float(arr[:, 0].mean()), float(arr[:, 1].mean()))
        std = (float(arr[:, 0].std(ddof=1)) if len(ok) > 1 else 0.0,
               float(arr[:, 1].std(ddof=1)) if len(ok) > 1 else 0.0)
    else:
        mean = (math.nan, math.nan)
        std = (math.nan, math.nan)
    n_inf = sum(1 for r in results if r.error is None and r.informative)
    return ScenarioResult(
        scenario=scenario, runs=tuple(results), mean=mean, std=std,
        informative_rate=n_inf / len(results) if results else math.nan,
        failed_runs=sum(1 for r in results if r.error is not None))


def run_monte_carlo(scenario: Scenario, model: NetworkModel,
                    runs: int | None = None, samples: int | None = None,
                    workers: int | None = None,
                    fir_order: int = DEFAULT_FIR_ORDER,
                    grid_points: int = DEFAULT_GRID_POINTS,
                    backend: str | None = None) -> ScenarioResult:
    """Run a scenario's Monte-Carlo batch and aggregate it.

    Run k uses seed base_seed + k; per-run estimator failures are recorded
    in the run's row rather than aborting the batch.  `runs` and `samples`
    override the scenario's counts (the CLI default of 100 runs keeps
    batches fast; scenario files carry the full counts).
    """
    n_runs = runs if runs is not None else scenario.runs
    n_samples = samples if samples is not None else scenario.samples_per_run
    if n_runs < 1 or n_samples < 1:
        raise ValueError("runs and samples must be >= 1")
    j, i = scenario.target

    if scenario.method == "direct":
        structure = DirectModelStructure.from_model(model, j)

        def one_run(k: int) -> RunResult:
            spec = ExcitationSpec(scenario.excited_nodes, N=n_samples,
                                  seed=scenario.base_seed + k,
                                  r_variance=scenario.r_var,
                                  v_variance=scenario.v_var)
            record = simulate(model, spec, backend=backend)
            est = estimate_direct(record, structure)
            coeffs = est.coefficients_for(i)
            a1 = float(coeffs[0]) if coeffs.size > 0 else math.nan
            a2 = float(coeffs[1]) if coeffs.size > 1 else math.nan
            return RunResult(run=k, a1=a1, a2=a2, informative=est.informative)
    else:
        def one_run(k: int) -> RunResult:
            est = run_local_pipeline(
                model, scenario.target, samples=n_samples,
                seed=scenario.base_seed + k, fir_order=fir_order,
                grid_points=grid_points, r_var=scenario.r_var,
                v_var=scenario.v_var, backend=backend)
            c = est.coefficients
            a1 = float(c[0]) if c.size > 0 else math.nan
            a2 = float(c[1]) if c.size > 1 else math.nan
            return RunResult(run=k, a1=a1, a2=a2,
                             informative=est.dropped_points == 0)

    def safe_run(k: int) -> RunResult:
        try:
            return one_run(k)
        except Exception as e:  # recorded, not fatal
            return RunResult(run=k, a1=math.nan, a2=math.nan,
                             informative=False, error=str(e))

    with ThreadPoolExecutor(max_workers=_worker_count(workers)) as pool:
        results = list(pool.map(safe_run, range(n_runs)))
    return _aggregate(scenario, results)


# -- local-method pipeline ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModuleEstimate:
    """End-to-end local-method output for one target module."""

    target: tuple[int, int]
    band: tuple[int, int]
    coefficients: np.ndarray
    plan: MethodChoice
    entry_fit_scores: dict[tuple[int, int], float]
    dropped_points: int
    residual_rms: float
    solved_modules: dict[tuple[int, int], ParametricFit]

    @property
    def tf(self):
        return self.solved_modules[self.target].tf


def _band_of(model: NetworkModel, j: int, i: int) -> tuple[int, int]:
    tf = model.edge(j, i)
    if tf.den.degree > 0:
        raise ValueError(f"module ({j},{i}) is rational; parametric fitting "
                         f"covers FIR modules only")
    return (tf.relative_degree, tf.num.degree)


def run_local_pipeline(model: NetworkModel, target: tuple[int, int],
                       samples: int = 10_000, seed: int = 0,
                       fir_order: int = DEFAULT_FIR_ORDER,
                       grid_points: int = DEFAULT_GRID_POINTS,
                       r_var: float = 1.0, v_var: float = 1e-6,
                       exact_T: bool = False,
                       backend: str | None = None) -> ModuleEstimate:
    """Identify one module with the local two-step method.

    Stages: plan the experiment from local topology, simulate the planned
    excitations, estimate the needed T entries as high-order FIR models,
    solve the per-frequency linear systems on the chosen side, and fit the
    target module's band coefficients to the solved samples.  Any stage
    error is re-raised with the stage name prefixed.

    With exact_T=True the simulation and estimation stages are bypassed and
    the solve runs on exact samples of T (an oracle path used to validate
    the algebra independently of estimation error).
    """
    j, i = int(target[0]), int(target[1])

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as e:
            raise RuntimeError(f"[{name}] {e}") from e

    plan = stage("plan", plan_experiment_for_model, model, (j, i))
    grid = FreqGrid.uniform(grid_points)

    if exact_T:
        tmat = stage("truth", true_T, model, plan.rows, plan.cols, grid)
        fit_scores: dict[tuple[int, int], float] = {}
    else:
        spec = ExcitationSpec(plan.excite_set, N=samples, seed=seed,
                              r_variance=r_var, v_variance=v_var)
        record = stage("simulate", simulate, model, spec, backend=backend)
        est = stage("estimate", estimate_T_entries, record, plan.rows,
                    plan.cols, fir_order=fir_order, grid=grid)
        tmat = est.freq
        fit_scores = est.entry_fit_scores()

    if plan.which == "source":
        solved = stage("solve", solve_source_side, tmat, i, plan.measure_set)
    else:
        solved = stage("solve", solve_sink_side, tmat, j, plan.excite_set)

    fits: dict[tuple[int, int], ParametricFit] = {}
    for to_node, from_node in solved.modules:
        if not model.has_edge(to_node, from_node):
            continue
        band = _band_of(model, to_node, from_node)
        fits[(to_node, from_node)] = stage(
            "fit", fit_parametric,
            solved.module_samples(to_node, from_node), band, grid=solved.grid)
    if (j, i) not in fits:
        raise RuntimeError(f"[fit] target module ({j},{i}) was not among the "
                           f"solved modules")
    target_fit = fits[(j, i)]
    return ModuleEstimate(
        target=(j, i), band=target_fit.band,
        coefficients=target_fit.coefficients, plan=plan,
        entry_fit_scores=fit_scores, dropped_points=solved.dropped_points,
        residual_rms=target_fit.residual_rms, solved_modules=fits)


# -- result emission ------------------------------------------------------------


CSV_HEADER = ("scenario_id", "run", "a1", "a2", "informative")


def _fmt_float(x: float) -> str:
    return repr(float(x))


def emit_results(table: ResultTable, out_dir, format: str = "csv") -> list[Path]:
    """Write per-run results to out_dir; returns the paths written.

    csv: one `results.csv` with columns scenario_id, run, a1, a2,
    informative — floats serialized with full round-trip precision so
    identical batches produce byte-identical files.
    svg: one scatter plot per scenario in (a1, a2) space.
    """
    if not table.rows:
        raise ValueError("result table is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if format == "csv":
        path = out / "results.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in table.rows:
                for rr in row.runs:
                    writer.writerow([
                        row.scenario.id, rr.run, _fmt_float(rr.a1),
                        _fmt_float(rr.a2),
                        "true" if rr.informative else "false"])
        written.append(path)
    elif format == "svg":
        written.extend(_emit_scatter_svgs(table, out))
    else:
        raise ValueError(f"unknown format {format!r}; expected 'csv' or 'svg'")
    return written


def _emit_scatter_svgs(table: ResultTable, out: Path) -> list[Path]:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise RuntimeError(
            "svg output needs matplotlib; install the 'plot' extra") from None
    written = []
    for row in table.rows:
        a1 = np.array([rr.a1 for rr in row.runs if rr.error is None])
        a2 = np.array([rr.a2 for rr in row.runs if rr.error is None])
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.scatter(a1, a2, s=12, alpha=0.6, edgecolors="none")
        ax.set_xlabel(r"$\hat{a}_1$")
        ax.set_ylabel(r"$\hat{a}_2$")
        ax.set_title(f"scenario {row.scenario.id}: "
                     f"{len(a1)} runs, informative rate "
                     f"{row.informative_rate:.2f}")
        ax.grid(True, alpha=0.3)
        path = out / f"scatter_scenario_{row.scenario.id}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


def read_results(path) -> dict[str, list[RunResult]]:
    """Parse an emitted CSV back into per-scenario run lists (round-trip of
    everything emit_results writes per run)."""
    out: dict[str, list[RunResult]] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(CSV_HEADER):
            raise ValueError(f"{path}: unexpected CSV header {header}")
        for fields in reader:
            if len(fields) != len(CSV_HEADER):
                raise ValueError(f"{path}: malformed row {fields}")
            sid, run, a1, a2, informative = fields
            out.setdefault(sid, []).append(RunResult(
                run=int(run), a1=float(a1), a2=float(a2),
                informative=informative == "true"))
    return out
