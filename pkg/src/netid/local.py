"""Local two-step identification of a single module.

To identify the module from node i into node j it is enough to work with a
small submatrix of the network response T = (I - G)^-1, because T's rows
and columns satisfy exact local relations:

* source side - with N_i+ the out-neighbors of i,
      T[N_i+, i] = T[N_i+, N_i+] . G[N_i+, i],
  so exciting {i} u N_i+ and measuring N_i+ determines every module
  leaving i by a per-frequency linear solve;
* sink side - with N_j- the in-neighbors of j,
      T[j, N_j-] = G[j, N_j-] . T[N_j-, N_j-],
  so exciting N_j- and measuring {j} u N_j- determines every module
  entering j by a per-frequency row solve.

The cheaper side is chosen by comparing the number of T entries each one
needs: d(1+d) with d the relevant degree.  The T entries themselves are
estimated open-loop (excitations are external, so w regressed on r is an
ordinary MISO problem) as high-order FIR models, evaluated on a frequency
grid, and the solved samples are finally reduced to the low-order module
coefficients by linear least squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .iomap import FreqResponseMatrix
from .model import NetworkModel, SignalRecord
from .tf import FreqGrid, RationalTF

#: Grid points whose local solve exceeds this condition number are dropped.
CONDITION_LIMIT = 1e10
#: Fraction of droppable grid points beyond which the solve is rejected.
MAX_DROP_FRACTION = 0.2
#: Default FIR order for the T-entry estimates (lags 0..order).
DEFAULT_FIR_ORDER = 150
#: Default number of frequency grid points.
DEFAULT_GRID_POINTS = 100


def _node_set(nodes: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(n) for n in nodes)))
    if any(n < 1 for n in out):
        raise ValueError("node indices are 1-based")
    return out


@dataclass(frozen=True)
class MethodChoice:
    """Experiment plan for one target module (j, i).

    which is "source" (solve for all modules leaving i) or "sink" (solve
    for all modules entering j); entry_count is the number of T entries
    the chosen side must estimate.
    """

    target: tuple[int, int]
    which: str
    excite_set: tuple[int, ...]
    measure_set: tuple[int, ...]
    entry_count: int

    def __post_init__(self):
        if self.which not in ("source", "sink"):
            raise ValueError("which must be 'source' or 'sink'")

    @property
    def rows(self) -> tuple[int, ...]:
        """Row index set of the T submatrix to estimate."""
        return self.measure_set

    @property
    def cols(self) -> tuple[int, ...]:
        """Column index set of the T submatrix to estimate."""
        return self.excite_set


def plan_experiment(target: tuple[int, int],
                    out_neighbors_of_source: Iterable[int],
                    in_neighbors_of_sink: Iterable[int]) -> MethodChoice:
    """Choose the cheaper side for identifying module (j, i).

    Consumes only the local topology: the out-neighbors of the source i and
    the in-neighbors of the sink j.  Nothing else about the network affects
    the plan, which is what makes the method local.

    The source side needs the (d_i+ x d_i+) submatrix plus one column, i.e.
    d_i+ (1 + d_i+) entries, exciting {i} u N_i+ and measuring N_i+.  The
    sink side needs (1 + d_j-) d_j- entries, exciting N_j- and measuring
    {j} u N_j-.  Ties go to the source side.
    """
    j, i = int(target[0]), int(target[1])
    out_nbrs = _node_set(out_neighbors_of_source)
    in_nbrs = _node_set(in_neighbors_of_sink)
    if j not in out_nbrs or i not in in_nbrs:
        raise ValueError(
            f"target module ({j},{i}) is not present in the provided local "
            f"topology: need {j} among the source's out-neighbors and {i} "
            f"among the sink's in-neighbors")
    d_out = len(out_nbrs)
    d_in = len(in_nbrs)
    if d_out <= d_in:
        return MethodChoice(
            target=(j, i), which="source",
            excite_set=_node_set(out_nbrs + (i,)),
            measure_set=out_nbrs,
            entry_count=d_out * (1 + d_out))
    return MethodChoice(
        target=(j, i), which="sink",
        excite_set=in_nbrs,
        measure_set=_node_set(in_nbrs + (j,)),
        entry_count=(d_in + 1) * d_in)


def plan_experiment_for_model(model: NetworkModel,
                              target: tuple[int, int]) -> MethodChoice:
    """Plan from a model by extracting just the two local neighbor sets."""
    j, i = int(target[0]), int(target[1])
    if not model.has_edge(j, i):
        raise ValueError(f"model has no module ({j},{i})")
    return plan_experiment((j, i), model.out_neighbors(i), model.in_neighbors(j))


@dataclass(frozen=True, eq=False)
class TSubmatrixEstimate:
    """FIR estimates of a T submatrix, with grid samples and fit scores.

    fit_scores[k] is the normalized output fit of row node rows[k]'s MISO
    regression, 1 - ||w - w_hat|| / ||w - mean(w)||; every entry in that row
    shares the score, since the row is estimated jointly.
    """

    freq: FreqResponseMatrix
    coefficients: np.ndarray  # (n_rows, n_cols, fir_order + 1)
    fit_scores: tuple[float, ...]
    fir_order: int

    @property
    def rows(self) -> tuple[int, ...]:
        return self.freq.rows

    @property
    def cols(self) -> tuple[int, ...]:
        return self.freq.cols

    @property
    def grid(self) -> FreqGrid:
        return self.freq.grid

    def fit_score(self, row_node: int) -> float:
        return self.fit_scores[self.rows.index(row_node)]

    def entry_fit_scores(self) -> dict[tuple[int, int], float]:
        """Fit score per estimated entry (row and column node labels).

        Entries of a row share the row's score because the row is one joint
        MISO regression."""
        return {(r, c): self.fit_scores[k]
                for k, r in enumerate(self.rows) for c in self.cols}

    def entry_tf(self, row_node: int, col_node: int) -> RationalTF:
        """Estimated T entry as an FIR transfer function."""
        r = self.rows.index(row_node)
        c = self.cols.index(col_node)
        return RationalTF(self.coefficients[r, c])


def estimate_T_entries(record: SignalRecord, rows: Iterable[int],
                       cols: Iterable[int],
                       fir_order: int = DEFAULT_FIR_ORDER,
                       grid: FreqGrid | None = None) -> TSubmatrixEstimate:
    """Open-loop MISO estimation of T entries from excitations to nodes.

    Each row node's signal w_k is regressed jointly on lags 0..fir_order of
    every column node's excitation r_l (ordinary least squares; the
    excitations are external and known, so this is an open-loop problem
    regardless of the network's feedback loops).
    """
    row_nodes = _node_set(rows)
    col_nodes = _node_set(cols)
    if not row_nodes or not col_nodes:
        raise ValueError("rows and cols must be nonempty")
    if fir_order < 1:
        raise ValueError("fir_order must be at least 1")
    if grid is None:
        grid = FreqGrid.uniform(DEFAULT_GRID_POINTS)
    for c in col_nodes:
        if not np.any(record.node_excitation(c)):
            raise ValueError(
                f"column node {c} is not excited in the record; estimating "
                f"T entries requires an external excitation at every column")

    P = fir_order
    N = record.N
    if N <= P:
        raise ValueError(f"record too short: {N} samples <= FIR order {P}")
    n_params = len(col_nodes) * (P + 1)
    phi_cols = []
    for c in col_nodes:
        rc = record.node_excitation(c)
        for lag in range(P + 1):
            phi_cols.append(rc[P - lag:N - lag])
    Phi = np.stack(phi_cols, axis=1)
    Y = np.stack([record.node_output(m)[P:] for m in row_nodes], axis=1)
    theta, _, rank, _ = np.linalg.lstsq(Phi, Y, rcond=None)
    if rank < n_params:
        raise ValueError(
            f"T-entry regressor is rank-deficient ({rank} < {n_params}); "
            f"the column excitations are not sufficiently independent")

    fits = []
    Yhat = Phi @ theta
    for k in range(len(row_nodes)):
        err = np.linalg.norm(Y[:, k] - Yhat[:, k])
        spread = np.linalg.norm(Y[:, k] - Y[:, k].mean())
        fits.append(1.0 - err / spread if spread > 0.0 else
                    (1.0 if err == 0.0 else 0.0))

    coeffs = np.ascontiguousarray(
        theta.T.reshape(len(row_nodes), len(col_nodes), P + 1))
    om = grid.as_array()
    basis = np.exp(-1j * np.outer(om, np.arange(P + 1)))  # (K, P+1)
    values = np.einsum("rcd,kd->krc", coeffs, basis)
    freq = FreqResponseMatrix(rows=row_nodes, cols=col_nodes, grid=grid,
                              values=values)
    return TSubmatrixEstimate(freq=freq, coefficients=coeffs,
                              fit_scores=tuple(float(f) for f in fits),
                              fir_order=P)


@dataclass(frozen=True, eq=False)
class LocalSolveResult:
    """Per-frequency module responses recovered by a local solve.

    modules[k] = (to_node, from_node) labels column k of samples; grid holds
    the retained frequency points (ill-conditioned points are dropped).
    """

    modules: tuple[tuple[int, int], ...]
    grid: FreqGrid
    samples: np.ndarray  # (n_kept_points, n_modules) complex
    dropped_points: int
    total_points: int
    max_condition: float

    def module_samples(self, to_node: int, from_node: int) -> np.ndarray:
        k = self.modules.index((to_node, from_node))
        return self.samples[:, k]


TMatrixLike = Union[FreqResponseMatrix, TSubmatrixEstimate]


def _as_freq_matrix(tmat: TMatrixLike) -> FreqResponseMatrix:
    return tmat.freq if isinstance(tmat, TSubmatrixEstimate) else tmat


def _solve_filtered(A: np.ndarray, B: np.ndarray, grid: FreqGrid,
                    condition_limit: float, max_drop_fraction: float,
                    side_label: str) -> tuple[np.ndarray, FreqGrid, int, float]:
    """Per-frequency solve of A[k] x = B[k], dropping ill-conditioned points."""
    conds = np.linalg.cond(A)
    keep = np.isfinite(conds) & (conds <= condition_limit)
    dropped = int(np.count_nonzero(~keep))
    total = len(grid)
    if dropped > max_drop_fraction * total:
        raise ValueError(
            f"{side_label} solve is ill-conditioned at {dropped} of {total} "
            f"grid points (limit {max_drop_fraction:.0%}); the invertibility "
            f"premise of the local method fails for this experiment")
    X = np.linalg.solve(A[keep], B[keep])
    kept_grid = FreqGrid(grid.as_array()[keep])
    max_cond = float(conds[keep].max()) if np.any(keep) else 0.0
    return X[..., 0], kept_grid, dropped, max_cond


def solve_source_side(tmat: TMatrixLike, source: int,
                      out_neighbors: Iterable[int],
                      condition_limit: float = CONDITION_LIMIT,
                      max_drop_fraction: float = MAX_DROP_FRACTION
                      ) -> LocalSolveResult:
    """Recover all modules leaving `source` from T entries.

    At each grid frequency solves T[N+, N+] x = T[N+, source] for
    x = G[N+, source], where N+ = out_neighbors.
    """
    freq = _as_freq_matrix(tmat)
    nbrs = _node_set(out_neighbors)
    if not nbrs:
        raise ValueError(f"source node {source} has no out-neighbors")
    A = freq.submatrix(nbrs, nbrs)
    b = freq.submatrix(nbrs, (source,))
    X, kept, dropped, max_cond = _solve_filtered(
        A, b, freq.grid, condition_limit, max_drop_fraction, "source-side")
    return LocalSolveResult(
        modules=tuple((m, source) for m in nbrs),
        grid=kept, samples=X, dropped_points=dropped,
        total_points=len(freq.grid), max_condition=max_cond)


def solve_sink_side(tmat: TMatrixLike, sink: int,
                    in_neighbors: Iterable[int],
                    condition_limit: float = CONDITION_LIMIT,
                    max_drop_fraction: float = MAX_DROP_FRACTION
                    ) -> LocalSolveResult:
    """Recover all modules entering `sink` from T entries.

    At each grid frequency solves the row system
    x T[N-, N-] = T[sink, N-] for x = G[sink, N-], where N- = in_neighbors.
    """
    freq = _as_freq_matrix(tmat)
    nbrs = _node_set(in_neighbors)
    if not nbrs:
        raise ValueError(f"sink node {sink} has no in-neighbors")
    A = freq.submatrix(nbrs, nbrs)
    b = freq.submatrix((sink,), nbrs)  # (K, 1, d)
    At = np.transpose(A, (0, 2, 1))
    bt = np.transpose(b, (0, 2, 1))  # (K, d, 1)
    X, kept, dropped, max_cond = _solve_filtered(
        At, bt, freq.grid, condition_limit, max_drop_fraction, "sink-side")
    return LocalSolveResult(
        modules=tuple((sink, k) for k in nbrs),
        grid=kept, samples=X, dropped_points=dropped,
        total_points=len(freq.grid), max_condition=max_cond)


@dataclass(frozen=True, eq=False)
class ParametricFit:
    """FIR band coefficients fitted to frequency-response samples."""

    band: tuple[int, int]
    coefficients: np.ndarray  # ascending delay over the band
    residual_rms: float

    @property
    def tf(self) -> RationalTF:
        d0, _ = self.band
        full = np.concatenate([np.zeros(d0), self.coefficients])
        return RationalTF(full if full.size else [0.0])


def fit_parametric(samples: np.ndarray, band: tuple[int, int],
                   grid: FreqGrid | None = None) -> ParametricFit:
    """Fit band coefficients theta to complex samples g(omega) by minimizing
    sum_omega |sum_d theta_d e^{-j d omega} - g(omega)|^2.

    The complex residual is stacked into real and imaginary parts, making
    this an ordinary real least-squares problem with real-valued theta.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim != 1:
        raise ValueError("samples must be a 1-D complex sequence")
    d0, d1 = int(band[0]), int(band[1])
    if not (0 <= d0 <= d1):
        raise ValueError(f"band {(d0, d1)} invalid: need 0 <= first <= last")
    n_params = d1 - d0 + 1
    if grid is None:
        grid = FreqGrid.uniform(samples.size)
    if len(grid) != samples.size:
        raise ValueError(f"grid has {len(grid)} points but samples has "
                         f"{samples.size}")
    if samples.size < n_params:
        raise ValueError(f"under-determined fit: {samples.size} samples for "
                         f"{n_params} parameters")
    om = grid.as_array()
    E = np.exp(-1j * np.outer(om, np.arange(d0, d1 + 1)))  # (K, D)
    A = np.vstack([E.real, E.imag])
    y = np.concatenate([samples.real, samples.imag])
    theta, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = A @ theta - y
    return ParametricFit(band=(d0, d1), coefficients=theta,
                         residual_rms=float(np.sqrt(np.mean(resid ** 2))))
