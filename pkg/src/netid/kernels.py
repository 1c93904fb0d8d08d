"""Simulation inner loops: a numba-jitted kernel with a pure-numpy twin.

The per-sample recursion is the hot path of every Monte-Carlo experiment, so
it is compiled with numba when available.  A vectorized numpy implementation
of the identical recursion serves as fallback and as a cross-check; both
produce the same trajectories to floating-point roundoff.

Backend selection: environment variable NETID_BACKEND, value "numba" or
"numpy".  Unset, the jitted kernel is used when numba imports, else numpy.
The numba kernel releases the GIL, so Monte-Carlo batches parallelize with
plain threads (see NETID_WORKERS in netid.experiments).

Data layout (E edges, L nodes, N samples):
  erow, ecol : (E,) int64, 0-based endpoint indices; edge e feeds node
               erow[e] from node ecol[e]
  bmat       : (E, NB) float64, numerator taps b0..b_{NB-1}, zero-padded
  amat       : (E, NA) float64, denominator taps a0..a_{NA-1}, a0 = 1
  M          : (L, L) float64, inverse of (I - D0) with D0 the zero-delay
               coefficient matrix
  u          : (L, N) float64, summed external input r + v

Per edge, the output y_e obeys the difference equation
  y_e(t) = sum_k b_k w_src(t-k) - sum_{m>=1} a_m y_e(t-m),
split as y_e(t) = b0 w_src(t) + s_e(t) with s_e collecting strictly delayed
terms.  Stacking node equations w(t) = sum_in y_e(t) + u(t) gives
  (I - D0) w(t) = c(t) + u(t),  c_j(t) = sum_{e into j} s_e(t),
solved per sample through the precomputed M.

The loop returns (w, bad): bad is -1 on success, else the index of the first
sample where a non-finite value appeared (instability blow-up).
"""

from __future__ import annotations

import os

import numpy as np


def _sim_loop_py(erow, ecol, bmat, amat, M, u):
    L, N = u.shape
    E = erow.shape[0]
    NB = bmat.shape[1]
    NA = amat.shape[1]
    w = np.zeros((L, N))
    y = np.zeros((E, N))
    s = np.zeros(E)
    c = np.zeros(L)
    wt = np.zeros(L)
    for t in range(N):
        for e in range(E):
            acc = 0.0
            src = ecol[e]
            for k in range(1, NB):
                if t - k >= 0:
                    acc += bmat[e, k] * w[src, t - k]
            for m in range(1, NA):
                if t - m >= 0:
                    acc -= amat[e, m] * y[e, t - m]
            s[e] = acc
        for j in range(L):
            c[j] = u[j, t]
        for e in range(E):
            c[erow[e]] += s[e]
        ok = True
        for j in range(L):
            acc = 0.0
            for i in range(L):
                acc += M[j, i] * c[i]
            wt[j] = acc
            if not np.isfinite(acc):
                ok = False
        for j in range(L):
            w[j, t] = wt[j]
        if not ok:
            return w, t
        for e in range(E):
            y[e, t] = bmat[e, 0] * w[ecol[e], t] + s[e]
    return w, -1


def sim_loop_numpy(erow, ecol, bmat, amat, M, u):
    """Vectorized-over-edges implementation of the documented recursion."""
    L, N = u.shape
    E = erow.shape[0]
    NB = bmat.shape[1]
    NA = amat.shape[1]
    w = np.zeros((L, N))
    y = np.zeros((E, N))
    # blow-ups are reported through the bad-sample return value, so silence
    # the overflow warnings the final diverging samples would emit
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(N):
            s = np.zeros(E)
            for k in range(1, NB):
                if t - k >= 0:
                    s += bmat[:, k] * w[ecol, t - k]
            for m in range(1, NA):
                if t - m >= 0:
                    s -= amat[:, m] * y[:, t - m]
            c = np.bincount(erow, weights=s, minlength=L) + u[:, t]
            wt = M @ c
            w[:, t] = wt
            if not np.all(np.isfinite(wt)):
                return w, t
            y[:, t] = bmat[:, 0] * w[ecol, t] + s
    return w, -1


try:  # numba is optional; the numpy twin covers every code path without it
    import numba

    sim_loop_numba = numba.njit(cache=True, nogil=True)(_sim_loop_py)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    sim_loop_numba = None
    HAVE_NUMBA = False


def active_backend() -> str:
    """Resolve the backend name: explicit NETID_BACKEND, else best available."""
    choice = os.environ.get("NETID_BACKEND", "").strip().lower()
    if choice:
        if choice not in ("numba", "numpy"):
            raise ValueError(f"NETID_BACKEND={choice!r}: expected 'numba' or 'numpy'")
        if choice == "numba" and not HAVE_NUMBA:
            raise ValueError("NETID_BACKEND=numba but numba is not installed")
        return choice
    return "numba" if HAVE_NUMBA else "numpy"


def sim_loop(erow, ecol, bmat, amat, M, u, backend: str | None = None):
    """Dispatch to the selected kernel; see module docstring for the contract."""
    name = backend if backend is not None else active_backend()
    if name == "numba":
        if not HAVE_NUMBA:
            raise ValueError("numba backend requested but numba is not installed")
        return sim_loop_numba(erow, ecol, bmat, amat, M, u)
    if name == "numpy":
        return sim_loop_numpy(erow, ecol, bmat, amat, M, u)
    raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
