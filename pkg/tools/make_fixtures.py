"""Regenerate the frozen numerical fixtures used by the test suite.

Deliberately self-contained: this script re-parses the shipped network file
with its own minimal parser and evaluates everything with plain numpy, so
its outputs are an independent check on the package's own code paths.  Run
from the repository root:

    python3 tools/make_fixtures.py

and paste the printed literals into the tests when they legitimately change
(i.e. only when the shipped network itself changes).
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

NET_FILE = Path(__file__).resolve().parents[1] / "src" / "netid" / "data" / \
    "case_study_20.net"


def parse_net(path):
    """(L, {(j, i): (num_ascending, den_ascending)}) from a network file."""
    L = None
    edges = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "nodes":
            L = int(parts[1])
            continue
        j, i = int(parts[0]), int(parts[1])
        slash = parts.index("/")
        num = np.array([float(t) for t in parts[2:slash]])
        den = np.array([float(t) for t in parts[slash + 1:]])
        edges[(j, i)] = (num, den)
    if L is None:
        raise SystemExit(f"{path}: no 'nodes' line")
    return L, edges


def eval_G(L, edges, x):
    """G evaluated entrywise at complex x values, shape (len(x), L, L)."""
    x = np.asarray(x, dtype=complex)
    G = np.zeros((x.size, L, L), dtype=complex)
    for (j, i), (num, den) in edges.items():
        n = np.polyval(num[::-1], x)
        d = np.polyval(den[::-1], x)
        G[:, j - 1, i - 1] = n / d
    return G


def impulse_entries(L, edges, pairs, n_samples, grid_size=1 << 15):
    """Impulse responses of T = (I-G)^-1 entries by dense-grid inverse DFT."""
    x = np.exp(-2j * np.pi * np.arange(grid_size) / grid_size)
    A = np.eye(L) - eval_G(L, edges, x)
    cols = sorted({i for _, i in pairs})
    rhs = np.zeros((L, len(cols)))
    for c, i in enumerate(cols):
        rhs[i - 1, c] = 1.0
    T = np.linalg.solve(A, np.broadcast_to(rhs, (grid_size,) + rhs.shape))
    out = {}
    for j, i in pairs:
        samples = np.fft.ifft(T[:, j - 1, cols.index(i)])
        out[(j, i)] = samples[:n_samples].real
    return out


def main():
    L, edges = parse_net(NET_FILE)
    print(f"# generated by tools/make_fixtures.py from {NET_FILE.name}")
    print(f"# network: {L} nodes, {len(edges)} edges")

    D0 = np.zeros((L, L))
    for (j, i), (num, den) in edges.items():
        D0[j - 1, i - 1] = (num[0] / den[0]) if num.size else 0.0
    print(f"\nDET_I_MINUS_D0 = {float(np.linalg.det(np.eye(L) - D0))!r}")

    x0 = np.array([1.0 + 0.0j])
    T0 = np.linalg.inv(np.eye(L) - eval_G(L, edges, x0)[0])
    print("\n# T entries at omega = 0 (x = 1), rows x cols {3,5,6} x {3,4,5,6}")
    print("T_AT_OMEGA0 = {")
    for j in (3, 5, 6):
        for i in (3, 4, 5, 6):
            print(f"    ({j}, {i}): {float(T0[j - 1, i - 1].real)!r},")
    print("}")

    pairs = [(3, 4), (5, 4), (6, 4)]
    imp = impulse_entries(L, edges, pairs, 8)
    print("\n# first impulse-response samples of T entries (dense-grid route)")
    print("IMPULSE_HEAD = {")
    for pair, vals in imp.items():
        body = ",\n        ".join(repr(float(v)) for v in vals)
        print(f"    {pair}: (\n        {body},\n    ),")
    print("}")


if __name__ == "__main__":
    sys.exit(main())
