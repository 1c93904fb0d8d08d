"""Network data model: L nodes, directed edges carrying rational transfer functions.

The network equation is w(t) = G(q) w(t) + r(t) + v(t), where G is an L x L
hollow matrix of transfer functions in q^-1, r collects known external
excitations and v unmeasured disturbances.  Edges are stored sparsely as a
map (j, i) -> transfer function for the module from node i to node j.

Node indices are 1-based in every user-facing interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tf import PolyQ, RationalTF

# (I - D0) with condition number above this is treated as singular, where D0
# is the zero-delay (feedthrough) coefficient matrix.
_WELLPOSED_COND_LIMIT = 1e12


class NetworkFormatError(ValueError):
    """Raised for malformed network files, with the offending line number."""


class NetworkModel:
    """Immutable sparse network matrix with topology queries.

    Parameters
    ----------
    L : int
        Node count.
    edges : mapping (j, i) -> RationalTF
        Module from node i to node j.  Diagonal entries are forbidden (the
        network matrix is hollow) and identically-zero modules are rejected:
        absence of an edge is the only representation of "no module".
    require_loop_delay : bool
        When True, construction fails if some directed cycle has zero total
        delay (the zero-delay coefficient matrix is not nilpotent).  Default
        False: such networks are still well-posed whenever (I - D0) is
        invertible, which is checked unconditionally, and the outcome is
        recorded in ``has_zero_delay_cycle``.
    """

    def __init__(self, L: int, edges, require_loop_delay: bool = False):
        if L < 1:
            raise ValueError("node count must be >= 1")
        clean: dict[tuple[int, int], RationalTF] = {}
        for (j, i), tf in dict(edges).items():
            j, i = int(j), int(i)
            if not (1 <= j <= L and 1 <= i <= L):
                raise ValueError(f"edge ({j},{i}) outside node range 1..{L}")
            if j == i:
                raise ValueError(f"diagonal entry ({j},{i}) forbidden: "
                                 "the network matrix is hollow")
            if not isinstance(tf, RationalTF):
                tf = RationalTF(*tf) if isinstance(tf, tuple) else RationalTF(tf)
            if tf.is_zero:
                raise ValueError(f"edge ({j},{i}) is identically zero; "
                                 "omit it instead")
            clean[(j, i)] = tf
        self._L = L
        self._edges = clean
        self._ins: dict[int, tuple[int, ...]] = {}
        self._outs: dict[int, tuple[int, ...]] = {}
        for (j, i) in clean:
            self._ins.setdefault(j, ())
            self._outs.setdefault(i, ())
        for j in list(self._ins):
            self._ins[j] = tuple(sorted(i for (jj, i) in clean if jj == j))
        for i in list(self._outs):
            self._outs[i] = tuple(sorted(j for (j, ii) in clean if ii == i))

        d0 = self.feedthrough_matrix()
        cond = np.linalg.cond(np.eye(L) - d0)
        if not np.isfinite(cond) or cond > _WELLPOSED_COND_LIMIT:
            raise ValueError("network is ill-posed: (I - D0) is singular, "
                             "where D0 is the zero-delay coefficient matrix")
        self._has_zero_delay_cycle = _pattern_has_cycle(d0 != 0.0)
        if require_loop_delay and self._has_zero_delay_cycle:
            raise ValueError("a directed cycle with zero total delay exists "
                             "(zero-delay coefficient matrix not nilpotent)")

    # -- basic accessors -------------------------------------------------------

    @property
    def L(self) -> int:
        return self._L

    @property
    def has_zero_delay_cycle(self) -> bool:
        """True when some directed cycle has zero total delay.

        Such a network is still simulable (the per-sample feedthrough system
        is solved exactly) but violates the usual every-loop-has-a-delay
        modelling assumption; the flag lets callers decide.
        """
        return self._has_zero_delay_cycle

    def edge(self, j: int, i: int) -> RationalTF:
        try:
            return self._edges[(j, i)]
        except KeyError:
            raise KeyError(f"no edge from node {i} to node {j}") from None

    def has_edge(self, j: int, i: int) -> bool:
        return (j, i) in self._edges

    def edge_items(self):
        """Edges as a sorted tuple of ((j, i), tf) pairs (deterministic order)."""
        return tuple(sorted(self._edges.items()))

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    # -- topology --------------------------------------------------------------

    def in_neighbors(self, j: int) -> tuple[int, ...]:
        """Nodes i with an edge i -> j."""
        self._check_node(j)
        return self._ins.get(j, ())

    def out_neighbors(self, i: int) -> tuple[int, ...]:
        """Nodes j with an edge i -> j."""
        self._check_node(i)
        return self._outs.get(i, ())

    def in_degree(self, j: int) -> int:
        return len(self.in_neighbors(j))

    def out_degree(self, i: int) -> int:
        return len(self.out_neighbors(i))

    def _check_node(self, n: int) -> None:
        if not (1 <= n <= self._L):
            raise ValueError(f"node {n} outside 1..{self._L}")

    # -- matrices ----------------------------------------------------------------

    def feedthrough_matrix(self) -> np.ndarray:
        """Zero-delay coefficient matrix D0 (L x L dense)."""
        d0 = np.zeros((self._L, self._L))
        for (j, i), tf in self._edges.items():
            d0[j - 1, i - 1] = tf.feedthrough()
        return d0

    def eval_G(self, omega) -> np.ndarray:
        """Dense G(e^{j*omega}); omega scalar -> (L, L), array -> (n, L, L)."""
        om = np.atleast_1d(np.asarray(omega, dtype=float))
        G = np.zeros((om.size, self._L, self._L), dtype=complex)
        for (j, i), tf in self._edges.items():
            G[:, j - 1, i - 1] = tf.eval_at(om)
        return G if np.ndim(omega) else G[0]

    # -- functional updates (for tests and what-if analysis) ---------------------

    def with_edge(self, j: int, i: int, tf: RationalTF) -> NetworkModel:
        edges = dict(self._edges)
        edges[(j, i)] = tf
        return NetworkModel(self._L, edges)

    def without_edge(self, j: int, i: int) -> NetworkModel:
        edges = dict(self._edges)
        edges.pop((j, i), None)
        return NetworkModel(self._L, edges)

    # -- equality ------------------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkModel):
            return NotImplemented
        return self._L == other._L and self._edges == other._edges

    def __repr__(self) -> str:
        return f"NetworkModel(L={self._L}, edges={len(self._edges)})"


def _pattern_has_cycle(adj: np.ndarray) -> bool:
    """Cycle test on a boolean adjacency matrix (Kahn's algorithm)."""
    n = adj.shape[0]
    indeg = adj.sum(axis=0).astype(int)
    stack = [j for j in range(n) if indeg[j] == 0]
    seen = 0
    adj = adj.copy()
    while stack:
        u = stack.pop()
        seen += 1
        for w in np.nonzero(adj[u])[0]:
            adj[u, w] = False
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(int(w))
    return seen < n


@dataclass(frozen=True)
class ExcitationSpec:
    """What to excite and for how long.

    excited_nodes receive independent zero-mean Gaussian white excitation r
    of variance r_variance; every node receives an independent Gaussian
    white disturbance v of variance v_variance.  N is the sample count and
    seed the PRNG seed (see netid.sim for the documented generator).
    """

    excited_nodes: tuple[int, ...]
    N: int
    seed: int
    r_variance: float = 1.0
    v_variance: float = 1e-6

    def __init__(self, excited_nodes, N, seed, r_variance=1.0, v_variance=1e-6):
        nodes = tuple(sorted({int(n) for n in excited_nodes}))
        if any(n < 1 for n in nodes):
            raise ValueError("node indices are 1-based and must be >= 1")
        if N < 1:
            raise ValueError("sample count must be >= 1")
        if r_variance < 0 or v_variance < 0:
            raise ValueError("variances must be >= 0")
        object.__setattr__(self, "excited_nodes", nodes)
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "seed", int(seed))
        object.__setattr__(self, "r_variance", float(r_variance))
        object.__setattr__(self, "v_variance", float(v_variance))


@dataclass(frozen=True)
class SignalRecord:
    """Aligned node-output, excitation and disturbance time series (L x N each)."""

    w: np.ndarray
    r: np.ndarray
    v: np.ndarray
    seed: int

    def __post_init__(self):
        if not (self.w.shape == self.r.shape == self.v.shape) or self.w.ndim != 2:
            raise ValueError("w, r, v must share an (L, N) shape")

    @property
    def L(self) -> int:
        return self.w.shape[0]

    @property
    def N(self) -> int:
        return self.w.shape[1]

    def node_output(self, j: int) -> np.ndarray:
        return self.w[j - 1]

    def node_excitation(self, i: int) -> np.ndarray:
        return self.r[i - 1]


# -- the 20-node case-study network ------------------------------------------
#
# 56 modules; node 3's in-neighbors are {2, 4, 5, 9} and node 4's
# out-neighbors are {3, 5, 6}.  The module of interest in the experiments is
# (3, 4): G_34 = -0.3 q^-1 + 0.8 q^-2.  FIR entries are (num, (1,)); the
# remaining entries are first-order with a single stable pole.

_CASE_STUDY_EDGES = (
    (2, 1, (-1.1576491e-01, 4.2048459e-02), (1.0,)),
    (2, 6, (-4.9391907e-01, 2.3094301e-01), (1.0,)),
    (2, 8, (-3.8295603e-01, 3.7364537e-01), (1.0,)),
    (3, 2, (-2.3501597e-01, 2.2411979e-01), (1.0,)),
    (3, 4, (0.0, -0.3, 0.8), (1.0,)),
    (3, 5, (0.0, -0.5), (1.0,)),
    (3, 9, (-1.5484356e-01, 3.5947903e-01), (1.0,)),
    (4, 2, (-3.4361929e-01, 2.7664996e-01), (1.0,)),
    (4, 3, (0.0, 1.0), (1.0,)),
    (4, 6, (-4.4565148e-02, 3.1267256e-02), (1.0,)),
    (4, 8, (-3.0217221e-02, 4.9084253e-01), (1.0,)),
    (5, 1, (-4.4755747e-01, 1.5153359e-01), (1.0,)),
    (5, 4, (0.0, 0.5), (1.0,)),
    (5, 6, (-1.8258082e-02, 2.5655941e-02), (1.0,)),
    (6, 4, (-4.0083967e-02, 2.3831631e-02), (1.0,)),
    (6, 5, (-4.9526830e-02, 1.8655891e-02), (1.0,)),
    (7, 8, (-4.2353188e-02, 1.7016841e-03), (1.0,)),
    (7, 12, (-3.8831215e-01, 1.6625282e-01), (1.0,)),
    (7, 14, (-1.3013545e-01, 3.2468616e-01), (1.0,)),
    (8, 5, (-4.8312501e-01, 2.9208833e-01), (1.0,)),
    (8, 7, (-4.3341455e-02, 2.6095021e-02), (1.0,)),
    (8, 12, (-2.0610019e-01, 2.6998910e-01), (1.0,)),
    (8, 13, (-1.4342078e-02, 3.4009137e-02), (1.0,)),
    (9, 2, (-2.0348115e-01, 6.7364494e-02), (1.0,)),
    (9, 6, (-2.9096829e-01, 6.1878182e-02), (1.0,)),
    (9, 8, (-4.7096177e-01, 1.6149849e-01), (1.0,)),
    (9, 10, (-3.6050395e-02, 4.1517977e-02), (1.0,)),
    (9, 12, (-3.1296376e-02, 1.1860562e-01), (1.0,)),
    (10, 8, (-3.0338765e-01, 4.1470173e-01), (1.0,)),
    (10, 9, (-3.4408597e-02, 2.3732489e-03), (1.0,)),
    (10, 12, (-3.4207005e-02, 4.4904179e-02), (1.0,)),
    (11, 10, (0.0, 2.4710993e-01), (1.0, -5.0578013e-01)),
    (11, 12, (0.0, 2.4512609e-02), (1.0, -5.0974782e-01)),
    (11, 16, (0.0, 2.3010071e-01), (1.0, -5.3979857e-01)),
    (12, 10, (0.0, 2.0528463e-02), (1.0, -5.8943074e-01)),
    (12, 11, (0.0, 2.1646986e-02), (1.0, -5.6706027e-01)),
    (12, 14, (0.0, 2.0877819e-01), (1.0, -5.8244362e-01)),
    (12, 18, (0.0, 2.0657294e-01), (1.0, -5.8685411e-01)),
    (13, 8, (0.0, 2.1848002e-02), (1.0, -5.6303996e-01)),
    (13, 11, (0.0, 2.2137643e-01), (1.0, -5.5724714e-01)),
    (13, 14, (0.0, 2.2709971e-02), (1.0, -5.4580058e-01)),
    (14, 13, (0.0, 2.2787928e-02), (1.0, -5.4424144e-01)),
    (14, 15, (0.0, 2.4571974e-01), (1.0, -5.0856052e-01)),
    (15, 16, (0.0, 2.4854075e-01), (1.0, -5.0291850e-01)),
    (15, 18, (0.0, 2.0964010e-01), (1.0, -5.8071980e-01)),
    (16, 13, (0.0, 2.1627442e-01), (1.0, -5.6745117e-01)),
    (17, 16, (0.0, 2.3606224e-01), (1.0, -5.2787553e-01)),
    (17, 18, (0.0, 2.4035419e-02), (1.0, -5.1929163e-01)),
    (17, 19, (0.0, 2.3030840e-01), (1.0, -5.3938319e-01)),
    (18, 10, (0.0, 2.1838053e-01), (1.0, -5.6323893e-01)),
    (18, 17, (0.0, 2.3869253e-02), (1.0, -5.2261494e-01)),
    (19, 12, (0.0, 2.4800810e-01), (1.0, -5.0398380e-01)),
    (19, 14, (0.0, 2.4554410e-01), (1.0, -5.0891181e-01)),
    (19, 18, (0.0, 2.3382918e-01), (1.0, -5.3234164e-01)),
    (20, 12, (0.0, 2.1965134e-01), (1.0, -5.6069731e-01)),
    (20, 13, (0.0, 2.2859570e-01), (1.0, -5.4280860e-01)),
)


def build_case_study() -> NetworkModel:
    """The 20-node benchmark network, every coefficient encoded exactly."""
    edges = {(j, i): RationalTF(num, den) for j, i, num, den in _CASE_STUDY_EDGES}
    return NetworkModel(20, edges)


# -- network file format --------------------------------------------------------
#
#   # comment lines and blank lines are ignored
#   nodes <L>
#   <j> <i> <num coefficients...> / <den coefficients...>
#
# Coefficients are decimal literals written with full round-trip precision
# (shortest decimal that parses back to the identical double), which
# preserves at least the 8 significant digits of the shipped benchmark
# coefficients exactly.


def save_network(model: NetworkModel, path) -> None:
    lines = ["# netid network file", f"nodes {model.L}"]
    for (j, i), tf in model.edge_items():
        num = " ".join(repr(c) for c in tf.num.coeffs)
        den = " ".join(repr(c) for c in tf.den.coeffs)
        lines.append(f"{j} {i} {num} / {den}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path) -> NetworkModel:
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    L = None
    edges: dict[tuple[int, int], RationalTF] = {}
    for ln, line in enumerate(raw, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if L is None:
            parts = text.split()
            if len(parts) != 2 or parts[0] != "nodes":
                raise NetworkFormatError(
                    f"{path}:{ln}: expected header 'nodes <L>', got {text!r}")
            try:
                L = int(parts[1])
            except ValueError:
                raise NetworkFormatError(
                    f"{path}:{ln}: node count {parts[1]!r} is not an integer") from None
            if L < 1:
                raise NetworkFormatError(f"{path}:{ln}: node count must be >= 1")
            continue
        if "/" not in text:
            raise NetworkFormatError(
                f"{path}:{ln}: edge record needs a '/' between numerator "
                f"and denominator coefficients")
        head, _, tail = text.partition("/")
        fields = head.split()
        if len(fields) < 3:
            raise NetworkFormatError(
                f"{path}:{ln}: expected '<j> <i> <num coeffs> / <den coeffs>'")
        try:
            j, i = int(fields[0]), int(fields[1])
            num = [float(c) for c in fields[2:]]
            den = [float(c) for c in tail.split()]
        except ValueError as exc:
            raise NetworkFormatError(f"{path}:{ln}: {exc}") from None
        if not den:
            raise NetworkFormatError(f"{path}:{ln}: empty denominator")
        if not (1 <= j <= L and 1 <= i <= L):
            raise NetworkFormatError(
                f"{path}:{ln}: edge ({j},{i}) outside node range 1..{L}")
        if (j, i) in edges:
            raise NetworkFormatError(f"{path}:{ln}: duplicate edge ({j},{i})")
        try:
            edges[(j, i)] = RationalTF(num, den)
        except ValueError as exc:
            raise NetworkFormatError(f"{path}:{ln}: {exc}") from None
    if L is None:
        raise NetworkFormatError(f"{path}: empty file (no 'nodes' header)")
    return NetworkModel(L, edges)
