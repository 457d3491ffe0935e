"""Directed communication graphs and time-varying graph sequences.

An arc (j, i) means agent j sends to agent i. Every vertex keeps a
self-loop: agents always hear themselves, and the update matrices built
on top of these graphs need a positive diagonal. Self-loops are added at
construction time and their absence is treated as a validation error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Arc",
    "DirectedGraph",
    "GraphSequence",
    "complete_graph",
    "directed_ring",
    "undirected_ring",
    "union_graph",
    "strongly_connected_components",
    "is_strongly_connected",
    "is_uniformly_strongly_connected",
    "generate_sequence",
    "save_sequence",
    "load_sequence",
    "GENERATOR_KINDS",
]

Arc = tuple[int, int]


@dataclass(frozen=True)
class DirectedGraph:
    """Fixed vertex set {0..n-1} plus a set of arcs (sender, receiver)."""

    n: int
    arcs: frozenset[Arc]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={self.n}")
        if not isinstance(self.arcs, frozenset):
            object.__setattr__(self, "arcs", frozenset(self.arcs))
        for j, i in self.arcs:
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"arc ({j}, {i}) out of range for n={self.n}")
        missing = [v for v in range(self.n) if (v, v) not in self.arcs]
        if missing:
            raise ValueError(f"missing self-loops at vertices {missing}")

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[Arc]) -> "DirectedGraph":
        """Build a graph, silently adding the required self-loops."""
        all_arcs = {(int(j), int(i)) for j, i in arcs}
        all_arcs.update((v, v) for v in range(n))
        return cls(n, frozenset(all_arcs))

    def in_neighbors(self, i: int) -> set[int]:
        """Senders agent i hears from, including i itself."""
        self._check_vertex(i)
        return {j for j, k in self.arcs if k == i}

    def out_neighbors(self, j: int) -> set[int]:
        """Receivers agent j sends to, including j itself."""
        self._check_vertex(j)
        return {i for k, i in self.arcs if k == j}

    def receive_matrix(self) -> np.ndarray:
        """0/1 matrix A with A[i, j] = 1 iff j sends to i (receiver rows)."""
        a = np.zeros((self.n, self.n))
        for j, i in self.arcs:
            a[i, j] = 1.0
        return a

    def _check_vertex(self, v: int) -> None:
        if not (0 <= v < self.n):
            raise ValueError(f"vertex {v} out of range for n={self.n}")


@dataclass(frozen=True)
class GraphSequence:
    """A finite run of graphs on a common vertex set, one per step.

    ``claimed_window`` is the generator's (or caller's) assertion about
    uniform strong connectivity: every window of that many consecutive
    steps should have a strongly connected union. The claim is checkable
    with :func:`is_uniformly_strongly_connected`; it is not trusted.
    """

    graphs: tuple[DirectedGraph, ...]
    claimed_window: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.graphs, tuple):
            object.__setattr__(self, "graphs", tuple(self.graphs))
        if len(self.graphs) == 0:
            raise ValueError("graph sequence must contain at least one step")
        sizes = {g.n for g in self.graphs}
        if len(sizes) != 1:
            raise ValueError(f"all graphs must share one vertex set, got sizes {sorted(sizes)}")
        if self.claimed_window is not None and self.claimed_window < 1:
            raise ValueError(f"claimed_window must be >= 1, got {self.claimed_window}")

    @property
    def n(self) -> int:
        return self.graphs[0].n

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, t: int) -> DirectedGraph:
        return self.graphs[t]


def complete_graph(n: int) -> DirectedGraph:
    return DirectedGraph.from_arcs(n, ((j, i) for j in range(n) for i in range(n)))


def directed_ring(n: int) -> DirectedGraph:
    return DirectedGraph.from_arcs(n, ((v, (v + 1) % n) for v in range(n)))


def undirected_ring(n: int) -> DirectedGraph:
    arcs: set[Arc] = set()
    for v in range(n):
        arcs.add((v, (v + 1) % n))
        arcs.add(((v + 1) % n, v))
    return DirectedGraph.from_arcs(n, arcs)


def union_graph(graphs: Sequence[DirectedGraph]) -> DirectedGraph:
    """Arc union of the given graphs (vertex sets must match)."""
    if len(graphs) == 0:
        raise ValueError("union of an empty collection of graphs is undefined")
    sizes = {g.n for g in graphs}
    if len(sizes) != 1:
        raise ValueError(f"union requires a common vertex set, got sizes {sorted(sizes)}")
    arcs: set[Arc] = set()
    for g in graphs:
        arcs.update(g.arcs)
    return DirectedGraph(graphs[0].n, frozenset(arcs))


def strongly_connected_components(g: DirectedGraph) -> list[set[int]]:
    """Strongly connected components via iterative Tarjan.

    Returns the components in reverse topological order of the
    condensation. Deterministic for a given graph.
    """
    n = g.n
    adj: list[list[int]] = [[] for _ in range(n)]
    for j, i in sorted(g.arcs):
        adj[j].append(i)

    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[set[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            descended = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    descended = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            work.pop()
            if low[v] == index[v]:
                comp: set[int] = set()
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.add(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comps


def is_strongly_connected(g: DirectedGraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def is_uniformly_strongly_connected(seq: GraphSequence, window: int) -> bool:
    """Check that every ``window`` consecutive steps have a strongly
    connected union, over the whole stored sequence.

    This is a finite-prefix check: it inspects exactly the steps the
    sequence contains, every sliding offset included.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window > len(seq):
        raise ValueError(
            f"window {window} exceeds sequence length {len(seq)}; nothing to check"
        )
    gs = seq.graphs
    for start in range(len(gs) - window + 1):
        if not is_strongly_connected(union_graph(gs[start : start + window])):
            return False
    return True


GENERATOR_KINDS = (
    "static-complete",
    "static-ring",
    "rotating-single-edge",
    "random-spanning",
    "doubly-stochastic-compatible",
)


def generate_sequence(
    kind: str,
    n: int,
    horizon: int,
    seed: int = 0,
    params: dict | None = None,
) -> GraphSequence:
    """Deterministically generate a graph sequence of the given kind.

    Parameters
    ----------
    kind : str
        One of ``GENERATOR_KINDS``.
    n, horizon : int
        Number of agents and number of steps.
    seed : int
        Only the random kinds consume it; identical inputs give an
        identical sequence.
    params : dict, optional
        Kind-specific knobs. Unknown keys raise.

    Notes
    -----
    * ``rotating-single-edge``: each step has self-loops plus the single
      arc (t mod n) -> (t+1 mod n); any n consecutive steps cover the
      whole ring, so the claimed window is n.
    * ``random-spanning``: the horizon is split into aligned blocks of
      ``window`` steps; each block scatters the arcs of one random
      spanning cycle over random slots. Any 2*window-1 consecutive steps
      contain a whole block, hence the claimed window.
    * ``doubly-stochastic-compatible``: a static regular undirected
      topology (ring or complete), so equal out-degrees make the default
      weights doubly stochastic.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    params = dict(params) if params else {}

    def reject_unknown(allowed: set[str]) -> None:
        unknown = set(params) - allowed
        if unknown:
            raise ValueError(f"unknown params for kind {kind!r}: {sorted(unknown)}")

    if kind == "static-complete":
        reject_unknown(set())
        g = complete_graph(n)
        return GraphSequence((g,) * horizon, claimed_window=1)

    if kind == "static-ring":
        reject_unknown(set())
        g = directed_ring(n)
        return GraphSequence((g,) * horizon, claimed_window=1)

    if kind == "rotating-single-edge":
        reject_unknown(set())
        graphs = []
        for t in range(horizon):
            j = t % n
            graphs.append(DirectedGraph.from_arcs(n, [(j, (j + 1) % n)]))
        return GraphSequence(tuple(graphs), claimed_window=max(n, 1))

    if kind == "random-spanning":
        reject_unknown({"window", "extra_arc_prob"})
        window = int(params.get("window", n))
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        p_extra = float(params.get("extra_arc_prob", 0.0))
        if not (0.0 <= p_extra <= 1.0):
            raise ValueError(f"extra_arc_prob must lie in [0, 1], got {p_extra}")
        rng = np.random.default_rng(seed)
        arcs_by_step: list[set[Arc]] = [set() for _ in range(horizon)]
        n_blocks = -(-horizon // window)
        for b in range(n_blocks):
            perm = rng.permutation(n)
            slots = rng.integers(0, window, size=n)
            for k in range(n):
                t = b * window + int(slots[k])
                if t < horizon:
                    arcs_by_step[t].add((int(perm[k]), int(perm[(k + 1) % n])))
            if p_extra > 0.0:
                for t in range(b * window, min((b + 1) * window, horizon)):
                    draws = rng.random((n, n))
                    for j in range(n):
                        for i in range(n):
                            if j != i and draws[j, i] < p_extra:
                                arcs_by_step[t].add((j, i))
        graphs = tuple(DirectedGraph.from_arcs(n, a) for a in arcs_by_step)
        return GraphSequence(graphs, claimed_window=2 * window - 1)

    if kind == "doubly-stochastic-compatible":
        reject_unknown({"topology"})
        topology = params.get("topology", "ring")
        if topology == "ring":
            g = undirected_ring(n)
        elif topology == "complete":
            g = complete_graph(n)
        else:
            raise ValueError(f"unknown topology {topology!r}")
        return GraphSequence((g,) * horizon, claimed_window=1)

    raise ValueError(f"unknown generator kind {kind!r}; expected one of {GENERATOR_KINDS}")


def save_sequence(path: str, seq: GraphSequence) -> None:
    """Write a sequence as ``n horizon`` followed by one ``t j i`` line
    per non-loop arc. Self-loops are implied and omitted on disk."""
    lines = [f"{seq.n} {len(seq)}"]
    for t, g in enumerate(seq.graphs):
        for j, i in sorted(g.arcs):
            if j != i:
                lines.append(f"{t} {j} {i}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_sequence(path: str) -> GraphSequence:
    """Inverse of :func:`save_sequence`; self-loops are re-added."""
    with open(path, "r", encoding="ascii") as fh:
        raw = [ln.strip() for ln in fh]
    rows = [ln for ln in raw if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty graph sequence file")
    head = rows[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'n horizon', got {rows[0]!r}")
    n, horizon = int(head[0]), int(head[1])
    if n < 1 or horizon < 1:
        raise ValueError(f"{path}: header values must be positive, got {rows[0]!r}")
    arcs_by_step: list[set[Arc]] = [set() for _ in range(horizon)]
    for lineno, ln in enumerate(rows[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 't j i', got {ln!r}")
        t, j, i = (int(p) for p in parts)
        if not (0 <= t < horizon):
            raise ValueError(f"{path}:{lineno}: step {t} outside horizon {horizon}")
        if not (0 <= j < n and 0 <= i < n):
            raise ValueError(f"{path}:{lineno}: arc ({j}, {i}) out of range for n={n}")
        arcs_by_step[t].add((j, i))
    graphs = tuple(DirectedGraph.from_arcs(n, a) for a in arcs_by_step)
    return GraphSequence(graphs)
