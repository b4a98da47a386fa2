"""Signed variable/clause incidence graphs and disjoint-path search.

Graph vertices are tagged tuples: ``("v", var_id)`` for variables and
``("c", clause_index)`` for clauses.  All neighbor iteration is in sorted
order so that every downstream search is reproducible.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Mapping, Sequence

from .formula import CnfFormula, grid_positions

__all__ = [
    "SignedBipartiteGraph",
    "as_adjacency",
    "build_incidence",
    "clause_node",
    "disjoint_paths",
    "grid_adjacency",
    "grid_layout",
    "is_clause_node",
    "is_var_node",
    "node_name",
    "path_interior",
    "paths_independent",
    "var_node",
]

Node = tuple[str, int]


def var_node(var_id: int) -> Node:
    return ("v", var_id)


def clause_node(index: int) -> Node:
    return ("c", index)


def is_var_node(node) -> bool:
    return isinstance(node, tuple) and len(node) == 2 and node[0] == "v"


def is_clause_node(node) -> bool:
    return isinstance(node, tuple) and len(node) == 2 and node[0] == "c"


def node_name(node) -> str:
    if is_var_node(node):
        return f"v{node[1]}"
    if is_clause_node(node):
        return f"c{node[1]}"
    return str(node)


class SignedBipartiteGraph:
    """Bipartite graph on variable and clause nodes with signed edges.

    Immutable after construction.  ``adj`` maps each node to a sorted tuple
    of neighbors; edge signs are +1 for a positive occurrence and -1 for a
    negative one.
    """

    def __init__(
        self,
        var_ids: Iterable[int],
        n_clauses: int,
        signed_edges: Iterable[tuple[int, int, int]],
        universal_index: int | None = None,
    ):
        adj: dict[Node, list[Node]] = {}
        for v in var_ids:
            adj[var_node(v)] = []
        for i in range(n_clauses):
            adj[clause_node(i)] = []
        signs: dict[tuple[int, int], int] = {}
        for var_id, clause_index, sign in signed_edges:
            vn, cn = var_node(var_id), clause_node(clause_index)
            if vn not in adj or cn not in adj:
                raise ValueError(f"edge ({var_id}, {clause_index}) uses unknown node")
            if (var_id, clause_index) in signs:
                raise ValueError(f"duplicate edge ({var_id}, {clause_index})")
            if sign not in (1, -1):
                raise ValueError(f"bad sign {sign!r}")
            signs[(var_id, clause_index)] = sign
            adj[vn].append(cn)
            adj[cn].append(vn)
        self.adj: dict[Node, tuple[Node, ...]] = {
            u: tuple(sorted(nbrs)) for u, nbrs in adj.items()
        }
        self._signs = signs
        self.universal_node: Node | None = (
            clause_node(universal_index) if universal_index is not None else None
        )

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(sorted(self.adj))

    @property
    def variable_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if is_var_node(n))

    @property
    def clause_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if is_clause_node(n))

    def __contains__(self, node) -> bool:
        return node in self.adj

    def neighbors(self, node: Node) -> tuple[Node, ...]:
        return self.adj[node]

    def has_edge(self, u: Node, v: Node) -> bool:
        return u in self.adj and v in self.adj[u]

    def edge_sign(self, u: Node, v: Node) -> int:
        if is_var_node(u) and is_clause_node(v):
            key = (u[1], v[1])
        elif is_clause_node(u) and is_var_node(v):
            key = (v[1], u[1])
        else:
            raise ValueError(f"({u}, {v}) is not a variable/clause pair")
        try:
            return self._signs[key]
        except KeyError:
            raise ValueError(f"no edge between {u} and {v}") from None

    def dump_edges(self) -> str:
        """Debug dump, one ``u v sign`` line per edge.  Not a stable format."""
        lines = []
        for (var_id, clause_index), sign in sorted(self._signs.items()):
            lines.append(f"v{var_id} c{clause_index} {'+' if sign > 0 else '-'}")
        return "\n".join(lines) + ("\n" if lines else "")


def build_incidence(formula: CnfFormula, universal: bool = False) -> SignedBipartiteGraph:
    """Build the signed incidence graph; optionally add a universal clause.

    The universal clause gets the next free clause index, is adjacent to
    every variable, and carries positive signs by convention (no caller
    reads them).
    """
    edges = [
        (abs(lit), idx, 1 if lit > 0 else -1)
        for idx, clause in enumerate(formula.clauses)
        for lit in clause.literals
    ]
    n_clauses = formula.num_clauses
    universal_index = None
    if universal:
        universal_index = n_clauses
        n_clauses += 1
        edges.extend((v, universal_index, 1) for v in formula.variables)
    return SignedBipartiteGraph(formula.variables, n_clauses, edges, universal_index)


def as_adjacency(graph) -> Mapping:
    """Normalize a graph-ish object to a node -> neighbors mapping.

    Accepts :class:`SignedBipartiteGraph`, anything with an ``adj`` mapping
    (networkx graphs), or a plain adjacency dict.
    """
    if isinstance(graph, SignedBipartiteGraph):
        return graph.adj
    adj = getattr(graph, "adj", graph)
    return {u: tuple(sorted(adj[u])) for u in adj}


def grid_adjacency(r: int) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    """Adjacency of the r-by-r grid graph on 1-based (i, j) cells."""
    adj = {}
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            nbrs = [
                (i + di, j + dj)
                for di, dj in ((-1, 0), (0, -1), (0, 1), (1, 0))
                if 1 <= i + di <= r and 1 <= j + dj <= r
            ]
            adj[(i, j)] = tuple(sorted(nbrs))
    return adj


def grid_layout(n: int) -> dict[tuple[int, int], Node]:
    """Grid cell -> incidence node for the grid formula families."""
    layout = {}
    for cell, (kind, ident) in grid_positions(n).items():
        layout[cell] = var_node(ident) if kind == "var" else clause_node(ident)
    return layout


def path_interior(path: Sequence) -> tuple:
    return tuple(path[1:-1])


def paths_independent(paths: Sequence[Sequence]) -> bool:
    """True iff no path contains an inner vertex of another."""
    for i, p in enumerate(paths):
        inner = set(path_interior(p))
        for j, q in enumerate(paths):
            if i != j and inner & set(q):
                return False
    return True


def disjoint_paths(graph, a, b, k: int, mode: str = "vertex"):
    """Find k pairwise disjoint a-b paths, or None if fewer exist.

    In ``vertex`` mode the paths are independent (disjoint interiors), in
    ``edge`` mode they are edge-disjoint.  Unit-capacity augmentation with
    vertex splitting; deterministic for a fixed graph encoding.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if mode not in ("vertex", "edge"):
        raise ValueError(f"unknown mode {mode!r}")
    adjacency = as_adjacency(graph)
    if a not in adjacency or b not in adjacency:
        raise ValueError("endpoints must be vertices of the graph")
    if a == b:
        raise ValueError("endpoints must differ")

    cap: dict[tuple, int] = {}
    out: dict = {}

    def arc(u, v, capacity):
        if (u, v) not in cap:
            cap[(u, v)] = 0
            out.setdefault(u, []).append(v)
            if (v, u) not in cap:
                cap[(v, u)] = 0
                out.setdefault(v, []).append(u)
        cap[(u, v)] += capacity

    if mode == "vertex":
        def tail(u):
            return u if u in (a, b) else (u, "out")

        def head(u):
            return u if u in (a, b) else (u, "in")

        for u in sorted(adjacency):
            if u not in (a, b):
                arc((u, "in"), (u, "out"), 1)
            for v in sorted(adjacency[u]):
                arc(tail(u), head(v), 1)
    else:
        for u in sorted(adjacency):
            for v in sorted(adjacency[u]):
                arc(u, v, 1)

    source, sink = a, b
    flow: dict[tuple, int] = {}
    for _ in range(k):
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in out.get(u, ()):
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return None
        v = sink
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= 1
            cap[(v, u)] += 1
            flow[(u, v)] = flow.get((u, v), 0) + 1
            flow[(v, u)] = flow.get((v, u), 0) - 1
            v = u

    net = {e: f for e, f in flow.items() if f > 0}
    paths = []
    for _ in range(k):
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in out.get(u, ()):
                if v not in parent and net.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        assert sink in parent, "flow decomposition lost a path"
        rev = [sink]
        while parent[rev[-1]] is not None:
            rev.append(parent[rev[-1]])
        walk = rev[::-1]
        for u, v in zip(walk, walk[1:]):
            net[(u, v)] -= 1
        if mode == "vertex":
            path = [a] + [u[0] for u in walk[1:-1] if u[1] == "in"] + [b]
        else:
            path = walk
        paths.append(tuple(path))
    return paths
