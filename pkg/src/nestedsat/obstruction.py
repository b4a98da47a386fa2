"""Witnesses of non-nestedness and their search and extraction machinery.

A witness consists of two endpoints joined by three independent paths in
the incidence graph, plus one pendant variable attached to each path.  Its
presence forces a K33 minor in the universal-clause incidence graph, so
the host formula cannot be nested.  Verification here enforces exactly the
conditions that make that minor model valid (disjoint, connected branch
sets with all cross edges), which keeps every verified witness sound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .formula import CnfFormula
from .incidence import (
    SignedBipartiteGraph,
    as_adjacency,
    disjoint_paths,
    is_var_node,
    node_name,
    path_interior,
)

__all__ = [
    "GridModel",
    "K33Model",
    "KillClassification",
    "NestedObstruction",
    "StructuralError",
    "classify_kill",
    "common_external_killers",
    "extract_obstructions_from_grid",
    "find_obstruction",
    "identity_grid_model",
    "independent_paths_from_edge_disjoint",
    "k33_minor_model",
    "obstruction_in_graph",
    "serialize_obstruction",
    "validate_grid_model",
    "validate_k33_model",
    "verify_obstruction",
]


class StructuralError(RuntimeError):
    """An internal construction failed a structural guarantee."""


@dataclass(frozen=True)
class NestedObstruction:
    """Two endpoints, three independent paths, three pendant variables.

    ``attachments[i]`` is the edge (pendants[i], vertex on paths[i]); a
    pendant lying on the interior of its own path is allowed and then
    attaches to its successor along the path.
    """

    a: tuple
    b: tuple
    paths: tuple[tuple, ...]
    pendants: tuple
    attachments: tuple[tuple, ...]

    @property
    def vertices(self) -> frozenset:
        out = set(self.pendants)
        for p in self.paths:
            out.update(p)
        return frozenset(out)

    @property
    def variable_ids(self) -> frozenset[int]:
        return frozenset(n[1] for n in self.vertices if is_var_node(n))

    @property
    def clause_indices(self) -> frozenset[int]:
        return frozenset(n[1] for n in self.vertices if not is_var_node(n))

    def side_sets(self) -> tuple[frozenset, ...]:
        """Pendant-augmented path interiors; the K33 branch sets."""
        return tuple(
            frozenset(path_interior(p)) | {q}
            for p, q in zip(self.paths, self.pendants)
        )


@dataclass(frozen=True)
class KillClassification:
    """How a variable destroys an obstruction: internal, external, or none."""

    kind: str
    clause_pair: tuple[int, int] | None = None


@dataclass
class GridModel:
    """Explicit minor model of the r-grid inside a host graph.

    One connected branch set per grid cell plus a representative host edge
    per grid edge; the edge value is oriented (endpoint in the smaller
    cell's branch set first).
    """

    r: int
    subgraphs: dict[tuple[int, int], frozenset]
    rep_edges: dict[tuple[tuple[int, int], tuple[int, int]], tuple]


@dataclass(frozen=True)
class K33Model:
    """A K33 minor model: two sides of three branch sets each."""

    hubs: tuple[frozenset, ...]
    branches: tuple[frozenset, ...]


def _connected_subset(adjacency: Mapping, subset: frozenset) -> bool:
    if not subset:
        return False
    start = next(iter(subset))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w in subset and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen == subset


def _sets_linked(adjacency: Mapping, one: frozenset, other: frozenset) -> bool:
    return any(w in other for u in one for w in adjacency[u])


def _valid_path(adjacency: Mapping, path: Sequence, a, b) -> bool:
    if len(path) < 2 or path[0] != a or path[-1] != b:
        return False
    if len(set(path)) != len(path):
        return False
    return all(
        u in adjacency and v in adjacency[u] for u, v in zip(path, path[1:])
    )


def verify_obstruction(graph, obstruction: NestedObstruction) -> bool:
    """Full structural check of an obstruction inside a graph.

    Beyond the path/pendant shape this also demands that the three
    pendant-augmented interiors are pairwise disjoint, connected, and
    joined to both endpoints: without those conditions a witness can occur
    inside a perfectly nested formula and would prove nothing.
    """
    adjacency = as_adjacency(graph)
    o = obstruction
    five = (o.a, o.b, *o.pendants)
    if len(o.paths) != 3 or len(o.pendants) != 3 or len(o.attachments) != 3:
        return False
    if len(set(five)) != 5:
        return False
    if any(n not in adjacency for n in five):
        return False
    if not all(is_var_node(p) for p in o.pendants):
        return False
    for path in o.paths:
        if not _valid_path(adjacency, path, o.a, o.b):
            return False
    interiors = [set(path_interior(p)) for p in o.paths]
    for i in range(3):
        for j in range(i + 1, 3):
            if interiors[i] & interiors[j]:
                return False
    for (p, anchor), pendant, path in zip(o.attachments, o.pendants, o.paths):
        if p != pendant:
            return False
        if anchor not in path:
            return False
        if p not in adjacency or anchor not in adjacency[p]:
            return False
    sides = o.side_sets()
    for i in range(3):
        for j in range(i + 1, 3):
            if sides[i] & sides[j]:
                return False
    for side in sides:
        if not _connected_subset(adjacency, side):
            return False
        if not _sets_linked(adjacency, frozenset([o.a]), side):
            return False
        if not _sets_linked(adjacency, frozenset([o.b]), side):
            return False
    return True


def k33_minor_model(obstruction: NestedObstruction, graph_with_universal) -> K33Model:
    """K33 minor model witnessing non-planarity, using the universal clause.

    One side is the two endpoints plus the universal clause; the other side
    is the three pendant-augmented path interiors.
    """
    g = graph_with_universal
    if not isinstance(g, SignedBipartiteGraph) or g.universal_node is None:
        raise ValueError("expected an incidence graph with a universal clause")
    if g.universal_node in obstruction.vertices:
        raise ValueError("obstruction may not use the universal clause")
    if not verify_obstruction(g, obstruction):
        raise ValueError("obstruction does not verify in the given graph")
    model = K33Model(
        hubs=(
            frozenset([obstruction.a]),
            frozenset([obstruction.b]),
            frozenset([g.universal_node]),
        ),
        branches=obstruction.side_sets(),
    )
    assert validate_k33_model(model, g)
    return model


def validate_k33_model(model: K33Model, graph) -> bool:
    """Generic minor-model check: disjoint connected sets, all cross edges."""
    adjacency = as_adjacency(graph)
    sets = list(model.hubs) + list(model.branches)
    if len(model.hubs) != 3 or len(model.branches) != 3:
        return False
    for i, s in enumerate(sets):
        if not s or any(n not in adjacency for n in s):
            return False
        if not _connected_subset(adjacency, s):
            return False
        for t in sets[i + 1:]:
            if s & t:
                return False
    return all(
        _sets_linked(adjacency, hub, branch)
        for hub in model.hubs
        for branch in model.branches
    )


def _select_pendants(adjacency: Mapping, paths: Sequence[tuple]):
    """Pendants for a path triple, or the interior vertices blocking one.

    Returns ("ok", pendants, attachments) on success and
    ("blocked", vertices) when some path cannot host a pendant; removing
    the returned vertices forces a reroute on retry.
    """
    used = set()
    for p in paths:
        used.update(p)
    a, b = paths[0][0], paths[0][-1]
    pendants = []
    attachments = []
    chosen: set = set()
    blocking_vertices: list = []
    drop_direct_edge = False
    for path in paths:
        interior = list(path_interior(path))
        inner_var = next((u for u in interior if is_var_node(u)), None)
        if inner_var is not None:
            successor = path[path.index(inner_var) + 1]
            pendant, anchor = inner_var, successor
        elif len(interior) == 1:
            clause = interior[0]
            options = [
                u
                for u in adjacency[clause]
                if is_var_node(u) and u not in used and u not in chosen
            ]
            if not options:
                blocking_vertices.append(clause)
                continue
            pendant, anchor = min(options), clause
        else:
            b_nbrs = set(adjacency[b])
            options = [
                u
                for u in adjacency[a]
                if is_var_node(u) and u in b_nbrs and u not in used and u not in chosen
            ]
            if not options:
                drop_direct_edge = True
                continue
            pendant, anchor = min(options), a
        pendants.append(pendant)
        attachments.append((pendant, anchor))
        chosen.add(pendant)
    if len(pendants) != 3:
        return ("blocked", blocking_vertices, drop_direct_edge)
    return ("ok", tuple(pendants), tuple(attachments))


def find_obstruction(graph: SignedBipartiteGraph) -> NestedObstruction | None:
    """Deterministic scan for an obstruction, or None.

    Candidate endpoint pairs are visited in ascending node order; the first
    pair admitting three independent paths and a valid pendant selection
    wins.  Pendants prefer path-interior variables, then adjacent variables
    not used elsewhere in the witness.  When a returned triple routes
    through a clause that cannot host a pendant (for example a 2-literal
    clause joining the endpoints), that clause is dropped and the pair is
    rerouted a few times before the scan moves on.
    """
    adjacency = graph.adj
    hubs = [n for n in sorted(adjacency) if len(adjacency[n]) >= 3]
    for i, a in enumerate(hubs):
        for b in hubs[i + 1:]:
            working = dict(adjacency)
            for _ in range(1 + len(adjacency)):
                paths = disjoint_paths(working, a, b, 3, mode="vertex")
                if paths is None:
                    break
                picked = _select_pendants(adjacency, paths)
                if picked[0] == "ok":
                    _, pendants, attachments = picked
                    obstruction = NestedObstruction(
                        a, b, tuple(paths), pendants, attachments
                    )
                    assert verify_obstruction(graph, obstruction)
                    return obstruction
                _, blockers, drop_edge = picked
                blockers = set(blockers)
                if not blockers and not drop_edge:
                    break
                working = {
                    u: tuple(
                        w
                        for w in nbrs
                        if w not in blockers
                        and not (drop_edge and {u, w} == {a, b})
                    )
                    for u, nbrs in working.items()
                    if u not in blockers
                }
    return None


def identity_grid_model(r: int, layout: Mapping[tuple[int, int], object]) -> GridModel:
    """Model whose branch sets are singletons given by a cell -> vertex map."""
    subgraphs = {}
    rep_edges = {}
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            subgraphs[(i, j)] = frozenset([layout[(i, j)]])
            for di, dj in ((1, 0), (0, 1)):
                q = (i + di, j + dj)
                if q[0] <= r and q[1] <= r:
                    rep_edges[((i, j), q)] = (layout[(i, j)], layout[q])
    return GridModel(r, subgraphs, rep_edges)


def validate_grid_model(model: GridModel, host) -> bool:
    """Branch sets disjoint, connected, and every grid edge represented."""
    adjacency = as_adjacency(host)
    r = model.r
    cells = [(i, j) for i in range(1, r + 1) for j in range(1, r + 1)]
    if set(model.subgraphs) != set(cells):
        return False
    seen: set = set()
    for cell in cells:
        part = model.subgraphs[cell]
        if not part or any(n not in adjacency for n in part):
            return False
        if part & seen:
            return False
        seen |= part
        if not _connected_subset(adjacency, part):
            return False
    for i, j in cells:
        for di, dj in ((1, 0), (0, 1)):
            q = (i + di, j + dj)
            if q[0] > r or q[1] > r:
                continue
            edge = model.rep_edges.get(((i, j), q))
            if edge is None:
                return False
            u, v = edge
            if u not in model.subgraphs[(i, j)] or v not in model.subgraphs[q]:
                return False
            if u not in adjacency or v not in adjacency[u]:
                return False
    return True


def _bfs_tree(adjacency: Mapping, part: frozenset, root=None) -> dict:
    if root is None:
        root = min(part)
    tree: dict = {u: [] for u in part}
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w in part and w not in seen:
                seen.add(w)
                tree[u].append(w)
                tree[w].append(u)
                queue.append(w)
    return tree


def _tree_path(tree: Mapping, start, goal) -> list:
    if start == goal:
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in tree[u]:
            if w not in parent:
                parent[w] = u
                if w == goal:
                    queue.clear()
                    break
                queue.append(w)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def _tree_median(tree: Mapping, x, y, z):
    common = (
        set(_tree_path(tree, x, y))
        & set(_tree_path(tree, x, z))
        & set(_tree_path(tree, y, z))
    )
    assert len(common) == 1
    return next(iter(common))


def _rep_endpoints(model: GridModel, u_cell, v_cell) -> tuple:
    if u_cell < v_cell:
        return model.rep_edges[(u_cell, v_cell)]
    hv, hu = model.rep_edges[(v_cell, u_cell)]
    return hu, hv


def _block_grid_paths(bi: int, bj: int) -> tuple[list, list, list]:
    top, mid, bot = 3 * bi - 2, 3 * bi - 1, 3 * bi
    c0 = 4 * bj - 3
    a = (mid, c0)
    b = (mid, c0 + 3)
    upper = [a] + [(top, c0 + t) for t in range(4)] + [b]
    straight = [a, (mid, c0 + 1), (mid, c0 + 2), b]
    lower = [a] + [(bot, c0 + t) for t in range(4)] + [b]
    return upper, straight, lower


def extract_obstructions_from_grid(
    model: GridModel, host: SignedBipartiteGraph
) -> list[NestedObstruction]:
    """Vertex-disjoint obstructions carved out of a grid minor model.

    Each 3-by-4 block of the grid contributes one obstruction: its middle
    row ends become the endpoints, the three row paths of the block map
    through the branch sets (stitched along per-set spanning trees and
    representative edges), and each path picks its first interior variable
    as pendant.  Blocks are disjoint in the grid, so the results are
    pairwise vertex-disjoint.
    """
    if not isinstance(host, SignedBipartiteGraph):
        raise ValueError("host must be a signed incidence graph")
    if not validate_grid_model(model, host):
        raise ValueError("invalid grid model for host graph")
    r = model.r
    if r < 4:
        return []
    adjacency = host.adj
    trees: dict[tuple[int, int], dict] = {}

    def tree_of(cell):
        if cell not in trees:
            trees[cell] = _bfs_tree(adjacency, model.subgraphs[cell])
        return trees[cell]

    out: list[NestedObstruction] = []
    for bi in range(1, r // 3 + 1):
        for bj in range(1, r // 4 + 1):
            grid_paths = _block_grid_paths(bi, bj)
            a_cell = grid_paths[0][0]
            b_cell = grid_paths[0][-1]
            a_atts = [
                _rep_endpoints(model, gp[0], gp[1])[0] for gp in grid_paths
            ]
            b_atts = [
                _rep_endpoints(model, gp[-2], gp[-1])[1] for gp in grid_paths
            ]
            r_a = _tree_median(tree_of(a_cell), *a_atts)
            r_b = _tree_median(tree_of(b_cell), *b_atts)

            host_paths = []
            for gp in grid_paths:
                path = [r_a]
                for step in range(len(gp) - 1):
                    host_u, host_v = _rep_endpoints(model, gp[step], gp[step + 1])
                    path.extend(_tree_path(tree_of(gp[step]), path[-1], host_u)[1:])
                    path.append(host_v)
                path.extend(_tree_path(tree_of(b_cell), path[-1], r_b)[1:])
                host_paths.append(tuple(path))

            picked = _select_pendants(adjacency, host_paths)
            if picked[0] != "ok":
                raise StructuralError(
                    f"block ({bi}, {bj}): no pendant available on an extracted path"
                )
            _, pendants, attachments = picked
            obstruction = NestedObstruction(
                r_a, r_b, tuple(host_paths), pendants, attachments
            )
            if not verify_obstruction(host, obstruction):
                raise StructuralError(
                    f"block ({bi}, {bj}): extracted subgraph failed verification"
                )
            out.append(obstruction)
    return out


def classify_kill(
    variable: int, obstruction: NestedObstruction, formula: CnfFormula
) -> KillClassification:
    """Internal if the variable sits on the obstruction; external if both of
    its polarities hit obstruction clauses; none otherwise."""
    if variable in obstruction.variable_ids:
        return KillClassification("internal")
    pos = neg = None
    for idx in sorted(obstruction.clause_indices):
        literals = formula.clauses[idx].literals
        if pos is None and variable in literals:
            pos = idx
        if neg is None and -variable in literals:
            neg = idx
    if pos is not None and neg is not None:
        return KillClassification("external", (pos, neg))
    return KillClassification("none")


def common_external_killers(
    obstructions: Iterable[NestedObstruction], formula: CnfFormula
) -> frozenset[int]:
    """Variables externally killing every given obstruction.

    The empty family yields all variables (the vacuous intersection).
    """
    obstructions = list(obstructions)
    if not obstructions:
        return frozenset(formula.variables)
    result: frozenset[int] | None = None
    for obstruction in obstructions:
        pos: set[int] = set()
        neg: set[int] = set()
        for idx in obstruction.clause_indices:
            for lit in formula.clauses[idx].literals:
                (pos if lit > 0 else neg).add(abs(lit))
        killers = frozenset((pos & neg) - obstruction.variable_ids)
        result = killers if result is None else result & killers
    return result


def obstruction_in_graph(obstruction: NestedObstruction, graph) -> bool:
    """Whether all vertices and edges of the witness survive in a graph."""
    adjacency = as_adjacency(graph)
    if any(n not in adjacency for n in obstruction.vertices):
        return False
    for path in obstruction.paths:
        if not all(v in adjacency[u] for u, v in zip(path, path[1:])):
            return False
    return all(
        anchor in adjacency[p] for p, anchor in obstruction.attachments
    )


def independent_paths_from_edge_disjoint(
    graph, x, y, paths: Sequence[Sequence]
) -> tuple:
    """Turn three edge-disjoint x-y paths into three independent paths.

    Returns (x', y', q1, q2, q3) where x' = x and y' is the spanning-tree
    median of the three neighbors of x along the input paths; each output
    path is the edge from x to that neighbor followed by the tree path to
    y'.  Only edges of the component of the input graph survive, so when
    the graph is exactly the union of the three paths, so are the outputs.
    """
    adjacency = as_adjacency(graph)
    if len(paths) != 3:
        raise ValueError("exactly three paths are required")
    edge_sets = []
    for path in paths:
        if not _valid_path(adjacency, path, x, y):
            raise ValueError("inputs must be x-y paths in the graph")
        edge_sets.append({frozenset((u, v)) for u, v in zip(path, path[1:])})
    for i in range(3):
        for j in range(i + 1, 3):
            if edge_sets[i] & edge_sets[j]:
                raise ValueError("input paths are not pairwise edge-disjoint")
    starts = [path[1] for path in paths]

    component = {y}
    queue = deque([y])
    while queue:
        u = queue.popleft()
        for w in adjacency[u]:
            if w != x and w not in component:
                component.add(w)
                queue.append(w)
    tree = _bfs_tree(adjacency, frozenset(component), root=y)
    y2 = _tree_median(tree, *starts)
    out_paths = tuple(
        (x,) + tuple(_tree_path(tree, s, y2)) for s in starts
    )
    return (x, y2, *out_paths)


def serialize_obstruction(obstruction: NestedObstruction) -> str:
    """Structured text record: endpoints, path vertex lists, pendants."""
    lines = [
        f"a {node_name(obstruction.a)}",
        f"b {node_name(obstruction.b)}",
    ]
    for i, path in enumerate(obstruction.paths, 1):
        lines.append(f"path{i} " + " ".join(node_name(n) for n in path))
    for i, (p, anchor) in enumerate(obstruction.attachments, 1):
        lines.append(f"pendant{i} {node_name(p)} {node_name(anchor)}")
    return "\n".join(lines) + "\n"
