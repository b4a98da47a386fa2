"""Tree decompositions of small width and exact model counting over them.

``decompose`` is exact for small target widths (branch and bound over
elimination orders with memoized dead ends); ``decompose_minfill`` always
returns a valid decomposition of unguaranteed width.  ``count_models_td``
runs the standard incidence-graph dynamic program: per-bag variable
assignments plus satisfied-clause flags over a nice form of the tree.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .formula import CnfFormula
from .incidence import as_adjacency, build_incidence, is_clause_node, is_var_node, node_name
from .nested import is_nested

__all__ = [
    "EXACT_WIDTH_CAP",
    "TreeDecomposition",
    "count_models_td",
    "count_nested",
    "decompose",
    "decompose_minfill",
    "decomposition_from_text",
    "decomposition_to_text",
    "validate_decomposition",
]

EXACT_WIDTH_CAP = 6


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags indexed 0..n-1 plus tree edges between bag indices."""

    bags: tuple[frozenset, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1


def validate_decomposition(graph, decomposition: TreeDecomposition) -> bool:
    """Check vertex coverage, edge coverage, and per-vertex connectivity."""
    adjacency = as_adjacency(graph)
    vertices = set(adjacency)
    bags = decomposition.bags
    n = len(bags)

    if n == 0:
        return not vertices and not decomposition.edges
    tree: dict[int, list[int]] = {i: [] for i in range(n)}
    seen_edges = set()
    for e in decomposition.edges:
        if len(e) != 2:
            return False
        i, j = e
        if i == j or not (0 <= i < n and 0 <= j < n):
            return False
        key = (min(i, j), max(i, j))
        if key in seen_edges:
            return False
        seen_edges.add(key)
        tree[i].append(j)
        tree[j].append(i)
    if len(seen_edges) != n - 1 or not _connected_in(tree, set(range(n))):
        return False

    covered = set()
    for bag in bags:
        covered |= bag
    if covered != vertices:
        return False

    for u in adjacency:
        for v in adjacency[u]:
            if not any(u in bag and v in bag for bag in bags):
                return False

    for v in vertices:
        holders = {i for i, bag in enumerate(bags) if v in bag}
        if not _connected_in(tree, holders):
            return False
    return True


def _connected_in(tree: dict[int, list[int]], nodes: set[int]) -> bool:
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in tree[u]:
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen == nodes


def _eliminate(adj: dict, v) -> None:
    nbrs = adj.pop(v)
    for u in nbrs:
        adj[u].discard(v)
    for u in nbrs:
        for w in nbrs:
            if u != w:
                adj[u].add(w)


def _is_simplicial(adj: dict, v) -> bool:
    nbrs = list(adj[v])
    for i, u in enumerate(nbrs):
        for w in nbrs[i + 1:]:
            if w not in adj[u]:
                return False
    return True


def _exact_order(adj: dict, width: int) -> list | None:
    """Elimination order of width <= ``width`` over one component, or None."""
    adj = {u: set(vs) for u, vs in adj.items()}
    order: list = []
    dead: set[frozenset] = set()

    def reduce_safe(graph, partial) -> bool:
        # A simplicial vertex is safe to eliminate first when its degree
        # fits the target; above the target its clique certifies failure.
        while True:
            acted = False
            for v in sorted(graph):
                d = len(graph[v])
                if d <= 1 or _is_simplicial(graph, v):
                    if d > width:
                        return False
                    partial.append(v)
                    _eliminate(graph, v)
                    acted = True
                    break
            if not acted:
                return True

    def search(graph, partial) -> list | None:
        if not reduce_safe(graph, partial):
            return None
        if len(graph) <= width + 1:
            return partial + sorted(graph)
        key = frozenset(graph)
        if key in dead:
            return None
        for v in sorted(graph):
            if len(graph[v]) <= width:
                child = {u: set(vs) for u, vs in graph.items()}
                _eliminate(child, v)
                result = search(child, partial + [v])
                if result is not None:
                    return result
        dead.add(key)
        return None

    return search(adj, order)


def _components(adjacency) -> list[dict]:
    remaining = set(adjacency)
    comps = []
    while remaining:
        start = min(remaining)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append({u: set(adjacency[u]) for u in seen})
        remaining -= seen
    return comps


def _decomposition_from_order(adjacency, order) -> TreeDecomposition:
    adj = {u: set(vs) for u, vs in adjacency.items()}
    elim: list[tuple[object, list]] = []
    for v in order:
        elim.append((v, sorted(adj[v])))
        _eliminate(adj, v)
    bags: list[frozenset] = []
    edges: list[tuple[int, int]] = []
    for v, nbrs in reversed(elim):
        bag = frozenset([v, *nbrs])
        if not bags:
            bags.append(bag)
            continue
        need = set(nbrs)
        target = next((i for i, b in enumerate(bags) if need <= b), 0)
        bags.append(bag)
        edges.append((target, len(bags) - 1))
    return TreeDecomposition(tuple(bags), tuple(edges))


def decompose(graph, target_width: int) -> TreeDecomposition | None:
    """Exact: a decomposition of width <= target_width, or None if impossible."""
    if target_width < 0:
        raise ValueError("target width must be nonnegative")
    if target_width > EXACT_WIDTH_CAP:
        raise ValueError(
            f"target width {target_width} exceeds the exact-mode cap {EXACT_WIDTH_CAP}"
        )
    adjacency = as_adjacency(graph)
    if not adjacency:
        return TreeDecomposition((), ())
    full_order: list = []
    for comp in _components(adjacency):
        order = _exact_order(comp, target_width)
        if order is None:
            return None
        full_order.extend(order)
    decomposition = _decomposition_from_order(adjacency, full_order)
    assert decomposition.width <= target_width
    return decomposition


def decompose_minfill(graph) -> TreeDecomposition:
    """Heuristic: min-fill elimination; valid but width unguaranteed."""
    adjacency = as_adjacency(graph)
    if not adjacency:
        return TreeDecomposition((), ())
    adj = {u: set(vs) for u, vs in adjacency.items()}
    order = []
    while adj:
        best = None
        best_fill = None
        for v in sorted(adj):
            nbrs = sorted(adj[v])
            fill = sum(
                1
                for i, u in enumerate(nbrs)
                for w in nbrs[i + 1:]
                if w not in adj[u]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        order.append(best)
        _eliminate(adj, best)
    return _decomposition_from_order(adjacency, order)


def _rooted(decomposition: TreeDecomposition) -> tuple[dict[int, list[int]], list[int]]:
    n = len(decomposition.bags)
    tree: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, j in decomposition.edges:
        tree[i].append(j)
        tree[j].append(i)
    children: dict[int, list[int]] = {i: [] for i in range(n)}
    post: list[int] = []
    seen = {0}
    stack = [(0, iter(sorted(tree[0])))]
    while stack:
        node, it = stack[-1]
        advanced = False
        for child in it:
            if child not in seen:
                seen.add(child)
                children[node].append(child)
                stack.append((child, iter(sorted(tree[child]))))
                advanced = True
                break
        if not advanced:
            post.append(node)
            stack.pop()
    return children, post


def _bag_parts(bag) -> tuple[frozenset, frozenset]:
    var_ids = frozenset(n[1] for n in bag if is_var_node(n))
    clause_ids = frozenset(n[1] for n in bag if is_clause_node(n))
    return var_ids, clause_ids


def _morph_ops(ops, formula, cur_vars, cur_clauses, to_vars, to_clauses):
    for x in sorted(cur_vars - to_vars):
        ops.append(("forget_var", x))
        cur_vars = cur_vars - {x}
    for c in sorted(cur_clauses - to_clauses):
        ops.append(("forget_clause", c))
        cur_clauses = cur_clauses - {c}
    for c in sorted(to_clauses - cur_clauses):
        checks = tuple(
            (abs(lit), lit > 0)
            for lit in sorted(formula.clauses[c].literals, key=abs)
            if abs(lit) in cur_vars
        )
        ops.append(("intro_clause", c, checks))
        cur_clauses = cur_clauses | {c}
    for x in sorted(to_vars - cur_vars):
        checks = tuple(
            (c, x in formula.clauses[c].literals)
            for c in sorted(cur_clauses)
            if x in formula.clauses[c].variables
        )
        ops.append(("intro_var", x, checks))
        cur_vars = cur_vars | {x}
    return cur_vars, cur_clauses


def _program(formula: CnfFormula, decomposition: TreeDecomposition) -> list[tuple]:
    children, post = _rooted(decomposition)
    bag_vars = {}
    bag_clauses = {}
    for i, bag in enumerate(decomposition.bags):
        bag_vars[i], bag_clauses[i] = _bag_parts(bag)
    programs: dict[int, list[tuple]] = {}
    for node in post:
        kids = children[node]
        if not kids:
            ops: list[tuple] = [("table_empty",)]
            _morph_ops(ops, formula, frozenset(), frozenset(), bag_vars[node], bag_clauses[node])
        else:
            ops = []
            for pos, kid in enumerate(kids):
                ops.extend(programs.pop(kid))
                _morph_ops(
                    ops, formula, bag_vars[kid], bag_clauses[kid],
                    bag_vars[node], bag_clauses[node],
                )
                if pos > 0:
                    ops.append(("join",))
        programs[node] = ops
    program = programs[post[-1]]
    _morph_ops(
        program, formula, bag_vars[post[-1]], bag_clauses[post[-1]],
        frozenset(), frozenset(),
    )
    return program


def _run_program(program: list[tuple]) -> int:
    stack: list[dict] = []
    for op in program:
        tag = op[0]
        if tag == "table_empty":
            stack.append({(frozenset(), frozenset()): 1})
        elif tag == "intro_var":
            _, x, checks = op
            table = stack.pop()
            new: dict = {}
            for (true_vars, sat), cnt in table.items():
                for value in (False, True):
                    tv = true_vars | {x} if value else true_vars
                    extra = frozenset(c for c, needed in checks if needed == value)
                    key = (tv, sat | extra)
                    new[key] = new.get(key, 0) + cnt
            stack.append(new)
        elif tag == "forget_var":
            _, x = op
            table = stack.pop()
            new = {}
            for (true_vars, sat), cnt in table.items():
                key = (true_vars - {x}, sat)
                new[key] = new.get(key, 0) + cnt
            stack.append(new)
        elif tag == "intro_clause":
            _, c, checks = op
            table = stack.pop()
            new = {}
            for (true_vars, sat), cnt in table.items():
                ok = any((x in true_vars) == needed for x, needed in checks)
                key = (true_vars, sat | {c} if ok else sat)
                new[key] = new.get(key, 0) + cnt
            stack.append(new)
        elif tag == "forget_clause":
            _, c = op
            table = stack.pop()
            new = {}
            for (true_vars, sat), cnt in table.items():
                if c in sat:
                    key = (true_vars, sat - {c})
                    new[key] = new.get(key, 0) + cnt
            stack.append(new)
        elif tag == "join":
            right = stack.pop()
            left = stack.pop()
            by_assignment: dict = {}
            for (true_vars, sat), cnt in right.items():
                by_assignment.setdefault(true_vars, []).append((sat, cnt))
            new = {}
            for (true_vars, sat_l), cnt_l in left.items():
                for sat_r, cnt_r in by_assignment.get(true_vars, ()):
                    key = (true_vars, sat_l | sat_r)
                    new[key] = new.get(key, 0) + cnt_l * cnt_r
            stack.append(new)
        else:
            raise AssertionError(f"unknown op {tag}")
    assert len(stack) == 1
    return stack[0].get((frozenset(), frozenset()), 0)


def count_models_td(formula: CnfFormula, decomposition: TreeDecomposition) -> int:
    """Exact model count over a valid decomposition of the incidence graph."""
    graph = build_incidence(formula)
    if not validate_decomposition(graph, decomposition):
        raise ValueError("invalid tree decomposition for the formula's incidence graph")
    if not decomposition.bags:
        return 1
    return _run_program(_program(formula, decomposition))


def count_nested(formula: CnfFormula) -> int:
    """Exact model count of a nested formula via a width-3 decomposition."""
    if not is_nested(formula):
        raise ValueError("formula is not nested")
    decomposition = decompose(build_incidence(formula), 3)
    if decomposition is None:
        raise RuntimeError(
            "internal error: nested formula admits no width-3 decomposition"
        )
    return count_models_td(formula, decomposition)


def decomposition_to_text(decomposition: TreeDecomposition) -> str:
    """Line format for fixtures: ``bag <id> <nodes...>`` then ``edge <i> <j>``."""
    lines = []
    for i, bag in enumerate(decomposition.bags):
        names = " ".join(node_name(n) for n in sorted(bag))
        lines.append(f"bag {i} {names}".rstrip())
    for i, j in decomposition.edges:
        lines.append(f"edge {i} {j}")
    return "\n".join(lines) + ("\n" if lines else "")


def decomposition_from_text(text: str) -> TreeDecomposition:
    bags: dict[int, frozenset] = {}
    edges = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "bag":
            idx = int(parts[1])
            members = []
            for token in parts[2:]:
                kind, num = token[0], int(token[1:])
                if kind == "v":
                    members.append(("v", num))
                elif kind == "c":
                    members.append(("c", num))
                else:
                    raise ValueError(f"bad node token {token!r}")
            bags[idx] = frozenset(members)
        elif parts[0] == "edge":
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"bad decomposition line {line!r}")
    ordered = tuple(bags[i] for i in range(len(bags)))
    return TreeDecomposition(ordered, tuple(edges))
