"""Strong backdoor sets to the class of nested formulas.

A strong backdoor is a variable set whose every assignment reduces the
formula to a nested one.  This module verifies backdoors, searches for
them exactly (subset enumeration) and by obstruction-guided branching,
implements the killer-pairing graphs and the three candidate-set rules of
the grid-driven analysis, and provides the recursive approximation driver
that returns a set of size at most 2^k - 1 or certifies that no set of
size at most k exists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .formula import CnfFormula, reduce as reduce_formula, delete_variables
from .incidence import SignedBipartiteGraph, build_incidence, var_node
from .nested import is_nested
from .obstruction import NestedObstruction, StructuralError, find_obstruction

__all__ = [
    "BackdoorResult",
    "KillerGraph",
    "KillerMultigraph",
    "SearchParameters",
    "StructuralError",
    "approximate_backdoor",
    "branch_search_backdoor",
    "build_killer_graph",
    "build_killer_multigraph",
    "candidate_set",
    "default_candidate_provider",
    "exact_smallest_backdoor",
    "killer_variables",
    "search_parameters",
    "verify_deletion",
    "verify_strong",
]

VERIFY_SIZE_CAP = 20
EXACT_VAR_CAP = 20
EXACT_K_CAP = 4
BRANCH_K_CAP = 12

RULE_FEW_KILLERS = 1
RULE_REPEATED_LINK = 2
RULE_HIGH_DEGREE = 3


@dataclass(frozen=True)
class BackdoorResult:
    """A verified strong backdoor plus the guarantee its producer makes."""

    variables: frozenset[int]
    kind: str
    bound_claim: int


@dataclass(frozen=True)
class KillerGraph:
    """Pairing graph on the common external killers of one obstruction."""

    killers: tuple[int, ...]
    edges: frozenset[tuple[int, int]]

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)


@dataclass(frozen=True)
class KillerMultigraph:
    """Union of killer graphs; each edge remembers its obstruction indices."""

    killers: tuple[int, ...]
    edges: tuple[tuple[tuple[int, int], tuple[int, ...]], ...]

    def multiplicity(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        for edge, sources in self.edges:
            if edge == key:
                return len(sources)
        return 0


def _assignments(variables: Sequence[int]):
    for bits in itertools.product((False, True), repeat=len(variables)):
        yield dict(zip(variables, bits))


def verify_strong(
    formula: CnfFormula, backdoor: Iterable[int], max_size: int = VERIFY_SIZE_CAP
) -> bool:
    """Every assignment to the set must leave a nested residual formula."""
    backdoor = sorted(set(backdoor))
    extra = set(backdoor) - set(formula.variables)
    if extra:
        raise ValueError(f"backdoor mentions unknown variables {sorted(extra)}")
    if len(backdoor) > max_size:
        raise ValueError(
            f"backdoor of size {len(backdoor)} exceeds the verification cap {max_size}"
        )
    return all(
        is_nested(reduce_formula(formula, tau)) for tau in _assignments(backdoor)
    )


def verify_deletion(formula: CnfFormula, backdoor: Iterable[int]) -> bool:
    """Stripping both polarities of the set must leave a nested formula."""
    return is_nested(delete_variables(formula, set(backdoor)))


def _checked_result(
    formula: CnfFormula, variables: frozenset[int], kind: str, bound: int
) -> BackdoorResult:
    assert verify_strong(formula, variables, max_size=max(VERIFY_SIZE_CAP, len(variables)))
    return BackdoorResult(variables, kind, bound)


def exact_smallest_backdoor(
    formula: CnfFormula,
    k_max: int,
    var_cap: int = EXACT_VAR_CAP,
    k_cap: int = EXACT_K_CAP,
) -> BackdoorResult | None:
    """Minimum strong backdoor of size <= k_max by subset enumeration.

    Desk-scale oracle: guarded by variable and size caps.  Among all
    minimum-size backdoors the lexicographically first one is returned.
    """
    if formula.num_vars > var_cap:
        raise ValueError(
            f"{formula.num_vars} variables exceeds the exact-search cap {var_cap}"
        )
    if k_max > k_cap:
        raise ValueError(f"k_max {k_max} exceeds the exact-search cap {k_cap}")
    ordered = sorted(formula.variables)
    for size in range(0, k_max + 1):
        for combo in itertools.combinations(ordered, size):
            if verify_strong(formula, combo):
                return _checked_result(formula, frozenset(combo), "exact-minimum", size)
    return None


def killer_variables(obstruction: NestedObstruction, formula: CnfFormula) -> frozenset[int]:
    """All variables that destroy the obstruction under every assignment."""
    pos: set[int] = set()
    neg: set[int] = set()
    for idx in obstruction.clause_indices:
        for lit in formula.clauses[idx].literals:
            (pos if lit > 0 else neg).add(abs(lit))
    return obstruction.variable_ids | (pos & neg)


def branch_search_backdoor(
    formula: CnfFormula, k: int, k_cap: int = BRANCH_K_CAP
) -> BackdoorResult | None:
    """Complete bounded search for a strong backdoor of size <= k.

    Depth-first over candidate sets: whenever some assignment to the
    current set leaves a non-nested residual, an obstruction of that
    residual is located and the search branches on its killers (every
    strong backdoor extending the current set must contain one).  If no
    obstruction is found the branching falls back to all residual
    variables, which keeps the search complete.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > k_cap:
        raise ValueError(f"k {k} exceeds the branching cap {k_cap}")

    def search(chosen: frozenset[int]) -> frozenset[int] | None:
        failing = None
        for tau in _assignments(sorted(chosen)):
            residual = reduce_formula(formula, tau)
            if not is_nested(residual):
                failing = residual
                break
        if failing is None:
            return chosen
        if len(chosen) >= k:
            return None
        witness = find_obstruction(build_incidence(failing))
        if witness is None:
            candidates = frozenset(failing.variables)
        else:
            candidates = killer_variables(witness, failing)
        for x in sorted(candidates):
            found = search(chosen | {x})
            if found is not None:
                return found
        return None

    result = search(frozenset())
    if result is None:
        return None
    return _checked_result(formula, result, "branching", k)


def _obstruction_adjacency(obstruction: NestedObstruction) -> dict:
    adj: dict = {v: set() for v in obstruction.vertices}
    for path in obstruction.paths:
        for u, v in zip(path, path[1:]):
            adj[u].add(v)
            adj[v].add(u)
    for p, anchor in obstruction.attachments:
        adj[p].add(anchor)
        adj[anchor].add(p)
    return {u: tuple(sorted(vs)) for u, vs in adj.items()}


def _clean_path_exists(
    obstruction_adj: Mapping,
    start,
    goal,
    forbidden_neighbors: frozenset,
    graph: SignedBipartiteGraph,
) -> bool:
    """Simple path in the obstruction whose internal vertices avoid the
    neighborhoods of the forbidden killer variables."""
    if start == goal:
        return True

    def internal_ok(w) -> bool:
        return not any(
            var_node(z) in graph.adj[w] for z in forbidden_neighbors
        )

    stack = [(start, {start})]
    while stack:
        node, visited = stack.pop()
        for w in obstruction_adj[node]:
            if w in visited:
                continue
            if w == goal:
                return True
            if internal_ok(w):
                stack.append((w, visited | {w}))
    return False


def build_killer_graph(
    obstruction: NestedObstruction,
    killers: Iterable[int],
    graph: SignedBipartiteGraph,
) -> KillerGraph:
    """Two-phase pairing of an obstruction's common external killers.

    Phase one links killers sharing an obstruction clause; phase two links
    the rest through obstruction paths whose interiors avoid the other
    killers' neighborhoods.  Every vertex must end with degree at least
    one, otherwise a :class:`StructuralError` is raised.
    """
    killers = tuple(sorted(set(killers)))
    if len(killers) < 2:
        raise ValueError("need at least two common external killers")
    on_obstruction = {
        z: frozenset(
            u for u in graph.adj[var_node(z)] if u in obstruction.vertices
        )
        for z in killers
    }
    for z in killers:
        if var_node(z) in obstruction.vertices:
            raise ValueError(f"variable {z} kills the obstruction internally")
        signs = {graph.edge_sign(var_node(z), c) for c in on_obstruction[z]}
        if signs != {1, -1}:
            raise ValueError(f"variable {z} is not an external killer")

    edges: set[tuple[int, int]] = set()
    degree = {z: 0 for z in killers}

    def add_edge(u: int, v: int) -> None:
        edges.add((min(u, v), max(u, v)))
        degree[u] += 1
        degree[v] += 1

    # Phase one: common obstruction neighbors.
    progress = True
    while progress:
        progress = False
        for v in killers:
            if degree[v] != 0:
                continue
            partners = [
                u
                for u in killers
                if u != v and on_obstruction[u] & on_obstruction[v]
            ]
            if not partners:
                continue
            u = min(partners, key=lambda w: (degree[w], w))
            add_edge(u, v)
            progress = True
            break

    # Phase two: linking paths inside the obstruction.
    obstruction_adj = _obstruction_adjacency(obstruction)
    progress = True
    while progress:
        progress = False
        for v in killers:
            if degree[v] != 0:
                continue
            forbidden = frozenset(z for z in killers if z != v)
            for u in sorted(
                (w for w in killers if w != v), key=lambda w: (degree[w], w)
            ):
                linked = any(
                    _clean_path_exists(
                        obstruction_adj, v_anchor, u_anchor, forbidden, graph
                    )
                    for v_anchor in sorted(on_obstruction[v])
                    for u_anchor in sorted(on_obstruction[u])
                )
                if linked:
                    add_edge(u, v)
                    progress = True
                    break
            if progress:
                break

    if any(degree[z] == 0 for z in killers):
        isolated = [z for z in killers if degree[z] == 0]
        raise StructuralError(
            f"killer pairing left isolated vertices {isolated}"
        )
    return KillerGraph(killers, frozenset(edges))


def build_killer_multigraph(
    obstructions: Sequence[NestedObstruction],
    killers: Iterable[int],
    graph: SignedBipartiteGraph,
) -> KillerMultigraph:
    """Multiset union of the per-obstruction killer graphs."""
    killers = tuple(sorted(set(killers)))
    tally: dict[tuple[int, int], list[int]] = {}
    for idx, obstruction in enumerate(obstructions):
        single = build_killer_graph(obstruction, killers, graph)
        for edge in sorted(single.edges):
            tally.setdefault(edge, []).append(idx)
    edges = tuple(
        (edge, tuple(sources)) for edge, sources in sorted(tally.items())
    )
    return KillerMultigraph(killers, edges)


def candidate_set(
    killers: Iterable[int],
    obstructions: Sequence[NestedObstruction],
    multigraph: KillerMultigraph,
    k: int,
) -> tuple[int, frozenset[int]]:
    """First applicable candidate rule and the variable set it selects.

    Rule 1: fewer common killers than obstructions, take them all.
    Rule 2: some pair is linked by more than 2 * 2^k parallel edges, take it.
    Rule 3: take the 2k highest-degree killers after merging parallel edges.
    """
    killers = sorted(set(killers))
    if not obstructions:
        raise ValueError("need at least one obstruction")
    if len(killers) < len(obstructions):
        return (RULE_FEW_KILLERS, frozenset(killers))
    threshold = 2 * 2**k + 1
    for edge, sources in multigraph.edges:
        if len(sources) >= threshold:
            return (RULE_REPEATED_LINK, frozenset(edge))
    degree = {z: 0 for z in killers}
    for (u, v), _ in multigraph.edges:
        degree[u] += 1
        degree[v] += 1
    top = sorted(killers, key=lambda z: (-degree[z], z))[: 2 * k]
    return (RULE_HIGH_DEGREE, frozenset(top))


@dataclass(frozen=True)
class SearchParameters:
    """Size bounds steering the grid-driven analysis for budget k.

    ``group_size`` obstructions must share one external killer set,
    ``obstruction_count`` vertex-disjoint obstructions are requested, a
    ``grid_size``-grid is large enough to host them, and the treewidth
    threshold is kept symbolic as base ** exponent (far beyond anything
    materializable).
    """

    k: int
    group_size: int
    obstruction_count: int
    grid_size: int
    treewidth_base: int
    treewidth_exponent: int

    def treewidth_log10(self) -> float:
        return self.treewidth_exponent * math.log10(self.treewidth_base)

    def treewidth_exceeds(self, value: int) -> bool:
        if value <= 0:
            return True
        return self.treewidth_log10() > math.log10(value)


def search_parameters(k: int) -> SearchParameters:
    """Exact parameter bundle for budget k (grid size ceiled to an integer)."""
    if k < 1:
        raise ValueError("k must be positive")
    group_size = 15 * 2 ** (2 * k + 2)
    obstruction_count = 2**k * group_size + k
    target = 16 * (obstruction_count + 1)
    grid_size = math.isqrt(target)
    if grid_size * grid_size < target:
        grid_size += 1
    return SearchParameters(
        k=k,
        group_size=group_size,
        obstruction_count=obstruction_count,
        grid_size=grid_size,
        treewidth_base=20,
        treewidth_exponent=2 * grid_size**5,
    )


def default_candidate_provider(formula: CnfFormula, budget: int) -> frozenset[int]:
    """Killers of one found obstruction; all variables as a sound fallback."""
    witness = find_obstruction(build_incidence(formula))
    if witness is None:
        return frozenset(formula.variables)
    return killer_variables(witness, formula)


def approximate_backdoor(
    formula: CnfFormula,
    k: int,
    provider: Callable[[CnfFormula, int], frozenset[int]] | None = None,
) -> BackdoorResult | None:
    """Strong backdoor of size <= 2^k - 1, or None certifying none of size <= k.

    For each candidate the driver recurses on both restrictions with budget
    k - 1 and combines the first pair of successes.  The provider must
    return, for any non-nested formula, a nonempty variable set meeting
    every strong backdoor within the current budget; the default one uses
    the killers of a found obstruction.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    chosen_provider = provider if provider is not None else default_candidate_provider

    def recurse(current: CnfFormula, budget: int) -> frozenset[int] | None:
        if is_nested(current):
            return frozenset()
        if budget == 0:
            return None
        candidates = frozenset(chosen_provider(current, budget))
        if not candidates:
            raise StructuralError(
                "candidate provider returned no variables for a non-nested formula"
            )
        unknown = candidates - set(current.variables)
        if unknown:
            raise ValueError(
                f"candidate provider returned unknown variables {sorted(unknown)}"
            )
        for x in sorted(candidates):
            low = recurse(reduce_formula(current, {x: False}), budget - 1)
            if low is None:
                continue
            high = recurse(reduce_formula(current, {x: True}), budget - 1)
            if high is None:
                continue
            return low | high | {x}
        return None

    found = recurse(formula, k)
    if found is None:
        return None
    bound = 2**k - 1 if k > 0 else 0
    return _checked_result(formula, found, "approximation", bound)
