"""Recognition of nested CNF formulas.

A formula is nested when its variables admit a linear order under which no
two clauses straddle each other both ways.  Membership is decided through
the planarity of the incidence graph extended with a universal clause; a
permutation-enumerating oracle checks the order definition directly.
"""

from __future__ import annotations

import itertools
import random
from functools import lru_cache
from typing import Sequence

import networkx as nx

from .formula import Clause, CnfFormula
from .incidence import as_adjacency, build_incidence

__all__ = [
    "NESTED_ORDER_VAR_CAP",
    "brute_force_nested_order",
    "is_nested",
    "is_nested_order",
    "is_planar",
    "random_nested_formula",
    "straddles",
]

NESTED_ORDER_VAR_CAP = 8


def straddles(clause: Clause, other: Clause, order: Sequence[int]) -> bool:
    """True iff two variables of ``clause`` bracket a variable of ``other``.

    Equivalently: some variable of ``other`` lies strictly inside the
    position span of ``clause`` under ``order``.
    """
    position = {v: i for i, v in enumerate(order)}
    missing = (clause.variables | other.variables) - set(position)
    if missing:
        raise ValueError(f"order is missing variables {sorted(missing)}")
    if len(clause.variables) < 2 or not other.variables:
        return False
    spots = [position[v] for v in clause.variables]
    lo, hi = min(spots), max(spots)
    return any(lo < position[z] < hi for z in other.variables)


def _mutual_overlap_exists(
    clause_positions: list[list[int]],
) -> bool:
    spans = []
    for spots in clause_positions:
        if len(spots) >= 2:
            spans.append((min(spots), max(spots), spots))
        else:
            spans.append(None)
    m = len(clause_positions)
    for i in range(m):
        si = spans[i]
        if si is None:
            continue
        lo_i, hi_i, _ = si
        for j in range(i + 1, m):
            sj = spans[j]
            if sj is None:
                continue
            lo_j, hi_j, spots_j = sj
            if not any(lo_i < p < hi_i for p in spots_j):
                continue
            if any(lo_j < p < hi_j for p in si[2]):
                return True
    return False


def is_nested_order(formula: CnfFormula, order: Sequence[int]) -> bool:
    """True iff no two clauses mutually straddle under the given order."""
    if sorted(order) != sorted(formula.variables) or len(order) != len(
        formula.variables
    ):
        raise ValueError("order is not a permutation of the formula's variables")
    position = {v: i for i, v in enumerate(order)}
    clause_positions = [
        [position[v] for v in clause.variables] for clause in formula.clauses
    ]
    return not _mutual_overlap_exists(clause_positions)


def is_planar(graph) -> bool:
    """Planarity of an arbitrary graph (signs and tags are ignored)."""
    adjacency = as_adjacency(graph)
    g = nx.Graph()
    g.add_nodes_from(adjacency)
    for u, nbrs in adjacency.items():
        for v in nbrs:
            g.add_edge(u, v)
    ok, _ = nx.check_planarity(g, counterexample=False)
    return ok


@lru_cache(maxsize=1 << 16)
def is_nested(formula: CnfFormula) -> bool:
    """Membership test via planarity of the universal-clause incidence graph."""
    return is_planar(build_incidence(formula, universal=True))


def brute_force_nested_order(
    formula: CnfFormula, max_vars: int = NESTED_ORDER_VAR_CAP
) -> tuple[int, ...] | None:
    """Smallest witnessing order in lexicographic permutation order, if any."""
    n = formula.num_vars
    if n > max_vars:
        raise ValueError(f"{n} variables exceeds the order-oracle cap {max_vars}")
    variables = sorted(formula.variables)
    rank = {v: i for i, v in enumerate(variables)}
    clause_ranks = [
        [rank[v] for v in clause.variables] for clause in formula.clauses
    ]
    position = [0] * n
    for perm in itertools.permutations(range(n)):
        for where, r in enumerate(perm):
            position[r] = where
        clause_positions = [[position[r] for r in ranks] for ranks in clause_ranks]
        if not _mutual_overlap_exists(clause_positions):
            return tuple(variables[r] for r in perm)
    return None


def random_nested_formula(
    rng: random.Random,
    n_vars: int,
    n_clauses: int,
    max_width: int = 4,
) -> CnfFormula:
    """Random nested formula: a random order plus non-overlapping clauses.

    Candidate clauses are drawn at random and kept only when they overlap
    no accepted clause under the hidden order, so the result is nested by
    construction.  May return fewer than ``n_clauses`` clauses.
    """
    variables = list(range(1, n_vars + 1))
    order = variables[:]
    rng.shuffle(order)
    position = {v: i for i, v in enumerate(order)}
    accepted: list[Clause] = []
    accepted_positions: list[list[int]] = []
    attempts = 0
    while len(accepted) < n_clauses and attempts < 40 * max(1, n_clauses):
        attempts += 1
        width = rng.randint(1, min(max_width, n_vars)) if n_vars else 0
        chosen = rng.sample(variables, width) if width else []
        candidate = Clause.from_ints(
            v if rng.random() < 0.5 else -v for v in chosen
        )
        spots = [position[v] for v in candidate.variables]
        if _overlaps_any(accepted_positions, spots):
            continue
        accepted.append(candidate)
        accepted_positions.append(spots)
    return CnfFormula(tuple(variables), tuple(accepted))


def _overlaps_any(accepted_positions: list[list[int]], spots: list[int]) -> bool:
    if len(spots) < 2:
        candidate_span = None
    else:
        candidate_span = (min(spots), max(spots))
    for other in accepted_positions:
        if candidate_span is not None and any(
            candidate_span[0] < p < candidate_span[1] for p in other
        ):
            if len(other) >= 2:
                lo, hi = min(other), max(other)
                if any(lo < p < hi for p in spots):
                    return True
    return False
