"""CNF formulas: data model, DIMACS round-trip, reduction, and generators.

Formulas are immutable values.  Variables are positive integers, literals
are nonzero integers whose sign carries the polarity, and clauses are
duplicate-free literal sets that never contain a complementary pair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "BRUTE_FORCE_VAR_CAP",
    "Clause",
    "CnfFormula",
    "DimacsError",
    "brute_force_count",
    "delete_variables",
    "emit_dimacs",
    "generate_family",
    "grid_positions",
    "parse_dimacs",
    "random_formula",
    "reduce",
    "reduce_with_clause_map",
]

BRUTE_FORCE_VAR_CAP = 24

FAMILY_NAMES = ("grid", "grid_plus_x", "disjoint_union")


class DimacsError(ValueError):
    """Malformed DIMACS CNF input."""


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals, stored as a set of signed integers."""

    literals: frozenset[int]

    def __post_init__(self) -> None:
        for lit in self.literals:
            if not isinstance(lit, int) or lit == 0:
                raise ValueError(f"bad literal {lit!r}: literals are nonzero integers")
        if len({abs(lit) for lit in self.literals}) != len(self.literals):
            raise ValueError("clause contains a complementary pair of literals")

    @classmethod
    def from_ints(cls, lits: Iterable[int]) -> "Clause":
        return cls(frozenset(lits))

    @property
    def variables(self) -> frozenset[int]:
        return frozenset(abs(lit) for lit in self.literals)

    def __contains__(self, lit: int) -> bool:
        return lit in self.literals

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.literals, key=lambda l: (abs(l), l < 0)))


@dataclass(frozen=True)
class CnfFormula:
    """An immutable CNF formula with an explicit, ordered variable universe.

    The variable tuple may contain variables that occur in no clause; they
    still count as assignment targets (and as incidence-graph vertices).
    """

    variables: tuple[int, ...]
    clauses: tuple[Clause, ...]
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        seen = set()
        for v in self.variables:
            if not isinstance(v, int) or v <= 0:
                raise ValueError(f"bad variable id {v!r}")
            if v in seen:
                raise ValueError(f"duplicate variable id {v}")
            seen.add(v)
        for c in self.clauses:
            extra = c.variables - seen
            if extra:
                raise ValueError(f"clause uses undeclared variables {sorted(extra)}")

    @classmethod
    def from_ints(
        cls,
        clause_lists: Iterable[Iterable[int]],
        variables: Iterable[int] | None = None,
    ) -> "CnfFormula":
        clauses = tuple(Clause.from_ints(lits) for lits in clause_lists)
        if variables is None:
            universe: set[int] = set()
            for c in clauses:
                universe |= c.variables
            variables = sorted(universe)
        return cls(tuple(variables), clauses)

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text into a formula.

    Comment lines are kept on the returned formula.  A clause containing a
    complementary pair is rejected: the whole library assumes such clauses
    do not exist.
    """
    comments: list[str] = []
    n_vars: int | None = None
    n_clauses: int | None = None
    clauses: list[Clause] = []
    current: list[int] = []

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line[0] == "c":
            comments.append(line[1:].strip())
            continue
        if line[0] == "p":
            if n_vars is not None:
                raise DimacsError("duplicate problem line")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed problem line: {line!r}")
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"malformed problem line: {line!r}") from None
            if n_vars < 0 or n_clauses < 0:
                raise DimacsError(f"malformed problem line: {line!r}")
            continue
        if n_vars is None:
            raise DimacsError("clause data before problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}") from None
            if lit == 0:
                try:
                    clauses.append(Clause.from_ints(current))
                except ValueError:
                    raise DimacsError(
                        f"tautological clause {sorted(current, key=abs)}"
                    ) from None
                current = []
            else:
                if abs(lit) > n_vars:
                    raise DimacsError(
                        f"literal {lit} exceeds declared variable count {n_vars}"
                    )
                current.append(lit)

    if n_vars is None:
        raise DimacsError("missing problem line")
    if current:
        raise DimacsError("unterminated clause at end of input")
    if len(clauses) != n_clauses:
        raise DimacsError(
            f"declared {n_clauses} clauses but found {len(clauses)}"
        )
    return CnfFormula(tuple(range(1, n_vars + 1)), tuple(clauses), tuple(comments))


def emit_dimacs(formula: CnfFormula) -> str:
    """Render a formula as DIMACS CNF text.  Comments are discarded."""
    n = max(formula.variables, default=0)
    lines = [f"p cnf {n} {formula.num_clauses}"]
    for clause in formula.clauses:
        lits = sorted(clause.literals, key=lambda l: (abs(l), l < 0))
        lines.append(" ".join(str(l) for l in lits) + (" 0" if lits else "0"))
    return "\n".join(lines) + "\n"


def _check_domain(formula: CnfFormula, names: Iterable[int]) -> None:
    extra = set(names) - set(formula.variables)
    if extra:
        raise ValueError(f"assignment mentions unknown variables {sorted(extra)}")


def reduce(formula: CnfFormula, assignment: Mapping[int, bool]) -> CnfFormula:
    """Apply a partial assignment: drop satisfied clauses, strip false literals.

    The assigned variables leave the variable universe even when they did
    not occur in any clause.
    """
    reduced, _ = reduce_with_clause_map(formula, assignment)
    return reduced


def reduce_with_clause_map(
    formula: CnfFormula, assignment: Mapping[int, bool]
) -> tuple[CnfFormula, dict[int, int | None]]:
    """Like :func:`reduce`, also mapping old clause indices to new ones.

    Satisfied (removed) clauses map to ``None``.
    """
    _check_domain(formula, assignment)
    new_clauses: list[Clause] = []
    clause_map: dict[int, int | None] = {}
    for idx, clause in enumerate(formula.clauses):
        satisfied = False
        kept: list[int] = []
        for lit in clause.literals:
            value = assignment.get(abs(lit))
            if value is None:
                kept.append(lit)
            elif (lit > 0) == value:
                satisfied = True
                break
        if satisfied:
            clause_map[idx] = None
            continue
        clause_map[idx] = len(new_clauses)
        new_clauses.append(Clause.from_ints(kept))
    new_vars = tuple(v for v in formula.variables if v not in assignment)
    return CnfFormula(new_vars, tuple(new_clauses)), clause_map


def delete_variables(formula: CnfFormula, doomed: Iterable[int]) -> CnfFormula:
    """Strip both literals of each given variable from every clause."""
    doomed = set(doomed)
    _check_domain(formula, doomed)
    new_clauses = tuple(
        Clause.from_ints(l for l in c.literals if abs(l) not in doomed)
        for c in formula.clauses
    )
    new_vars = tuple(v for v in formula.variables if v not in doomed)
    return CnfFormula(new_vars, new_clauses)


def grid_positions(n: int) -> dict[tuple[int, int], tuple[str, int]]:
    """Map grid cells (i, j), 1-based, to the grid family's entities.

    Cells with i+j even become clauses, the rest become variables.  Both
    kinds are numbered in row-major order: variables from 1, clause indices
    from 0.  The numbering matches ``generate_family("grid", n)``.
    """
    layout: dict[tuple[int, int], tuple[str, int]] = {}
    next_var = 1
    next_clause = 0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if (i + j) % 2 == 0:
                layout[(i, j)] = ("clause", next_clause)
                next_clause += 1
            else:
                layout[(i, j)] = ("var", next_var)
                next_var += 1
    return layout


def _grid_formula(n: int) -> CnfFormula:
    layout = grid_positions(n)
    n_vars = sum(1 for kind, _ in layout.values() if kind == "var")
    clause_lits: dict[int, list[int]] = {}
    for (i, j), (kind, ident) in layout.items():
        if kind != "clause":
            continue
        lits = []
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            neighbor = layout.get((i + di, j + dj))
            if neighbor is not None:
                lits.append(neighbor[1])
        clause_lits[ident] = sorted(lits)
    clauses = tuple(
        Clause.from_ints(clause_lits[idx]) for idx in range(len(clause_lits))
    )
    return CnfFormula(tuple(range(1, n_vars + 1)), clauses)


def generate_family(name: str, n: int) -> CnfFormula:
    """Generate one of the built-in formula families.

    ``grid``: incidence graph is the n-by-n grid, clauses on cells where
    i+j is even, all occurrences positive.  ``grid_plus_x``: the grid
    formula plus one fresh variable occurring positively in clauses whose
    cell sum is not a multiple of four and negatively in the others.
    ``disjoint_union``: n variable-disjoint copies of
    (x or y or z) and (not-x or y or z).
    """
    if name in ("grid", "grid_plus_x"):
        if n < 2:
            raise ValueError(f"family {name!r} needs n >= 2, got {n}")
        base = _grid_formula(n)
        if name == "grid":
            return base
        x = base.num_vars + 1
        layout = grid_positions(n)
        clause_cell = {ident: cell for cell, (kind, ident) in layout.items() if kind == "clause"}
        clauses = []
        for idx, clause in enumerate(base.clauses):
            i, j = clause_cell[idx]
            lit = x if (i + j) % 4 != 0 else -x
            clauses.append(Clause.from_ints(set(clause.literals) | {lit}))
        return CnfFormula(tuple(range(1, x + 1)), tuple(clauses))
    if name == "disjoint_union":
        if n < 1:
            raise ValueError(f"family {name!r} needs n >= 1, got {n}")
        clauses = []
        for i in range(n):
            x, y, z = 3 * i + 1, 3 * i + 2, 3 * i + 3
            clauses.append(Clause.from_ints((x, y, z)))
            clauses.append(Clause.from_ints((-x, y, z)))
        return CnfFormula(tuple(range(1, 3 * n + 1)), tuple(clauses))
    raise ValueError(f"unknown family {name!r}; expected one of {FAMILY_NAMES}")


def random_formula(
    rng: random.Random,
    n_vars: int,
    n_clauses: int,
    min_width: int = 1,
    max_width: int = 3,
) -> CnfFormula:
    """Draw a random formula on variables 1..n_vars with random polarities."""
    if n_vars < 0 or n_clauses < 0:
        raise ValueError("sizes must be nonnegative")
    variables = tuple(range(1, n_vars + 1))
    clauses = []
    for _ in range(n_clauses):
        width = rng.randint(min(min_width, n_vars), min(max_width, n_vars))
        chosen = rng.sample(variables, width) if width else []
        clauses.append(
            Clause.from_ints(v if rng.random() < 0.5 else -v for v in chosen)
        )
    return CnfFormula(variables, tuple(clauses))


def brute_force_count(formula: CnfFormula, max_vars: int = BRUTE_FORCE_VAR_CAP) -> int:
    """Count models by enumerating all assignments.  Oracle-grade, capped."""
    n = formula.num_vars
    if n > max_vars:
        raise ValueError(f"{n} variables exceeds the brute-force cap {max_vars}")
    bit = {v: i for i, v in enumerate(sorted(formula.variables))}
    dtype = np.uint64 if n > 31 else np.uint32
    space = np.arange(1 << n, dtype=dtype)
    satisfied = np.ones(1 << n, dtype=bool)
    for clause in formula.clauses:
        pos = 0
        neg = 0
        for lit in clause.literals:
            if lit > 0:
                pos |= 1 << bit[lit]
            else:
                neg |= 1 << bit[-lit]
        clause_ok = np.zeros(1 << n, dtype=bool)
        if pos:
            clause_ok |= (space & dtype(pos)) != 0
        if neg:
            clause_ok |= (space & dtype(neg)) != dtype(neg)
        satisfied &= clause_ok
    return int(np.count_nonzero(satisfied))
