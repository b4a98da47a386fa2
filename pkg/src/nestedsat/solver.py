"""End-to-end SAT and model-counting pipeline.

Find (or accept) a strong backdoor to the nested formulas, then sum the
exact counts of the nested residual formulas over all assignments to the
backdoor.  Residual counts run on a thread pool; the summation order is
fixed, so results are deterministic.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from .backdoor import (
    approximate_backdoor,
    branch_search_backdoor,
    exact_smallest_backdoor,
)
from .formula import CnfFormula, reduce as reduce_formula
from .incidence import build_incidence
from .nested import brute_force_nested_order, is_nested, NESTED_ORDER_VAR_CAP
from .obstruction import find_obstruction, serialize_obstruction
from .treewidth import count_nested

__all__ = ["SolveReport", "solve"]


@dataclass
class SolveReport:
    """Outcome of one solver run."""

    status: str
    count: int | None
    backdoor: tuple[int, ...]
    mode: str
    witnesses: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out: dict = {
            "status": self.status,
            "backdoor": list(self.backdoor),
            "mode": self.mode,
            "witnesses": self.witnesses,
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }
        if self.count is not None:
            out["count"] = str(self.count)
        return out


def _assignments(variables: tuple[int, ...]):
    for bits in itertools.product((False, True), repeat=len(variables)):
        yield dict(zip(variables, bits))


def _witnesses_for(formula: CnfFormula) -> list[dict]:
    if is_nested(formula):
        witness: dict = {"type": "nested"}
        if formula.num_vars <= NESTED_ORDER_VAR_CAP:
            order = brute_force_nested_order(formula)
            witness["order"] = list(order) if order is not None else None
        return [witness]
    found = find_obstruction(build_incidence(formula))
    if found is None:
        return [{"type": "non-nested"}]
    return [{"type": "obstruction", "record": serialize_obstruction(found)}]


def solve(
    formula: CnfFormula,
    count: bool = False,
    backdoor: Iterable[int] | None = None,
    backdoor_max: int = 4,
    mode: str = "branching",
    emit_witness: bool = False,
) -> SolveReport:
    """Decide satisfiability (and optionally count models) of a formula.

    A supplied backdoor is verified first; otherwise one is searched for
    within ``backdoor_max`` using the requested mode ("branching", "exact"
    or "approx").  Failure to find one yields status "budget-exceeded",
    which says nothing about satisfiability.
    """
    timings: dict[str, float] = {}
    start = time.perf_counter()
    if backdoor is not None:
        chosen = tuple(sorted(set(backdoor)))
        for tau in _assignments(chosen):
            if not is_nested(reduce_formula(formula, tau)):
                nice = ", ".join(f"{v}={int(val)}" for v, val in sorted(tau.items()))
                raise ValueError(
                    f"supplied backdoor is not strong: assignment {{{nice}}} "
                    "leaves a non-nested formula"
                )
        used_mode = "supplied"
    else:
        if mode == "branching":
            result = branch_search_backdoor(formula, backdoor_max)
        elif mode == "exact":
            result = exact_smallest_backdoor(formula, backdoor_max)
        elif mode == "approx":
            result = approximate_backdoor(formula, backdoor_max)
        else:
            raise ValueError(f"unknown search mode {mode!r}")
        if result is None:
            timings["search"] = time.perf_counter() - start
            witnesses = _witnesses_for(formula) if emit_witness else []
            return SolveReport(
                "budget-exceeded", None, (), mode, witnesses, timings
            )
        chosen = tuple(sorted(result.variables))
        used_mode = mode
    timings["search"] = time.perf_counter() - start

    start = time.perf_counter()
    assignments = list(_assignments(chosen))
    total: int | None = None
    if count:
        if len(assignments) == 1:
            counts = [count_nested(reduce_formula(formula, assignments[0]))]
        else:
            with ThreadPoolExecutor(max_workers=min(8, len(assignments))) as pool:
                counts = list(
                    pool.map(
                        lambda tau: count_nested(reduce_formula(formula, tau)),
                        assignments,
                    )
                )
        total = sum(counts)
        satisfiable = total > 0
    else:
        satisfiable = any(
            count_nested(reduce_formula(formula, tau)) > 0 for tau in assignments
        )
    timings["count"] = time.perf_counter() - start

    witnesses = _witnesses_for(formula) if emit_witness else []
    return SolveReport(
        "sat" if satisfiable else "unsat",
        total,
        chosen,
        used_mode,
        witnesses,
        timings,
    )
