import pytest

from nestedsat.formula import CnfFormula

# Canonical 7-variable nested example used across the suite.
# Variables t,u,v,w,x,y,z are numbered 1..7; model count frozen from two
# independent exhaustive enumerations over all 128 assignments.
NESTED_7VAR_CLAUSES = [
    (1, -2),
    (2, 3, 4),
    (4, 5),
    (5, -6),
    (6, -7),
    (1, 2, -4),
    (-5, 7),
    (-1, 4, 5),
]
NESTED_7VAR_ORDER = (1, 2, 3, 4, 5, 6, 7)
NESTED_7VAR_COUNT = 12

# Frozen brute-force model counts for the generated families (n = 4).
GRID4_COUNT = 106
GRID4_PLUS_X_COUNT = 288


@pytest.fixture
def nested_7var() -> CnfFormula:
    return CnfFormula.from_ints(NESTED_7VAR_CLAUSES, variables=range(1, 8))
