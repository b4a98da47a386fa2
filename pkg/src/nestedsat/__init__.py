"""SAT and exact model counting via strong backdoors to nested formulas."""

from .formula import (
    Clause,
    CnfFormula,
    DimacsError,
    brute_force_count,
    delete_variables,
    emit_dimacs,
    generate_family,
    parse_dimacs,
    random_formula,
    reduce,
)
from .incidence import SignedBipartiteGraph, build_incidence, disjoint_paths
from .nested import (
    brute_force_nested_order,
    is_nested,
    is_nested_order,
    is_planar,
    straddles,
)
from .treewidth import (
    TreeDecomposition,
    count_models_td,
    count_nested,
    decompose,
    decompose_minfill,
    validate_decomposition,
)
from .obstruction import (
    GridModel,
    KillClassification,
    NestedObstruction,
    StructuralError,
    classify_kill,
    common_external_killers,
    extract_obstructions_from_grid,
    find_obstruction,
    identity_grid_model,
    independent_paths_from_edge_disjoint,
    k33_minor_model,
    verify_obstruction,
)
from .backdoor import (
    BackdoorResult,
    approximate_backdoor,
    branch_search_backdoor,
    build_killer_graph,
    build_killer_multigraph,
    candidate_set,
    exact_smallest_backdoor,
    search_parameters,
    verify_deletion,
    verify_strong,
)
from .solver import SolveReport, solve

__version__ = "0.1.0"
