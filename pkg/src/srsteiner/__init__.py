"""Exact symbolic regression by degree-constrained Steiner arborescence
search over a layered expression graph, with executable reductions and
brute-force cross-checks."""

from .exprs import (ABS_TOL, REL_TOL, Apply, BudgetExhausted, Const, Dataset,
                    DEFAULT_OPERATORS, Expression, LossKind, OPERATORS,
                    OperatorDef, ParseError, StructureError, TopSum, Var,
                    depth, evaluate, evaluate_dataset, get_operator, loss,
                    nearly_equal, parse, render)
from .expr_graph import (DEFAULT_CONSTANTS, ROOT_ID, ConstVertex, ExprGraph,
                         GraphSpec, OpVertex, RootVertex, VarVertex, build,
                         count_arborescences, to_dot, to_json_doc)
from .arborescence import (Arborescence, EdgeWeightReport, SearchCounter,
                           TerminalSet, edge_weights, embed, embed_with_reason,
                           iter_arborescences, require_valid, to_expression,
                           tree_to_dot, validate)
from .solver import (DEFAULT_ZERO_TOL, SRResult, SearchStats, SolveResult,
                     WeightedDigraph, decide_dcsap, decide_dcsap_functional,
                     solve_min_dcsap, solve_sr, tree_weight)
from .reductions import (ReducedInstance, SRInstance, UndirectedGraph,
                         bisect_min_weight, dcstp_to_dcsap, instance_from_text,
                         instance_to_text, read_instance, sr_to_dcsap,
                         write_instance)
from .oracle import (BruteForceResult, EnumerationBudget, brute_force_dcsap,
                     brute_force_dcstp, brute_force_sr, contains_variable,
                     enumerate_expressions, enumerate_valid_arc_sets,
                     expr_size, iter_expressions, random_expression)

__version__ = "0.1.0"
