"""Optimal source-prefix filters against IP blacklists.

Exact tree dynamic programs over the longest-common-prefix tree of the
input addresses, for four problems:

* BLOCK-ALL: cover every bad address with at most ``F`` prefixes while
  blocking as little good weight as possible;
* BLOCK-SOME: trade blocked good weight against unblocked bad weight;
* FLOODING: least collateral damage that brings total traffic under a
  link capacity;
* DIST-FLOODING: FLOODING at several routers without filtering any
  blacklist address twice.

Incremental maintenance, a brute-force oracle and a K-means baseline come
along for verification and comparison.
"""
from .block import SweepRow, block_dp, solve_block_all, solve_block_some, sweep_filters
from .dist import (CoordinationRound, DistResult, PriceVector, RouterSpec, assignment_violations,
                   coordinate, load_routers, recover_primal, router_subproblem)
from .dynamic import ChangeReport, DynamicSolverState, dump_state, load_state
from .errors import BudgetExceededError, FilterError, InfeasibleError, InputError, ParseError
from .flooding import (FloodingInstance, LagrangianResult, expand_filters, flooding_dp, max_blockable,
                       solve_flooding, solve_flooding_lagrangian)
from .lcptree import LcpNode, LcpTree, annotate, build_lcp_tree, tree_for
from .oracle import EnumerationBudget, brute_force, brute_force_dist, kmeans_filters
from .prefix import Prefix, format_address, format_prefix, lcp, parse_address, parse_prefix
from .solution import BLOCK_ALL, BLOCK_SOME, FLOODING, FilterSolution, score
from .traffic import (BAD, GOOD, PRESETS, ScenarioConfig, WeightedAddressSet, gen_clustered_blacklist,
                      gen_good_traffic, generate_scenario, load_address_set, load_scenario_config)

__version__ = "0.1.0"
