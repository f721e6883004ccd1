"""Minimum coalition sizes for positional voting rules.

A positional rule scores ballots by a non-increasing weight vector.  This
package measures how many strategic voters it takes to overturn a given
outcome: an exact integer search with verified witnesses, a chain of
linear-program relaxations collapsing to a two-variable dual over a planar
polytope, the limiting distribution of coalition size over random
electorates, and a dominance order comparing rules by manipulation
resistance.
"""

from .election import (
    Profile,
    Scoreboard,
    ScoreVector,
    all_rankings,
    antiplurality,
    borda,
    k_approval,
    normalize,
    parse_rule,
    plurality,
    sample_ic,
    scoreboard,
    three_candidate,
    top_two,
)
from .lp import LinearProgram, LpOutcome, LpStatus, NumericalFailure, dual_gap_check, solve
from .exact import (
    CoalitionPlan,
    InstanceTooLarge,
    ManipulationInstance,
    McsOutcome,
    NotStrictWinner,
    mcs_exact,
    mcs_outcome,
    q1,
    q2,
    q3,
    q_program2,
    verify_integral_plan,
    verify_stratified_plan,
)
from .reduction import (
    MarginPair,
    Polytope2D,
    closed_form_q,
    cone_optimal_vertices,
    k_constant,
    mw_polytope,
    optimal_vertex_set,
    q_dual,
    q_stratified,
    sigma_scaled,
    witness_from_z,
)
from .asymptotics import (
    DominanceReport,
    GwCurve,
    LimitModel,
    Verdict,
    convergence_experiment,
    curve_from_csv,
    curve_to_csv,
    dominates,
    gap_cdf,
    gw_curve,
    limit_model,
    plateau_probability,
    sample_vw,
    vw_from_z,
)

__version__ = "0.1.0"

__all__ = [
    "Profile", "Scoreboard", "ScoreVector", "all_rankings", "antiplurality",
    "borda", "k_approval", "normalize", "parse_rule", "plurality", "sample_ic",
    "scoreboard", "three_candidate", "top_two",
    "LinearProgram", "LpOutcome", "LpStatus", "NumericalFailure",
    "dual_gap_check", "solve",
    "CoalitionPlan", "InstanceTooLarge", "ManipulationInstance", "McsOutcome",
    "NotStrictWinner", "mcs_exact", "mcs_outcome", "q1", "q2", "q3",
    "q_program2", "verify_integral_plan", "verify_stratified_plan",
    "MarginPair", "Polytope2D", "closed_form_q", "cone_optimal_vertices",
    "k_constant", "mw_polytope", "optimal_vertex_set", "q_dual",
    "q_stratified", "sigma_scaled", "witness_from_z",
    "DominanceReport", "GwCurve", "LimitModel", "Verdict",
    "convergence_experiment", "curve_from_csv", "curve_to_csv", "dominates",
    "gap_cdf", "gw_curve", "limit_model", "plateau_probability", "sample_vw",
    "vw_from_z",
]
