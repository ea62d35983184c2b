//! Multi-round ransom payment game between an attacker with a data-sale
//! reputation and a victim deciding round by round whether to pay.

pub mod error;
pub mod game;
pub mod lp;
pub mod montecarlo;
pub mod par;
pub mod reputation;
pub mod strategy;

pub use error::{Error, Result};
pub use game::{AbortRound, Decay, GameInstance, InstanceSpec, RansomSchedule, Reputation, Violation};
pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus};
pub use montecarlo::{compare_scenarios, run_scenario, ReputationMode, ScenarioConfig, ScenarioResult};
pub use reputation::{
    build_lp, grid_search_reputation, optimal_reputation, overcharge_bound, recover_reputation, single_round_optimum,
    OptimalReputationResult,
};
pub use strategy::{
    attacker_expected_profit, decide_single_round, enumerate_best_response, perfect_reputation_policy, round_costs,
    subgame_policy, victim_policy, worst_case_equilibrium, ProfitBreakdown, VictimPolicy,
};
