//! Constrained stochastic successive convex approximation: estimators,
//! critics, surrogates and the subproblem solvers.

pub mod critic;
pub mod estimators;
pub mod schedule;
pub mod solver;
pub mod surrogate;

pub use critic::{td_critic_update, TdOutcome};
pub use estimators::{estimate_f_tilde, estimate_g_tilde, update_scalar_average, update_vector_average};
pub use schedule::{StepSchedule, StepSizes};
pub use solver::{
    actor_step, mix_theta, solve_feasible_update, solve_objective_update, ActorStep, Branch, FeasibleSolution,
    ObjectiveOutcome, ObjectiveSolution, SolverOptions,
};
pub use surrogate::{build_surrogates, ParamBox, SurrogateSet};
