//! The power-splitting game: each link picks its own ratio to maximise its
//! own rate. Best responses have closed forms, and the best-response map is a
//! standard function, so simultaneous best-response iteration converges to
//! the unique equilibrium from any start.

mod axioms;
mod best_response;
mod solver;

pub use axioms::{check_standard_axioms, AxiomReport, AxiomTrial};
pub use best_response::{
    best_response, best_response_af, best_response_df, best_response_map, c_d_of, kappa, AF_EQUAL_SPLIT_TOL,
};
pub use solver::{
    fixed_point_residual, random_ratios, solve, solve_with, EquilibriumResult, InitialProfile, SolverOptions,
    STEP_DENOMINATOR_FLOOR,
};

pub(crate) use best_response::df_equal_hops;
