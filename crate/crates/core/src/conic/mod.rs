//! Conic programs and the robust logistic regression models built on them.

mod dro;
mod params;
mod program;

pub use crate::cutgen::evaluate_worst_case_loss;
pub(crate) use dro::build_monolithic_with;
pub use dro::{
    build_continuous_model, build_monolithic, build_reduced_master, enumerate_categories,
    softplus_epigraph, CutVars, DroConfig, DroModel, Family, MasterSolution,
};
pub use params::{empirical_log_loss, round_sig, softplus, ModelParams};
pub use program::{
    AffineExpr, ConicProgram, ExpConeTriple, LinearRow, RowSense, SecondOrderCone, Var,
};
