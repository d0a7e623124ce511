//! Zeroth-order stochastic ADMM for problems of the form
//! `min f(x) + Σⱼ ψⱼ(yⱼ)  s.t.  A x + Σⱼ Bⱼ yⱼ = c`,
//! where `f` is a finite sum accessible only through function values.
//!
//! Four variants share one linearized ADMM loop and differ in the gradient
//! estimator: deterministic full coordinate estimates, plain mini-batches,
//! and the SVRG and SAGA variance-reduced estimators.

pub mod admm;
pub mod benchmarks;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod zo_grad;

pub use admm::{run, OutputRule, SolverConfig, SolverOutput, Variant};
pub use error::{Error, Result};
pub use problem::{BlackBoxObjective, ComponentFunction, ConstrainedProblem};
