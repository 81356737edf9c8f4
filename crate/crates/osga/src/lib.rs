//! First-order solvers for composite convex objectives
//!
//! The objective family is a sum of smooth losses and nonsmooth regularizers,
//! each composed with a linear operator:
//!
//! ```text
//! Ψ(x) = Σ fᵢ(Aᵢ x) + Σ φⱼ(Wⱼ x)
//! ```
//!
//! The crate is organized around a small set of building blocks:
//!
//! * [`element`] — points and shapes (flat vectors and row-major matrices),
//! * [`linop`] — the linear operators Aᵢ, Wⱼ with exact adjoints,
//! * [`problems`] — objective terms and the counting oracle,
//! * [`proxfun`] — the quadratic distance generator and its closed-form
//!   auxiliary subproblem,
//! * [`solver`] — the main solver, which maintains a global lower bound and
//!   reports a certified optimality gap at every iteration,
//! * [`baselines`] — comparison methods (subgradient descent, proximal
//!   gradient, its accelerated variant, and a backtracking momentum method),
//! * [`trace`] — iteration records, stopping rules, and solve reports.
//!
//! Solvers only touch the objective through the oracle in [`problems`], so
//! operator applications are counted identically across methods; benchmark
//! tooling in the companion binary crate builds on those counts.

pub mod baselines;
pub mod element;
pub mod error;
pub mod linop;
pub mod problems;
pub mod proxfun;
pub mod solver;
pub mod trace;

pub use element::{Element, Shape};
pub use error::{Error, Result};
pub use linop::LinearMap;
pub use problems::{CompositeProblem, OpCounts, OracleResult, OracleValue, Regularizer, SmoothTerm};
pub use proxfun::{QuadraticProx, SubproblemSolution};
pub use solver::{osga_init, osga_solve, osga_step, OsgaParams, SolverState};
pub use trace::{
    MemorySink, NullSink, SolveReport, StopReason, Termination, TraceRow, TraceSample, TraceSink,
};
