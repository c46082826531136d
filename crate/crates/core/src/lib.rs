//! Alternating variance-reduced solvers for stochastic bilevel optimization.
//!
//! The toolkit minimizes an upper-level objective `f(x, y*(x))` where `y*(x)`
//! solves a strongly convex lower-level problem `min_y g(x, y)`. Instead of
//! solving the lower level to completion at every step, the solver alternates
//! a few lower-level and auxiliary-variable updates with each upper-level
//! step, and keeps recursive variance-reduced estimates of all three update
//! directions so that small minibatches suffice.
//!
//! The crate is organized as:
//!
//! * [`vector`]: a small dense vector type and the ball projection used to
//!   keep the auxiliary variable bounded.
//! * [`sampling`]: seeded minibatch index drawing.
//! * [`oracle`]: the [`oracle::ProblemOracle`] trait a problem implements to
//!   expose stochastic update directions.
//! * [`estimator`]: the variance-reduction recursion, anchor batches, and
//!   sample-cost ledger.
//! * [`solver`]: the outer loop tying everything together.
//! * [`problems`]: a synthetic quadratic benchmark with closed-form
//!   solutions, and a data hyper-cleaning benchmark that learns per-sample
//!   weights to suppress corrupted labels.

pub mod error;
pub mod estimator;
pub mod oracle;
pub mod problems;
pub mod sampling;
pub mod solver;
pub mod vector;

pub use error::{BilevelError, Result};
pub use estimator::{vr_step, EstimatorConfig, EstimatorMode, EstimatorState, SampleLedger};
pub use oracle::ProblemOracle;
pub use sampling::{SampleBatch, SampleRng};
pub use solver::{OuterState, Solver, SolverConfig};
pub use vector::{project_ball, BallRadius, Vector};
