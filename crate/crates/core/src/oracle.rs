//! The stochastic first-order oracle interface.
//!
//! A bilevel problem
//!
//! ```text
//!   min_x  f(x, y*(x))   where   y*(x) = argmin_y g(x, y)
//! ```
//!
//! is exposed to the solver through three direction oracles, each a batch
//! mean of per-sample derivatives:
//!
//! * `dir_y`: gradient of the lower objective in `y`; driving it to zero
//!   solves the inner problem.
//! * `dir_v`: residual `H v - b` of the linear system defining the
//!   auxiliary variable, where `H` is the lower Hessian in `y` and `b` the
//!   upper gradient in `y`; driving it to zero solves for `v = H^{-1} b`.
//! * `dir_x`: upper gradient in `x` minus the mixed-derivative product
//!   with `v`; at the exact pair `(y*(x), v*(x))` this is the hypergradient
//!   of the overall objective.
//!
//! Upper-objective samples come from a validation split (`n_upper` of them)
//! and lower-objective samples from a training split (`n_lower`). `dir_v`
//! and `dir_x` mix both levels, so they take one batch per split; the two
//! batches are drawn independently by the caller. Hessians are never
//! materialized: implementations provide analytic Hessian- and
//! mixed-Jacobian-vector products.
//!
//! Contract for every direction: the output has the documented length, is
//! finite (else an error), and its expectation over a uniformly drawn batch
//! equals the full-dataset direction. Passing the entire dataset as the
//! batch must reproduce the exact direction up to rounding.

use crate::error::Result;
use crate::sampling::SampleBatch;
use crate::vector::Vector;

pub trait ProblemOracle {
    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;

    /// Number of samples in the upper-level (validation) split.
    fn n_upper(&self) -> usize;

    /// Number of samples in the lower-level (training) split.
    fn n_lower(&self) -> usize;

    /// Batch-mean lower-level gradient in `y`, length `dim_y`.
    fn dir_y(&self, x: &Vector, y: &Vector, lower: &SampleBatch) -> Result<Vector>;

    /// Batch-mean auxiliary residual, length `dim_y`: Hessian-vector product
    /// of the lower objective applied to `v` (over `lower`), minus the upper
    /// gradient in `y` (over `upper`).
    fn dir_v(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        upper: &SampleBatch,
        lower: &SampleBatch,
    ) -> Result<Vector>;

    /// Batch-mean hypergradient surrogate, length `dim_x`: upper gradient in
    /// `x` (over `upper`), minus the mixed-Jacobian-vector product with `v`
    /// (over `lower`).
    fn dir_x(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        upper: &SampleBatch,
        lower: &SampleBatch,
    ) -> Result<Vector>;

    /// `dir_y` over the entire training split.
    fn exact_dir_y(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.dir_y(x, y, &SampleBatch::full(self.n_lower())?)
    }

    /// `dir_v` over both entire splits.
    fn exact_dir_v(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<Vector> {
        self.dir_v(
            x,
            y,
            v,
            &SampleBatch::full(self.n_upper())?,
            &SampleBatch::full(self.n_lower())?,
        )
    }

    /// `dir_x` over both entire splits.
    fn exact_dir_x(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<Vector> {
        self.dir_x(
            x,
            y,
            v,
            &SampleBatch::full(self.n_upper())?,
            &SampleBatch::full(self.n_lower())?,
        )
    }
}
