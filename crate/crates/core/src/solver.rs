//! Alternating stochastic bilevel solver.
//!
//! One outer iteration, starting from `(x_k, y_k, v_k)` and the carried
//! direction estimates `(Dx, Dy, Dv)`:
//!
//! ```text
//! 1. anchor-or-inherit   every q1-th iteration the estimates are recomputed
//!                        as large-batch means at the current triple;
//!                        otherwise the estimates left behind by the previous
//!                        iteration's inner loops are reused as-is.
//! 2. x step              x_{k+1} = x_k - step_x * Dx
//! 3. lower-level loop    T steps on y, each stepping with the carried Dy
//!                        and then refreshing Dy with a correction step on a
//!                        fresh minibatch (ll_refine).
//! 4. auxiliary loop      J steps on v, each a projected step with the
//!                        carried Dv followed by correction refreshes of
//!                        BOTH Dx and Dv on fresh minibatches (aux_refine).
//! ```
//!
//! The first correction step of each inner loop straddles the preceding
//! update: its "previous point" is the iterate from before that update, so
//! the minibatch difference accounts for the move. After the first step the
//! frozen coordinates (x in the lower loop; x and y in the auxiliary loop)
//! stay put and the correction only tracks the moving coordinate.
//!
//! Iterates are guarded: a norm above [`DIVERGENCE_LIMIT`] (or a non-finite
//! value) aborts the run with an error naming the offending variable.

use crate::error::{BilevelError, Result};
use crate::estimator::{
    anchor, draw_or_full, vr_step, EstimatorConfig, EstimatorMode, EstimatorState, SampleLedger,
};
use crate::oracle::ProblemOracle;
use crate::sampling::SampleRng;
use crate::vector::{project_ball, BallRadius, Vector};

/// Iterate norms above this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Step sizes, loop lengths, and estimator configuration for a run.
///
/// `step_y` and `step_v` are the effective inner step sizes (the products of
/// the base step and its inner scaling factor, where those are tuned
/// separately). `step_x` may be zero to freeze the upper variable, which
/// gives the weight-frozen baseline used in the hyper-cleaning comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub k_max: usize,
    pub t_steps: usize,
    pub j_steps: usize,
    pub step_x: f64,
    pub step_y: f64,
    pub step_v: f64,
    pub radius: BallRadius,
    pub estimator: EstimatorConfig,
    pub seed: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("k_max", self.k_max),
            ("t_steps", self.t_steps),
            ("j_steps", self.j_steps),
        ] {
            if value == 0 {
                return Err(BilevelError::InvalidParameter {
                    name,
                    reason: "must be positive".to_string(),
                });
            }
        }
        if !self.step_x.is_finite() || self.step_x < 0.0 {
            return Err(BilevelError::InvalidParameter {
                name: "step_x",
                reason: format!("must be finite and non-negative, got {}", self.step_x),
            });
        }
        for (name, step) in [("step_y", self.step_y), ("step_v", self.step_v)] {
            if !step.is_finite() || step <= 0.0 {
                return Err(BilevelError::InvalidParameter {
                    name,
                    reason: format!("must be finite and positive, got {step}"),
                });
            }
        }
        self.estimator.validate()?;
        match self.estimator.mode() {
            Some(EstimatorMode::Spider) => {
                if self.estimator.q1 > self.k_max || !self.k_max.is_multiple_of(self.estimator.q1) {
                    return Err(BilevelError::InvalidParameter {
                        name: "q1",
                        reason: format!(
                            "anchoring period {} must divide k_max {} in spider mode",
                            self.estimator.q1, self.k_max
                        ),
                    });
                }
            }
            Some(EstimatorMode::Storm) => {
                if self.estimator.q1 != self.k_max {
                    return Err(BilevelError::InvalidParameter {
                        name: "q1",
                        reason: format!(
                            "storm mode anchors only once: q1 {} must equal k_max {}",
                            self.estimator.q1, self.k_max
                        ),
                    });
                }
            }
            Some(EstimatorMode::SgdBaseline) => {}
            None => {
                return Err(BilevelError::InvalidParameter {
                    name: "tau",
                    reason: format!(
                        "tau triple ({}, {}, {}) matches no estimator mode: use all zero, \
                         all in (0, 1), or all one",
                        self.estimator.tau_x, self.estimator.tau_y, self.estimator.tau_v
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Full solver state between outer iterations.
#[derive(Clone, Debug)]
pub struct OuterState {
    pub x: Vector,
    pub y: Vector,
    pub v: Vector,
    pub est: EstimatorState,
    pub k: usize,
    pub samples: SampleLedger,
}

impl OuterState {
    /// The default start: all three variables at the origin (which always
    /// lies inside the projection ball).
    pub fn zeros(dim_x: usize, dim_y: usize) -> Self {
        OuterState {
            x: Vector::zeros(dim_x),
            y: Vector::zeros(dim_y),
            v: Vector::zeros(dim_y),
            est: EstimatorState::zeros(dim_x, dim_y),
            k: 0,
            samples: SampleLedger::new(),
        }
    }

    /// Starts from explicit iterates. `v` must already lie in the ball.
    pub fn from_init(x: Vector, y: Vector, v: Vector, radius: BallRadius) -> Result<Self> {
        x.ensure_finite("initial x")?;
        y.ensure_finite("initial y")?;
        v.ensure_finite("initial v")?;
        if y.len() != v.len() {
            return Err(BilevelError::LengthMismatch {
                context: "initial y vs v",
                left: y.len(),
                right: v.len(),
            });
        }
        let limit = radius.get() * (1.0 + 4.0 * f64::EPSILON);
        if v.norm() > limit {
            return Err(BilevelError::InvalidParameter {
                name: "v0",
                reason: format!("norm {} outside the radius-{} ball", v.norm(), radius.get()),
            });
        }
        let (dim_x, dim_y) = (x.len(), y.len());
        Ok(OuterState {
            x,
            y,
            v,
            est: EstimatorState::zeros(dim_x, dim_y),
            k: 0,
            samples: SampleLedger::new(),
        })
    }

    pub fn samples_used(&self) -> u64 {
        self.samples.total()
    }
}

fn guard(variable: &'static str, vec: &Vector, k: usize) -> Result<()> {
    let norm = vec.norm();
    if norm.is_finite() && norm <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(BilevelError::Diverged {
            variable,
            norm,
            limit: DIVERGENCE_LIMIT,
            k,
        })
    }
}

/// Lower-level loop: `t_steps` stochastic steps on `y` at the frozen upper
/// iterate `x_new`, refreshing the y-direction estimate after each step.
///
/// `x_prev`, `y_prev`, `d_y_prev` describe the state before the x update;
/// the first correction differences across that update. Returns the new `y`
/// and its direction estimate, and charges `t_steps * 2 * s2` samples.
#[allow(clippy::too_many_arguments)]
pub fn ll_refine(
    oracle: &dyn ProblemOracle,
    x_prev: &Vector,
    y_prev: &Vector,
    d_y_prev: &Vector,
    x_new: &Vector,
    t_steps: usize,
    step_y: f64,
    tau_y: f64,
    s2: usize,
    k: usize,
    rng: &mut SampleRng,
    ledger: &mut SampleLedger,
) -> Result<(Vector, Vector)> {
    let n_low = oracle.n_lower();
    let mut d_y = d_y_prev.clone();
    let mut at_x = x_prev;
    let mut at_y = y_prev.clone();

    for _ in 0..t_steps {
        let mut y_cur = at_y.clone();
        y_cur.axpy(-step_y, &d_y);
        guard("y", &y_cur, k)?;

        let batch = draw_or_full(rng, n_low, s2)?;
        let current = oracle.dir_y(x_new, &y_cur, &batch)?;
        let previous = oracle.dir_y(at_x, &at_y, &batch)?;
        d_y = vr_step(&d_y, &current, &previous, tau_y)?;
        ledger.charge_ll_step(s2);

        at_x = x_new;
        at_y = y_cur;
    }
    Ok((at_y, d_y))
}

/// Auxiliary loop: `j_steps` projected stochastic steps on `v` at the frozen
/// pair `(x_new, y_new)`, refreshing BOTH the x- and v-direction estimates
/// after each step on independent minibatches.
///
/// The previous-point arguments describe the state before the x and y
/// updates; the first correction differences across both. Returns the new
/// `v` with both estimates, and charges `j_steps * 4 * s2` samples.
#[allow(clippy::too_many_arguments)]
pub fn aux_refine(
    oracle: &dyn ProblemOracle,
    x_prev: &Vector,
    y_prev: &Vector,
    v_prev: &Vector,
    d_x_prev: &Vector,
    d_v_prev: &Vector,
    x_new: &Vector,
    y_new: &Vector,
    j_steps: usize,
    step_v: f64,
    tau_x: f64,
    tau_v: f64,
    s2: usize,
    radius: BallRadius,
    k: usize,
    rng: &mut SampleRng,
    ledger: &mut SampleLedger,
) -> Result<(Vector, Vector, Vector)> {
    let n_up = oracle.n_upper();
    let n_low = oracle.n_lower();
    let mut d_x = d_x_prev.clone();
    let mut d_v = d_v_prev.clone();
    let mut at: (&Vector, &Vector, Vector) = (x_prev, y_prev, v_prev.clone());

    for _ in 0..j_steps {
        let mut v_cur = at.2.clone();
        v_cur.axpy(-step_v, &d_v);
        let v_cur = project_ball(&v_cur, radius)?;
        guard("v", &v_cur, k)?;

        let x_upper = draw_or_full(rng, n_up, s2)?;
        let x_lower = draw_or_full(rng, n_low, s2)?;
        let v_upper = draw_or_full(rng, n_up, s2)?;
        let v_lower = draw_or_full(rng, n_low, s2)?;

        let cur_x = oracle.dir_x(x_new, y_new, &v_cur, &x_upper, &x_lower)?;
        let prev_x = oracle.dir_x(at.0, at.1, &at.2, &x_upper, &x_lower)?;
        d_x = vr_step(&d_x, &cur_x, &prev_x, tau_x)?;

        let cur_v = oracle.dir_v(x_new, y_new, &v_cur, &v_upper, &v_lower)?;
        let prev_v = oracle.dir_v(at.0, at.1, &at.2, &v_upper, &v_lower)?;
        d_v = vr_step(&d_v, &cur_v, &prev_v, tau_v)?;

        ledger.charge_aux_step(s2);
        at = (x_new, y_new, v_cur);
    }
    Ok((at.2, d_x, d_v))
}

/// One full outer iteration, advancing `state.k` by one.
pub fn outer_step(
    state: &mut OuterState,
    config: &SolverConfig,
    oracle: &dyn ProblemOracle,
    rng: &mut SampleRng,
) -> Result<()> {
    let est = &config.estimator;
    if state.k.is_multiple_of(est.q1) {
        state.est = anchor(
            oracle,
            &state.x,
            &state.y,
            &state.v,
            est.s1,
            rng,
            &mut state.samples,
        )?;
    }

    let mut x_new = state.x.clone();
    x_new.axpy(-config.step_x, &state.est.d_x);
    guard("x", &x_new, state.k)?;

    let (y_new, d_y_new) = ll_refine(
        oracle,
        &state.x,
        &state.y,
        &state.est.d_y,
        &x_new,
        config.t_steps,
        config.step_y,
        est.tau_y,
        est.s2,
        state.k,
        rng,
        &mut state.samples,
    )?;

    let (v_new, d_x_new, d_v_new) = aux_refine(
        oracle,
        &state.x,
        &state.y,
        &state.v,
        &state.est.d_x,
        &state.est.d_v,
        &x_new,
        &y_new,
        config.j_steps,
        config.step_v,
        est.tau_x,
        est.tau_v,
        est.s2,
        config.radius,
        state.k,
        rng,
        &mut state.samples,
    )?;

    state.x = x_new;
    state.y = y_new;
    state.v = v_new;
    state.est = EstimatorState {
        d_x: d_x_new,
        d_y: d_y_new,
        d_v: d_v_new,
    };
    state.k += 1;
    Ok(())
}

/// Convenience driver owning the rng and state for a whole run.
pub struct Solver<'a> {
    oracle: &'a dyn ProblemOracle,
    config: SolverConfig,
    rng: SampleRng,
    state: OuterState,
}

impl<'a> Solver<'a> {
    /// Starts from the origin. Fails fast on an invalid configuration.
    pub fn new(oracle: &'a dyn ProblemOracle, config: SolverConfig) -> Result<Self> {
        Self::with_state(
            oracle,
            config,
            OuterState::zeros(oracle.dim_x(), oracle.dim_y()),
        )
    }

    pub fn with_state(
        oracle: &'a dyn ProblemOracle,
        config: SolverConfig,
        state: OuterState,
    ) -> Result<Self> {
        config.validate()?;
        if state.x.len() != oracle.dim_x() || state.y.len() != oracle.dim_y() {
            return Err(BilevelError::LengthMismatch {
                context: "initial state vs oracle dimensions",
                left: state.x.len(),
                right: oracle.dim_x(),
            });
        }
        Ok(Solver {
            oracle,
            rng: SampleRng::seed_from(config.seed),
            config,
            state,
        })
    }

    pub fn state(&self) -> &OuterState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Runs one outer iteration.
    pub fn step(&mut self) -> Result<()> {
        outer_step(&mut self.state, &self.config, self.oracle, &mut self.rng)
    }

    /// Runs outer iterations until `k_max` is reached.
    pub fn run(&mut self) -> Result<()> {
        while self.state.k < self.config.k_max {
            self.step()?;
        }
        Ok(())
    }
}
