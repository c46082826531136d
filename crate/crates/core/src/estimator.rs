//! Recursive variance-reduced direction estimators.
//!
//! The solver never consumes raw oracle output directly; it tracks one
//! running estimate per direction and refreshes it in two ways:
//!
//! * [`anchor`]: a plain batch mean over three independent large batches,
//!   recomputed from scratch. Periodic anchoring caps how far the recursive
//!   estimates can drift.
//! * [`vr_step`]: the correction recursion. Given the previous estimate and
//!   the same minibatch evaluated at the current and previous points,
//!
//!   ```text
//!   new = current + (1 - tau) * (prev_estimate - previous)
//!   ```
//!
//!   `tau = 0` keeps the full correction (the telescoping estimator family),
//!   `tau` in `(0, 1)` decays it geometrically (the momentum family), and
//!   `tau = 1` discards it, leaving the plain minibatch mean.
//!
//! Sample accounting lives here too: every charge the solver can incur is a
//! method on [`SampleLedger`], so the bookkeeping rules sit next to the code
//! that spends the samples.

use crate::error::{BilevelError, Result};
use crate::oracle::ProblemOracle;
use crate::sampling::{SampleBatch, SampleRng};
use crate::vector::Vector;

/// The three running direction estimates the solver carries.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState {
    pub d_x: Vector,
    pub d_y: Vector,
    pub d_v: Vector,
}

impl EstimatorState {
    pub fn zeros(dim_x: usize, dim_y: usize) -> Self {
        EstimatorState {
            d_x: Vector::zeros(dim_x),
            d_y: Vector::zeros(dim_y),
            d_v: Vector::zeros(dim_y),
        }
    }
}

/// Which classical algorithm a tau configuration corresponds to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMode {
    /// All correction weights zero: telescoping estimates with periodic
    /// re-anchoring every `q1` outer iterations.
    Spider,
    /// All correction weights strictly inside (0, 1): geometrically decaying
    /// momentum, anchored only once at the start (`q1` equals the iteration
    /// budget).
    Storm,
    /// All correction weights one: plain minibatch SGD estimates.
    SgdBaseline,
}

/// Estimator hyperparameters.
///
/// `s1` is the anchor batch size, `s2` the inner minibatch size, and `q1`
/// the anchoring period in outer iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_v: f64,
    pub s1: usize,
    pub s2: usize,
    pub q1: usize,
}

impl EstimatorConfig {
    pub fn spider(s1: usize, s2: usize, q1: usize) -> Self {
        EstimatorConfig {
            tau_x: 0.0,
            tau_y: 0.0,
            tau_v: 0.0,
            s1,
            s2,
            q1,
        }
    }

    pub fn storm(s1: usize, s2: usize, q1: usize, tau_x: f64, tau_y: f64, tau_v: f64) -> Self {
        EstimatorConfig {
            tau_x,
            tau_y,
            tau_v,
            s1,
            s2,
            q1,
        }
    }

    pub fn sgd_baseline(s1: usize, s2: usize) -> Self {
        EstimatorConfig {
            tau_x: 1.0,
            tau_y: 1.0,
            tau_v: 1.0,
            s1,
            s2,
            q1: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [
            ("tau_x", self.tau_x),
            ("tau_y", self.tau_y),
            ("tau_v", self.tau_v),
        ] {
            if !tau.is_finite() || !(0.0..=1.0).contains(&tau) {
                return Err(BilevelError::InvalidParameter {
                    name,
                    reason: format!("must lie in [0, 1], got {tau}"),
                });
            }
        }
        for (name, value) in [("s1", self.s1), ("s2", self.s2), ("q1", self.q1)] {
            if value == 0 {
                return Err(BilevelError::InvalidParameter {
                    name,
                    reason: "must be positive".to_string(),
                });
            }
        }
        Ok(())
    }

    /// Classifies the tau triple, or `None` if it matches no known mode.
    pub fn mode(&self) -> Option<EstimatorMode> {
        let taus = [self.tau_x, self.tau_y, self.tau_v];
        if taus.iter().all(|&t| t == 0.0) {
            Some(EstimatorMode::Spider)
        } else if taus.iter().all(|&t| t > 0.0 && t < 1.0) {
            Some(EstimatorMode::Storm)
        } else if taus.iter().all(|&t| t == 1.0) {
            Some(EstimatorMode::SgdBaseline)
        } else {
            None
        }
    }
}

/// Running count of per-sample oracle evaluations.
///
/// The charging rules are fixed by the update structure: an anchor evaluates
/// three independent batches once each; an inner y-step evaluates one batch
/// at two points; an inner (x, v)-step evaluates two independent batches at
/// two points each.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleLedger {
    total: u64,
}

impl SampleLedger {
    pub fn new() -> Self {
        SampleLedger::default()
    }

    /// Three batches of `s1`, one evaluation each.
    pub fn charge_anchor(&mut self, s1: usize) {
        self.total += 3 * s1 as u64;
    }

    /// One batch of `s2`, evaluated at the current and previous points.
    pub fn charge_ll_step(&mut self, s2: usize) {
        self.total += 2 * s2 as u64;
    }

    /// Two batches of `s2`, each evaluated at the current and previous
    /// points.
    pub fn charge_aux_step(&mut self, s2: usize) {
        self.total += 4 * s2 as u64;
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// One step of the correction recursion.
///
/// All three vectors must share a length and `tau` must lie in `[0, 1]`.
/// Two degenerate cases carry exact (bitwise) contracts and are therefore
/// special-cased:
///
/// * `tau = 1` returns `current_dir` itself;
/// * `tau = 0` is grouped as `(current_dir - previous_dir) + prev_estimate`,
///   so when the point did not move between the two evaluations the
///   difference cancels exactly and the previous estimate passes through
///   untouched.
pub fn vr_step(
    prev_estimate: &Vector,
    current_dir: &Vector,
    previous_dir: &Vector,
    tau: f64,
) -> Result<Vector> {
    if !tau.is_finite() || !(0.0..=1.0).contains(&tau) {
        return Err(BilevelError::InvalidParameter {
            name: "tau",
            reason: format!("must lie in [0, 1], got {tau}"),
        });
    }
    for (other, context) in [
        (current_dir, "vr_step current_dir"),
        (previous_dir, "vr_step previous_dir"),
    ] {
        if other.len() != prev_estimate.len() {
            return Err(BilevelError::LengthMismatch {
                context: "vr_step",
                left: prev_estimate.len(),
                right: other.len(),
            });
        }
        other.ensure_finite(context)?;
    }
    prev_estimate.ensure_finite("vr_step prev_estimate")?;

    if tau == 1.0 {
        return Ok(current_dir.clone());
    }

    let pe = prev_estimate.as_slice();
    let cur = current_dir.as_slice();
    let pd = previous_dir.as_slice();
    let out: Vec<f64> = if tau == 0.0 {
        (0..pe.len()).map(|i| (cur[i] - pd[i]) + pe[i]).collect()
    } else {
        (0..pe.len())
            .map(|i| cur[i] + (1.0 - tau) * (pe[i] - pd[i]))
            .collect()
    };
    let result = Vector::from_vec(out);
    result.ensure_finite("vr_step output")?;
    Ok(result)
}

/// Batch used by the estimators: sampled with replacement, except that a
/// request for exactly the dataset size is served as one deterministic full
/// pass (and consumes no randomness). This makes "full batch" a plain
/// configuration choice and lets anchors with `s1 = n` be exact rather than
/// a bootstrap resample.
pub fn draw_or_full(
    rng: &mut SampleRng,
    dataset_size: usize,
    batch_size: usize,
) -> Result<SampleBatch> {
    if batch_size == dataset_size {
        SampleBatch::full(dataset_size)
    } else {
        rng.draw_batch(dataset_size, batch_size)
    }
}

/// Recomputes all three estimates as plain means over independent batches of
/// `s1` and charges the ledger accordingly.
///
/// Draw order is part of the determinism contract: the x-direction batch
/// pair (upper then lower), then the y-direction batch (lower), then the
/// v-direction batch pair (upper then lower).
pub fn anchor(
    oracle: &dyn ProblemOracle,
    x: &Vector,
    y: &Vector,
    v: &Vector,
    s1: usize,
    rng: &mut SampleRng,
    ledger: &mut SampleLedger,
) -> Result<EstimatorState> {
    let n_up = oracle.n_upper();
    let n_low = oracle.n_lower();

    let x_upper = draw_or_full(rng, n_up, s1)?;
    let x_lower = draw_or_full(rng, n_low, s1)?;
    let y_lower = draw_or_full(rng, n_low, s1)?;
    let v_upper = draw_or_full(rng, n_up, s1)?;
    let v_lower = draw_or_full(rng, n_low, s1)?;

    let d_x = oracle.dir_x(x, y, v, &x_upper, &x_lower)?;
    let d_y = oracle.dir_y(x, y, &y_lower)?;
    let d_v = oracle.dir_v(x, y, v, &v_upper, &v_lower)?;

    ledger.charge_anchor(s1);
    Ok(EstimatorState { d_x, d_y, d_v })
}
