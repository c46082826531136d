//! Quadratic bilevel regression benchmark with a closed-form solution.
//!
//! Two least-squares objectives over a shared feature space are coupled by a
//! proximity regularizer. With training moments `A = mean(u u^T)`,
//! `b = mean(v u)` and coupling weight `r`:
//!
//! ```text
//! upper  f(x, y) = mean over val of  0.5 (y.u - v)^2 + (x.u - v)^2
//! lower  g(x, y) = mean over train of 0.5 (y.u - v)^2  +  (r/2) |y - x|^2
//! ```
//!
//! The lower problem is strongly convex with the affine minimizer
//! `y*(x) = (A + rI)^{-1} (b + r x)`, so the overall objective, its
//! gradient, the auxiliary solution, and a Lyapunov-style distance to the
//! exact triple are all available in closed form. That makes this the
//! workhorse for correctness tests: every stochastic estimate has an exact
//! moment-based counterpart to be checked against.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BilevelError, Result};
use crate::oracle::ProblemOracle;
use crate::problems::linalg::{cholesky, SpdFactor};
use crate::sampling::SampleBatch;
use crate::vector::Vector;

/// A labelled feature matrix. Rows are stored flat, row-major.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl SyntheticDataset {
    pub fn from_parts(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(BilevelError::InvalidParameter {
                name: "dim",
                reason: "must be positive".to_string(),
            });
        }
        if labels.is_empty() || features.len() != labels.len() * dim {
            return Err(BilevelError::LengthMismatch {
                context: "dataset features vs labels",
                left: features.len(),
                right: labels.len() * dim,
            });
        }
        if !features.iter().chain(labels.iter()).all(|x| x.is_finite()) {
            return Err(BilevelError::NonFinite {
                context: "dataset values".to_string(),
            });
        }
        Ok(SyntheticDataset {
            dim,
            features,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Writes the dataset as CSV (`f0,...,f{dim-1},label`, one sample per
    /// line) so an instance can be diffed across runs.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        let header: Vec<String> = (0..self.dim).map(|j| format!("f{j}")).collect();
        writeln!(w, "{},label", header.join(","))?;
        for i in 0..self.n() {
            let row: Vec<String> = self.feature(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{}", row.join(","), self.label(i))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates a train/validation pair from a planted linear model.
///
/// Each sample is `u = (e, 1)` with `e ~ N(0, 0.1^2 I)` and label
/// `w0 . u + N(0, 1)`, where `w0 = (4, 6, 3, ..., 3)`. `2 * n_per_split`
/// samples are drawn in one pass and split evenly: first half train, second
/// half validation. Fully determined by the seed.
pub fn make_synthetic(
    n_per_split: usize,
    dim: usize,
    seed: u64,
) -> Result<(SyntheticDataset, SyntheticDataset)> {
    if n_per_split == 0 || dim == 0 {
        return Err(BilevelError::InvalidParameter {
            name: "n_per_split",
            reason: "dataset size and dimension must be positive".to_string(),
        });
    }
    let mut w0 = vec![3.0; dim];
    w0[0] = 4.0;
    if dim > 1 {
        w0[1] = 6.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 2 * n_per_split;
    let mut features = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let mut dot = 0.0;
        for (j, &w) in w0.iter().enumerate() {
            let value = if j + 1 == dim {
                1.0
            } else {
                0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            };
            features.push(value);
            dot += w * value;
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        labels.push(dot + noise);
    }

    let split = n_per_split * dim;
    let train = SyntheticDataset::from_parts(
        features[..split].to_vec(),
        labels[..n_per_split].to_vec(),
        dim,
    )?;
    let val = SyntheticDataset::from_parts(
        features[split..].to_vec(),
        labels[n_per_split..].to_vec(),
        dim,
    )?;
    Ok((train, val))
}

/// The closed-form quantities at a fixed upper iterate.
#[derive(Clone, Debug)]
pub struct ExactSolution {
    pub y_star: Vector,
    pub v_star: Vector,
    pub phi: f64,
    pub grad_phi: Vector,
}

/// The benchmark problem: datasets, coupling weight, and cached moments.
pub struct SyntheticProblem {
    train: SyntheticDataset,
    val: SyntheticDataset,
    reg: f64,
    a_train: Vec<f64>,
    b_train: Vector,
    a_val: Vec<f64>,
    b_val: Vector,
    h: SpdFactor,
}

fn moments(data: &SyntheticDataset) -> (Vec<f64>, Vector) {
    let (n, d) = (data.n(), data.dim());
    let mut a = vec![0.0f64; d * d];
    let mut b = vec![0.0f64; d];
    for i in 0..n {
        let u = data.feature(i);
        let v = data.label(i);
        for p in 0..d {
            b[p] += v * u[p];
            for q in 0..d {
                a[p * d + q] += u[p] * u[q];
            }
        }
    }
    let inv = 1.0 / n as f64;
    a.iter_mut().for_each(|x| *x *= inv);
    b.iter_mut().for_each(|x| *x *= inv);
    (a, Vector::from_vec(b))
}

fn matvec(a: &[f64], v: &Vector) -> Vector {
    let d = v.len();
    debug_assert_eq!(a.len(), d * d);
    let mut out = vec![0.0f64; d];
    for (p, slot) in out.iter_mut().enumerate() {
        let row = &a[p * d..(p + 1) * d];
        *slot = row.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
    }
    Vector::from_vec(out)
}

impl SyntheticProblem {
    pub fn new(train: SyntheticDataset, val: SyntheticDataset, reg: f64) -> Result<Self> {
        if train.dim() != val.dim() {
            return Err(BilevelError::LengthMismatch {
                context: "train vs val feature dimension",
                left: train.dim(),
                right: val.dim(),
            });
        }
        if !reg.is_finite() || reg <= 0.0 {
            return Err(BilevelError::InvalidParameter {
                name: "reg",
                reason: format!("coupling weight must be finite and positive, got {reg}"),
            });
        }
        let d = train.dim();
        let (a_train, b_train) = moments(&train);
        let (a_val, b_val) = moments(&val);
        let mut h_mat = a_train.clone();
        for p in 0..d {
            h_mat[p * d + p] += reg;
        }
        // A is a second-moment matrix (PSD), so A + rI is PD for r > 0.
        let h = cholesky(&h_mat, d)?;
        Ok(SyntheticProblem {
            train,
            val,
            reg,
            a_train,
            b_train,
            a_val,
            b_val,
            h,
        })
    }

    /// Convenience constructor: generate the instance and wrap it.
    pub fn generate(n_per_split: usize, dim: usize, reg: f64, seed: u64) -> Result<Self> {
        let (train, val) = make_synthetic(n_per_split, dim, seed)?;
        Self::new(train, val, reg)
    }

    pub fn train(&self) -> &SyntheticDataset {
        &self.train
    }

    pub fn val(&self) -> &SyntheticDataset {
        &self.val
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    /// Upper objective at an explicit pair.
    pub fn upper_value(&self, x: &Vector, y: &Vector) -> f64 {
        let mut total = 0.0;
        for i in 0..self.val.n() {
            let u = self.val.feature(i);
            let v = self.val.label(i);
            let ry = dot(u, y) - v;
            let rx = dot(u, x) - v;
            total += 0.5 * ry * ry + rx * rx;
        }
        total / self.val.n() as f64
    }

    /// Closed-form lower solution, auxiliary solution, objective value, and
    /// gradient at `x`.
    pub fn exact(&self, x: &Vector) -> Result<ExactSolution> {
        self.check_dim(x, "x")?;
        let mut rhs = self.b_train.clone();
        rhs.axpy(self.reg, x);
        let y_star = self.h.solve(&rhs);

        let upper_grad_y = &matvec(&self.a_val, &y_star) - &self.b_val;
        let v_star = self.h.solve(&upper_grad_y);

        let mut grad_phi = &matvec(&self.a_val, x) - &self.b_val;
        grad_phi.scale_in_place(2.0);
        grad_phi.axpy(self.reg, &v_star);

        let phi = self.upper_value(x, &y_star);
        grad_phi.ensure_finite("exact gradient")?;
        Ok(ExactSolution {
            y_star,
            v_star,
            phi,
            grad_phi,
        })
    }

    /// `phi + |y - y*|^2 + |v - v*|^2`: a convergence diagnostic that is
    /// zero-distance exactly at the solved inner problems.
    pub fn lyapunov(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<f64> {
        let exact = self.exact(x)?;
        Ok(exact.phi + (y - &exact.y_star).norm_sq() + (v - &exact.v_star).norm_sq())
    }

    /// Moment-route exact lower gradient (independent of the per-sample
    /// batch path; used as a test oracle).
    pub fn moment_dir_y(&self, x: &Vector, y: &Vector) -> Vector {
        let mut out = &matvec(&self.a_train, y) - &self.b_train;
        out.axpy(self.reg, y);
        out.axpy(-self.reg, x);
        out
    }

    /// Moment-route exact auxiliary residual.
    pub fn moment_dir_v(&self, _x: &Vector, y: &Vector, v: &Vector) -> Vector {
        let mut out = matvec(&self.a_train, v);
        out.axpy(self.reg, v);
        let upper = &matvec(&self.a_val, y) - &self.b_val;
        out.axpy(-1.0, &upper);
        out
    }

    /// Moment-route exact hypergradient surrogate.
    pub fn moment_dir_x(&self, x: &Vector, _y: &Vector, v: &Vector) -> Vector {
        let mut out = &matvec(&self.a_val, x) - &self.b_val;
        out.scale_in_place(2.0);
        out.axpy(self.reg, v);
        out
    }

    fn check_dim(&self, vec: &Vector, name: &'static str) -> Result<()> {
        if vec.len() != self.train.dim() {
            return Err(BilevelError::LengthMismatch {
                context: name,
                left: vec.len(),
                right: self.train.dim(),
            });
        }
        Ok(())
    }

    fn check_batch(&self, batch: &SampleBatch, n: usize) -> Result<()> {
        for &i in batch.indices() {
            if i >= n {
                return Err(BilevelError::IndexOutOfRange { index: i, size: n });
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl ProblemOracle for SyntheticProblem {
    fn dim_x(&self) -> usize {
        self.train.dim()
    }

    fn dim_y(&self) -> usize {
        self.train.dim()
    }

    fn n_upper(&self) -> usize {
        self.val.n()
    }

    fn n_lower(&self) -> usize {
        self.train.n()
    }

    // mean over batch of (u.y - v) u  +  r (y - x)
    fn dir_y(&self, x: &Vector, y: &Vector, lower: &SampleBatch) -> Result<Vector> {
        self.check_dim(x, "x")?;
        self.check_dim(y, "y")?;
        self.check_batch(lower, self.train.n())?;
        let d = self.dim_y();
        let mut acc = vec![0.0f64; d];
        for &i in lower.indices() {
            let u = self.train.feature(i);
            let res = dot(u, y) - self.train.label(i);
            for (slot, &uj) in acc.iter_mut().zip(u) {
                *slot += res * uj;
            }
        }
        let inv = 1.0 / lower.len() as f64;
        let mut out = Vector::from_vec(acc);
        out.scale_in_place(inv);
        out.axpy(self.reg, y);
        out.axpy(-self.reg, x);
        out.ensure_finite("dir_y")?;
        Ok(out)
    }

    // mean over lower of (u.v) u + r v  -  mean over upper of (u.y - v) u
    fn dir_v(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        upper: &SampleBatch,
        lower: &SampleBatch,
    ) -> Result<Vector> {
        self.check_dim(x, "x")?;
        self.check_dim(y, "y")?;
        self.check_dim(v, "v")?;
        self.check_batch(upper, self.val.n())?;
        self.check_batch(lower, self.train.n())?;
        let d = self.dim_y();
        let mut acc = vec![0.0f64; d];
        for &i in lower.indices() {
            let u = self.train.feature(i);
            let uv = dot(u, v);
            for (slot, &uj) in acc.iter_mut().zip(u) {
                *slot += uv * uj;
            }
        }
        let inv_low = 1.0 / lower.len() as f64;
        let mut out = Vector::from_vec(acc);
        out.scale_in_place(inv_low);
        out.axpy(self.reg, v);

        let mut upper_acc = vec![0.0f64; d];
        for &i in upper.indices() {
            let u = self.val.feature(i);
            let res = dot(u, y) - self.val.label(i);
            for (slot, &uj) in upper_acc.iter_mut().zip(u) {
                *slot += res * uj;
            }
        }
        let inv_up = 1.0 / upper.len() as f64;
        out.axpy(-inv_up, &Vector::from_vec(upper_acc));
        out.ensure_finite("dir_v")?;
        Ok(out)
    }

    // mean over upper of 2 (u.x - v) u  +  r v   (the mixed second
    // derivative of the lower objective is -r I, sample-independent)
    fn dir_x(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        upper: &SampleBatch,
        _lower: &SampleBatch,
    ) -> Result<Vector> {
        self.check_dim(x, "x")?;
        self.check_dim(y, "y")?;
        self.check_dim(v, "v")?;
        self.check_batch(upper, self.val.n())?;
        let d = self.dim_x();
        let mut acc = vec![0.0f64; d];
        for &i in upper.indices() {
            let u = self.val.feature(i);
            let res = dot(u, x) - self.val.label(i);
            for (slot, &uj) in acc.iter_mut().zip(u) {
                *slot += 2.0 * res * uj;
            }
        }
        let inv = 1.0 / upper.len() as f64;
        let mut out = Vector::from_vec(acc);
        out.scale_in_place(inv);
        out.axpy(self.reg, v);
        out.ensure_finite("dir_x")?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single sample u = e1 (in 2-D), label 0, for both splits.
    fn unit_problem() -> SyntheticProblem {
        let train = SyntheticDataset::from_parts(vec![1.0, 0.0], vec![0.0], 2).unwrap();
        let val = SyntheticDataset::from_parts(vec![1.0, 0.0], vec![0.0], 2).unwrap();
        SyntheticProblem::new(train, val, 0.5).unwrap()
    }

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn lower_gradient_at_the_origin_is_zero() {
        let p = unit_problem();
        let batch = SampleBatch::full(1).unwrap();
        let d = p.dir_y(&v2(0.0, 0.0), &v2(0.0, 0.0), &batch).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn lower_gradient_combines_residual_and_coupling() {
        // y = e1: residual term (u.y - 0) u = e1, coupling r (y - 0) = 0.5 e1.
        let p = unit_problem();
        let batch = SampleBatch::full(1).unwrap();
        let d = p.dir_y(&v2(0.0, 0.0), &v2(1.0, 0.0), &batch).unwrap();
        assert!((d.as_slice()[0] - 1.5).abs() < 1e-15);
        assert_eq!(d.as_slice()[1], 0.0);
    }

    #[test]
    fn auxiliary_residual_composes_hessian_and_upper_gradient() {
        // 1-D instance: u = 1, labels 0. At y = 0 the upper y-gradient
        // vanishes; with v = 1 the Hessian part is (u.v) u + r v = 1.5.
        let train = SyntheticDataset::from_parts(vec![1.0], vec![0.0], 1).unwrap();
        let val = SyntheticDataset::from_parts(vec![1.0], vec![0.0], 1).unwrap();
        let p = SyntheticProblem::new(train, val, 0.5).unwrap();
        let one = Vector::from_vec(vec![1.0]);
        let zero = Vector::from_vec(vec![0.0]);
        let batch = SampleBatch::full(1).unwrap();
        let d = p.dir_v(&zero, &zero, &one, &batch, &batch).unwrap();
        assert!((d.as_slice()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn hypergradient_surrogate_reduces_to_coupling_times_v() {
        // Labels 0 and x = 0 kill the upper x-gradient; dir_x = r v.
        let p = unit_problem();
        let batch = SampleBatch::full(1).unwrap();
        let d = p
            .dir_x(&v2(0.0, 0.0), &v2(0.0, 0.0), &v2(1.0, 0.0), &batch, &batch)
            .unwrap();
        assert!((d.as_slice()[0] - 0.5).abs() < 1e-15);
        assert_eq!(d.as_slice()[1], 0.0);
    }

    #[test]
    fn exact_solution_is_zero_for_zero_labels() {
        let p = unit_problem();
        let sol = p.exact(&v2(0.0, 0.0)).unwrap();
        assert_eq!(sol.y_star.as_slice(), &[0.0, 0.0]);
        assert_eq!(sol.v_star.as_slice(), &[0.0, 0.0]);
        assert_eq!(sol.phi, 0.0);
        assert_eq!(sol.grad_phi.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn one_dimensional_exact_solution_matches_hand_computation() {
        // A = 1, b = 1, r = 0.5, x = 1: y* = (1 + 0.5) / 1.5 = 1.
        let train = SyntheticDataset::from_parts(vec![1.0], vec![1.0], 1).unwrap();
        let val = SyntheticDataset::from_parts(vec![1.0], vec![1.0], 1).unwrap();
        let p = SyntheticProblem::new(train, val, 0.5).unwrap();
        let sol = p.exact(&Vector::from_vec(vec![1.0])).unwrap();
        assert!((sol.y_star.as_slice()[0] - 1.0).abs() < 1e-14);
        // y* fits the single validation sample exactly, so the upper
        // y-gradient, v*, and the whole gradient vanish: x = 1 is optimal.
        assert!(sol.v_star.as_slice()[0].abs() < 1e-14);
        assert!(sol.grad_phi.as_slice()[0].abs() < 1e-14);
    }

    #[test]
    fn moment_routes_agree_with_per_sample_full_batches() {
        let p = SyntheticProblem::generate(40, 6, 0.5, 11).unwrap();
        let x = Vector::from_vec((0..6).map(|i| 0.3 * i as f64 - 0.8).collect());
        let y = Vector::from_vec((0..6).map(|i| 0.1 * i as f64 + 0.2).collect());
        let v = Vector::from_vec((0..6).map(|i| -0.2 * i as f64 + 0.5).collect());

        let pairs = [
            (p.exact_dir_y(&x, &y).unwrap(), p.moment_dir_y(&x, &y)),
            (
                p.exact_dir_v(&x, &y, &v).unwrap(),
                p.moment_dir_v(&x, &y, &v),
            ),
            (
                p.exact_dir_x(&x, &y, &v).unwrap(),
                p.moment_dir_x(&x, &y, &v),
            ),
        ];
        for (sample_route, moment_route) in &pairs {
            let diff = (sample_route - moment_route).norm();
            let scale = moment_route.norm().max(1.0);
            assert!(
                diff / scale < 1e-12,
                "route disagreement: {diff} vs scale {scale}"
            );
        }
    }

    #[test]
    fn lower_solution_satisfies_the_stationarity_equation() {
        let p = SyntheticProblem::generate(60, 8, 0.5, 3).unwrap();
        let x = Vector::from_vec((0..8).map(|i| (i as f64).sin()).collect());
        let sol = p.exact(&x).unwrap();
        let grad = p.moment_dir_y(&x, &sol.y_star);
        assert!(grad.norm() < 1e-10, "residual {}", grad.norm());
        let res = p.moment_dir_v(&x, &sol.y_star, &sol.v_star);
        assert!(res.norm() < 1e-10, "aux residual {}", res.norm());
    }

    #[test]
    fn generated_instances_have_intercepts_and_are_reproducible() {
        let (train_a, val_a) = make_synthetic(50, 5, 9).unwrap();
        let (train_b, _) = make_synthetic(50, 5, 9).unwrap();
        assert_eq!(train_a.n(), 50);
        assert_eq!(val_a.n(), 50);
        for i in 0..train_a.n() {
            assert_eq!(train_a.feature(i)[4], 1.0);
            assert_eq!(train_a.feature(i), train_b.feature(i));
            assert_eq!(train_a.label(i), train_b.label(i));
        }
        let (train_c, _) = make_synthetic(50, 5, 10).unwrap();
        assert_ne!(train_a.label(0), train_c.label(0));
    }

    #[test]
    fn generated_labels_track_the_planted_model() {
        let (train, _) = make_synthetic(2000, 4, 21).unwrap();
        // Label noise is N(0,1): the mean absolute residual against the
        // planted weights should be far below the label scale.
        let w0 = [4.0, 6.0, 3.0, 3.0];
        let mut resid = 0.0;
        let mut label_mag = 0.0;
        for i in 0..train.n() {
            let u = train.feature(i);
            let fit: f64 = u.iter().zip(w0.iter()).map(|(a, b)| a * b).sum();
            resid += (train.label(i) - fit).abs();
            label_mag += train.label(i).abs();
        }
        assert!(resid / (train.n() as f64) < 1.0);
        assert!(label_mag / train.n() as f64 > 2.0);
    }

    #[test]
    fn lyapunov_is_phi_at_the_exact_triple_and_larger_elsewhere() {
        let p = SyntheticProblem::generate(30, 4, 0.5, 5).unwrap();
        let x = Vector::from_vec(vec![0.5, -0.2, 0.1, 0.9]);
        let sol = p.exact(&x).unwrap();
        let at_triple = p.lyapunov(&x, &sol.y_star, &sol.v_star).unwrap();
        assert!((at_triple - sol.phi).abs() < 1e-12);
        let off = p
            .lyapunov(&x, &Vector::zeros(4), &Vector::zeros(4))
            .unwrap();
        assert!(off >= at_triple);
    }

    #[test]
    fn csv_snapshot_is_stable_across_writes() {
        let dir = tempfile::tempdir().unwrap();
        let (train, _) = make_synthetic(10, 3, 1).unwrap();
        let path_a = dir.path().join("a.csv");
        let path_b = dir.path().join("b.csv");
        train.write_csv(&path_a).unwrap();
        train.write_csv(&path_b).unwrap();
        let a = std::fs::read(&path_a).unwrap();
        let b = std::fs::read(&path_b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("f0,f1,f2,label\n"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn rejects_malformed_datasets() {
        assert!(SyntheticDataset::from_parts(vec![1.0, 2.0], vec![1.0], 3).is_err());
        assert!(SyntheticDataset::from_parts(vec![], vec![], 2).is_err());
        assert!(SyntheticDataset::from_parts(vec![f64::NAN, 1.0], vec![0.0], 2).is_err());
        let train = SyntheticDataset::from_parts(vec![1.0], vec![1.0], 1).unwrap();
        let val = SyntheticDataset::from_parts(vec![1.0], vec![1.0], 1).unwrap();
        assert!(SyntheticProblem::new(train, val, 0.0).is_err());
    }
}
