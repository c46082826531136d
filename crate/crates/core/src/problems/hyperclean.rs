//! Data hyper-cleaning: learn per-sample weights that down-rank corrupted
//! training labels.
//!
//! The lower level trains a linear classifier `y` on the training split,
//! with each sample's loss scaled by a sigmoid weight `sigma(x_i)`; the
//! upper level scores the classifier's cross-entropy on a clean validation
//! split:
//!
//! ```text
//! upper  f(x, y) = mean over val of  L(y; u, v)
//! lower  g(x, y) = mean over train of sigma(x_i) L(y; u_i, v_i) + c |y|^2
//! ```
//!
//! `L` is the multinomial softmax cross-entropy; with two classes the
//! classifier collapses to a single logistic weight vector. The ridge term
//! `c |y|^2` makes the lower problem `2c`-strongly convex. Since the upper
//! objective never touches `x` directly, the hypergradient surrogate is
//! purely the mixed-derivative term, which is a scatter: training sample `i`
//! contributes `sigma'(x_i) <grad_y L_i, v>` to coordinate `i` and nothing
//! anywhere else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BilevelError, Result};
use crate::oracle::ProblemOracle;
use crate::sampling::SampleBatch;
use crate::vector::Vector;

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn sigmoid_prime(t: f64) -> f64 {
    let s = sigmoid(t);
    s * (1.0 - s)
}

/// ln(1 + e^t), stable for large |t|.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// One labelled split: flat row-major features plus integer class labels.
#[derive(Clone, Debug)]
pub struct LabelledSplit {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
}

impl LabelledSplit {
    pub fn from_parts(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 || labels.is_empty() || features.len() != labels.len() * dim {
            return Err(BilevelError::LengthMismatch {
                context: "split features vs labels",
                left: features.len(),
                right: labels.len() * dim,
            });
        }
        Ok(LabelledSplit {
            features,
            labels,
            dim,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }
}

/// Train/validation/test splits, with the training labels corrupted and the
/// corruption positions remembered for evaluation.
#[derive(Clone, Debug)]
pub struct HyperCleanDataset {
    pub train: LabelledSplit,
    pub val: LabelledSplit,
    pub test: LabelledSplit,
    pub corruption_mask: Vec<bool>,
    pub corruption_prob: f64,
    pub n_classes: usize,
}

impl HyperCleanDataset {
    /// Wraps pre-built splits, corrupting the training labels in place:
    /// each label is independently resampled (uniformly among the other
    /// classes) with probability `corruption_prob`.
    pub fn corrupt(
        train: LabelledSplit,
        val: LabelledSplit,
        test: LabelledSplit,
        n_classes: usize,
        corruption_prob: f64,
        seed: u64,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(BilevelError::InvalidParameter {
                name: "n_classes",
                reason: "need at least two classes".to_string(),
            });
        }
        if !(0.0..=1.0).contains(&corruption_prob) {
            return Err(BilevelError::InvalidParameter {
                name: "corruption_prob",
                reason: format!("must lie in [0, 1], got {corruption_prob}"),
            });
        }
        for split in [&train, &val, &test] {
            if split.dim != train.dim {
                return Err(BilevelError::LengthMismatch {
                    context: "split feature dimensions",
                    left: split.dim,
                    right: train.dim,
                });
            }
            if split.labels.iter().any(|&l| l >= n_classes) {
                return Err(BilevelError::InvalidParameter {
                    name: "labels",
                    reason: format!("label outside 0..{n_classes}"),
                });
            }
        }

        let mut train = train;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = vec![false; train.n()];
        for (flag, label) in mask.iter_mut().zip(train.labels.iter_mut()) {
            if rng.random_bool(corruption_prob) {
                let offset = rng.random_range(0..n_classes - 1);
                *label = if offset >= *label { offset + 1 } else { offset };
                *flag = true;
            }
        }
        Ok(HyperCleanDataset {
            train,
            val,
            test,
            corruption_mask: mask,
            corruption_prob,
            n_classes,
        })
    }
}

/// Generates a Gaussian blob classification instance and corrupts its
/// training labels.
///
/// Class `c` has mean `1.2 e_{c mod dim}`; features are the mean plus unit
/// Gaussian noise, labels are uniform over classes before corruption. The
/// class overlap is deliberate: with cleanly separable blobs a classifier
/// trained on corrupted labels loses almost no test accuracy, leaving
/// reweighting nothing to recover.
pub fn make_hyperclean_synthetic(
    n_train: usize,
    n_val: usize,
    n_test: usize,
    dim: usize,
    n_classes: usize,
    corruption_prob: f64,
    seed: u64,
) -> Result<HyperCleanDataset> {
    if n_train == 0 || n_val == 0 || n_test == 0 || dim == 0 {
        return Err(BilevelError::InvalidParameter {
            name: "n_train",
            reason: "all split sizes and the dimension must be positive".to_string(),
        });
    }
    if n_classes < 2 {
        return Err(BilevelError::InvalidParameter {
            name: "n_classes",
            reason: "need at least two classes".to_string(),
        });
    }
    const SEPARATION: f64 = 1.2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make_split = |n: usize| -> LabelledSplit {
        let mut features = Vec::with_capacity(n * dim);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let label = rng.random_range(0..n_classes);
            for j in 0..dim {
                let mut value: f64 = StandardNormal.sample(&mut rng);
                if j == label % dim {
                    value += SEPARATION;
                }
                features.push(value);
            }
            labels.push(label);
        }
        LabelledSplit {
            features,
            labels,
            dim,
        }
    };
    let train = make_split(n_train);
    let val = make_split(n_val);
    let test = make_split(n_test);
    // Corruption gets its own generator so the clean instance is a pure
    // function of the seed regardless of the corruption probability.
    HyperCleanDataset::corrupt(
        train,
        val,
        test,
        n_classes,
        corruption_prob,
        seed ^ 0x9e3779b9,
    )
}

/// The hyper-cleaning problem: dataset plus ridge weight.
pub struct HyperCleanProblem {
    data: HyperCleanDataset,
    reg_c: f64,
}

impl HyperCleanProblem {
    pub fn new(data: HyperCleanDataset, reg_c: f64) -> Result<Self> {
        if !reg_c.is_finite() || reg_c <= 0.0 {
            return Err(BilevelError::InvalidParameter {
                name: "reg_c",
                reason: format!("ridge weight must be finite and positive, got {reg_c}"),
            });
        }
        Ok(HyperCleanProblem { data, reg_c })
    }

    pub fn data(&self) -> &HyperCleanDataset {
        &self.data
    }

    pub fn reg_c(&self) -> f64 {
        self.reg_c
    }

    fn dim(&self) -> usize {
        self.data.train.dim
    }

    fn classes(&self) -> usize {
        self.data.n_classes
    }

    /// Class scores for one sample. Binary classification uses a single
    /// logistic weight vector (score of class 1); multiclass uses one row of
    /// `y` per class.
    fn scores(&self, y: &Vector, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        if self.classes() == 2 {
            let s: f64 = y.iter().zip(u).map(|(a, b)| a * b).sum();
            vec![0.0, s]
        } else {
            (0..self.classes())
                .map(|c| {
                    y.as_slice()[c * d..(c + 1) * d]
                        .iter()
                        .zip(u)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        }
    }

    fn probabilities(&self, y: &Vector, u: &[f64]) -> Vec<f64> {
        let scores = self.scores(y, u);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    /// Cross-entropy of one sample.
    fn sample_loss(&self, y: &Vector, u: &[f64], label: usize) -> f64 {
        if self.classes() == 2 {
            let s: f64 = y.iter().zip(u).map(|(a, b)| a * b).sum();
            // -ln p_label with p_1 = sigmoid(s).
            if label == 1 {
                softplus(-s)
            } else {
                softplus(s)
            }
        } else {
            let scores = self.scores(y, u);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            lse - scores[label]
        }
    }

    /// Accumulates `weight * grad_y L(y; u, label)` into `acc`.
    fn add_sample_grad(&self, y: &Vector, u: &[f64], label: usize, weight: f64, acc: &mut [f64]) {
        let d = self.dim();
        if self.classes() == 2 {
            let s: f64 = y.iter().zip(u).map(|(a, b)| a * b).sum();
            let coeff = weight * (sigmoid(s) - if label == 1 { 1.0 } else { 0.0 });
            for (slot, &uj) in acc.iter_mut().zip(u) {
                *slot += coeff * uj;
            }
        } else {
            let p = self.probabilities(y, u);
            for (c, &pc) in p.iter().enumerate() {
                let coeff = weight * (pc - if c == label { 1.0 } else { 0.0 });
                let row = &mut acc[c * d..(c + 1) * d];
                for (slot, &uj) in row.iter_mut().zip(u) {
                    *slot += coeff * uj;
                }
            }
        }
    }

    /// Accumulates `weight * (hessian_y L) w` into `acc`.
    fn add_sample_hvp(&self, y: &Vector, u: &[f64], w: &Vector, weight: f64, acc: &mut [f64]) {
        let d = self.dim();
        if self.classes() == 2 {
            let s: f64 = y.iter().zip(u).map(|(a, b)| a * b).sum();
            let uw: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            let coeff = weight * sigmoid_prime(s) * uw;
            for (slot, &uj) in acc.iter_mut().zip(u) {
                *slot += coeff * uj;
            }
        } else {
            let p = self.probabilities(y, u);
            // z_c = (row c of w) . u ; H w = (diag(p) - p p^T) z per class row.
            let z: Vec<f64> = (0..self.classes())
                .map(|c| {
                    w.as_slice()[c * d..(c + 1) * d]
                        .iter()
                        .zip(u)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            let mix: f64 = p.iter().zip(&z).map(|(a, b)| a * b).sum();
            for (c, (&pc, &zc)) in p.iter().zip(&z).enumerate() {
                let coeff = weight * pc * (zc - mix);
                let row = &mut acc[c * d..(c + 1) * d];
                for (slot, &uj) in row.iter_mut().zip(u) {
                    *slot += coeff * uj;
                }
            }
        }
    }

    /// Batch-mean weighted lower gradient in `y`, including the ridge term.
    pub fn ll_grad_y(&self, x: &Vector, y: &Vector, batch: &SampleBatch) -> Result<Vector> {
        self.check_shapes(x, y, None)?;
        self.check_batch(batch)?;
        let mut acc = vec![0.0f64; self.dim_y()];
        for &i in batch.indices() {
            let weight = sigmoid(x.as_slice()[i]);
            self.add_sample_grad(
                y,
                self.data.train.feature(i),
                self.data.train.label(i),
                weight,
                &mut acc,
            );
        }
        let inv = 1.0 / batch.len() as f64;
        let mut out = Vector::from_vec(acc);
        out.scale_in_place(inv);
        out.axpy(2.0 * self.reg_c, y);
        out.ensure_finite("ll_grad_y")?;
        Ok(out)
    }

    /// Batch-mean mixed-derivative product: coordinate `i` of the output
    /// accumulates `sigma'(x_i) <grad_y L_i, v> / |batch|` for each
    /// occurrence of training sample `i` in the batch; all other
    /// coordinates are zero.
    pub fn jvp_x(&self, x: &Vector, y: &Vector, v: &Vector, batch: &SampleBatch) -> Result<Vector> {
        self.check_shapes(x, y, Some(v))?;
        self.check_batch(batch)?;
        let mut out = vec![0.0f64; self.dim_x()];
        let inv = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0f64; self.dim_y()];
        for &i in batch.indices() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            self.add_sample_grad(
                y,
                self.data.train.feature(i),
                self.data.train.label(i),
                1.0,
                &mut grad,
            );
            let inner: f64 = grad.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            out[i] += sigmoid_prime(x.as_slice()[i]) * inner * inv;
        }
        let out = Vector::from_vec(out);
        out.ensure_finite("jvp_x")?;
        Ok(out)
    }

    /// Batch-mean weighted Hessian-vector product, including the ridge term.
    pub fn hvp_y(&self, x: &Vector, y: &Vector, v: &Vector, batch: &SampleBatch) -> Result<Vector> {
        self.check_shapes(x, y, Some(v))?;
        self.check_batch(batch)?;
        let mut acc = vec![0.0f64; self.dim_y()];
        for &i in batch.indices() {
            let weight = sigmoid(x.as_slice()[i]);
            self.add_sample_hvp(y, self.data.train.feature(i), v, weight, &mut acc);
        }
        let inv = 1.0 / batch.len() as f64;
        let mut out = Vector::from_vec(acc);
        out.scale_in_place(inv);
        out.axpy(2.0 * self.reg_c, v);
        out.ensure_finite("hvp_y")?;
        Ok(out)
    }

    /// Mean cross-entropy of the classifier on the validation split; this is
    /// the upper objective.
    pub fn validation_loss(&self, y: &Vector) -> f64 {
        let split = &self.data.val;
        let total: f64 = (0..split.n())
            .map(|i| self.sample_loss(y, split.feature(i), split.label(i)))
            .sum();
        total / split.n() as f64
    }

    /// Argmax accuracy on the held-out test split.
    pub fn test_accuracy(&self, y: &Vector) -> f64 {
        let split = &self.data.test;
        let mut hits = 0usize;
        for i in 0..split.n() {
            let scores = self.scores(y, split.feature(i));
            let mut best = 0usize;
            for (c, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = c;
                }
            }
            if best == split.label(i) {
                hits += 1;
            }
        }
        hits as f64 / split.n() as f64
    }

    /// Mean learned weight `sigma(x_i)` over (clean, corrupted) training
    /// samples.
    pub fn mean_weights(&self, x: &Vector) -> (f64, f64) {
        let mut clean = (0.0, 0usize);
        let mut corrupted = (0.0, 0usize);
        for (i, &is_corrupted) in self.data.corruption_mask.iter().enumerate() {
            let w = sigmoid(x.as_slice()[i]);
            if is_corrupted {
                corrupted.0 += w;
                corrupted.1 += 1;
            } else {
                clean.0 += w;
                clean.1 += 1;
            }
        }
        (
            clean.0 / clean.1.max(1) as f64,
            corrupted.0 / corrupted.1.max(1) as f64,
        )
    }

    fn check_shapes(&self, x: &Vector, y: &Vector, v: Option<&Vector>) -> Result<()> {
        if x.len() != self.dim_x() {
            return Err(BilevelError::LengthMismatch {
                context: "x",
                left: x.len(),
                right: self.dim_x(),
            });
        }
        for (vec, context) in [(Some(y), "y"), (v, "v")] {
            if let Some(vec) = vec {
                if vec.len() != self.dim_y() {
                    return Err(BilevelError::LengthMismatch {
                        context,
                        left: vec.len(),
                        right: self.dim_y(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_batch(&self, batch: &SampleBatch) -> Result<()> {
        let n = self.data.train.n();
        for &i in batch.indices() {
            if i >= n {
                return Err(BilevelError::IndexOutOfRange { index: i, size: n });
            }
        }
        Ok(())
    }
}

impl ProblemOracle for HyperCleanProblem {
    fn dim_x(&self) -> usize {
        self.data.train.n()
    }

    fn dim_y(&self) -> usize {
        if self.classes() == 2 {
            self.dim()
        } else {
            self.classes() * self.dim()
        }
    }

    fn n_upper(&self) -> usize {
        self.data.val.n()
    }

    fn n_lower(&self) -> usize {
        self.data.train.n()
    }

    fn dir_y(&self, x: &Vector, y: &Vector, lower: &SampleBatch) -> Result<Vector> {
        self.ll_grad_y(x, y, lower)
    }

    // Weighted Hessian-vector product over the training batch minus the
    // unweighted validation gradient in y.
    fn dir_v(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        upper: &SampleBatch,
        lower: &SampleBatch,
    ) -> Result<Vector> {
        let mut out = self.hvp_y(x, y, v, lower)?;
        let split = &self.data.val;
        for &i in upper.indices() {
            if i >= split.n() {
                return Err(BilevelError::IndexOutOfRange {
                    index: i,
                    size: split.n(),
                });
            }
        }
        let mut acc = vec![0.0f64; self.dim_y()];
        for &i in upper.indices() {
            self.add_sample_grad(y, split.feature(i), split.label(i), 1.0, &mut acc);
        }
        let inv = 1.0 / upper.len() as f64;
        out.axpy(-inv, &Vector::from_vec(acc));
        out.ensure_finite("dir_v")?;
        Ok(out)
    }

    // The upper objective is independent of x, so only the (negated) mixed
    // term survives.
    fn dir_x(
        &self,
        x: &Vector,
        y: &Vector,
        v: &Vector,
        _upper: &SampleBatch,
        lower: &SampleBatch,
    ) -> Result<Vector> {
        let mut out = self.jvp_x(x, y, v, lower)?;
        out.scale_in_place(-1.0);
        Ok(out)
    }
}
