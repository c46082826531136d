//! Seeded minibatch index sampling.
//!
//! All stochasticity in the solver flows through one [`SampleRng`] so that a
//! run is fully determined by its seed. The generator is ChaCha8, which has a
//! published specification and produces the same stream on every platform;
//! reproducibility is a contract here, not a convenience.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BilevelError, Result};

/// A minibatch of dataset indices, drawn with replacement.
///
/// Duplicates are expected and meaningful: a batch is a multiset of i.i.d.
/// uniform draws, and averaging over it must count repeats.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    indices: Vec<usize>,
}

impl SampleBatch {
    pub fn from_indices(indices: Vec<usize>, dataset_size: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(BilevelError::InvalidParameter {
                name: "batch_size",
                reason: "batch must contain at least one index".to_string(),
            });
        }
        for &i in &indices {
            if i >= dataset_size {
                return Err(BilevelError::IndexOutOfRange {
                    index: i,
                    size: dataset_size,
                });
            }
        }
        Ok(SampleBatch { indices })
    }

    /// One deterministic pass over the whole dataset: indices `0..n` in order.
    pub fn full(dataset_size: usize) -> Result<Self> {
        if dataset_size == 0 {
            return Err(BilevelError::EmptyDataset);
        }
        Ok(SampleBatch {
            indices: (0..dataset_size).collect(),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Seeded generator for minibatch draws.
#[derive(Clone, Debug)]
pub struct SampleRng {
    inner: ChaCha8Rng,
}

impl SampleRng {
    pub fn seed_from(seed: u64) -> Self {
        SampleRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Draws `batch_size` indices uniformly from `0..dataset_size`, with
    /// replacement. `batch_size` may exceed `dataset_size`.
    pub fn draw_batch(&mut self, dataset_size: usize, batch_size: usize) -> Result<SampleBatch> {
        if dataset_size == 0 {
            return Err(BilevelError::EmptyDataset);
        }
        if batch_size == 0 {
            return Err(BilevelError::InvalidParameter {
                name: "batch_size",
                reason: "must be positive".to_string(),
            });
        }
        let indices = (0..batch_size)
            .map(|_| self.inner.random_range(0..dataset_size))
            .collect();
        Ok(SampleBatch { indices })
    }
}
