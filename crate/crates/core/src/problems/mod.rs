//! Benchmark problems implementing [`crate::oracle::ProblemOracle`].

mod linalg;

pub mod hyperclean;
pub mod idx;
pub mod synthetic;

pub use hyperclean::{
    make_hyperclean_synthetic, HyperCleanDataset, HyperCleanProblem, LabelledSplit,
};
pub use idx::{load_idx, IdxData};
pub use synthetic::{make_synthetic, ExactSolution, SyntheticDataset, SyntheticProblem};
