//! Experiment execution: build a problem, drive the solver, stream metrics
//! to CSV, and compare two runs at a shared sample budget.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bilevel_core::problems::{
    load_idx, make_hyperclean_synthetic, HyperCleanDataset, HyperCleanProblem, LabelledSplit,
    SyntheticProblem,
};
use bilevel_core::{BilevelError, ProblemOracle, Solver};

use crate::config::{ConfigError, ProblemSpec, RunConfig};

pub const CSV_HEADER: &str = "k,samples_used,wall_seconds,phi,grad_norm,test_accuracy,lyapunov";

/// Environment variable that redirects all CSV output into a different
/// directory, keeping the configured file name.
pub const OUT_DIR_ENV: &str = "BILEVEL_OUT_DIR";

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Solver(BilevelError),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Mismatch(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "config error: {e}"),
            HarnessError::Solver(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => {
                write!(f, "{}: {source}", path.display())
            }
            HarnessError::Mismatch(reason) => write!(f, "{reason}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<BilevelError> for HarnessError {
    fn from(e: BilevelError) -> Self {
        HarnessError::Solver(e)
    }
}

impl HarnessError {
    pub fn is_divergence(&self) -> bool {
        matches!(self, HarnessError::Solver(BilevelError::Diverged { .. }))
    }
}

pub enum ProblemInstance {
    Synthetic(SyntheticProblem),
    HyperClean(HyperCleanProblem),
}

impl ProblemInstance {
    pub fn oracle(&self) -> &dyn ProblemOracle {
        match self {
            ProblemInstance::Synthetic(p) => p,
            ProblemInstance::HyperClean(p) => p,
        }
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<ProblemInstance, HarnessError> {
    match spec {
        ProblemSpec::Synthetic {
            n,
            dim,
            reg,
            data_seed,
        } => {
            let problem = SyntheticProblem::generate(*n, *dim, *reg, *data_seed)?;
            Ok(ProblemInstance::Synthetic(problem))
        }
        ProblemSpec::HyperCleanSynthetic {
            n_train,
            n_val,
            n_test,
            dim,
            n_classes,
            corruption_prob,
            reg_c,
            data_seed,
        } => {
            let data = make_hyperclean_synthetic(
                *n_train,
                *n_val,
                *n_test,
                *dim,
                *n_classes,
                *corruption_prob,
                *data_seed,
            )?;
            let problem = HyperCleanProblem::new(data, *reg_c)?;
            Ok(ProblemInstance::HyperClean(problem))
        }
        ProblemSpec::HyperCleanIdx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            n_train,
            n_val,
            corruption_prob,
            reg_c,
            data_seed,
        } => {
            let pool = load_idx(train_images, train_labels)?;
            if n_train + n_val > pool.n {
                return Err(HarnessError::Mismatch(format!(
                    "n_train + n_val = {} exceeds the {} images in {}",
                    n_train + n_val,
                    pool.n,
                    train_images.display()
                )));
            }
            let dim = pool.dim();
            let slice = |from: usize, count: usize| -> Result<LabelledSplit, BilevelError> {
                LabelledSplit::from_parts(
                    pool.features[from * dim..(from + count) * dim].to_vec(),
                    pool.labels[from..from + count].to_vec(),
                    dim,
                )
            };
            let train = slice(0, *n_train)?;
            let val = slice(*n_train, *n_val)?;
            let test_pool = load_idx(test_images, test_labels)?;
            if test_pool.dim() != dim {
                return Err(HarnessError::Mismatch(format!(
                    "test images are {}-dimensional, train images {}-dimensional",
                    test_pool.dim(),
                    dim
                )));
            }
            let n_classes = pool.labels[..n_train + n_val]
                .iter()
                .chain(&test_pool.labels)
                .max()
                .map_or(0, |&c| c + 1);
            let test = LabelledSplit::from_parts(test_pool.features, test_pool.labels, dim)?;
            let data = HyperCleanDataset::corrupt(
                train,
                val,
                test,
                n_classes,
                *corruption_prob,
                *data_seed,
            )?;
            let problem = HyperCleanProblem::new(data, *reg_c)?;
            Ok(ProblemInstance::HyperClean(problem))
        }
    }
}

/// One evaluation record; `None` fields print as empty CSV cells.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub k: usize,
    pub samples_used: u64,
    pub wall_seconds: Option<f64>,
    pub phi: Option<f64>,
    pub grad_norm: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub lyapunov: Option<f64>,
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| v.to_string())
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.k,
            self.samples_used,
            cell(self.wall_seconds),
            cell(self.phi),
            cell(self.grad_norm),
            cell(self.test_accuracy),
            cell(self.lyapunov),
        )
    }
}

/// The trajectory one seed produced, and where its CSV went.
#[derive(Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub path: PathBuf,
    pub rows: Vec<MetricsRow>,
}

impl SeedRun {
    pub fn final_row(&self) -> &MetricsRow {
        self.rows.last().expect("runs always evaluate at k_max")
    }

    /// Last row whose sample count fits inside `budget`; falls back to the
    /// earliest row when even that one exceeds it.
    pub fn row_at_budget(&self, budget: u64) -> &MetricsRow {
        self.rows
            .iter()
            .rev()
            .find(|row| row.samples_used <= budget)
            .unwrap_or_else(|| &self.rows[0])
    }
}

fn suffix_for_seed(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}_seed{seed}"),
    };
    path.with_file_name(name)
}

/// Output path for one seed: apply the directory override from the
/// environment, then a `_seed<N>` suffix when several seeds share a config.
pub fn resolve_output(output: &Path, seed: u64, multi_seed: bool) -> PathBuf {
    let mut path = output.to_path_buf();
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        if !dir.is_empty() {
            let name = path
                .file_name()
                .map_or_else(|| PathBuf::from("run.csv"), PathBuf::from);
            path = PathBuf::from(dir).join(name);
        }
    }
    if multi_seed {
        path = suffix_for_seed(&path, seed);
    }
    path
}

fn evaluate(
    problem: &ProblemInstance,
    state: &bilevel_core::OuterState,
    wall: Duration,
    config: &RunConfig,
) -> Result<MetricsRow, HarnessError> {
    let wall_seconds = config.record_wall_time.then_some(wall.as_secs_f64());
    let row = match problem {
        ProblemInstance::Synthetic(p) => {
            let exact = p.exact(&state.x)?;
            let lyapunov = config.lyapunov.then(|| {
                exact.phi
                    + (&state.y - &exact.y_star).norm_sq()
                    + (&state.v - &exact.v_star).norm_sq()
            });
            MetricsRow {
                k: state.k,
                samples_used: state.samples_used(),
                wall_seconds,
                phi: Some(exact.phi),
                grad_norm: Some(exact.grad_phi.norm()),
                test_accuracy: None,
                lyapunov,
            }
        }
        ProblemInstance::HyperClean(p) => MetricsRow {
            k: state.k,
            samples_used: state.samples_used(),
            wall_seconds,
            phi: Some(p.validation_loss(&state.y)),
            grad_norm: None,
            test_accuracy: Some(p.test_accuracy(&state.y)),
            lyapunov: None,
        },
    };
    Ok(row)
}

fn open_csv(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufWriter::new(file))
}

fn run_one_seed(
    problem: &ProblemInstance,
    config: &RunConfig,
    seed: u64,
    path: &Path,
) -> Result<SeedRun, HarnessError> {
    let solver_config = config.solver_config(seed)?;
    let mut solver = Solver::new(problem.oracle(), solver_config)?;
    let mut writer = open_csv(path)?;
    let io_err = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(writer, "{CSV_HEADER}").map_err(io_err)?;
    writer.flush().map_err(io_err)?;

    let mut rows = Vec::new();
    let mut wall = Duration::ZERO;
    for k in 1..=config.k_max {
        let started = Instant::now();
        let stepped = solver.step();
        wall += started.elapsed();
        // Every evaluated row is flushed before the next solver step, so an
        // aborted run leaves a well-formed partial CSV behind.
        stepped?;
        if k.is_multiple_of(config.eval_every) {
            let row = evaluate(problem, solver.state(), wall, config)?;
            writeln!(writer, "{}", row.csv_line()).map_err(io_err)?;
            writer.flush().map_err(io_err)?;
            rows.push(row);
        }
    }
    Ok(SeedRun {
        seed,
        path: path.to_path_buf(),
        rows,
    })
}

/// Runs every configured seed against one shared problem instance, writing
/// one CSV per seed.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<SeedRun>, HarnessError> {
    let problem = build_problem(&config.problem)?;
    let multi = config.seeds.len() > 1;
    let mut runs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let path = resolve_output(&config.output, seed, multi);
        runs.push(run_one_seed(&problem, config, seed, &path)?);
    }
    Ok(runs)
}

fn describe_problem(spec: &ProblemSpec) -> String {
    match spec {
        ProblemSpec::Synthetic { n, dim, .. } => {
            format!("synthetic regression (n = {n} per split, dim = {dim})")
        }
        ProblemSpec::HyperCleanSynthetic {
            n_train, n_classes, ..
        } => format!("hyper-cleaning ({n_train} train, {n_classes} classes)"),
        ProblemSpec::HyperCleanIdx {
            train_images,
            n_train,
            ..
        } => format!(
            "hyper-cleaning ({n_train} train from {})",
            train_images.display()
        ),
    }
}

fn metric(value: Option<f64>) -> String {
    value.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

fn summary_line(label: &str, algorithm: &str, row: &MetricsRow) -> String {
    format!(
        "  {label:<8} {algorithm:<14} k={:<6} samples={:<12} phi={} grad_norm={} test_accuracy={}",
        row.k,
        row.samples_used,
        metric(row.phi),
        metric(row.grad_norm),
        metric(row.test_accuracy),
    )
}

/// Runs two configs on the same problem instance and seeds, then reports the
/// final metrics of each run next to the metrics at the largest sample budget
/// both runs reached.
pub fn compare_runs(a: &RunConfig, b: &RunConfig) -> Result<String, HarnessError> {
    if a.problem != b.problem {
        return Err(HarnessError::Mismatch(
            "cannot compare runs on different problem instances".to_string(),
        ));
    }
    if a.seeds != b.seeds {
        return Err(HarnessError::Mismatch(
            "cannot compare runs over different seed sets".to_string(),
        ));
    }
    let runs_a = run_experiment(a)?;
    let runs_b = run_experiment(b)?;

    let mut out = String::new();
    out.push_str(&format!(
        "{} vs {} on {}\n",
        a.algorithm.name(),
        b.algorithm.name(),
        describe_problem(&a.problem)
    ));
    for (run_a, run_b) in runs_a.iter().zip(&runs_b) {
        let budget = run_a
            .final_row()
            .samples_used
            .min(run_b.final_row().samples_used);
        out.push_str(&format!("seed {}:\n", run_a.seed));
        out.push_str(&summary_line(
            "final",
            a.algorithm.name(),
            run_a.final_row(),
        ));
        out.push('\n');
        out.push_str(&summary_line(
            "final",
            b.algorithm.name(),
            run_b.final_row(),
        ));
        out.push('\n');
        out.push_str(&format!("  at the shared budget of {budget} samples:\n"));
        out.push_str(&summary_line(
            "aligned",
            a.algorithm.name(),
            run_a.row_at_budget(budget),
        ));
        out.push('\n');
        out.push_str(&summary_line(
            "aligned",
            b.algorithm.name(),
            run_b.row_at_budget(budget),
        ));
        out.push('\n');
    }
    Ok(out)
}
