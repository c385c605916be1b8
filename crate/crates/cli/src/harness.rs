//! Subcommand implementations. Each returns the summary printed on stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use invlrr::activation::Activation;
use invlrr::grouprep::GroupRep;
use invlrr::linalg::{self, Matrix, Vector};
use invlrr::ntk::{self, KernelMatrix, WidthSampleSet};
use invlrr::solvers::{self, Mode, RegressionProblem};
use invlrr::trainer::{self, Symmetry, TrainConfig, TrainMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::matfile::{read_matrix, write_matrix};

/// Number of held-out points in the predictor-equivalence suite.
const PREDICTOR_TEST_POINTS: usize = 20;
/// Default training-set size for the predictor-equivalence suite.
const PREDICTOR_TRAIN_POINTS: usize = 12;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn gaussian_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

fn unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = gaussian_vector(d, rng);
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Render a float for CSV: shortest round-trip scientific form.
fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Config plus output directory.
#[derive(Debug, Clone)]
pub struct Harness {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Harness {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Self {
        Self { cfg, out }
    }

    fn out_dir(&self) -> CliResult<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        Ok(&self.out)
    }

    fn data_dir(&self) -> &Path {
        self.cfg.data_dir.as_deref().unwrap_or(&self.out)
    }

    fn load_data(&self) -> CliResult<(Matrix, Matrix)> {
        let dir = self.data_dir();
        Ok((read_matrix(&dir.join("X.mat"))?, read_matrix(&dir.join("Y.mat"))?))
    }

    fn problem(&self) -> CliResult<RegressionProblem> {
        let rep = self.cfg.rep()?;
        let (x, y) = self.load_data()?;
        let r = ExperimentConfig::require(self.cfg.r, "r")?;
        let mut p = RegressionProblem::new(x, y, r)?.with_rep(rep)?;
        if let Some(l) = self.cfg.lambda {
            p = p.with_lambda(l)?;
        }
        Ok(p)
    }

    fn solver_mode(&self) -> CliResult<Mode> {
        match self.cfg.mode.as_deref() {
            None => Ok(Mode::Constrained),
            Some(m) => m.parse().map_err(|_| CliError::Config(format!("mode: `{m}` is not a solver mode"))),
        }
    }

    /// Synthetic `X`, `W_true` and `Y = W_true X + σE`.
    pub fn gen_data(&self) -> CliResult<String> {
        let rep = self.cfg.rep()?;
        let d0 = rep.dim();
        let dl = ExperimentConfig::require(self.cfg.dl, "dL")?;
        let n = ExperimentConfig::require(self.cfg.n, "n")?;
        if n < d0 {
            return Err(CliError::Config(format!("n = {n} must be at least d0 = {d0}")));
        }
        if dl == 0 {
            return Err(CliError::Config("dL must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let x = gaussian(d0, n, &mut rng);
        let mut w = gaussian(dl, d0, &mut rng);
        if self.cfg.invariant_target {
            w = &w * rep.invariance_constraint()?.projector()?;
        }
        if let Some(k) = self.cfg.target_rank {
            w = linalg::best_rank_r(&w, k.min(d0.min(dl)))?;
        }
        let e = gaussian(dl, n, &mut rng);
        let y = &w * &x + e * self.cfg.noise_sigma;
        let out = self.out_dir()?;
        write_matrix(&out.join("X.mat"), &x)?;
        write_matrix(&out.join("Y.mat"), &y)?;
        write_matrix(&out.join("Wtrue.mat"), &w)?;
        Ok(format!("wrote X.mat ({d0}x{n}), Y.mat ({dl}x{n}), Wtrue.mat ({dl}x{d0})"))
    }

    pub fn solve(&self) -> CliResult<String> {
        let mode = self.solver_mode()?;
        let p = self.problem()?;
        let sol = solvers::solve(&p, mode)?;
        write_matrix(&self.out_dir()?.join("W.mat"), &sol.w)?;
        let warnings = if sol.warnings.is_empty() {
            "none".to_string()
        } else {
            sol.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
        };
        Ok(format!(
            "mode={} loss={:.12e} rank={} invariance_residual={:.3e} warnings={}",
            mode, sol.loss, sol.rank, sol.invariance_residual, warnings
        ))
    }

    pub fn path(&self) -> CliResult<String> {
        let grid = self.cfg.lambda_grid.clone().ok_or_else(|| CliError::Config("missing key `lambda_grid`".into()))?;
        let p = self.problem()?;
        let samples = solvers::regularization_path(&p, &grid)?;
        let mut csv = String::from("lambda,loss,invariance_residual,distance_to_inv\n");
        for s in &samples {
            writeln!(
                csv,
                "{},{},{},{}",
                num(s.lambda),
                num(s.loss),
                num(s.invariance_residual),
                num(s.distance_to_inv)
            )
            .unwrap();
        }
        write_text(&self.out_dir()?.join("path.csv"), &csv)?;
        let flagged = samples.iter().filter(|s| s.spectral_gap_small).count();
        Ok(format!(
            "wrote path.csv ({} lambdas, distance_to_inv {:.3e} -> {:.3e}, {} with small spectral gap)",
            samples.len(),
            samples[0].distance_to_inv,
            samples[samples.len() - 1].distance_to_inv,
            flagged
        ))
    }

    pub fn critical_points(&self) -> CliResult<String> {
        let mode = self.solver_mode()?;
        let p = self.problem()?;
        let points = solvers::enumerate_critical_points(&p, mode)?;
        let mut csv = String::from("index_set,loss,is_global_min\n");
        for c in &points {
            let set: Vec<String> = c.index_set.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(csv, "{{{}}},{},{}", set.join(";"), num(c.objective), c.is_global_min).unwrap();
        }
        write_text(&self.out_dir()?.join("critical.csv"), &csv)?;
        Ok(format!("wrote critical.csv ({} critical points, mode={mode})", points.len()))
    }

    fn train_config(&self) -> CliResult<TrainConfig> {
        let mode = match self.cfg.mode.as_deref() {
            Some("augmented") | None => TrainMode::Augmented,
            Some("hardwired") => TrainMode::Hardwired,
            Some("regularized") => TrainMode::Regularized(ExperimentConfig::require(self.cfg.lambda, "lambda")?),
            Some(m) => return Err(CliError::Config(format!("mode: `{m}` is not a training mode"))),
        };
        let cfg = TrainConfig {
            mode,
            loss: self.cfg.loss,
            learning_rate: self.cfg.learning_rate,
            adam_betas: (self.cfg.beta1, self.cfg.beta2),
            adam_eps: self.cfg.adam_eps,
            epochs: self.cfg.epochs,
            seed: self.cfg.seed,
            init_scale: self.cfg.init_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train(&self) -> CliResult<String> {
        let tc = self.train_config()?;
        let rep = self.cfg.rep()?;
        let (x, y) = self.load_data()?;
        let log = trainer::train(&tc, &self.cfg.hidden, &x, &y, Symmetry::Rep(&rep))?;
        let mut csv = String::from("epoch,objective,w_perp_frob,invariance_ratio,accuracy\n");
        for r in &log.records {
            let acc = r.accuracy.map(num).unwrap_or_default();
            writeln!(
                csv,
                "{},{},{},{},{}",
                r.epoch,
                num(r.objective),
                num(r.w_perp_norm),
                num(r.invariance_ratio),
                acc
            )
            .unwrap();
        }
        let out = self.out_dir()?;
        write_text(&out.join("trainlog.csv"), &csv)?;
        write_matrix(&out.join("Wfinal.mat"), &log.final_w)?;
        let last = log.records.last().expect("epochs >= 1");
        Ok(format!(
            "mode={} epochs={} objective={:.12e} w_perp_frob={:.3e}",
            self.cfg.mode.as_deref().unwrap_or("augmented"),
            last.epoch,
            last.objective,
            last.w_perp_norm
        ))
    }

    /// Runs the four kernel property suites and writes `ntk.csv`.
    pub fn ntk_check(&self) -> CliResult<String> {
        let rep = self.cfg.rep()?;
        let mut rows: Vec<SuiteRow> = Vec::new();
        rows.extend(equivariance_suite(&rep, self.cfg.trials, self.cfg.seed)?);
        rows.extend(monte_carlo_suite(rep.dim(), self.cfg.width, self.cfg.trials, self.cfg.seed.wrapping_add(1))?);
        rows.extend(orbit_suite(&rep, self.cfg.orbit_width, self.cfg.trials, self.cfg.seed.wrapping_add(2))?);
        let n = self.cfg.n.unwrap_or(PREDICTOR_TRAIN_POINTS);
        rows.extend(predictor_suite(&rep, n, PREDICTOR_TEST_POINTS, self.cfg.seed.wrapping_add(3))?);

        let mut csv = String::from("suite,trial,discrepancy,tolerance,pass\n");
        for r in &rows {
            writeln!(csv, "{},{},{},{},{}", r.suite, r.trial, num(r.discrepancy), num(r.tolerance), r.pass()).unwrap();
        }
        write_text(&self.out_dir()?.join("ntk.csv"), &csv)?;

        let mut summary = Vec::new();
        let mut failing = Vec::new();
        for suite in SUITES {
            let mine: Vec<&SuiteRow> = rows.iter().filter(|r| r.suite == suite).collect();
            let fails = mine.iter().filter(|r| !r.pass()).count();
            let worst = mine.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
            summary.push(format!(
                "{suite}: {} ({} trials, {} failed, max discrepancy {:.3e})",
                if fails == 0 { "pass" } else { "FAIL" },
                mine.len(),
                fails,
                worst
            ));
            if fails > 0 {
                failing.push(suite);
            }
        }
        let summary = summary.join("\n");
        if failing.is_empty() {
            Ok(summary)
        } else {
            Err(CliError::Check(format!("{summary}\nfailing properties: {}", failing.join(", "))))
        }
    }
}

pub const SUITES: [&str; 4] = ["equivariance", "monte_carlo", "orbit_equality", "predictor_equivalence"];

/// One trial of a kernel property suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub trial: usize,
    pub discrepancy: f64,
    pub tolerance: f64,
}

impl SuiteRow {
    pub fn pass(&self) -> bool {
        self.discrepancy <= self.tolerance
    }
}

/// `K∞(ρ(g)x, ρ(g)x') = K∞(x, x')` for random pairs and group elements.
pub fn equivariance_suite(rep: &GroupRep, trials: usize, seed: u64) -> CliResult<Vec<SuiteRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elems = rep.elements()?;
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let x = gaussian_vector(rep.dim(), &mut rng);
        let xp = gaussian_vector(rep.dim(), &mut rng);
        let g = &elems[trial % elems.len()];
        let base = ntk::relu_limiting_ntk(&x, &xp)?;
        let moved = ntk::relu_limiting_ntk(&(g * &x), &(g * &xp))?;
        rows.push(SuiteRow {
            suite: "equivariance",
            trial,
            discrepancy: (moved - base).abs(),
            tolerance: 1e-12 * base.abs().max(1.0),
        });
    }
    Ok(rows)
}

/// Empirical ReLU NTK at `width` against the closed form, 3 standard errors.
pub fn monte_carlo_suite(d0: usize, width: usize, trials: usize, seed: u64) -> CliResult<Vec<SuiteRow>> {
    if width < 2 {
        return Err(CliError::Config("width must be at least 2".into()));
    }
    let samples = WidthSampleSet::sample(d0, width, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let x = unit_vector(d0, &mut rng);
        let xp = unit_vector(d0, &mut rng);
        let (emp, se) = ntk::empirical_ntk_with_stderr(&samples, Activation::Relu, &x, &xp)?;
        let lim = ntk::relu_limiting_ntk(&x, &xp)?;
        rows.push(SuiteRow { suite: "monte_carlo", trial, discrepancy: (emp - lim).abs(), tolerance: 3.0 * se });
    }
    Ok(rows)
}

/// Group-convolutional NTK on an orbit-closed sample set against the augmented empirical NTK.
pub fn orbit_suite(rep: &GroupRep, base_width: usize, trials: usize, seed: u64) -> CliResult<Vec<SuiteRow>> {
    if base_width == 0 {
        return Err(CliError::Config("orbit_width must be positive".into()));
    }
    let samples = WidthSampleSet::sample(rep.dim(), base_width, seed).orbit_symmetrized(rep)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let x = gaussian_vector(rep.dim(), &mut rng);
        let xp = gaussian_vector(rep.dim(), &mut rng);
        let conv = ntk::conv_empirical_ntk(&samples, Activation::Relu, rep, &x, &xp)?;
        let aug = ntk::augmented_kernel(|u, v| ntk::empirical_ntk(&samples, Activation::Relu, u, v), rep, &x, &xp)?;
        rows.push(SuiteRow {
            suite: "orbit_equality",
            trial,
            discrepancy: (conv - aug).abs(),
            tolerance: 1e-12 * aug.abs().max(1.0),
        });
    }
    Ok(rows)
}

/// Predictions of the averaged kernel on the original data and of the base
/// kernel on the augmented data.
#[derive(Debug, Clone)]
pub struct PredictorPair {
    pub averaged: Vec<f64>,
    pub augmented: Vec<f64>,
    pub test_points: Vec<Vector>,
    pub max_abs_y: f64,
}

pub fn predictor_pair(rep: &GroupRep, n: usize, tests: usize, seed: u64) -> CliResult<PredictorPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d0 = rep.dim();
    let train: Vec<Vector> = (0..n).map(|_| gaussian_vector(d0, &mut rng)).collect();
    let y = gaussian_vector(n, &mut rng);
    let test_points: Vec<Vector> = (0..tests).map(|_| gaussian_vector(d0, &mut rng)).collect();

    let averaged_kernel = |u: &Vector, v: &Vector| ntk::augmented_kernel(ntk::relu_limiting_ntk, rep, u, v);
    let beta = ntk::kernel_interpolate(&KernelMatrix::from_points(averaged_kernel, &train)?, &y)?;

    let elems = rep.elements()?;
    let mut aug_points = Vec::with_capacity(n * elems.len());
    let mut aug_y = Vec::with_capacity(n * elems.len());
    for g in &elems {
        for (x, yi) in train.iter().zip(y.iter()) {
            aug_points.push(g * x);
            aug_y.push(*yi);
        }
    }
    let alpha = ntk::kernel_interpolate(
        &KernelMatrix::from_points(ntk::relu_limiting_ntk, &aug_points)?,
        &Vector::from_vec(aug_y),
    )?;

    let mut averaged = Vec::with_capacity(tests);
    let mut augmented = Vec::with_capacity(tests);
    for t in &test_points {
        averaged.push(ntk::kernel_predict(averaged_kernel, &train, &beta, t)?);
        augmented.push(ntk::kernel_predict(ntk::relu_limiting_ntk, &aug_points, &alpha, t)?);
    }
    Ok(PredictorPair { averaged, augmented, test_points, max_abs_y: y.amax() })
}

pub fn predictor_suite(rep: &GroupRep, n: usize, tests: usize, seed: u64) -> CliResult<Vec<SuiteRow>> {
    let pair = predictor_pair(rep, n, tests, seed)?;
    Ok(pair
        .averaged
        .iter()
        .zip(&pair.augmented)
        .enumerate()
        .map(|(trial, (a, b))| SuiteRow {
            suite: "predictor_equivalence",
            trial,
            discrepancy: (a - b).abs(),
            tolerance: 1e-6,
        })
        .collect())
}

/// Relative Frobenius difference `‖A − B‖ / ‖B‖` of two matrix files.
pub fn compare(a: &Path, b: &Path, tol: f64) -> CliResult<String> {
    if !(tol >= 0.0) {
        return Err(CliError::Usage(format!("--tol must be nonnegative, got {tol}")));
    }
    let ma = read_matrix(a)?;
    let mb = read_matrix(b)?;
    if ma.shape() != mb.shape() {
        return Err(CliError::Check(format!(
            "shapes differ: {}x{} vs {}x{}",
            ma.nrows(),
            ma.ncols(),
            mb.nrows(),
            mb.ncols()
        )));
    }
    let diff = (&ma - &mb).norm();
    let scale = mb.norm();
    let rel = if diff == 0.0 { 0.0 } else { diff / scale.max(f64::MIN_POSITIVE) };
    let line = format!("relative difference {rel:.3e} (tol {tol:.1e})");
    if rel <= tol {
        Ok(format!("{line}: equal"))
    } else {
        Err(CliError::Check(format!("{line}: matrices differ")))
    }
}
