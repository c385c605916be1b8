//! Full-batch Adam training of deep linear and two-layer nonlinear networks.
//!
//! Three ways to obtain invariance are supported: training on the
//! group-augmented dataset, hard-wiring an invariant input layer `x ↦ Bx`,
//! and penalizing `λ‖WG‖²`. Every epoch logs the objective and how far the
//! end-to-end map is from the invariant subspace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::grouprep::{invariant_basis, ConstraintMatrix, GroupRep};
use crate::linalg::{Matrix, Vector};
use crate::solvers::invariance_decomposition_with;
use crate::tol;

/// Weights `W₁ … W_L` of `x ↦ W_L ⋯ W₁ x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetParams {
    weights: Vec<Matrix>,
}

impl LinearNetParams {
    pub fn from_weights(weights: Vec<Matrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ShapeMismatch("a network needs at least one layer".into()));
        }
        for (j, pair) in weights.windows(2).enumerate() {
            if pair[1].ncols() != pair[0].nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {} is {}x{} but layer {} outputs {}",
                    j + 2,
                    pair[1].nrows(),
                    pair[1].ncols(),
                    j + 1,
                    pair[0].nrows()
                )));
            }
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// `d₀, d₁, …, d_L`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.weights[0].ncols()).chain(self.weights.iter().map(|w| w.nrows())).collect()
    }
}

/// Gaussian init with std `init_scale / √fan_in`, seeded.
pub fn init_params(dims: &[usize], seed: u64, init_scale: f64) -> Result<LinearNetParams> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidConfig(format!("invalid layer dims {dims:?}")));
    }
    if !(init_scale > 0.0 && init_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("init_scale must be positive, got {init_scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = dims.windows(2).map(|d| gaussian(d[1], d[0], init_scale / (d[0] as f64).sqrt(), &mut rng)).collect();
    LinearNetParams::from_weights(weights)
}

fn gaussian(rows: usize, cols: usize, std: f64, rng: &mut ChaCha8Rng) -> Matrix {
    let normal = Normal::new(0.0, std).expect("positive std");
    Matrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

/// `W = W_L ⋯ W₁`.
pub fn end_to_end(params: &LinearNetParams) -> Matrix {
    let mut it = params.weights.iter();
    let first = it.next().expect("nonempty").clone();
    it.fold(first, |acc, w| w * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Mse,
    CrossEntropy,
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(Loss::Mse),
            "cross_entropy" => Ok(Loss::CrossEntropy),
            other => Err(Error::InvalidConfig(format!("unknown loss `{other}`"))),
        }
    }
}

fn check_shapes(dims: &[usize], x: &Matrix, y: &Matrix) -> Result<()> {
    if x.nrows() != dims[0] || y.nrows() != *dims.last().unwrap() || x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "network {:?} cannot map X {}x{} to Y {}x{}",
            dims,
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(())
}

fn check_one_hot(y: &Matrix) -> Result<()> {
    for col in y.column_iter() {
        let ones = col.iter().filter(|v| **v == 1.0).count();
        let zeros = col.iter().filter(|v| **v == 0.0).count();
        if ones != 1 || ones + zeros != col.len() {
            return Err(Error::NonOneHotTargets);
        }
    }
    Ok(())
}

/// Column-wise softmax.
fn softmax(z: &Matrix) -> Matrix {
    let mut out = z.clone();
    for mut col in out.column_iter_mut() {
        let m = col.max();
        col.apply(|v| *v = (*v - m).exp());
        let s = col.sum();
        col /= s;
    }
    out
}

/// Data term of the objective and its derivative with respect to the outputs `Ŷ`.
fn data_term(out: &Matrix, y: &Matrix, loss: Loss) -> (f64, Matrix) {
    let n = y.ncols() as f64;
    match loss {
        Loss::Mse => {
            let r = out - y;
            (r.norm_squared() / n, r * (2.0 / n))
        }
        Loss::CrossEntropy => {
            let p = softmax(out);
            let mut total = 0.0;
            for (j, col) in y.column_iter().enumerate() {
                let k = col.iamax();
                let m = out.column(j).max();
                let lse = m + out.column(j).iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                total += lse - out[(k, j)];
            }
            (total / n, (p - y) / n)
        }
    }
}

/// Objective `ℓ(WX, Y) + λ‖WG‖²` of a linear network.
pub fn objective(
    params: &LinearNetParams,
    x: &Matrix,
    y: &Matrix,
    loss: Loss,
    penalty: Option<(&Matrix, f64)>,
) -> Result<f64> {
    check_shapes(&params.dims(), x, y)?;
    if loss == Loss::CrossEntropy {
        check_one_hot(y)?;
    }
    let w = end_to_end(params);
    let (mut value, _) = data_term(&(&w * x), y, loss);
    if let Some((g, lambda)) = penalty {
        value += lambda * (&w * g).norm_squared();
    }
    Ok(value)
}

/// Backpropagate `delta` (an error at the output) through the layers with
/// layer inputs `inputs[j]`, accumulating `Δ_j inputs[j]ᵀ` into `grads`.
fn backprop(weights: &[Matrix], inputs: &[Matrix], mut delta: Matrix, grads: &mut [Matrix]) {
    for j in (0..weights.len()).rev() {
        grads[j] += &delta * inputs[j].transpose();
        if j > 0 {
            delta = weights[j].transpose() * delta;
        }
    }
}

fn forward_inputs(weights: &[Matrix], x: &Matrix) -> Vec<Matrix> {
    let mut inputs = Vec::with_capacity(weights.len() + 1);
    inputs.push(x.clone());
    for w in weights {
        let next = w * inputs.last().unwrap();
        inputs.push(next);
    }
    inputs
}

/// Analytic per-layer gradients of [`objective`].
pub fn gradient(
    params: &LinearNetParams,
    x: &Matrix,
    y: &Matrix,
    loss: Loss,
    penalty: Option<(&Matrix, f64)>,
) -> Result<Vec<Matrix>> {
    Ok(value_and_gradient(params, x, y, loss, penalty)?.1)
}

fn value_and_gradient(
    params: &LinearNetParams,
    x: &Matrix,
    y: &Matrix,
    loss: Loss,
    penalty: Option<(&Matrix, f64)>,
) -> Result<(f64, Vec<Matrix>)> {
    let dims = params.dims();
    check_shapes(&dims, x, y)?;
    if loss == Loss::CrossEntropy {
        check_one_hot(y)?;
    }
    let ws = &params.weights;
    let mut grads: Vec<Matrix> = ws.iter().map(|w| Matrix::zeros(w.nrows(), w.ncols())).collect();
    let inputs = forward_inputs(ws, x);
    let (mut value, delta) = data_term(inputs.last().unwrap(), y, loss);
    backprop(ws, &inputs, delta, &mut grads);
    if let Some((g, lambda)) = penalty {
        if g.nrows() != dims[0] {
            return Err(Error::ShapeMismatch(format!("G has {} rows, network input is {}", g.nrows(), dims[0])));
        }
        // Same chain rule with input I and output error 2λ W G Gᵀ.
        let prefixes = forward_inputs(ws, &Matrix::identity(dims[0], dims[0]));
        let wg = prefixes.last().unwrap() * g;
        value += lambda * wg.norm_squared();
        backprop(ws, &prefixes, wg * g.transpose() * (2.0 * lambda), &mut grads);
    }
    Ok((value, grads))
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for a list of parameter matrices.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl AdamState {
    pub fn new(shapes: &[Matrix]) -> Self {
        let zeros = || shapes.iter().map(|w| Matrix::zeros(w.nrows(), w.ncols())).collect();
        Self { m: zeros(), v: zeros(), t: 0 }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [Matrix], state: &mut AdamState, grads: &[Matrix], cfg: &AdamConfig) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        m.zip_apply(g, |mi, gi| *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi);
        v.zip_apply(g, |vi, gi| *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi);
        for ((pi, mi), vi) in p.iter_mut().zip(m.iter()).zip(v.iter()) {
            let m_hat = mi / c1;
            let v_hat = vi / c2;
            *pi -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// `[ρ(g⁰)X | ρ(g¹)X | …]` and `Y` repeated, group-element-major.
pub fn augment_dataset(x: &Matrix, y: &Matrix, rep: &GroupRep) -> Result<(Matrix, Matrix)> {
    if x.nrows() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), found: x.nrows() });
    }
    if x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch(format!("X has {} samples but Y has {}", x.ncols(), y.ncols())));
    }
    let elems = rep.elements()?;
    let n = x.ncols();
    let mut xa = Matrix::zeros(x.nrows(), n * elems.len());
    let mut ya = Matrix::zeros(y.nrows(), n * elems.len());
    for (k, g) in elems.iter().enumerate() {
        xa.columns_mut(k * n, n).copy_from(&(g * x));
        ya.columns_mut(k * n, n).copy_from(y);
    }
    Ok((xa, ya))
}

/// `W_L ⋯ W₁ B x` for the columns of `x`.
pub fn hardwired_forward(params: &LinearNetParams, b: &Matrix, x: &Matrix) -> Result<Matrix> {
    let d = params.dims()[0];
    if b.nrows() != d || x.nrows() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "network input {d}, basis {}x{}, inputs with {} rows",
            b.nrows(),
            b.ncols(),
            x.nrows()
        )));
    }
    Ok(end_to_end(params) * (b * x))
}

/// How invariance is encouraged during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMode {
    Augmented,
    Hardwired,
    Regularized(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub loss: Loss,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn new(mode: TrainMode) -> Self {
        Self {
            mode,
            loss: Loss::Mse,
            learning_rate: 1e-3,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            epochs: 1000,
            seed: 0,
            init_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (b1, b2) = self.adam_betas;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("Adam betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if !(self.adam_eps > 0.0) {
            return bad(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init_scale must be positive, got {}", self.init_scale));
        }
        if let TrainMode::Regularized(l) = self.mode {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda must be nonnegative, got {l}"));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_betas.0,
            beta2: self.adam_betas.1,
            eps: self.adam_eps,
        }
    }
}

/// Invariance information handed to [`train`].
#[derive(Debug, Clone, Copy)]
pub enum Symmetry<'a> {
    Rep(&'a GroupRep),
    Constraint(&'a ConstraintMatrix),
}

impl Symmetry<'_> {
    fn constraint(&self) -> Result<ConstraintMatrix> {
        match self {
            Symmetry::Rep(rep) => rep.invariance_constraint(),
            Symmetry::Constraint(g) => Ok((*g).clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based; record `e` is taken after the `e`-th update.
    pub epoch: usize,
    pub objective: f64,
    /// `‖W_⊥‖_F` of the end-to-end map.
    pub w_perp_norm: f64,
    /// `‖W − W_⊥‖_F² / ‖W‖_F²`.
    pub invariance_ratio: f64,
    /// Fraction of columns whose output argmax matches the target argmax.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// End-to-end `d_L × d₀` map (composed with `B` in hardwired mode).
    pub final_w: Matrix,
    pub params: LinearNetParams,
}

/// Fraction of columns with matching argmax, `None` for scalar outputs.
pub fn accuracy(out: &Matrix, y: &Matrix) -> Option<f64> {
    if out.nrows() < 2 || out.ncols() == 0 {
        return None;
    }
    let hits = out.column_iter().zip(y.column_iter()).filter(|(o, t)| o.imax() == t.imax()).count();
    Some(hits as f64 / out.ncols() as f64)
}

/// Train a linear network with hidden widths `hidden` (so dims are `d₀, hidden…, d_L`).
///
/// `x` is `d₀ × n`, `y` is `d_L × n`. In hardwired mode the network's input
/// dimension is `d`, the dimension of the invariant subspace.
pub fn train(config: &TrainConfig, hidden: &[usize], x: &Matrix, y: &Matrix, sym: Symmetry<'_>) -> Result<TrainLog> {
    config.validate()?;
    let g = sym.constraint()?;
    if g.dim() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: g.dim(), found: x.nrows() });
    }
    let projector = g.projector()?;
    let (xs, ys, basis) = match config.mode {
        TrainMode::Augmented => {
            let rep = match sym {
                Symmetry::Rep(rep) => rep,
                Symmetry::Constraint(_) => return Err(Error::MissingInput("group representation")),
            };
            let (xa, ya) = augment_dataset(x, y, rep)?;
            (xa, ya, None)
        }
        TrainMode::Hardwired => {
            let b = invariant_basis(&g)?;
            (&b * x, y.clone(), Some(b))
        }
        TrainMode::Regularized(_) => (x.clone(), y.clone(), None),
    };
    let penalty_lambda = match config.mode {
        TrainMode::Regularized(l) => Some(l),
        _ => None,
    };
    let penalty = penalty_lambda.map(|l| (g.entries(), l));

    let dims: Vec<usize> = std::iter::once(xs.nrows()).chain(hidden.iter().copied()).chain([y.nrows()]).collect();
    let mut params = init_params(&dims, config.seed, config.init_scale)?;
    let adam = config.adam();
    let mut state = AdamState::new(&params.weights);

    let (initial, mut grads) = value_and_gradient(&params, &xs, &ys, config.loss, penalty)?;
    let limit = tol::DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE);
    let mut records = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        adam_step(&mut params.weights, &mut state, &grads, &adam);
        let (value, next) = value_and_gradient(&params, &xs, &ys, config.loss, penalty)?;
        if !value.is_finite() || value > limit {
            return Err(Error::DivergenceDetected { epoch, objective: value });
        }
        grads = next;
        let net = end_to_end(&params);
        let w = match &basis {
            Some(b) => &net * b,
            None => net.clone(),
        };
        let split = invariance_decomposition_with(&w, &projector);
        records.push(EpochRecord {
            epoch,
            objective: value,
            w_perp_norm: split.perp.norm(),
            invariance_ratio: split.ratio,
            accuracy: accuracy(&(&net * &xs), &ys),
        });
    }
    let net = end_to_end(&params);
    let final_w = match &basis {
        Some(b) => net * b,
        None => net,
    };
    Ok(TrainLog { records, final_w, params })
}

/// Two-layer network `x ↦ (1/√d₁) A σ(Hx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearNetParams {
    pub hidden: Matrix,
    pub output: Matrix,
    pub activation: Activation,
}

impl NonlinearNetParams {
    pub fn new(hidden: Matrix, output: Matrix, activation: Activation) -> Result<Self> {
        if output.ncols() != hidden.nrows() || hidden.nrows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "hidden {}x{} and output {}x{} do not chain",
                hidden.nrows(),
                hidden.ncols(),
                output.nrows(),
                output.ncols()
            )));
        }
        Ok(Self { hidden, output, activation })
    }

    /// Seeded Gaussian init: hidden std `init_scale/√d₀`, output std `init_scale`.
    pub fn init(
        d0: usize,
        width: usize,
        dl: usize,
        activation: Activation,
        seed: u64,
        init_scale: f64,
    ) -> Result<Self> {
        if d0 == 0 || width == 0 || dl == 0 {
            return Err(Error::InvalidConfig("network dims must be positive".into()));
        }
        if !(init_scale > 0.0 && init_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("init_scale must be positive, got {init_scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = gaussian(width, d0, init_scale / (d0 as f64).sqrt(), &mut rng);
        let output = gaussian(dl, width, init_scale, &mut rng);
        Self::new(hidden, output, activation)
    }

    pub fn width(&self) -> usize {
        self.hidden.nrows()
    }
}

/// Outputs for the columns of `x`.
pub fn nonlinear_forward(params: &NonlinearNetParams, x: &Matrix) -> Result<Matrix> {
    if x.nrows() != params.hidden.ncols() {
        return Err(Error::DimensionMismatch { expected: params.hidden.ncols(), found: x.nrows() });
    }
    let act = params.activation;
    let h = (&params.hidden * x).map(|t| act.apply(t));
    Ok(&params.output * h / (params.width() as f64).sqrt())
}

/// Objective and gradients `(∂H, ∂A)` of a two-layer network.
pub fn nonlinear_gradient(
    params: &NonlinearNetParams,
    x: &Matrix,
    y: &Matrix,
    loss: Loss,
) -> Result<(f64, Matrix, Matrix)> {
    if y.nrows() != params.output.nrows() || y.ncols() != x.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "outputs {}x{} vs targets {}x{}",
            params.output.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if loss == Loss::CrossEntropy {
        check_one_hot(y)?;
    }
    let out = nonlinear_forward(params, x)?;
    let act = params.activation;
    let scale = 1.0 / (params.width() as f64).sqrt();
    let pre = &params.hidden * x;
    let h = pre.map(|t| act.apply(t));
    let (value, delta) = data_term(&out, y, loss);
    let grad_a = &delta * h.transpose() * scale;
    let back = (params.output.transpose() * &delta * scale).component_mul(&pre.map(|t| act.derivative(t)));
    let grad_h = back * x.transpose();
    Ok((value, grad_h, grad_a))
}

/// Adam training of a two-layer network; returns final params and per-epoch objectives.
///
/// `Augmented` trains on the augmented dataset (requires `rep`); `Regularized`
/// and `Hardwired` are not defined for this architecture.
pub fn train_nonlinear(
    config: &TrainConfig,
    init: NonlinearNetParams,
    x: &Matrix,
    y: &Matrix,
    rep: Option<&GroupRep>,
) -> Result<(NonlinearNetParams, Vec<f64>)> {
    config.validate()?;
    let (xs, ys) = match (config.mode, rep) {
        (TrainMode::Augmented, Some(rep)) => augment_dataset(x, y, rep)?,
        (TrainMode::Augmented, None) => (x.clone(), y.clone()),
        (mode, _) => {
            return Err(Error::InvalidConfig(format!("mode {mode:?} is not supported for nonlinear networks")))
        }
    };
    let adam = config.adam();
    let mut params = init;
    let mut slots = vec![params.hidden.clone(), params.output.clone()];
    let mut state = AdamState::new(&slots);
    let mut history = Vec::with_capacity(config.epochs);
    let (initial, gh, ga) = nonlinear_gradient(&params, &xs, &ys, config.loss)?;
    let limit = tol::DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE);
    let mut grads = vec![gh, ga];
    for epoch in 1..=config.epochs {
        adam_step(&mut slots, &mut state, &grads, &adam);
        params.hidden.copy_from(&slots[0]);
        params.output.copy_from(&slots[1]);
        let (value, gh, ga) = nonlinear_gradient(&params, &xs, &ys, config.loss)?;
        if !value.is_finite() || value > limit {
            return Err(Error::DivergenceDetected { epoch, objective: value });
        }
        history.push(value);
        grads = vec![gh, ga];
    }
    Ok((params, history))
}

/// `E_g (1 − f(ρ(g)x) / f̄(x))²` with `f̄(x)` the orbit mean.
pub fn epsilon_inv<F>(predict: F, x: &Vector, rep: &GroupRep) -> Result<f64>
where
    F: Fn(&Vector) -> f64,
{
    if x.len() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), found: x.len() });
    }
    let values: Vec<f64> = rep.elements()?.iter().map(|g| predict(&(g * x))).collect();
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if mean.abs() < tol::ORBIT_MEAN_MIN {
        return Err(Error::OrbitMeanZero);
    }
    Ok(values.iter().map(|v| (1.0 - v / mean).powi(2)).sum::<f64>() / k)
}

/// Median of [`epsilon_inv`] over the columns of `xs`.
pub fn epsilon_inv_median<F>(predict: F, xs: &Matrix, rep: &GroupRep) -> Result<f64>
where
    F: Fn(&Vector) -> f64,
{
    let mut eps =
        xs.column_iter().map(|c| epsilon_inv(&predict, &c.clone_owned(), rep)).collect::<Result<Vec<f64>>>()?;
    if eps.is_empty() {
        return Err(Error::ShapeMismatch("no inputs".into()));
    }
    eps.sort_by(f64::total_cmp);
    let m = eps.len();
    Ok(if m % 2 == 1 { eps[m / 2] } else { 0.5 * (eps[m / 2 - 1] + eps[m / 2]) })
}
