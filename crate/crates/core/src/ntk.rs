//! Neural tangent kernels of shallow bias-free networks and kernel regression.
//!
//! The network is `f(x) = (1/√d₁) Σ_d a_d σ(w_dᵀx)`; its empirical NTK is
//!
//! ```text
//! K(x, x') = (1/d₁) Σ_d [ a_d² σ'(w_dᵀx) σ'(w_dᵀx') xᵀx' + σ(w_dᵀx) σ(w_dᵀx') ]
//! ```
//!
//! For ReLU and `a_d ~ N(0,1)`, `w_d ~ N(0, I)` this converges to
//! [`relu_limiting_ntk`] as the width grows. The group-convolutional variant
//! replaces `σ(w_dᵀx)` by its orbit average `(1/|𝒢|) Σ_g σ(w_dᵀρ(g)x)`.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::grouprep::GroupRep;
use crate::linalg::{Matrix, Vector};
use crate::tol;

/// Hidden weights `w_d` and output scales `a_d` of a width-`d₁` network.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthSampleSet {
    weights: Vec<Vector>,
    out_scales: Vec<f64>,
    seed: u64,
}

impl WidthSampleSet {
    /// `w_d ~ N(0, I_{d₀})`, `a_d ~ N(0, 1)`, seeded.
    pub fn sample(d0: usize, width: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(width);
        let mut out_scales = Vec::with_capacity(width);
        for _ in 0..width {
            weights.push(Vector::from_fn(d0, |_, _| StandardNormal.sample(&mut rng)));
            out_scales.push(StandardNormal.sample(&mut rng));
        }
        Self { weights, out_scales, seed }
    }

    pub fn from_parts(weights: Vec<Vector>, out_scales: Vec<f64>) -> Result<Self> {
        if weights.len() != out_scales.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight vectors but {} output scales",
                weights.len(),
                out_scales.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::ShapeMismatch("empty sample set".into()));
        }
        let d0 = weights[0].len();
        if let Some(w) = weights.iter().find(|w| w.len() != d0) {
            return Err(Error::DimensionMismatch { expected: d0, found: w.len() });
        }
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) || out_scales.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("sample set has non-finite entries".into()));
        }
        Ok(Self { weights, out_scales, seed: 0 })
    }

    /// Replace each `w` by its orbit `{ρ(g)ᵀw}`, repeating its output scale.
    pub fn orbit_symmetrized(&self, rep: &GroupRep) -> Result<Self> {
        if rep.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rep.dim() });
        }
        let elems = rep.elements()?;
        let mut weights = Vec::with_capacity(self.width() * elems.len());
        let mut out_scales = Vec::with_capacity(weights.capacity());
        for (w, a) in self.weights.iter().zip(&self.out_scales) {
            for g in &elems {
                weights.push(g.transpose() * w);
                out_scales.push(*a);
            }
        }
        Ok(Self { weights, out_scales, seed: self.seed })
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vector] {
        &self.weights
    }

    pub fn out_scales(&self) -> &[f64] {
        &self.out_scales
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }
}

/// Infinite-width NTK of a bias-free two-layer ReLU network.
pub fn relu_limiting_ntk(x: &Vector, xp: &Vector) -> Result<f64> {
    if x.len() != xp.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: xp.len() });
    }
    let (nx, nxp) = (x.norm(), xp.norm());
    if nx == 0.0 || nxp == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot = x.dot(xp);
    let norms = nx * nxp;
    // acos of the cosine loses half the digits near 0 and π.
    let (ux, uxp) = (x / nx, xp / nxp);
    let theta = 2.0 * (&ux - &uxp).norm().atan2((&ux + &uxp).norm());
    Ok((dot * (PI - theta) + norms * ((PI - theta) * theta.cos() + theta.sin())) / (2.0 * PI))
}

fn ntk_terms<'a>(
    samples: &'a WidthSampleSet,
    act: Activation,
    x: &'a Vector,
    xp: &'a Vector,
) -> Result<impl Iterator<Item = f64> + 'a> {
    samples.check(x)?;
    samples.check(xp)?;
    let dot = x.dot(xp);
    Ok(samples.weights.iter().zip(&samples.out_scales).map(move |(w, a)| {
        let (u, v) = (w.dot(x), w.dot(xp));
        a * a * (act.derivative(u) * act.derivative(v)) * dot + act.apply(u) * act.apply(v)
    }))
}

/// Finite-width empirical NTK.
pub fn empirical_ntk(samples: &WidthSampleSet, act: Activation, x: &Vector, xp: &Vector) -> Result<f64> {
    Ok(ntk_terms(samples, act, x, xp)?.sum::<f64>() / samples.width() as f64)
}

/// Empirical NTK and the standard error of its per-sample terms.
pub fn empirical_ntk_with_stderr(
    samples: &WidthSampleSet,
    act: Activation,
    x: &Vector,
    xp: &Vector,
) -> Result<(f64, f64)> {
    let terms: Vec<f64> = ntk_terms(samples, act, x, xp)?.collect();
    let m = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / m;
    if terms.len() < 2 {
        return Ok((mean, f64::INFINITY));
    }
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

/// `(1/|𝒢|) Σ_g kernel(ρ(g)x, x')`.
pub fn augmented_kernel<K>(kernel: K, rep: &GroupRep, x: &Vector, xp: &Vector) -> Result<f64>
where
    K: Fn(&Vector, &Vector) -> Result<f64>,
{
    if x.len() != rep.dim() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), found: x.len() });
    }
    let elems = rep.elements()?;
    let mut total = 0.0;
    for g in &elems {
        total += kernel(&(g * x), xp)?;
    }
    Ok(total / elems.len() as f64)
}

/// Orbit-averaged features `φ_d(x)` and `ψ_d(x)` of the group-convolutional net.
fn conv_features(samples: &WidthSampleSet, act: Activation, orbit: &[Vector]) -> (Vec<f64>, Vec<Vector>) {
    let k = orbit.len() as f64;
    samples
        .weights
        .iter()
        .map(|w| {
            let mut phi = 0.0;
            let mut psi = Vector::zeros(w.len());
            for gx in orbit {
                let t = w.dot(gx);
                phi += act.apply(t);
                psi.axpy(act.derivative(t), gx, 1.0);
            }
            (phi / k, psi / k)
        })
        .unzip()
}

fn orbit_of(rep: &GroupRep, x: &Vector) -> Result<Vec<Vector>> {
    Ok(rep.elements()?.iter().map(|g| g * x).collect())
}

fn check_conv(samples: &WidthSampleSet, rep: &GroupRep, x: &Vector) -> Result<()> {
    samples.check(x)?;
    if rep.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: rep.dim(), found: x.len() });
    }
    if !rep.is_unitary(tol::UNITARY_TOL) {
        return Err(Error::NotUnitary);
    }
    Ok(())
}

/// Empirical NTK of `x ↦ (1/√d₁) Σ_d a_d (1/|𝒢|) Σ_g σ(w_dᵀρ(g)x)`.
pub fn conv_empirical_ntk(
    samples: &WidthSampleSet,
    act: Activation,
    rep: &GroupRep,
    x: &Vector,
    xp: &Vector,
) -> Result<f64> {
    check_conv(samples, rep, x)?;
    check_conv(samples, rep, xp)?;
    let (phi, psi) = conv_features(samples, act, &orbit_of(rep, x)?);
    let (phi_p, psi_p) = conv_features(samples, act, &orbit_of(rep, xp)?);
    let mut total = 0.0;
    for d in 0..samples.width() {
        let a = samples.out_scales[d];
        total += phi[d] * phi_p[d] + a * a * psi[d].dot(&psi_p[d]);
    }
    Ok(total / samples.width() as f64)
}

/// Output of the group-convolutional network.
pub fn conv_forward(samples: &WidthSampleSet, act: Activation, rep: &GroupRep, x: &Vector) -> Result<f64> {
    check_conv(samples, rep, x)?;
    let (phi, _) = conv_features(samples, act, &orbit_of(rep, x)?);
    let s: f64 = phi.iter().zip(&samples.out_scales).map(|(p, a)| a * p).sum();
    Ok(s / (samples.width() as f64).sqrt())
}

/// Output of the plain two-layer network `(1/√d₁) Σ_d a_d σ(w_dᵀx)`.
pub fn shallow_forward(samples: &WidthSampleSet, act: Activation, x: &Vector) -> Result<f64> {
    samples.check(x)?;
    let s: f64 = samples.weights.iter().zip(&samples.out_scales).map(|(w, a)| a * act.apply(w.dot(x))).sum();
    Ok(s / (samples.width() as f64).sqrt())
}

/// Symmetric Gram matrix with a diagonal jitter used by solves.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: Matrix,
    jitter: f64,
}

impl KernelMatrix {
    /// Checks symmetry; the jitter defaults to `1e-10 · trace / n`.
    pub fn new(entries: Matrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NonSquare { rows: entries.nrows(), cols: entries.ncols() });
        }
        let residual = (&entries - entries.transpose()).norm();
        if residual > tol::SYM_TOL * entries.norm().max(1.0) {
            return Err(Error::NotSymmetric { residual });
        }
        let n = entries.nrows().max(1) as f64;
        let jitter = (tol::KERNEL_JITTER_REL * entries.trace() / n).max(0.0);
        Ok(Self { entries, jitter })
    }

    /// Gram matrix of `kernel` on `points`; entries are computed independently
    /// for `i ≤ j` and mirrored.
    pub fn from_points<K>(kernel: K, points: &[Vector]) -> Result<Self>
    where
        K: Fn(&Vector, &Vector) -> Result<f64> + Sync,
    {
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| kernel(&points[i], &points[j])).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let mut m = Matrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for (off, v) in row.iter().enumerate() {
                m[(i, i + off)] = *v;
                m[(i + off, i)] = *v;
            }
        }
        Self::new(m)
    }

    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::InvalidConfig(format!("jitter must be nonnegative, got {jitter}")));
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn without_jitter(mut self) -> Self {
        self.jitter = 0.0;
        self
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Solve `(K + jitter·I) α = y`, checking `‖Kα − y‖ < 1e-6 ‖y‖`.
pub fn kernel_interpolate(k: &KernelMatrix, y: &Vector) -> Result<Vector> {
    if y.len() != k.len() {
        return Err(Error::DimensionMismatch { expected: k.len(), found: y.len() });
    }
    let n = k.len();
    let jittered = &k.entries + Matrix::identity(n, n) * k.jitter;
    let chol = Cholesky::new(jittered).ok_or(Error::SingularKernel { residual: f64::INFINITY })?;
    let alpha = chol.solve(y);
    let residual = (&k.entries * &alpha - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    if !(residual < tol::KERNEL_RESIDUAL_RTOL) {
        return Err(Error::SingularKernel { residual });
    }
    Ok(alpha)
}

/// `Σ_i α_i kernel(x_i, x)`.
pub fn kernel_predict<K>(kernel: K, points: &[Vector], alpha: &Vector, x: &Vector) -> Result<f64>
where
    K: Fn(&Vector, &Vector) -> Result<f64>,
{
    if points.len() != alpha.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: alpha.len() });
    }
    let mut total = 0.0;
    for (p, a) in points.iter().zip(alpha.iter()) {
        total += a * kernel(p, x)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouprep::c4_image_rotation;

    fn random_vector(d: usize, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn limiting_ntk_special_angles() {
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert!((relu_limiting_ntk(&x, &x).unwrap() - 25.0).abs() < 1e-12);
        let y = Vector::from_vec(vec![-8.0, 6.0]);
        assert!((relu_limiting_ntk(&x, &y).unwrap() - 50.0 / (2.0 * PI)).abs() < 1e-12);
        assert!(relu_limiting_ntk(&x, &(-&x)).unwrap().abs() < 1e-12);
        assert!(matches!(relu_limiting_ntk(&x, &Vector::zeros(2)), Err(Error::ZeroVector)));
        // Collinear inputs whose cosine rounds above 1.
        let z = Vector::from_vec(vec![0.1, 0.7]);
        assert!(relu_limiting_ntk(&z, &(&z * 3.0)).unwrap().is_finite());
        // Full precision on the diagonal for generic inputs.
        for seed in 0..50 {
            let v = random_vector(7, seed);
            let k = relu_limiting_ntk(&v, &v).unwrap();
            assert!((k - v.norm_squared()).abs() <= 1e-14 * v.norm_squared(), "{k}");
        }
    }

    #[test]
    fn empirical_identity_activation() {
        let w = Vector::from_vec(vec![0.3, -1.2, 2.0]);
        let s = WidthSampleSet::from_parts(vec![w.clone()], vec![1.0]).unwrap();
        let x = random_vector(3, 1);
        let xp = random_vector(3, 2);
        let got = empirical_ntk(&s, Activation::Identity, &x, &xp).unwrap();
        assert!((got - (x.dot(&xp) + w.dot(&x) * w.dot(&xp))).abs() < 1e-12);
    }

    #[test]
    fn kernels_are_exactly_symmetric() {
        let s = WidthSampleSet::sample(5, 64, 3);
        let x = random_vector(5, 4);
        let xp = random_vector(5, 5);
        for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
            assert_eq!(empirical_ntk(&s, act, &x, &xp).unwrap(), empirical_ntk(&s, act, &xp, &x).unwrap());
        }
        assert_eq!(relu_limiting_ntk(&x, &xp).unwrap(), relu_limiting_ntk(&xp, &x).unwrap());
        let rep = GroupRep::cyclic_shift(5).unwrap();
        assert_eq!(
            conv_empirical_ntk(&s, Activation::Relu, &rep, &x, &xp).unwrap(),
            conv_empirical_ntk(&s, Activation::Relu, &rep, &xp, &x).unwrap()
        );
    }

    #[test]
    fn augmented_kernel_examples() {
        let x = random_vector(4, 6);
        let xp = random_vector(4, 7);
        let base = relu_limiting_ntk(&x, &xp).unwrap();
        let triv = augmented_kernel(relu_limiting_ntk, &GroupRep::trivial(4), &x, &xp).unwrap();
        assert_eq!(triv, base);
        let rep = c4_image_rotation(2);
        let ones = Vector::from_element(4, 1.0);
        let k1 = augmented_kernel(relu_limiting_ntk, &rep, &ones, &xp).unwrap();
        assert!((k1 - relu_limiting_ntk(&ones, &xp).unwrap()).abs() < 1e-15);
        let k = augmented_kernel(relu_limiting_ntk, &rep, &x, &xp).unwrap();
        for h in rep.elements().unwrap() {
            let kh = augmented_kernel(relu_limiting_ntk, &rep, &(&h * &x), &xp).unwrap();
            assert!((kh - k).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_ntk_trivial_group_and_orbit_identity() {
        let s = WidthSampleSet::sample(4, 16, 8);
        let x = random_vector(4, 9);
        let xp = random_vector(4, 10);
        let triv = GroupRep::trivial(4);
        let a = conv_empirical_ntk(&s, Activation::Relu, &triv, &x, &xp).unwrap();
        let b = empirical_ntk(&s, Activation::Relu, &x, &xp).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));

        let rep = c4_image_rotation(2);
        let sym = s.orbit_symmetrized(&rep).unwrap();
        assert_eq!(sym.width(), 64);
        for act in [Activation::Relu, Activation::Tanh] {
            let conv = conv_empirical_ntk(&sym, act, &rep, &x, &xp).unwrap();
            let aug = augmented_kernel(|u, v| empirical_ntk(&sym, act, u, v), &rep, &x, &xp).unwrap();
            assert!((conv - aug).abs() < 1e-12 * aug.abs().max(1.0), "{conv} {aug}");
        }
    }

    #[test]
    fn conv_forward_is_invariant() {
        let rep = c4_image_rotation(3);
        let s = WidthSampleSet::sample(9, 32, 11);
        let x = random_vector(9, 12);
        let f = conv_forward(&s, Activation::Relu, &rep, &x).unwrap();
        for h in rep.elements().unwrap() {
            assert!((conv_forward(&s, Activation::Relu, &rep, &(&h * &x)).unwrap() - f).abs() < 1e-12);
        }
        let skew = GroupRep::from_generators(vec![(Matrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]), 2)]).unwrap();
        let s2 = WidthSampleSet::sample(2, 4, 1);
        assert!(matches!(conv_forward(&s2, Activation::Relu, &skew, &random_vector(2, 1)), Err(Error::NotUnitary)));
    }

    #[test]
    fn interpolation_examples() {
        let k = KernelMatrix::new(Matrix::identity(3, 3)).unwrap();
        let y = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((kernel_interpolate(&k, &y).unwrap() - &y).norm() < 1e-9);

        // Two copies of the same point: singular without jitter.
        let dup = Matrix::from_element(2, 2, 1.0);
        let y = Vector::from_vec(vec![1.0, 1.0]);
        let bare = KernelMatrix::new(dup.clone()).unwrap().without_jitter();
        assert!(matches!(kernel_interpolate(&bare, &y), Err(Error::SingularKernel { .. })));
        let alpha = kernel_interpolate(&KernelMatrix::new(dup).unwrap(), &y).unwrap();
        assert!((alpha[0] - 0.5).abs() < 1e-8 && (alpha[1] - 0.5).abs() < 1e-8);

        assert!(matches!(
            KernelMatrix::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn gram_matrix_from_points() {
        let pts: Vec<Vector> = (0..5).map(|i| random_vector(3, 20 + i)).collect();
        let k = KernelMatrix::from_points(relu_limiting_ntk, &pts).unwrap();
        assert_eq!(k.entries(), &k.entries().transpose());
        assert_eq!(k.entries()[(1, 3)], relu_limiting_ntk(&pts[1], &pts[3]).unwrap());
        let alpha = kernel_interpolate(&k, &Vector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let pred = kernel_predict(relu_limiting_ntk, &pts, &alpha, &pts[2]).unwrap();
        assert!((pred - 3.0).abs() < 1e-6);
    }
}
