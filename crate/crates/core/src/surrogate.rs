//! Parametric Gaussian-process regression of a landscape on the 25-function
//! basis: heteroscedastic generalized least squares with exact samples as
//! hard equality constraints and an optional Gram-matrix prior.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::ansatz::{basis_functions, ThetaPoint, BASIS_SIZE, ORDER};
use crate::error::{Error, Result};
use crate::linalg::{condition_number, svd};

const RANK_TOLERANCE: f64 = 1e-10;
const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub theta: ThetaPoint,
    pub value: f64,
    pub sigma: f64,
    pub exact: bool,
}

impl Sample {
    pub fn noisy(theta: ThetaPoint, value: f64, sigma: f64) -> Self {
        Self {
            theta,
            value,
            sigma,
            exact: false,
        }
    }

    pub fn exact(theta: ThetaPoint, value: f64) -> Self {
        Self {
            theta,
            value,
            sigma: 0.0,
            exact: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    samples: Vec<Sample>,
}

impl TrainingSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        for s in &samples {
            let consistent = if s.exact {
                s.sigma == 0.0
            } else {
                s.sigma > 0.0 && s.sigma.is_finite()
            };
            if !consistent || !s.value.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "sample",
                    reason: "exact samples need sigma = 0, noisy ones a finite sigma > 0",
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn push(&mut self, sample: Sample) -> Result<()> {
        let mut all = core::mem::take(&mut self.samples);
        all.push(sample);
        *self = Self::new(all)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Training mesh `θ = (πa/5, πb/5)`, `a, b ∈ {−5, …, 4}`; the `b = 0` row is
/// the exactly computable boundary line.
pub fn training_mesh() -> Vec<ThetaPoint> {
    let mut out = Vec::with_capacity(100);
    for a in -5..5 {
        for b in -5..5 {
            out.push(ThetaPoint {
                theta1: PI * a as f64 / 5.0,
                theta2: PI * b as f64 / 5.0,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactHandling {
    /// Null-space elimination of the equality constraints.
    Constraints,
    /// Treat exact samples as noisy with this sigma.
    SigmaFloor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceFormula {
    /// `Tᵀ Σ_ξ T`
    Posterior,
    /// `Tᵀ Σ_ξ T − (ξ̄ᵀT)²`, clamped at zero.
    MeanSubtracted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub t: f64,
    pub exact: ExactHandling,
    pub variance: VarianceFormula,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            t: 0.0,
            exact: ExactHandling::Constraints,
            variance: VarianceFormula::Posterior,
        }
    }
}

impl FitOptions {
    pub fn with_t(t: f64) -> Self {
        Self {
            t,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub xi_bar: Vec<f64>,
    pub coeff_cov: DMatrix<f64>,
    pub t: f64,
    pub variance_formula: VarianceFormula,
    /// Exact samples imposed as constraints.
    pub constraints: Vec<(ThetaPoint, f64)>,
    /// Condition number of the reduced weighted system.
    pub condition: f64,
}

impl SurrogateModel {
    pub fn predict_mean(&self, theta: ThetaPoint) -> f64 {
        basis_functions(theta).dot(&self.xi_bar)
    }

    pub fn predict_variance(&self, theta: ThetaPoint) -> f64 {
        let t = DVector::from_column_slice(&basis_functions(theta).values);
        let quadratic = (t.transpose() * &self.coeff_cov * &t)[(0, 0)];
        let v = match self.variance_formula {
            VarianceFormula::Posterior => quadratic,
            VarianceFormula::MeanSubtracted => {
                let mean = t.dot(&DVector::from_column_slice(&self.xi_bar));
                quadratic - mean * mean
            }
        };
        v.max(0.0)
    }
}

pub fn predict_mean(model: &SurrogateModel, theta: ThetaPoint) -> f64 {
    model.predict_mean(theta)
}

pub fn predict_variance(model: &SurrogateModel, theta: ThetaPoint) -> f64 {
    model.predict_variance(theta)
}

/// `∫_{−π}^{π} cos^a(θ/2) sin^b(θ/2) dθ`.
pub fn half_angle_integral(a: usize, b: usize) -> f64 {
    if b % 2 == 1 {
        return 0.0;
    }
    // 4 ∫_0^{π/2} cos^a sin^b, reduced on b then a (Wallis).
    let mut w = if a.is_multiple_of(2) { PI / 2.0 } else { 1.0 };
    let mut k = if a.is_multiple_of(2) { 2 } else { 3 };
    while k <= a {
        w *= (k - 1) as f64 / k as f64;
        k += 2;
    }
    let mut m = 2;
    while m <= b {
        w *= (m - 1) as f64 / (a + m) as f64;
        m += 2;
    }
    4.0 * w
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub m: DMatrix<f64>,
}

/// `M_ss' = ∫ T_s T_s' dθ₁ dθ₂` over `[−π, π]²` in closed form.
pub fn gram_matrix() -> GramMatrix {
    let one_d = |p: usize, q: usize| half_angle_integral(p + q, 2 * ORDER - p - q);
    let m = DMatrix::from_fn(BASIS_SIZE, BASIS_SIZE, |r, c| {
        let (i, j) = (r / (ORDER + 1), r % (ORDER + 1));
        let (k, l) = (c / (ORDER + 1), c % (ORDER + 1));
        one_d(i, k) * one_d(j, l)
    });
    GramMatrix { m }
}

/// Generalized least squares with exact samples as equality constraints.
pub fn fit(data: &TrainingSet, options: FitOptions) -> Result<SurrogateModel> {
    if !(options.t >= 0.0 && options.t.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "regularization must be finite and nonnegative",
        });
    }
    let mut exact_rows = Vec::new();
    let mut noisy_rows = Vec::new();
    for s in data.samples() {
        match (s.exact, options.exact) {
            (true, ExactHandling::Constraints) => exact_rows.push(*s),
            (true, ExactHandling::SigmaFloor(floor)) => noisy_rows.push(Sample::noisy(s.theta, s.value, floor)),
            (false, _) => noisy_rows.push(*s),
        }
    }

    let (particular, null_space) = constraint_space(&exact_rows)?;
    let free = null_space.ncols();

    let basis_row = |theta: ThetaPoint| DVector::from_column_slice(&basis_functions(theta).values);
    let prior_rows = if options.t > 0.0 { BASIS_SIZE } else { 0 };
    let rows = noisy_rows.len() + prior_rows;
    let mut k = DMatrix::zeros(rows, free);
    let mut rhs = DVector::zeros(rows);
    for (r, s) in noisy_rows.iter().enumerate() {
        let t = basis_row(s.theta) / s.sigma;
        let reduced = null_space.transpose() * &t;
        k.row_mut(r).copy_from(&reduced.transpose());
        rhs[r] = s.value / s.sigma - t.dot(&particular);
    }
    if options.t > 0.0 {
        let root = gram_root(&gram_matrix().m) * options.t.sqrt();
        let reduced = &root * &null_space;
        k.rows_mut(noisy_rows.len(), prior_rows).copy_from(&reduced);
        let shift = -(&root * &particular);
        rhs.rows_mut(noisy_rows.len(), prior_rows).copy_from(&shift);
    }

    let (z, cov_z, condition) = if free == 0 {
        (DVector::zeros(0), DMatrix::zeros(0, 0), 1.0)
    } else {
        solve_reduced(k, rhs)?
    };
    let xi = &particular + &null_space * z;
    let coeff_cov = &null_space * cov_z * null_space.transpose();
    let coeff_cov = (&coeff_cov + coeff_cov.transpose()) * 0.5;
    Ok(SurrogateModel {
        xi_bar: xi.iter().copied().collect(),
        coeff_cov,
        t: options.t,
        variance_formula: options.variance,
        constraints: exact_rows.iter().map(|s| (s.theta, s.value)).collect(),
        condition,
    })
}

/// Same contract as [`fit`]; observables other than the energy reuse it.
pub fn fit_observable(data: &TrainingSet, options: FitOptions) -> Result<SurrogateModel> {
    fit(data, options)
}

/// Particular solution of `C ξ = d` and an orthonormal basis of `ker C`.
fn constraint_space(exact: &[Sample]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if exact.is_empty() {
        return Ok((DVector::zeros(BASIS_SIZE), DMatrix::identity(BASIS_SIZE, BASIS_SIZE)));
    }
    // Pad to at least 25 rows so the thin SVD returns the full right basis.
    let rows = exact.len().max(BASIS_SIZE);
    let mut c = DMatrix::zeros(rows, BASIS_SIZE);
    let mut d = DVector::zeros(rows);
    for (r, s) in exact.iter().enumerate() {
        c.row_mut(r).copy_from_slice(&basis_functions(s.theta).values);
        d[r] = s.value;
    }
    let decomposition = svd(c.clone());
    let s_max = decomposition.singular_values.max();
    let cutoff = RANK_TOLERANCE * s_max.max(f64::MIN_POSITIVE);
    let particular = decomposition
        .solve(&d, cutoff)
        .map_err(|_| Error::InconsistentConstraints { residual: f64::INFINITY })?;
    let residual = (&c * &particular - &d).norm();
    if residual > CONSISTENCY_TOLERANCE * (1.0 + d.norm()) {
        return Err(Error::InconsistentConstraints { residual });
    }
    let v_t = decomposition.v_t.as_ref().expect("requested");
    let null: Vec<usize> = (0..BASIS_SIZE)
        .filter(|&i| decomposition.singular_values[i] <= cutoff)
        .collect();
    let n = DMatrix::from_fn(BASIS_SIZE, null.len(), |r, c| v_t[(null[c], r)]);
    Ok((particular, n))
}

/// `R` with `RᵀR = M`.
fn gram_root(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let sqrt_values = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    DMatrix::from_diagonal(&sqrt_values) * eig.eigenvectors.transpose()
}

/// Least squares `min ‖K z − rhs‖` with a rank check; returns `z`,
/// `(KᵀK)⁻¹` and the condition number of `K`.
fn solve_reduced(k: DMatrix<f64>, rhs: DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let needed = k.ncols();
    let rows = k.nrows();
    let padded = if rows < needed {
        let mut p = DMatrix::zeros(needed, needed);
        p.rows_mut(0, rows).copy_from(&k);
        p
    } else {
        k
    };
    let decomposition = svd(padded);
    let values: Vec<f64> = decomposition.singular_values.iter().copied().collect();
    let s_max = values.iter().copied().fold(0.0, f64::max);
    let rank = values.iter().filter(|&&s| s > RANK_TOLERANCE * s_max).count();
    let condition = condition_number(&values);
    if rank < needed || s_max == 0.0 {
        return Err(Error::RankDeficient {
            rank,
            needed,
            condition,
        });
    }
    let u = decomposition.u.as_ref().expect("requested");
    let v = decomposition.v_t.as_ref().expect("requested").transpose();
    let mut rhs_full = DVector::zeros(u.nrows());
    rhs_full.rows_mut(0, rows).copy_from(&rhs);
    let projected = u.transpose() * rhs_full;
    let inverse_values = DVector::from_iterator(needed, values.iter().map(|s| 1.0 / s));
    let z = &v * projected.component_mul(&inverse_values);
    let scaled = &v * DMatrix::from_diagonal(&inverse_values);
    let cov = &scaled * scaled.transpose();
    Ok((z, cov, condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{exact_boundary_energy, statevector, BasisVector};
    use crate::embedding::{map_to_qubits, EhProblem, EmbeddingParams};
    use crate::rng::stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn simpson_half_angle(a: usize, b: usize) -> f64 {
        let n = 2000;
        let h = 2.0 * PI / n as f64;
        let f = |x: f64| libm::cos(x / 2.0).powi(a as i32) * libm::sin(x / 2.0).powi(b as i32);
        let mut acc = f(-PI) + f(PI);
        for k in 1..n {
            let x = -PI + k as f64 * h;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    }

    fn general_points(n: usize, seed: u64) -> Vec<ThetaPoint> {
        let mut rng = stream(seed, &[]);
        (0..n)
            .map(|_| ThetaPoint::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI)).unwrap())
            .collect()
    }

    fn energy(problem: &EhProblem, theta: ThetaPoint) -> f64 {
        problem.hamiltonian.sum.expectation(&statevector(theta)).unwrap()
    }

    fn problem(u: f64, lc: f64) -> EhProblem {
        EhProblem::new(EmbeddingParams::benchmark(u, lc).unwrap()).unwrap()
    }

    /// Mesh data: exact on the boundary line, Gaussian noise elsewhere.
    fn mesh_data(f: impl Fn(ThetaPoint) -> f64, sigma: f64, seed: u64) -> TrainingSet {
        let mut rng = stream(seed, &[1]);
        let samples = training_mesh()
            .into_iter()
            .map(|t| {
                if t.theta2 == 0.0 {
                    Sample::exact(t, f(t))
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    Sample::noisy(t, f(t) + sigma * z, sigma)
                }
            })
            .collect();
        TrainingSet::new(samples).unwrap()
    }

    #[test]
    fn gram_closed_forms() {
        let g = gram_matrix();
        let s = BasisVector::index(4, 4);
        assert_abs_diff_eq!(g.m[(s, s)], (35.0 * PI / 64.0).powi(2), epsilon = 1e-13);
        assert!((&g.m - g.m.transpose()).norm() == 0.0);
        for a in 0..=8 {
            for b in 0..=8 - a {
                assert_abs_diff_eq!(half_angle_integral(a, b), simpson_half_angle(a, b), epsilon = 1e-9);
            }
        }
        // odd total sine power in either factor
        let r = BasisVector::index(4, 4);
        let c = BasisVector::index(3, 4);
        assert_eq!(g.m[(r, c)], 0.0);
        assert!(g.m.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn recovers_a_known_expansion() {
        let xi: Vec<f64> = (0..25).map(|k| libm::sin(k as f64 * 1.3) + 0.1 * k as f64).collect();
        let samples = general_points(25, 5)
            .into_iter()
            .map(|t| Sample::noisy(t, basis_functions(t).dot(&xi), 1.0))
            .collect();
        let model = fit(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap();
        for (a, b) in model.xi_bar.iter().zip(&xi) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn sigma_scale_invariance() {
        let p = problem(1.0, 0.0);
        let data = mesh_data(|t| energy(&p, t), 0.1, 3);
        let scaled = TrainingSet::new(
            data.samples()
                .iter()
                .map(|s| Sample {
                    sigma: s.sigma * 3.7,
                    ..*s
                })
                .collect(),
        )
        .unwrap();
        let a = fit(&data, FitOptions::default()).unwrap();
        let b = fit(&scaled, FitOptions::default()).unwrap();
        for (x, y) in a.xi_bar.iter().zip(&b.xi_bar) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        let theta = ThetaPoint::new(0.7, -1.1).unwrap();
        assert_abs_diff_eq!(
            b.predict_variance(theta),
            3.7 * 3.7 * a.predict_variance(theta),
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_boundary_is_interpolated() {
        let p = problem(2.0, 0.2);
        let data = mesh_data(|t| energy(&p, t), 0.1, 4);
        let model = fit(&data, FitOptions::default()).unwrap();
        assert_eq!(model.constraints.len(), 10);
        for s in data.samples().iter().filter(|s| s.exact) {
            assert_abs_diff_eq!(model.predict_mean(s.theta), s.value, epsilon = 1e-12);
            assert!(model.predict_variance(s.theta) <= 1e-12);
        }
        for k in 0..50 {
            let t1 = -PI + 2.0 * PI * k as f64 / 50.0;
            let theta = ThetaPoint::new(t1, 0.0).unwrap();
            assert_abs_diff_eq!(
                model.predict_mean(theta),
                exact_boundary_energy(t1, &p.hamiltonian),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn noiseless_landscapes_are_reproduced() {
        let p = problem(1.5, 0.2);
        for obs in crate::embedding::Observable::ALL {
            let sum = p.observable(obs).clone();
            let f = |t: ThetaPoint| sum.expectation(&statevector(t)).unwrap();
            let samples = training_mesh().into_iter().map(|t| Sample::noisy(t, f(t), 1.0)).collect();
            let model = fit_observable(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap();
            for t in general_points(100, 6) {
                assert_abs_diff_eq!(model.predict_mean(t), f(t), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn constant_observable() {
        let samples = training_mesh().into_iter().map(|t| Sample::noisy(t, 1.0, 0.2)).collect();
        let model = fit_observable(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap();
        for t in general_points(20, 7) {
            assert_abs_diff_eq!(model.predict_mean(t), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn prior_alone_predicts_zero() {
        let model = fit(&TrainingSet::default(), FitOptions::with_t(0.5)).unwrap();
        for t in general_points(10, 8) {
            assert_eq!(model.predict_mean(t), 0.0);
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let samples = training_mesh().into_iter().take(10).map(|t| Sample::noisy(t, 0.0, 0.1)).collect();
        let err = fit(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { needed: 25, .. }));
    }

    #[test]
    fn contradictory_exact_data_is_rejected() {
        let t = ThetaPoint::new(0.3, 0.0).unwrap();
        let data = TrainingSet::new(alloc::vec![Sample::exact(t, 1.0), Sample::exact(t, 2.0)]).unwrap();
        assert!(matches!(
            fit(&data, FitOptions::default()),
            Err(Error::InconsistentConstraints { .. })
        ));
    }

    #[test]
    fn sample_flags_are_validated() {
        let t = ThetaPoint::origin();
        assert!(TrainingSet::new(alloc::vec![Sample::noisy(t, 0.0, 0.0)]).is_err());
        assert!(TrainingSet::new(alloc::vec![Sample { sigma: 0.1, ..Sample::exact(t, 0.0) }]).is_err());
    }

    #[test]
    fn sigma_floor_mode_agrees_with_constraints() {
        let p = problem(1.0, 0.0);
        let data = mesh_data(|t| energy(&p, t), 0.1, 9);
        let a = fit(&data, FitOptions::default()).unwrap();
        let b = fit(
            &data,
            FitOptions {
                exact: ExactHandling::SigmaFloor(1e-8),
                ..FitOptions::default()
            },
        )
        .unwrap();
        for t in general_points(20, 10) {
            assert_abs_diff_eq!(a.predict_mean(t), b.predict_mean(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn mean_subtracted_variance_is_clamped() {
        let p = problem(1.0, 0.0);
        let data = mesh_data(|t| energy(&p, t), 0.1, 11);
        let subtracted = fit(
            &data,
            FitOptions {
                variance: VarianceFormula::MeanSubtracted,
                ..FitOptions::default()
            },
        )
        .unwrap();
        let theta = ThetaPoint::new(0.4, 1.2).unwrap();
        assert_eq!(subtracted.predict_variance(theta), 0.0);
    }

    #[test]
    fn coverage_of_two_sigma_band() {
        let p = problem(1.0, 0.0);
        let tests = general_points(200, 12);
        let mut inside = 0;
        for seed in 0..50 {
            let model = fit(&mesh_data(|t| energy(&p, t), 0.1, 100 + seed), FitOptions::default()).unwrap();
            for &t in &tests {
                let band = 2.0 * model.predict_variance(t).sqrt();
                if (model.predict_mean(t) - energy(&p, t)).abs() <= band {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 >= 0.9 * 200.0 * 50.0, "{inside}");
    }

    #[test]
    fn noise_averaging_is_linear_in_sigma() {
        let p = problem(1.0, 0.0);
        let reference = {
            let samples = training_mesh().into_iter().map(|t| Sample::noisy(t, energy(&p, t), 1.0)).collect();
            fit(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap().xi_bar
        };
        let rms = |sigma: f64| {
            let mut acc = 0.0;
            for seed in 0..100 {
                let m = fit(&mesh_data(|t| energy(&p, t), sigma, 500 + seed), FitOptions::default()).unwrap();
                acc += m.xi_bar.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            (acc / 100.0).sqrt()
        };
        let ratio = rms(0.2) / rms(0.1);
        assert!((ratio / 2.0 - 1.0).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn regularization_shrinks_coefficients() {
        let p = problem(1.0, 0.0);
        let data = mesh_data(|t| energy(&p, t), 0.1, 13);
        let free = fit(&data, FitOptions::default()).unwrap();
        let shrunk = fit(&data, FitOptions::with_t(10.0)).unwrap();
        let norm = |m: &SurrogateModel| {
            let x = DVector::from_column_slice(&m.xi_bar);
            (x.transpose() * gram_matrix().m * &x)[(0, 0)]
        };
        assert!(norm(&shrunk) < norm(&free));
    }

    #[test]
    fn boundary_values_match_the_mapped_hamiltonian() {
        let h = map_to_qubits(&EmbeddingParams::benchmark(1.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(exact_boundary_energy(0.0, &h), -0.75, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn more_data_never_increases_variance(extra_t1 in -PI..PI, extra_t2 in -PI..PI, sigma in 0.05f64..1.0, seed in 0u64..1000) {
            let p = problem(1.0, 0.0);
            let data = mesh_data(|t| energy(&p, t), 0.1, seed);
            let before = fit(&data, FitOptions::default()).unwrap();
            let mut more = data.clone();
            let extra = ThetaPoint::new(extra_t1, extra_t2).unwrap();
            more.push(Sample::noisy(extra, energy(&p, extra), sigma)).unwrap();
            let after = fit(&more, FitOptions::default()).unwrap();
            for t in general_points(30, seed) {
                prop_assert!(after.predict_variance(t) <= before.predict_variance(t) + 1e-12);
            }
        }

        #[test]
        fn exact_samples_are_always_reproduced(seed in 0u64..1000, u in 0.0f64..4.0) {
            let p = problem(u, 0.0);
            let data = mesh_data(|t| energy(&p, t), 0.2, seed);
            let model = fit(&data, FitOptions::default()).unwrap();
            for s in data.samples().iter().filter(|s| s.exact) {
                prop_assert!((model.predict_mean(s.theta) - s.value).abs() <= 1e-12);
            }
        }
    }
}
