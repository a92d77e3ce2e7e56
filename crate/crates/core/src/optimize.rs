//! Minimization strategies over the two ansatz angles: classical descent on
//! a fitted surrogate, sequential 1-D trigonometric fits, and a linear
//! trust-region derivative-free baseline. All three drive an [`Objective`]
//! that counts evaluations.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::ansatz::{boundary_expectation, expansion_jet, wrap_angle, ThetaPoint};
use crate::embedding::{EhProblem, EhSolution, Observable};
use crate::error::{Error, Result};
use crate::surrogate::{fit_observable, training_mesh, FitOptions, Sample, SurrogateModel, TrainingSet};
use crate::vqe::{Backend, Measurement};

type EvalFn<'a> = Box<dyn FnMut(ThetaPoint, u64) -> Result<Measurement> + 'a>;
type ExactHook<'a> = Box<dyn Fn(ThetaPoint) -> Option<f64> + 'a>;

/// A noisy scalar function of `θ` with evaluation accounting. The second
/// argument handed to the evaluator is the running evaluation index.
pub struct Objective<'a> {
    evaluator: EvalFn<'a>,
    exact: Option<ExactHook<'a>>,
    eval_count: u64,
    budget: Option<u64>,
    trace: Vec<(ThetaPoint, f64)>,
}

impl<'a> Objective<'a> {
    pub fn from_fn(f: impl FnMut(ThetaPoint, u64) -> Result<Measurement> + 'a) -> Self {
        Self {
            evaluator: Box::new(f),
            exact: None,
            eval_count: 0,
            budget: None,
            trace: Vec::new(),
        }
    }

    /// Energy of `problem` measured by `backend`; points on `θ₂ = 0` are
    /// available exactly through [`Objective::exact_value`].
    pub fn energy(problem: &'a EhProblem, backend: &'a dyn Backend) -> Self {
        Self::from_fn(move |theta, draw| backend.measure(problem, Observable::Energy, theta, draw))
            .with_exact_hook(move |theta| {
                (theta.theta2 == 0.0).then(|| {
                    boundary_expectation(theta.theta1, &problem.hamiltonian.sum).expect("two-qubit sum")
                })
            })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_exact_hook(mut self, hook: impl Fn(ThetaPoint) -> Option<f64> + 'a) -> Self {
        self.exact = Some(Box::new(hook));
        self
    }

    pub fn evaluate(&mut self, theta: ThetaPoint) -> Result<Measurement> {
        if let Some(budget) = self.budget {
            if self.eval_count >= budget {
                return Err(Error::BudgetExhausted { budget });
            }
        }
        let draw = self.eval_count;
        self.eval_count += 1;
        let m = (self.evaluator)(theta, draw)?;
        self.trace.push((theta, m.value));
        Ok(m)
    }

    /// Free exact value where one is classically computable.
    pub fn exact_value(&self, theta: ThetaPoint) -> Option<f64> {
        self.exact.as_ref().and_then(|h| h(theta))
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn trace(&self) -> &[(ThetaPoint, f64)] {
        &self.trace
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub theta_star: ThetaPoint,
    pub value: f64,
    pub evals_used: u64,
    pub trace: Vec<(ThetaPoint, f64)>,
}

const SEED_GRID: usize = 20;
const TIE_TOLERANCE: f64 = 1e-10;

/// Damped Newton descent on `Σ ξ_s T_s` from `x`.
fn descend(xi: &[f64], mut x: [f64; 2]) -> ([f64; 2], f64) {
    let (mut v, mut g, mut h) = expansion_jet(xi, x[0], x[1]);
    for _ in 0..200 {
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let det = h[0] * h[2] - h[1] * h[1];
        let newton = h[0] > 0.0 && det > 0.0;
        let mut step = if newton {
            [-(h[2] * g[0] - h[1] * g[1]) / det, -(h[0] * g[1] - h[1] * g[0]) / det]
        } else {
            [-g[0], -g[1]]
        };
        let length = (step[0] * step[0] + step[1] * step[1]).sqrt();
        if length > 1.0 {
            step = [step[0] / length, step[1] / length];
        }
        let slope = step[0] * g[0] + step[1] * g[1];
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = [x[0] + alpha * step[0], x[1] + alpha * step[1]];
            let (tv, tg, th) = expansion_jet(xi, trial[0], trial[1]);
            if tv <= v + 1e-4 * alpha * slope || (newton && alpha == 1.0 && tv <= v) {
                x = trial;
                v = tv;
                g = tg;
                h = th;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || alpha * length.min(1.0) < 1e-13 {
            break;
        }
    }
    (x, v)
}

/// Global minimum of an expansion by multi-start descent from a 20×20 grid.
/// Ties within 1e-10 go to the point nearest the origin, then to the
/// lexicographically smallest `(θ₁, θ₂)`.
pub fn minimize_expansion(xi: &[f64]) -> (ThetaPoint, f64) {
    let mut candidates = Vec::with_capacity(SEED_GRID * SEED_GRID);
    for a in 0..SEED_GRID {
        for b in 0..SEED_GRID {
            let seed = [
                -PI + 2.0 * PI * a as f64 / SEED_GRID as f64,
                -PI + 2.0 * PI * b as f64 / SEED_GRID as f64,
            ];
            let (x, v) = descend(xi, seed);
            candidates.push((ThetaPoint::wrapped(x[0], x[1]), v));
        }
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .filter(|c| c.1 <= best + TIE_TOLERANCE)
        .min_by(|p, q| {
            let radius = |t: &ThetaPoint| t.theta1 * t.theta1 + t.theta2 * t.theta2;
            let (rp, rq) = (radius(&p.0), radius(&q.0));
            let by_radius = if (rp - rq).abs() <= 1e-6 {
                core::cmp::Ordering::Equal
            } else {
                rp.total_cmp(&rq)
            };
            by_radius
                .then(p.0.theta1.total_cmp(&q.0.theta1))
                .then(p.0.theta2.total_cmp(&q.0.theta2))
        })
        .expect("nonempty seed grid")
}

/// Classical minimization of the surrogate mean; charges no evaluations.
pub fn minimize_surrogate(model: &SurrogateModel) -> OptimizationResult {
    let (theta_star, value) = minimize_expansion(&model.xi_bar);
    OptimizationResult {
        theta_star,
        value,
        evals_used: 0,
        trace: alloc::vec![(theta_star, value)],
    }
}

/// Offsets of the four new samples per 1-D update. Together with the current
/// point they are equispaced over the period.
pub const LINE_OFFSETS: [f64; 4] = [-4.0 * PI / 5.0, -2.0 * PI / 5.0, 2.0 * PI / 5.0, 4.0 * PI / 5.0];

/// `a + b cos x + c sin x + d cos 2x + e sin 2x`, the same span as
/// `Σ_i c_i cos^i(x/2) sin^(4−i)(x/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    pub coefficients: [f64; 5],
}

impl LineModel {
    fn features(x: f64) -> [f64; 5] {
        let (s, c) = x.sin_cos();
        let (s2, c2) = (2.0 * x).sin_cos();
        [1.0, c, s, c2, s2]
    }

    pub fn fit(nodes: &[f64; 5], values: &[f64; 5]) -> Option<Self> {
        let a = DMatrix::from_fn(5, 5, |r, c| Self::features(nodes[r])[c]);
        let svd = crate::linalg::svd(a);
        let values_s: Vec<f64> = svd.singular_values.iter().copied().collect();
        if crate::linalg::condition_number(&values_s) > 1e8 {
            return None;
        }
        let x = svd.solve(&DVector::from_column_slice(values), 0.0).ok()?;
        Some(Self {
            coefficients: [x[0], x[1], x[2], x[3], x[4]],
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        Self::features(x).iter().zip(&self.coefficients).map(|(f, c)| f * c).sum()
    }

    fn derivatives(&self, x: f64) -> (f64, f64) {
        let [_, b, c, d, e] = self.coefficients;
        let (s, co) = x.sin_cos();
        let (s2, c2) = (2.0 * x).sin_cos();
        (
            -b * s + c * co - 2.0 * d * s2 + 2.0 * e * c2,
            -b * co - c * s - 4.0 * d * c2 - 4.0 * e * s2,
        )
    }

    /// Critical points from the quartic in `t = tan(x/2)`, plus `x = π`.
    pub fn critical_points(&self) -> Vec<f64> {
        let [_, b, c, d, e] = self.coefficients;
        // coefficients of t⁰ … t⁴
        let poly = [c + 2.0 * e, -2.0 * b - 8.0 * d, -12.0 * e, -2.0 * b + 8.0 * d, -c + 2.0 * e];
        let scale = poly.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut points = alloc::vec![PI];
        if scale == 0.0 {
            return points;
        }
        let degree = (0..5).rev().find(|&k| poly[k].abs() > 1e-14 * scale).unwrap_or(0);
        if degree >= 1 {
            let lead = poly[degree];
            let companion = DMatrix::from_fn(degree, degree, |r, col| {
                if r == 0 {
                    -poly[degree - 1 - col] / lead
                } else if col + 1 == r {
                    1.0
                } else {
                    0.0
                }
            });
            for z in companion.complex_eigenvalues().iter() {
                if z.im.abs() <= 1e-6 * (1.0 + z.re.abs()) {
                    points.push(2.0 * z.re.atan());
                }
            }
        }
        points
            .into_iter()
            .map(|mut x| {
                for _ in 0..8 {
                    let (d1, d2) = self.derivatives(x);
                    if d2.abs() < 1e-300 {
                        break;
                    }
                    let dx = d1 / d2;
                    if !dx.is_finite() || dx.abs() > 0.5 {
                        break;
                    }
                    x -= dx;
                }
                wrap_angle(x)
            })
            .collect()
    }

    /// Global minimizer; `current` wins ties so a flat model does not move.
    pub fn minimize(&self, current: f64) -> (f64, f64) {
        let mut best = (current, self.value(current));
        for x in self.critical_points() {
            let v = self.value(x);
            if v < best.1 - 1e-12 {
                best = (x, v);
            }
        }
        best
    }
}

fn with_angle(theta: [f64; 2], p: usize, x: f64) -> ThetaPoint {
    let mut t = theta;
    t[p] = x;
    ThetaPoint::wrapped(t[0], t[1])
}

/// Coordinate-wise exact minimization of fitted 1-D trigonometric models,
/// four new evaluations per parameter update. The value at `theta0` comes
/// from the objective's exact hook when available, otherwise one extra
/// evaluation is spent.
pub fn sequential_1d(obj: &mut Objective<'_>, theta0: ThetaPoint, iterations: usize) -> Result<OptimizationResult> {
    if iterations == 0 {
        return Err(Error::InvalidParameter {
            name: "iterations",
            reason: "must be at least 1",
        });
    }
    let mut theta = theta0.as_array();
    let mut current = match obj.exact_value(theta0) {
        Some(v) => v,
        None => obj.evaluate(theta0)?.value,
    };
    for _ in 0..iterations {
        for p in 0..2 {
            let x0 = theta[p];
            let mut model = None;
            for shift in [0.0, PI / 5.0] {
                let mut nodes = [x0; 5];
                let mut values = [current; 5];
                for (k, off) in LINE_OFFSETS.iter().enumerate() {
                    nodes[k + 1] = x0 + off + shift;
                    values[k + 1] = obj.evaluate(with_angle(theta, p, nodes[k + 1]))?.value;
                }
                model = LineModel::fit(&nodes, &values);
                if model.is_some() {
                    break;
                }
            }
            let model = model.ok_or(Error::SingularLineFit { angle: x0 })?;
            let (x, v) = model.minimize(x0);
            theta[p] = wrap_angle(x);
            current = v;
        }
    }
    Ok(OptimizationResult {
        theta_star: ThetaPoint::wrapped(theta[0], theta[1]),
        value: current,
        evals_used: obj.eval_count(),
        trace: obj.trace().to_vec(),
    })
}

/// Linear-model trust-region search in the style of COBYLA: a 3-point
/// simplex defines a linear model, each iteration spends exactly one
/// evaluation on a trust-region step or a geometry repair, and the incumbent
/// is the best value seen.
pub fn derivative_free_baseline(
    obj: &mut Objective<'_>,
    theta0: ThetaPoint,
    max_evals: u64,
) -> Result<OptimizationResult> {
    if max_evals < 3 {
        return Err(Error::InvalidParameter {
            name: "max_evals",
            reason: "needs at least 3 evaluations",
        });
    }
    let start = obj.eval_count();
    let mut rho = 0.5;
    let x0 = theta0.as_array();
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    for x in [x0, [x0[0] + rho, x0[1]], [x0[0], x0[1] + rho]] {
        let t = ThetaPoint::wrapped(x[0], x[1]);
        simplex.push((t.as_array(), obj.evaluate(t)?.value));
    }
    while obj.eval_count() - start < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, fb) = simplex[0];
        let d1 = [simplex[1].0[0] - best[0], simplex[1].0[1] - best[1]];
        let d2 = [simplex[2].0[0] - best[0], simplex[2].0[1] - best[1]];
        let det = d1[0] * d2[1] - d1[1] * d2[0];
        let repair = det.abs() < 0.05 * rho * rho;
        let trial = if repair {
            // Geometry repair: restore a vertex perpendicular to the other.
            let n = (d1[0] * d1[0] + d1[1] * d1[1]).sqrt().max(1e-300);
            [best[0] - rho * d1[1] / n, best[1] + rho * d1[0] / n]
        } else {
            let df = [simplex[1].1 - fb, simplex[2].1 - fb];
            let g = [(df[0] * d2[1] - df[1] * d1[1]) / det, (d1[0] * df[1] - d2[0] * df[0]) / det];
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gn < 1e-300 {
                rho *= 0.5;
                [best[0] + rho, best[1]]
            } else {
                [best[0] - rho * g[0] / gn, best[1] - rho * g[1] / gn]
            }
        };
        let t = ThetaPoint::wrapped(trial[0], trial[1]);
        let ft = obj.evaluate(t)?.value;
        if repair || ft < fb {
            simplex[2] = (t.as_array(), ft);
        } else {
            if ft < simplex[2].1 {
                simplex[2] = (t.as_array(), ft);
            }
            rho *= 0.5;
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, value) = simplex[0];
    Ok(OptimizationResult {
        theta_star: ThetaPoint::wrapped(best[0], best[1]),
        value,
        evals_used: obj.eval_count() - start,
        trace: obj.trace().to_vec(),
    })
}

/// Uncertainty attached to noisy training samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPolicy {
    /// The backend's nominal value for every noisy point.
    Nominal,
    /// The backend's per-measurement estimate, falling back to nominal.
    Reported,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub fit: FitOptions,
    pub sigma: SigmaPolicy,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            sigma: SigmaPolicy::Nominal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub optimum: OptimizationResult,
    pub estimate: EhSolution,
    /// Indexed by [`Observable::index`].
    pub models: Vec<SurrogateModel>,
    pub training: Vec<TrainingSet>,
    /// Number of noisy measurements spent (all observables).
    pub measurements: u64,
}

/// Mesh data for one observable: boundary points exact, the rest measured
/// with draw index equal to the mesh index.
pub fn collect_training(
    problem: &EhProblem,
    backend: &dyn Backend,
    observable: Observable,
    mesh: &[ThetaPoint],
    policy: SigmaPolicy,
) -> Result<TrainingSet> {
    let nominal = backend.nominal_sigma(problem);
    let sum = problem.observable(observable);
    let mut samples = Vec::with_capacity(mesh.len());
    for (k, &theta) in mesh.iter().enumerate() {
        if theta.theta2 == 0.0 {
            samples.push(Sample::exact(theta, boundary_expectation(theta.theta1, sum)?));
        } else {
            let m = backend.measure(problem, observable, theta, k as u64)?;
            let sigma = match policy {
                SigmaPolicy::Reported if m.sigma > 0.0 => m.sigma,
                _ => nominal,
            };
            samples.push(Sample::noisy(theta, m.value, sigma));
        }
    }
    TrainingSet::new(samples)
}

/// Fit energy and observable landscapes on `mesh`, minimize the energy
/// surrogate, and read every observable off its surrogate at `θ*`.
pub fn mitigated_pipeline_on(
    problem: &EhProblem,
    backend: &dyn Backend,
    mesh: &[ThetaPoint],
    options: PipelineOptions,
) -> Result<PipelineResult> {
    let mut models = Vec::with_capacity(4);
    let mut training = Vec::with_capacity(4);
    for obs in Observable::ALL {
        let data = collect_training(problem, backend, obs, mesh, options.sigma)?;
        models.push(fit_observable(&data, options.fit)?);
        training.push(data);
    }
    let optimum = minimize_surrogate(&models[Observable::Energy.index()]);
    let at = |o: Observable| models[o.index()].predict_mean(optimum.theta_star);
    let estimate = EhSolution {
        energy: optimum.value,
        docc: at(Observable::DoubleOccupancy),
        f1: at(Observable::F1),
        f2: at(Observable::F2),
    };
    let measurements = training
        .iter()
        .map(|t| t.samples().iter().filter(|s| !s.exact).count() as u64)
        .sum();
    Ok(PipelineResult {
        optimum,
        estimate,
        models,
        training,
        measurements,
    })
}

/// [`mitigated_pipeline_on`] over the default 10×10 mesh.
pub fn mitigated_pipeline(problem: &EhProblem, backend: &dyn Backend, options: PipelineOptions) -> Result<PipelineResult> {
    mitigated_pipeline_on(problem, backend, &training_mesh(), options)
}

/// Draw index of post-optimization observable reads, clear of the indices
/// spent by the optimizers.
pub const OBSERVABLE_DRAW: u64 = 1 << 20;

/// Observables at a direct optimizer's `θ*`: the energy is the optimizer's
/// own estimate, the others are one measurement each (exact on the
/// `θ₂ = 0` line). Returns the number of measurements spent.
pub fn read_observables(problem: &EhProblem, backend: &dyn Backend, opt: &OptimizationResult) -> Result<(EhSolution, u64)> {
    let theta = opt.theta_star;
    let mut spent = 0;
    let mut read = |o: Observable| -> Result<f64> {
        if theta.theta2 == 0.0 {
            return boundary_expectation(theta.theta1, problem.observable(o));
        }
        spent += 1;
        Ok(backend.measure(problem, o, theta, OBSERVABLE_DRAW)?.value)
    };
    let solution = EhSolution {
        energy: opt.value,
        docc: read(Observable::DoubleOccupancy)?,
        f1: read(Observable::F1)?,
        f2: read(Observable::F2)?,
    };
    Ok((solution, spent))
}

/// Least-squares slope helper for convergence-rate checks.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let a = DMatrix::from_fn(x.len(), 2, |r, c| if c == 0 { 1.0 } else { x[r] });
    let b = DVector::from_column_slice(y);
    let s = crate::linalg::svd(a).solve(&b, 0.0).expect("requested");
    (s[0], s[1])
}
