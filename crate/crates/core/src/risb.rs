//! Slave-boson mean-field self-consistency for the half-filled Hubbard model
//! on the Bethe lattice, with the embedding Hamiltonian solved by a pluggable
//! solver.
//!
//! The root problem is posed over `x = (ℛ, λ)`. Bath parameters follow from
//! closed-form band integrals of the semicircular density of states at zero
//! temperature, with the quasiparticle dispersion `ℛ²ε + λ − μ`.

use core::f64::consts::PI;

use alloc::vec::Vec;
use nalgebra::{Matrix2, Vector2};

use crate::ansatz::ThetaPoint;
use crate::embedding::{exact_ground_state, EhProblem, EhSolution, EmbeddingParams};
use crate::error::{Error, Result};
use crate::optimize::{mitigated_pipeline, read_observables, sequential_1d, Objective, PipelineOptions};
use crate::vqe::BackendSpec;

// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;

/// Below this ℛ the solution is reported as insulating.
pub const INSULATING_R: f64 = 1e-6;

/// Critical interaction of the half-filled metallic solution, `8|ε̄|` with
/// `ε̄ = −4/(3π)`.
pub fn critical_u() -> f64 {
    32.0 / (3.0 * PI)
}

/// Closed-form quasiparticle weight of the metallic branch, 0 beyond `Uc`.
pub fn analytic_z(u: f64) -> f64 {
    let r = u / critical_u();
    if r >= 1.0 {
        0.0
    } else {
        1.0 - r * r
    }
}

pub fn analytic_docc(u: f64) -> f64 {
    let r = u / critical_u();
    if r >= 1.0 {
        0.0
    } else {
        0.25 * (1.0 - r)
    }
}

/// Band integrals `(∫ρ, ∫ερ)` from the lower band edge up to `x`.
pub fn dos_integrals(x: f64) -> Result<(f64, f64)> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfBand(x));
    }
    let s = (1.0 - x * x).max(0.0);
    let weight = 0.5 + (x * s.sqrt() + x.asin()) / PI;
    let kinetic = -(2.0 / (3.0 * PI)) * s * s.sqrt();
    Ok((weight, kinetic))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisbState {
    pub r: f64,
    pub lam: f64,
    pub d_hyb: f64,
    pub lambda_c: f64,
    pub mu: f64,
    /// Filling per spin.
    pub n: f64,
}

impl RisbState {
    pub fn z(&self) -> f64 {
        self.r * self.r
    }

    pub fn embedding_params(&self, u: f64) -> Result<EmbeddingParams> {
        EmbeddingParams::new(u, self.d_hyb, self.lambda_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub f1_res: f64,
    pub f2_res: f64,
}

impl Residual {
    pub fn norm_inf(&self) -> f64 {
        self.f1_res.abs().max(self.f2_res.abs())
    }

    fn vector(&self) -> Vector2<f64> {
        Vector2::new(self.f1_res, self.f2_res)
    }
}

/// Chemical potential, hybridization and bath level for given `(ℛ, λ, n)`.
pub fn compute_bath_params(r: f64, lam: f64, n: f64) -> Result<RisbState> {
    if !(n > 0.0 && n < 1.0) || r == 0.0 || !r.is_finite() || !lam.is_finite() {
        return Err(Error::BracketFailure { n });
    }
    let r2 = r * r;
    let occupation = |mu: f64| -> Result<f64> { Ok(dos_integrals(((mu - lam) / r2).clamp(-1.0, 1.0))?.0 - n) };
    let (mut lo, mut hi) = (lam - r2, lam + r2);
    if occupation(lo)? > 0.0 || occupation(hi)? < 0.0 {
        return Err(Error::BracketFailure { n });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if occupation(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    let (_, kinetic) = dos_integrals(((mu - lam) / r2).clamp(-1.0, 1.0))?;
    let root = (n * (1.0 - n)).sqrt();
    let d_hyb = r * kinetic / root;
    let lambda_c = -lam - 2.0 * d_hyb * r * (0.5 - n) / root;
    Ok(RisbState {
        r,
        lam,
        d_hyb,
        lambda_c,
        mu,
        n,
    })
}

/// Result of one embedding solve together with the measurement cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOutput {
    pub solution: EhSolution,
    /// Quantum evaluations spent (0 for classical solvers).
    pub evaluations: u64,
}

pub trait EhSolver: Sync {
    fn name(&self) -> &'static str;

    fn is_noisy(&self) -> bool;

    /// `repeat` selects an independent noise realization.
    fn solve(&self, params: &EmbeddingParams, repeat: u64) -> Result<SolverOutput>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdSolver;

impl EhSolver for EdSolver {
    fn name(&self) -> &'static str {
        "ed"
    }

    fn is_noisy(&self) -> bool {
        false
    }

    fn solve(&self, params: &EmbeddingParams, _repeat: u64) -> Result<SolverOutput> {
        Ok(SolverOutput {
            solution: exact_ground_state(params),
            evaluations: 0,
        })
    }
}

/// Surrogate-fit VQE: learn all four landscapes on the mesh, minimize the
/// energy surrogate, read observables at the minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSolver {
    pub backend: BackendSpec,
    pub options: PipelineOptions,
}

impl PipelineSolver {
    pub fn new(backend: BackendSpec) -> Self {
        Self {
            backend,
            options: PipelineOptions::default(),
        }
    }
}

impl EhSolver for PipelineSolver {
    fn name(&self) -> &'static str {
        "gpr"
    }

    fn is_noisy(&self) -> bool {
        self.backend.is_noisy()
    }

    fn solve(&self, params: &EmbeddingParams, repeat: u64) -> Result<SolverOutput> {
        let problem = EhProblem::new(*params)?;
        let backend = self.backend.instantiate(repeat);
        let result = mitigated_pipeline(&problem, &*backend, self.options)?;
        Ok(SolverOutput {
            solution: result.estimate,
            evaluations: result.measurements,
        })
    }
}

/// Sequential 1-D VQE on the energy, followed by one direct measurement of
/// each remaining observable at the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq1dSolver {
    pub backend: BackendSpec,
    pub iterations: usize,
}

impl Seq1dSolver {
    pub fn new(backend: BackendSpec) -> Self {
        Self { backend, iterations: 20 }
    }
}

impl EhSolver for Seq1dSolver {
    fn name(&self) -> &'static str {
        "seq1d"
    }

    fn is_noisy(&self) -> bool {
        self.backend.is_noisy()
    }

    fn solve(&self, params: &EmbeddingParams, repeat: u64) -> Result<SolverOutput> {
        let problem = EhProblem::new(*params)?;
        let backend = self.backend.instantiate(repeat);
        let mut obj = Objective::energy(&problem, &*backend);
        let opt = sequential_1d(&mut obj, ThetaPoint::origin(), self.iterations)?;
        let (solution, extra) = read_observables(&problem, &*backend, &opt)?;
        Ok(SolverOutput {
            solution,
            evaluations: opt.evals_used + extra,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOptions {
    pub n: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Solver calls averaged per residual evaluation.
    pub repeats: u64,
    /// Fraction of each quasi-Newton or fixed-point step taken.
    pub damping: f64,
    /// Consecutive iterations that must sit below `tol`.
    pub window: usize,
    /// Finite-difference step of the initial Jacobian.
    pub fd_step: f64,
    /// Gain of the fixed-point update `λ ← λ − β·F2`.
    pub beta: f64,
    pub x0: (f64, f64),
}

impl LoopOptions {
    pub fn exact() -> Self {
        Self {
            n: 0.5,
            tol: 1e-10,
            max_iter: 100,
            repeats: 1,
            damping: 1.0,
            window: 1,
            fd_step: 1e-6,
            beta: 0.5,
            x0: (1.0, 0.0),
        }
    }

    pub fn noisy() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 60,
            repeats: 3,
            damping: 0.5,
            window: 3,
            fd_step: 1e-3,
            ..Self::exact()
        }
    }

    pub fn for_solver(solver: &dyn EhSolver) -> Self {
        if solver.is_noisy() {
            Self::noisy()
        } else {
            Self::exact()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.tol > 0.0) {
            return bad("tol", "must be positive");
        }
        if !(self.n > 0.0 && self.n < 1.0) {
            return bad("n", "must lie in (0, 1)");
        }
        if self.repeats == 0 || self.window == 0 || self.max_iter == 0 {
            return bad("max_iter", "iteration counts must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping", "must lie in (0, 1]");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopStatus {
    Converged,
    Insulating,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisbResult {
    pub u: f64,
    pub state: RisbState,
    pub solution: EhSolution,
    pub z: f64,
    pub docc: f64,
    pub residual: Residual,
    pub status: LoopStatus,
    pub iterations: usize,
    /// Embedding solver invocations, repeats included.
    pub solver_calls: u64,
    pub evaluations: u64,
    /// `‖F‖∞` after each accepted iterate.
    pub history: Vec<f64>,
}

impl RisbResult {
    pub fn converged(&self) -> bool {
        self.status != LoopStatus::NotConverged
    }
}

/// Residual of the two self-consistency conditions at `x = (ℛ, λ)`.
pub fn residual(x: (f64, f64), n: f64, u: f64, solver: &dyn EhSolver) -> Result<Residual> {
    Ok(evaluate(x, n, u, solver, 1)?.residual)
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    state: RisbState,
    solution: EhSolution,
    residual: Residual,
    evaluations: u64,
}

fn evaluate(x: (f64, f64), n: f64, u: f64, solver: &dyn EhSolver, repeats: u64) -> Result<Evaluation> {
    let state = compute_bath_params(x.0, x.1, n)?;
    let params = state.embedding_params(u)?;
    let mut sum = EhSolution {
        energy: 0.0,
        docc: 0.0,
        f1: 0.0,
        f2: 0.0,
    };
    let mut evaluations = 0;
    for k in 0..repeats {
        let out = solver.solve(&params, k)?;
        sum.energy += out.solution.energy;
        sum.docc += out.solution.docc;
        sum.f1 += out.solution.f1;
        sum.f2 += out.solution.f2;
        evaluations += out.evaluations;
    }
    let k = repeats as f64;
    let solution = EhSolution {
        energy: sum.energy / k,
        docc: sum.docc / k,
        f1: sum.f1 / k,
        f2: sum.f2 / k,
    };
    let residual = Residual {
        f1_res: solution.f1 - x.0 * (n * (1.0 - n)).sqrt(),
        f2_res: solution.f2 - n,
    };
    Ok(Evaluation {
        state,
        solution,
        residual,
        evaluations,
    })
}

/// Broyden root solve over `(ℛ, λ)` with a damped fixed-point fallback.
/// Exhausting `max_iter` is not an error: the best iterate is returned with
/// [`LoopStatus::NotConverged`].
pub fn solve_self_consistency(u: f64, solver: &dyn EhSolver, options: &LoopOptions) -> Result<RisbResult> {
    options.validate()?;
    let n = options.n;
    let root = (n * (1.0 - n)).sqrt();
    let mut calls = 0u64;
    let mut evaluations = 0u64;
    let mut eval = |x: (f64, f64)| -> Result<Evaluation> {
        calls += options.repeats;
        let e = evaluate(x, n, u, solver, options.repeats)?;
        evaluations += e.evaluations;
        Ok(e)
    };

    let mut x = Vector2::new(options.x0.0, options.x0.1);
    let mut current = eval((x[0], x[1]))?;
    let mut jac = Matrix2::zeros();
    for j in 0..2 {
        let mut xp = x;
        xp[j] += options.fd_step;
        let e = eval((xp[0], xp[1]))?;
        jac.set_column(j, &((e.residual.vector() - current.residual.vector()) / options.fd_step));
    }

    let mut best = current;
    let mut history = Vec::with_capacity(options.max_iter + 1);
    history.push(current.residual.norm_inf());
    let mut status = LoopStatus::NotConverged;
    let mut iterations = 0;

    let below = |h: &[f64]| h.len() >= options.window && h[h.len() - options.window..].iter().all(|&r| r < options.tol);
    while iterations < options.max_iter {
        if below(&history) {
            status = LoopStatus::Converged;
            break;
        }
        if x[0] < INSULATING_R {
            status = LoopStatus::Insulating;
            break;
        }
        iterations += 1;
        let f = current.residual.vector();

        let fixed_point = |e: &Evaluation, x: &Vector2<f64>| {
            let target = Vector2::new(e.solution.f1 / root, x[1] - options.beta * e.residual.f2_res);
            x + options.damping * (target - x)
        };

        let newton = jac.try_inverse().map(|inv| x - options.damping * (inv * f));
        let mut next = None;
        if let Some(xn) = newton.filter(|v| v.iter().all(|c| c.is_finite())) {
            let xn = keep_positive(xn, x);
            if let Ok(e) = eval((xn[0], xn[1])) {
                if e.residual.norm_inf() <= 2.0 * current.residual.norm_inf() + options.tol {
                    next = Some((xn, e));
                }
            }
        }
        let (xn, e) = match next {
            Some(v) => v,
            None => {
                let xn = keep_positive(fixed_point(&current, &x), x);
                (xn, eval((xn[0], xn[1]))?)
            }
        };

        let dx = xn - x;
        let df = e.residual.vector() - f;
        let denom = dx.dot(&dx);
        if denom > 0.0 {
            jac += (df - jac * dx) * dx.transpose() / denom;
        }
        x = xn;
        current = e;
        if current.residual.norm_inf() < best.residual.norm_inf() {
            best = current;
        }
        history.push(current.residual.norm_inf());
    }
    if status == LoopStatus::NotConverged && below(&history) {
        status = LoopStatus::Converged;
    }

    let (pick, z, docc) = match status {
        LoopStatus::Converged => (current, current.state.z(), current.solution.docc),
        LoopStatus::Insulating => (current, 0.0, current.solution.docc),
        LoopStatus::NotConverged => (best, best.state.z(), best.solution.docc),
    };
    Ok(RisbResult {
        u,
        state: pick.state,
        solution: pick.solution,
        z,
        docc,
        residual: pick.residual,
        status,
        iterations,
        solver_calls: calls,
        evaluations,
        history,
    })
}

/// Steps that would cross ℛ = 0 are halved toward it instead.
fn keep_positive(mut xn: Vector2<f64>, x: Vector2<f64>) -> Vector2<f64> {
    if xn[0] <= 0.0 {
        xn[0] = 0.5 * x[0];
    }
    xn
}

/// `Σ(ω) = −ω(1−Z)/Z + λ/Z` on the given grid.
pub fn self_energy(r: f64, lam: f64, omega_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let z = r * r;
    if !(z > 0.0) {
        return Err(Error::ZeroQuasiparticleWeight);
    }
    Ok(omega_grid.iter().map(|&w| (w, -w * (1.0 - z) / z + lam / z)).collect())
}
