//! The four experiment drivers. Work items run on the rayon pool; rows are
//! assembled in a fixed order, so output bytes depend only on the config.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use pgpr_core::ansatz::ThetaPoint;
use pgpr_core::embedding::{exact_ground_state, EhProblem, EhSolution, EmbeddingParams, Observable};
use pgpr_core::optimize::{
    derivative_free_baseline, mitigated_pipeline, read_observables, sequential_1d, Objective, PipelineOptions,
};
use pgpr_core::pauli::ps;
use pgpr_core::risb::{
    analytic_docc, analytic_z, self_energy, solve_self_consistency, EdSolver, EhSolver, LoopOptions, LoopStatus,
    PipelineSolver, RisbResult, Seq1dSolver,
};
use pgpr_core::rng::stream;
use pgpr_core::simulator::{
    calibrate_readout, calibration_counts, measure_pauli, Calibration, DensityMatrix, NoiseModel, ReadoutError, Shots,
};
use pgpr_core::surrogate::{FitOptions, VarianceFormula};
use pgpr_core::vqe::{exact_expectation, BackendSpec, CircuitBackend};
use rayon::prelude::*;

use crate::config::{Mode, NoiseKind, OptimizerKind, RunConfig, SolverKind};
use crate::error::CliError;
use crate::formats::{
    circuit_dump, counts_table, model_to_text, write_text, zeta_header, zeta_row, ZETA_UNITS,
};
use crate::svg::{Plot, Series};
use crate::table::{num, Table};

/// Stream label reserved for readout calibration draws.
const CALIBRATION_STREAM: u64 = 0xCA1;
const ENERGY_UNITS: &str = "energy, U, lambda_c in units of 2D (D = 0.5); angles in radians; docc, f1, f2 dimensionless";

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Self-consistency runs flagged as not converged.
    pub not_converged: usize,
}

impl Outcome {
    fn table(&mut self, dir: &Path, name: &str, table: &Table) -> Result<(), CliError> {
        let path = dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        write_text(&path, text)?;
        self.files.push(path);
        Ok(())
    }

    fn plot(&mut self, cfg: &RunConfig, name: &str, plot: Plot) -> Result<(), CliError> {
        if cfg.plots {
            self.text(&cfg.output_dir, name, &plot.render())?;
        }
        Ok(())
    }
}

/// Runs the subcommand selected by `cfg.mode`.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(CliError::io(&cfg.output_dir))?;
    let mut out = Outcome::default();
    out.text(&cfg.output_dir, "run_config.txt", &cfg.to_string())?;
    match cfg.mode {
        Mode::EhScan => eh_scan(cfg, &mut out)?,
        Mode::RisbScan => risb_scan(cfg, &mut out)?,
        Mode::Landscape => landscape(cfg, &mut out)?,
        Mode::Calibrate => calibrate(cfg, &mut out)?,
    }
    Ok(out)
}

/// Restricts a config to the noiseless reference computations.
pub fn exact_only(cfg: &mut RunConfig) {
    cfg.noise = NoiseKind::None;
    cfg.optimizers = vec![OptimizerKind::Exact];
    cfg.solvers = vec![SolverKind::Ed];
    cfg.shots = Shots::Infinite;
    cfg.readout = 0.0;
}

pub fn noise_model(cfg: &RunConfig) -> NoiseModel {
    NoiseModel {
        p1: cfg.p1,
        p2: cfg.p2,
        gamma: cfg.gamma,
        readout: if cfg.readout > 0.0 {
            vec![ReadoutError::symmetric(cfg.readout); 2]
        } else {
            Vec::new()
        },
        shots: cfg.shots,
    }
}

fn calibration(cfg: &RunConfig, noise: &NoiseModel, seed: u64) -> Result<Calibration, CliError> {
    let mut rng = stream(seed, &[CALIBRATION_STREAM]);
    Ok(calibrate_readout(2, noise, Shots::Finite(cfg.calibration_shots), &mut rng)?)
}

pub fn backend_spec(cfg: &RunConfig, seed: u64) -> Result<BackendSpec, CliError> {
    Ok(match cfg.noise {
        NoiseKind::None => BackendSpec::Exact,
        NoiseKind::Gaussian => BackendSpec::Gaussian {
            seed,
            relative_sigma: cfg.sigma_alpha,
        },
        NoiseKind::Circuit => {
            let noise = noise_model(cfg);
            let cal = if cfg.mitigate {
                Some(calibration(cfg, &noise, seed)?)
            } else {
                None
            };
            let mut spec = BackendSpec::circuit(noise, cal, seed)?;
            if let BackendSpec::Circuit { relative_sigma, .. } = &mut spec {
                *relative_sigma = cfg.sigma_alpha;
            }
            spec
        }
    })
}

pub fn pipeline_options(cfg: &RunConfig) -> PipelineOptions {
    PipelineOptions {
        fit: FitOptions {
            t: cfg.prior_t,
            exact: cfg.exact_handling,
            variance: VarianceFormula::Posterior,
        },
        sigma: cfg.sigma_policy,
    }
}

fn problem(cfg: &RunConfig, u: f64) -> Result<(EmbeddingParams, EhProblem), CliError> {
    let params = EmbeddingParams::benchmark(u, cfg.lambda_c)?;
    Ok((params, EhProblem::new(params)?))
}

/// One (U, optimizer, seed) record of eh-scan.
#[derive(Debug, Clone, PartialEq)]
pub struct EhRow {
    pub u_index: usize,
    pub u: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub estimate: EhSolution,
    pub exact: EhSolution,
    pub theta: Option<ThetaPoint>,
    /// Noisy energy evaluations.
    pub evaluations: u64,
    /// Energy values taken from the exactly known θ₂ = 0 line.
    pub exact_points: u64,
    pub trace: Vec<(ThetaPoint, f64)>,
}

pub fn eh_job(cfg: &RunConfig, u_index: usize, seed: u64) -> Result<Vec<EhRow>, CliError> {
    let u = cfg.u_grid[u_index];
    let (params, problem) = problem(cfg, u)?;
    let exact = exact_ground_state(&params);
    let spec = backend_spec(cfg, seed)?;
    let backend = spec.instantiate(0);
    let mut rows = Vec::with_capacity(cfg.optimizers.len());
    for &optimizer in &cfg.optimizers {
        let row = |estimate, theta, evaluations, exact_points, trace| EhRow {
            u_index,
            u,
            optimizer,
            seed,
            estimate,
            exact,
            theta,
            evaluations,
            exact_points,
            trace,
        };
        rows.push(match optimizer {
            OptimizerKind::Exact => row(exact, None, 0, 0, Vec::new()),
            OptimizerKind::Gpr => {
                let r = mitigated_pipeline(&problem, &*backend, pipeline_options(cfg))?;
                let energy = r.training[Observable::Energy.index()].samples();
                let noisy = energy.iter().filter(|s| !s.exact).count() as u64;
                let exact_points = energy.len() as u64 - noisy;
                row(r.estimate, Some(r.optimum.theta_star), noisy, exact_points, Vec::new())
            }
            OptimizerKind::Seq1d => {
                let mut obj = Objective::energy(&problem, &*backend);
                let opt = sequential_1d(&mut obj, ThetaPoint::origin(), cfg.seq1d_iterations)?;
                let (sol, _) = read_observables(&problem, &*backend, &opt)?;
                row(sol, Some(opt.theta_star), opt.evals_used, 1, opt.trace)
            }
            OptimizerKind::Baseline => {
                let mut obj = Objective::energy(&problem, &*backend);
                let opt = derivative_free_baseline(&mut obj, ThetaPoint::origin(), cfg.baseline_evals)?;
                let (sol, _) = read_observables(&problem, &*backend, &opt)?;
                row(sol, Some(opt.theta_star), opt.evals_used, 0, opt.trace)
            }
        });
    }
    Ok(rows)
}

pub fn eh_rows(cfg: &RunConfig) -> Result<Vec<EhRow>, CliError> {
    let jobs: Vec<(usize, u64)> = (0..cfg.u_grid.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let nested = jobs
        .par_iter()
        .map(|&(i, s)| eh_job(cfg, i, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows: Vec<EhRow> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.u_index, r.optimizer));
    Ok(rows)
}

fn errors(r: &EhRow) -> [f64; 4] {
    [
        r.estimate.energy - r.exact.energy,
        r.estimate.docc - r.exact.docc,
        r.estimate.f1 - r.exact.f1,
        r.estimate.f2 - r.exact.f2,
    ]
}

/// Mean absolute errors `(energy, docc, f1, f2)` per `(U index, optimizer)`.
pub fn eh_summary(rows: &[EhRow]) -> Vec<(usize, f64, OptimizerKind, usize, [f64; 4], f64)> {
    let mut out: Vec<(usize, f64, OptimizerKind, usize, [f64; 4], f64)> = Vec::new();
    for r in rows {
        let e = errors(r);
        match out.last_mut() {
            Some(last) if last.0 == r.u_index && last.2 == r.optimizer => {
                last.3 += 1;
                for k in 0..4 {
                    last.4[k] += e[k].abs();
                }
                last.5 += r.evaluations as f64;
            }
            _ => out.push((r.u_index, r.u, r.optimizer, 1, e.map(f64::abs), r.evaluations as f64)),
        }
    }
    for s in &mut out {
        let n = s.3 as f64;
        s.4.iter_mut().for_each(|x| *x /= n);
        s.5 /= n;
    }
    out
}

fn eh_scan(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let rows = eh_rows(cfg)?;
    let dir = &cfg.output_dir;

    let mut t = Table::new(
        ENERGY_UNITS,
        &[
            "u", "lambda_c", "optimizer", "seed", "energy", "docc", "f1", "f2", "energy_exact", "docc_exact", "f1_exact",
            "f2_exact", "err_energy", "err_docc", "err_f1", "err_f2", "theta1", "theta2", "evaluations", "exact_points",
        ],
    );
    for r in &rows {
        let e = errors(r);
        let (t1, t2) = r.theta.map_or((String::new(), String::new()), |t| (num(t.theta1), num(t.theta2)));
        let mut row = vec![num(r.u), num(cfg.lambda_c), r.optimizer.name().into(), r.seed.to_string()];
        for s in [r.estimate, r.exact] {
            row.extend([num(s.energy), num(s.docc), num(s.f1), num(s.f2)]);
        }
        row.extend(e.iter().map(|&x| num(x)));
        row.extend([t1, t2, r.evaluations.to_string(), r.exact_points.to_string()]);
        t.push(row);
    }
    out.table(dir, "eh_scan.csv", &t)?;

    let summary = eh_summary(&rows);
    let mut s = Table::new(
        ENERGY_UNITS,
        &["u", "optimizer", "seeds", "mae_energy", "mae_docc", "mae_f1", "mae_f2", "mean_evaluations"],
    );
    for (_, u, o, n, mae, ev) in &summary {
        let mut row = vec![num(*u), o.name().into(), n.to_string()];
        row.extend(mae.iter().map(|&x| num(x)));
        row.push(num(*ev));
        s.push(row);
    }
    out.table(dir, "eh_summary.csv", &s)?;

    let first = cfg.seeds[0];
    let mut tr = Table::new(ENERGY_UNITS, &["u", "optimizer", "seed", "eval", "theta1", "theta2", "value"]);
    for r in rows.iter().filter(|r| r.seed == first) {
        for (k, (theta, v)) in r.trace.iter().enumerate() {
            tr.push(vec![
                num(r.u),
                r.optimizer.name().into(),
                r.seed.to_string(),
                k.to_string(),
                num(theta.theta1),
                num(theta.theta2),
                num(*v),
            ]);
        }
    }
    out.table(dir, "eh_traces.csv", &tr)?;

    let mut energy = Plot::new(
        format!("Embedding ground-state energy, lambda_c = {}", cfg.lambda_c),
        "U (2D)",
        "energy (2D)",
    );
    let exact: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.seed == first && r.optimizer == cfg.optimizers[0])
        .map(|r| (r.u, r.exact.energy))
        .collect();
    energy = energy.add(Series::line("exact", exact));
    let mut error = Plot::new("Mean absolute energy error over seeds", "U (2D)", "|E - E_exact| (2D)");
    for &o in cfg.optimizers.iter().filter(|&&o| o != OptimizerKind::Exact) {
        let mean_e: Vec<(f64, f64)> = cfg
            .u_grid
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.u_index == i && r.optimizer == o)
                    .map(|r| r.estimate.energy)
                    .collect();
                (u, v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect();
        energy = energy.add(Series::markers(o.name(), mean_e));
        let mae: Vec<(f64, f64)> = summary.iter().filter(|s| s.2 == o).map(|s| (s.1, s.4[0])).collect();
        error = error.add(Series::line(o.name(), mae));
    }
    out.plot(cfg, "eh_energy.svg", energy)?;
    out.plot(cfg, "eh_error.svg", error)?;
    Ok(())
}

/// One (solver, seed, U) self-consistency run.
#[derive(Debug, Clone)]
pub struct RisbRow {
    pub solver: SolverKind,
    pub seed: u64,
    pub u_index: usize,
    pub result: RisbResult,
}

fn loop_options(cfg: &RunConfig, solver: &dyn EhSolver) -> LoopOptions {
    let mut o = LoopOptions::for_solver(solver);
    let r = &cfg.risb;
    o.tol = r.tol.unwrap_or(o.tol);
    o.max_iter = r.max_iter.unwrap_or(o.max_iter);
    o.repeats = r.repeats.unwrap_or(o.repeats);
    o.damping = r.damping.unwrap_or(o.damping);
    o.window = r.window.unwrap_or(o.window);
    o
}

pub fn risb_job(cfg: &RunConfig, solver: SolverKind, seed: u64, u_index: usize) -> Result<RisbRow, CliError> {
    let u = cfg.u_grid[u_index];
    let boxed: Box<dyn EhSolver> = match solver {
        SolverKind::Ed => Box::new(EdSolver),
        SolverKind::Gpr => Box::new(PipelineSolver {
            backend: backend_spec(cfg, seed)?,
            options: pipeline_options(cfg),
        }),
        SolverKind::Seq1d => Box::new(Seq1dSolver {
            backend: backend_spec(cfg, seed)?,
            iterations: cfg.seq1d_iterations,
        }),
    };
    let result = solve_self_consistency(u, &*boxed, &loop_options(cfg, &*boxed))?;
    Ok(RisbRow {
        solver,
        seed,
        u_index,
        result,
    })
}

pub fn risb_rows(cfg: &RunConfig) -> Result<Vec<RisbRow>, CliError> {
    let mut jobs = Vec::new();
    for &solver in &cfg.solvers {
        // The exact solver is deterministic; one seed suffices.
        let seeds = if solver == SolverKind::Ed { &cfg.seeds[..1] } else { &cfg.seeds[..] };
        for &seed in seeds {
            for i in 0..cfg.u_grid.len() {
                jobs.push((solver, seed, i));
            }
        }
    }
    jobs.par_iter()
        .map(|&(s, seed, i)| risb_job(cfg, s, seed, i))
        .collect()
}

fn risb_scan(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let rows = risb_rows(cfg)?;
    let dir = &cfg.output_dir;
    let mut t = Table::new(
        "U, lambda, D, lambda_c in units of 2D (D = 0.5); Z, docc, R dimensionless",
        &[
            "u", "z", "docc", "r", "lambda", "d_hyb", "lambda_c", "residual_norm", "converged", "solver_evals", "solver",
            "seed", "status", "iterations", "measurements", "z_exact", "docc_exact",
        ],
    );
    for row in &rows {
        let r = &row.result;
        let status = match r.status {
            LoopStatus::Converged => "converged",
            LoopStatus::Insulating => "insulating",
            LoopStatus::NotConverged => "not-converged",
        };
        t.push(vec![
            num(r.u),
            num(r.z),
            num(r.docc),
            num(r.state.r),
            num(r.state.lam),
            num(r.state.d_hyb),
            num(r.state.lambda_c),
            num(r.residual.norm_inf()),
            r.converged().to_string(),
            r.solver_calls.to_string(),
            row.solver.name().into(),
            row.seed.to_string(),
            status.into(),
            r.iterations.to_string(),
            r.evaluations.to_string(),
            num(analytic_z(r.u)),
            num(analytic_docc(r.u)),
        ]);
    }
    out.table(dir, "risb_scan.csv", &t)?;

    let omegas: Vec<f64> = (0..=20).map(|k| -1.0 + 0.1 * k as f64).collect();
    let mut se = Table::new(
        "omega and sigma in units of 2D; diverges marks Z = 0",
        &["u", "solver", "seed", "omega", "sigma", "diverges"],
    );
    let first = cfg.seeds[0];
    for row in rows.iter().filter(|r| r.seed == first) {
        let r = &row.result;
        let head = |w: f64| vec![num(r.u), row.solver.name().to_string(), row.seed.to_string(), num(w)];
        let values = if r.z > 0.0 {
            self_energy(r.state.r, r.state.lam, &omegas).ok()
        } else {
            None
        };
        match values {
            Some(v) => v.into_iter().for_each(|(w, s)| {
                let mut line = head(w);
                line.extend([num(s), "false".into()]);
                se.push(line);
            }),
            None => {
                let mut line = head(0.0);
                line.extend([String::new(), "true".into()]);
                se.push(line);
            }
        }
    }
    out.table(dir, "self_energy.csv", &se)?;

    let fine: Vec<f64> = {
        let hi = cfg.u_grid.iter().cloned().fold(0.0, f64::max);
        (0..=100).map(|k| hi * k as f64 / 100.0).collect()
    };
    let mut zp = Plot::new("Quasiparticle weight", "U (2D)", "Z").add(Series::line(
        "analytic",
        fine.iter().map(|&u| (u, analytic_z(u))).collect(),
    ));
    let mut dp = Plot::new("Impurity double occupancy", "U (2D)", "docc").add(Series::line(
        "analytic",
        fine.iter().map(|&u| (u, analytic_docc(u))).collect(),
    ));
    for &s in &cfg.solvers {
        let mean = |f: &dyn Fn(&RisbResult) -> f64| -> Vec<(f64, f64)> {
            cfg.u_grid
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let v: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.solver == s && r.u_index == i)
                        .map(|r| f(&r.result))
                        .collect();
                    (u, v.iter().sum::<f64>() / v.len() as f64)
                })
                .collect()
        };
        zp = zp.add(Series::markers(s.name(), mean(&|r| r.z)));
        dp = dp.add(Series::markers(s.name(), mean(&|r| r.docc)));
    }
    out.plot(cfg, "risb_z.svg", zp)?;
    out.plot(cfg, "risb_docc.svg", dp)?;
    out.not_converged = rows.iter().filter(|r| !r.result.converged()).count();
    Ok(())
}

fn landscape(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    let u = cfg.landscape_u.unwrap_or(cfg.u_grid[0]);
    let seed = cfg.seeds[0];
    let (params, problem) = problem(cfg, u)?;
    let spec = backend_spec(cfg, seed)?;
    let backend = spec.instantiate(0);
    let r = mitigated_pipeline(&problem, &*backend, pipeline_options(cfg))?;
    let model = &r.models[Observable::Energy.index()];

    let n = cfg.landscape_points;
    let axis: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / (n - 1) as f64).collect();
    let mut grid = Table::new(ENERGY_UNITS, &["theta1", "theta2", "exact", "mean", "std"]);
    let mut cells = Vec::with_capacity(n * n);
    for &t1 in &axis {
        for &t2 in &axis {
            let theta = ThetaPoint::new(t1, t2)?;
            let exact = exact_expectation(&problem, Observable::Energy, theta)?;
            let mean = model.predict_mean(theta);
            let std = model.predict_variance(theta).sqrt();
            grid.push(vec![num(t1), num(t2), num(exact), num(mean), num(std)]);
            cells.push((t1, t2, exact, mean, std));
        }
    }
    out.table(dir, "landscape.csv", &grid)?;

    for obs in Observable::ALL {
        let text = model_to_text(obs.name(), &r.models[obs.index()]);
        out.text(dir, &format!("model_{}.txt", obs.name()), &text)?;
    }
    let mut training = Table::new(ENERGY_UNITS, &["observable", "theta1", "theta2", "value", "sigma", "exact"]);
    for obs in Observable::ALL {
        for s in r.training[obs.index()].samples() {
            training.push(vec![
                obs.name().into(),
                num(s.theta.theta1),
                num(s.theta.theta2),
                num(s.value),
                num(s.sigma),
                s.exact.to_string(),
            ]);
        }
    }
    out.table(dir, "training.csv", &training)?;

    let star = r.optimum.theta_star;
    out.text(dir, "circuit.txt", &circuit_dump(star)?)?;
    out.text(dir, "hamiltonian.txt", &problem.hamiltonian.sum.to_string())?;
    let mut zeta = Table::new(ZETA_UNITS, &zeta_header());
    zeta.push(zeta_row(&params, &problem.hamiltonian));
    out.table(dir, "zeta.csv", &zeta)?;
    let ed = exact_ground_state(&params);
    let mut opt = Table::new(ENERGY_UNITS, &["u", "lambda_c", "theta1", "theta2", "estimate", "exact_at_theta", "ed"]);
    opt.push(vec![
        num(u),
        num(cfg.lambda_c),
        num(star.theta1),
        num(star.theta2),
        num(r.optimum.value),
        num(exact_expectation(&problem, Observable::Energy, star)?),
        num(ed.energy),
    ]);
    out.table(dir, "optimum.csv", &opt)?;

    let row = axis
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - star.theta2).abs().total_cmp(&(b.1 - star.theta2).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let cut: Vec<_> = cells.iter().skip(row).step_by(n).collect();
    let plot = Plot::new(format!("Energy landscape cut at theta2 = {:.3}, U = {u}", axis[row]), "theta1 (rad)", "energy (2D)")
        .add(Series::line("exact", cut.iter().map(|c| (c.0, c.2)).collect()))
        .add(
            Series::line("surrogate mean", cut.iter().map(|c| (c.0, c.3)).collect())
                .with_band(cut.iter().map(|c| (c.0, c.3 - 2.0 * c.4, c.3 + 2.0 * c.4)).collect()),
        );
    out.plot(cfg, "landscape_cut.svg", plot)?;
    Ok(())
}

/// Pauli strings probed by the readout-mitigation check.
pub const PROBE_TERMS: [&str; 8] = ["ZI", "IZ", "ZZ", "XI", "IX", "XX", "YY", "XZ"];
pub const PROBE_THETA: (f64, f64) = (0.7, -0.4);

fn calibrate(cfg: &RunConfig, out: &mut Outcome) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    let seed = cfg.seeds[0];
    let noise = noise_model(cfg);
    let exact = noise.confusion_matrix(2);
    let cal = if noise.readout.is_empty() {
        Calibration { matrix: exact.clone() }
    } else {
        let mut rng = stream(seed, &[CALIBRATION_STREAM]);
        let columns = calibration_counts(2, &noise, cfg.calibration_shots, &mut rng)?;
        out.table(dir, "counts.csv", &counts_table(&columns, 2))?;
        Calibration::from_counts(&columns)?
    };
    let mut t = Table::new("probabilities; bitstrings list qubit 0 first", &["prepared", "read", "estimated", "exact"]);
    for j in 0..4 {
        for i in 0..4 {
            t.push(vec![
                crate::formats::bitstring(j, 2),
                crate::formats::bitstring(i, 2),
                num(cal.matrix[(i, j)]),
                num(exact[(i, j)]),
            ]);
        }
    }
    out.table(dir, "calibration.csv", &t)?;

    let theta = ThetaPoint::new(PROBE_THETA.0, PROBE_THETA.1)?;
    let state: DensityMatrix = CircuitBackend::new(noise.clone(), None, seed).prepare(theta)?;
    let mut m = Table::new(
        "Pauli expectations, dimensionless; reference is the noisy state before readout",
        &["term", "reference", "raw", "mitigated", "abs_err_raw", "abs_err_mitigated"],
    );
    for (k, label) in PROBE_TERMS.iter().enumerate() {
        let term = ps(label);
        let reference = state.expectation(&pgpr_core::pauli::PauliSum::new(2, [(1.0, term.clone())])?)?;
        // Same stream for both, so both estimates see identical counts.
        let raw = measure_pauli(&state, &term, &noise, None, &mut stream(seed, &[k as u64]))?.estimate;
        let mit = measure_pauli(&state, &term, &noise, Some(&cal), &mut stream(seed, &[k as u64]))?.estimate;
        m.push(vec![
            (*label).into(),
            num(reference),
            num(raw),
            num(mit),
            num((raw - reference).abs()),
            num((mit - reference).abs()),
        ]);
    }
    out.table(dir, "mitigation.csv", &m)?;
    Ok(())
}
