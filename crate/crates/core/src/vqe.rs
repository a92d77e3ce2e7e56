//! Measurement backends returning noisy estimates of an observable at a
//! point of the ansatz landscape.
//!
//! Random streams are keyed by `(seed, repeat, observable, draw)` rather than
//! by the parameters of the embedding problem, so two problems measured with
//! the same draw indices see the same noise realization.

use alloc::sync::Arc;
use alloc::vec::Vec;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ansatz::{build_circuit, statevector, ThetaPoint};
use crate::surrogate::training_mesh;
use crate::embedding::{EhProblem, Observable, QubitHamiltonian};
use crate::error::Result;
use crate::rng::stream;
use crate::simulator::{estimate_sum, evolve, Calibration, DensityMatrix, NoiseModel};

/// One estimate with its reported uncertainty (0 when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub sigma: f64,
}

pub trait Backend: Sync {
    fn measure(&self, problem: &EhProblem, observable: Observable, theta: ThetaPoint, draw: u64) -> Result<Measurement>;

    /// Default uncertainty attached to noisy samples when the backend does
    /// not report one.
    fn nominal_sigma(&self, problem: &EhProblem) -> f64;
}

pub fn exact_expectation(problem: &EhProblem, observable: Observable, theta: ThetaPoint) -> Result<f64> {
    problem.observable(observable).expectation(&statevector(theta))
}

/// Noiseless statevector expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBackend;

impl Backend for ExactBackend {
    fn measure(&self, problem: &EhProblem, observable: Observable, theta: ThetaPoint, _draw: u64) -> Result<Measurement> {
        Ok(Measurement {
            value: exact_expectation(problem, observable, theta)?,
            sigma: 0.0,
        })
    }

    fn nominal_sigma(&self, problem: &EhProblem) -> f64 {
        problem.params.d_hyb.abs()
    }
}

/// Exact expectation plus `σ·N(0,1)` with `σ = relative_sigma·|D|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBackend {
    pub seed: u64,
    pub repeat: u64,
    pub relative_sigma: f64,
}

impl GaussianBackend {
    pub const DEFAULT_RELATIVE_SIGMA: f64 = 0.2;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            repeat: 0,
            relative_sigma: Self::DEFAULT_RELATIVE_SIGMA,
        }
    }

    pub fn sigma(&self, problem: &EhProblem) -> f64 {
        self.relative_sigma * problem.params.d_hyb.abs()
    }
}

impl Backend for GaussianBackend {
    fn measure(&self, problem: &EhProblem, observable: Observable, theta: ThetaPoint, draw: u64) -> Result<Measurement> {
        let exact = exact_expectation(problem, observable, theta)?;
        let mut rng = stream(self.seed, &[self.repeat, observable.index() as u64, draw]);
        let z: f64 = rng.sample(StandardNormal);
        let sigma = self.sigma(problem);
        Ok(Measurement {
            value: exact + sigma * z,
            sigma,
        })
    }

    fn nominal_sigma(&self, problem: &EhProblem) -> f64 {
        self.sigma(problem)
    }
}

/// Density-matrix simulation of the compiled circuit with gate noise,
/// readout confusion, shot sampling and optional readout mitigation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitBackend {
    pub noise: NoiseModel,
    pub calibration: Option<Calibration>,
    pub seed: u64,
    pub repeat: u64,
    /// Used when the shot-noise estimate is zero (infinite shots).
    pub relative_sigma: f64,
    pub cache: StateCache,
}

/// Noisy states prepared ahead of time for a fixed set of angles. The
/// prepared state depends only on `θ` and the gate noise, so one cache serves
/// every embedding problem and repeat.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateCache(Arc<Vec<([u64; 2], DensityMatrix)>>);

impl StateCache {
    pub fn build(noise: &NoiseModel, points: &[ThetaPoint]) -> Result<Self> {
        let backend = CircuitBackend::new(noise.clone(), None, 0);
        let mut states = points
            .iter()
            .map(|&t| Ok((key(t), backend.prepare(t)?)))
            .collect::<Result<Vec<_>>>()?;
        states.sort_by_key(|a| a.0);
        states.dedup_by(|a, b| a.0 == b.0);
        Ok(Self(Arc::new(states)))
    }

    pub fn get(&self, theta: ThetaPoint) -> Option<&DensityMatrix> {
        let k = key(theta);
        self.0.binary_search_by(|e| e.0.cmp(&k)).ok().map(|i| &self.0[i].1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn key(t: ThetaPoint) -> [u64; 2] {
    [t.theta1.to_bits(), t.theta2.to_bits()]
}

impl CircuitBackend {
    pub fn new(noise: NoiseModel, calibration: Option<Calibration>, seed: u64) -> Self {
        Self {
            noise,
            calibration,
            seed,
            repeat: 0,
            relative_sigma: GaussianBackend::DEFAULT_RELATIVE_SIGMA,
            cache: StateCache::default(),
        }
    }

    /// The gate noise must be the one the cache was built with.
    pub fn with_cache(mut self, cache: StateCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn prepare(&self, theta: ThetaPoint) -> Result<DensityMatrix> {
        let start = DensityMatrix::basis_state(2, QubitHamiltonian::REFERENCE_INDEX)?;
        evolve(&start, &build_circuit(theta)?, &self.noise)
    }
}

impl Backend for CircuitBackend {
    fn measure(&self, problem: &EhProblem, observable: Observable, theta: ThetaPoint, draw: u64) -> Result<Measurement> {
        let prepared;
        let state = match self.cache.get(theta) {
            Some(s) => s,
            None => {
                prepared = self.prepare(theta)?;
                &prepared
            }
        };
        let key = [self.repeat, observable.index() as u64, draw];
        let record = estimate_sum(
            state,
            problem.observable(observable),
            &self.noise,
            self.calibration.as_ref(),
            |term| stream(self.seed, &[key[0], key[1], key[2], term as u64]),
        )?;
        Ok(Measurement {
            value: record.estimate,
            sigma: record.stderr,
        })
    }

    fn nominal_sigma(&self, problem: &EhProblem) -> f64 {
        self.relative_sigma * problem.params.d_hyb.abs()
    }
}

/// Backend description from which independent repeats are instantiated.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Exact,
    Gaussian { seed: u64, relative_sigma: f64 },
    Circuit {
        noise: NoiseModel,
        calibration: Option<Calibration>,
        seed: u64,
        /// Nominal training σ in units of `|𝒟|`.
        relative_sigma: f64,
        cache: StateCache,
    },
}

impl BackendSpec {
    /// Circuit backend with the training mesh states prepared up front.
    pub fn circuit(noise: NoiseModel, calibration: Option<Calibration>, seed: u64) -> Result<Self> {
        let cache = StateCache::build(&noise, &training_mesh())?;
        Ok(BackendSpec::Circuit {
            noise,
            calibration,
            seed,
            relative_sigma: GaussianBackend::DEFAULT_RELATIVE_SIGMA,
            cache,
        })
    }

    pub fn is_noisy(&self) -> bool {
        !matches!(self, BackendSpec::Exact)
    }

    pub fn instantiate(&self, repeat: u64) -> alloc::boxed::Box<dyn Backend> {
        match self {
            BackendSpec::Exact => alloc::boxed::Box::new(ExactBackend),
            BackendSpec::Gaussian { seed, relative_sigma } => alloc::boxed::Box::new(GaussianBackend {
                seed: *seed,
                repeat,
                relative_sigma: *relative_sigma,
            }),
            BackendSpec::Circuit {
                noise,
                calibration,
                seed,
                relative_sigma,
                cache,
            } => {
                let mut b = CircuitBackend::new(noise.clone(), calibration.clone(), *seed).with_cache(cache.clone());
                b.repeat = repeat;
                b.relative_sigma = *relative_sigma;
                alloc::boxed::Box::new(b)
            }
        }
    }
}

/// Mean and standard error of a small set of repeated values.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let v = DVector::from_column_slice(values);
    let mean = v.mean();
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}
