//! Density-matrix simulation of small circuits with depolarizing, amplitude
//! damping and readout noise, shot sampling, and readout mitigation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, MAX_DENSE_QUBITS};

const TRACE_TOLERANCE: f64 = 1e-12;
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clifford {
    H,
    S,
    Sdg,
}

impl Clifford {
    pub fn matrix(self) -> Matrix2<Complex64> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match self {
            Clifford::H => {
                let r = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
                Matrix2::new(r, r, r, -r)
            }
            Clifford::S => Matrix2::new(one, z, z, Complex64::new(0.0, 1.0)),
            Clifford::Sdg => Matrix2::new(one, z, z, Complex64::new(0.0, -1.0)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Clifford::H => "H",
            Clifford::S => "S",
            Clifford::Sdg => "SDG",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// `exp(−i angle P / 2)`
    Rotation { string: PauliString, angle: f64 },
    BasisChange { qubit: usize, kind: Clifford },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn support(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { string, .. } => string.support().collect(),
            Gate::BasisChange { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
        }
    }

    pub fn unitary(&self, qubits: usize) -> Result<DMatrix<Complex64>> {
        check_qubits(qubits)?;
        for q in self.support() {
            if q >= qubits {
                return Err(Error::DimensionMismatch {
                    expected: qubits,
                    got: q + 1,
                });
            }
        }
        let dim = 1 << qubits;
        match self {
            Gate::Rotation { string, angle } => {
                if string.qubit_count() != qubits {
                    return Err(Error::QubitMismatch {
                        left: string.qubit_count(),
                        right: qubits,
                    });
                }
                let p = string.matrix()?;
                let (s, c) = (angle / 2.0).sin_cos();
                Ok(DMatrix::identity(dim, dim) * Complex64::new(c, 0.0)
                    + p * Complex64::new(0.0, -s))
            }
            Gate::BasisChange { qubit, kind } => Ok(embed_single(qubits, *qubit, &kind.matrix())),
            Gate::Cnot { control, target } => {
                let one = Complex64::new(1.0, 0.0);
                let mut m = DMatrix::zeros(dim, dim);
                for k in 0..dim {
                    let out = if k & bit(qubits, *control) != 0 {
                        k ^ bit(qubits, *target)
                    } else {
                        k
                    };
                    m[(out, k)] = one;
                }
                Ok(m)
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rotation { string, angle } => write!(f, "ROT {string} {angle}"),
            Gate::BasisChange { qubit, kind } => write!(f, "{} {qubit}", kind.label()),
            Gate::Cnot { control, target } => write!(f, "CNOT {control} {target}"),
        }
    }
}

fn bit(qubits: usize, q: usize) -> usize {
    1 << (qubits - 1 - q)
}

fn check_qubits(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits {
            qubits,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

fn embed_single(qubits: usize, q: usize, m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    let dim = 1 << qubits;
    let mask = bit(qubits, q);
    DMatrix::from_fn(dim, dim, |r, c| {
        if (r & !mask) != (c & !mask) {
            return Complex64::new(0.0, 0.0);
        }
        m[((r & mask != 0) as usize, (c & mask != 0) as usize)]
    })
}

/// Basis change taking `p` to `Z` by conjugation, and its inverse.
fn to_z_basis(qubit: usize, p: Pauli) -> (Vec<Gate>, Vec<Gate>) {
    let g = |kind| Gate::BasisChange { qubit, kind };
    match p {
        Pauli::X => (vec![g(Clifford::H)], vec![g(Clifford::H)]),
        Pauli::Y => (
            vec![g(Clifford::Sdg), g(Clifford::H)],
            vec![g(Clifford::H), g(Clifford::S)],
        ),
        Pauli::I | Pauli::Z => (Vec::new(), Vec::new()),
    }
}

/// `exp(−i angle P / 2)` as basis changes, a CNOT ladder and one Z rotation.
/// Single-qubit strings stay native rotations.
pub fn compile_pauli_rotation(string: &PauliString, angle: f64) -> Vec<Gate> {
    let support: Vec<usize> = string.support().collect();
    if support.len() <= 1 {
        return vec![Gate::Rotation {
            string: string.clone(),
            angle,
        }];
    }
    let n = string.qubit_count();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &q in &support {
        let (to, back) = to_z_basis(q, string.factor(q));
        pre.extend(to);
        post.extend(back);
    }
    let ladder: Vec<Gate> = support
        .windows(2)
        .map(|w| Gate::Cnot {
            control: w[0],
            target: w[1],
        })
        .collect();
    let last = *support.last().expect("weight ≥ 2");
    let mut out = pre;
    out.extend(ladder.iter().cloned());
    out.push(Gate::Rotation {
        string: PauliString::single(n, last, Pauli::Z),
        angle,
    });
    out.extend(ladder.into_iter().rev());
    out.extend(post);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn basis_state(qubits: usize, index: usize) -> Result<Self> {
        check_qubits(qubits)?;
        let dim = 1 << qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index + 1,
            });
        }
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, rho })
    }

    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let qubits = psi.len().trailing_zeros() as usize;
        if psi.len() != 1 << qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << qubits,
                got: psi.len(),
            });
        }
        check_qubits(qubits)?;
        let v = DVector::from_column_slice(psi);
        let norm_sqr = v.norm_squared();
        if (norm_sqr - 1.0).abs() > 1e-10 {
            return Err(Error::Unnormalized { index: 0, norm_sqr });
        }
        Ok(Self {
            qubits,
            rho: &v * v.adjoint(),
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|k| self.rho[(k, k)].re.max(0.0)).collect()
    }

    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        if h.qubit_count() != self.qubits {
            return Err(Error::QubitMismatch {
                left: h.qubit_count(),
                right: self.qubits,
            });
        }
        Ok((h.matrix()? * &self.rho).trace().re)
    }

    fn conjugate(&mut self, u: &DMatrix<Complex64>) {
        self.rho = u * &self.rho * u.adjoint();
    }

    /// `ρ → (1−p)ρ + p Tr_S(ρ) ⊗ I/2^|S|` on the qubits `S`, written as a
    /// Pauli twirl.
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let n = self.qubits;
        let count = 1usize << (2 * qubits.len());
        let mut acc = DMatrix::zeros(self.rho.nrows(), self.rho.ncols());
        for code in 1..count {
            let mut factors = vec![Pauli::I; n];
            for (slot, &q) in qubits.iter().enumerate() {
                factors[q] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(code >> (2 * slot)) & 3];
            }
            let m = PauliString::new(factors)
                .and_then(|s| s.matrix())
                .expect("qubit count checked at construction");
            acc += &m * &self.rho * &m;
        }
        let weight = p / count as f64;
        self.rho = &self.rho * Complex64::new(1.0 - p + weight, 0.0) + acc * Complex64::new(weight, 0.0);
    }

    fn amplitude_damp(&mut self, q: usize, gamma: f64) {
        if gamma == 0.0 {
            return;
        }
        let z = Complex64::new(0.0, 0.0);
        let k0 = Matrix2::new(
            Complex64::new(1.0, 0.0),
            z,
            z,
            Complex64::new((1.0 - gamma).sqrt(), 0.0),
        );
        let k1 = Matrix2::new(z, Complex64::new(gamma.sqrt(), 0.0), z, z);
        let k0 = embed_single(self.qubits, q, &k0);
        let k1 = embed_single(self.qubits, q, &k1);
        self.rho = &k0 * &self.rho * k0.adjoint() + &k1 * &self.rho * k1.adjoint();
    }
}

/// Per-qubit readout confusion `(p(read 1 | 0), p(read 0 | 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReadoutError {
    pub p1_given_0: f64,
    pub p0_given_1: f64,
}

impl ReadoutError {
    pub fn symmetric(p: f64) -> Self {
        Self {
            p1_given_0: p,
            p0_given_1: p,
        }
    }

    /// Rows index the read value, columns the true value.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            1.0 - self.p1_given_0,
            self.p0_given_1,
            self.p1_given_0,
            1.0 - self.p0_given_1,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Finite(u32),
    /// Exact outcome distribution, no sampling.
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub gamma: f64,
    /// Empty means perfect readout; otherwise one entry per qubit.
    pub readout: Vec<ReadoutError>,
    pub shots: Shots,
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            gamma: 0.0,
            readout: Vec::new(),
            shots: Shots::Infinite,
        }
    }

    /// Default synthetic device: `p1 = 0.001`, `p2 = 0.01`, 2% readout flips,
    /// 4096 shots.
    pub fn default_device(qubits: usize) -> Self {
        Self {
            p1: 0.001,
            p2: 0.01,
            gamma: 0.0,
            readout: vec![ReadoutError::symmetric(0.02); qubits],
            shots: Shots::Finite(4096),
        }
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let probability = |name, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: "probability outside [0, 1]",
                })
            }
        };
        probability("p1", self.p1)?;
        probability("p2", self.p2)?;
        probability("gamma", self.gamma)?;
        for r in &self.readout {
            probability("readout", r.p1_given_0)?;
            probability("readout", r.p0_given_1)?;
        }
        if !self.readout.is_empty() && self.readout.len() != qubits {
            return Err(Error::DimensionMismatch {
                expected: qubits,
                got: self.readout.len(),
            });
        }
        if self.shots == Shots::Finite(0) {
            return Err(Error::InvalidParameter {
                name: "shots",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Full confusion matrix `⊗_q A_q`.
    pub fn confusion_matrix(&self, qubits: usize) -> DMatrix<f64> {
        let mut a = DMatrix::from_element(1, 1, 1.0);
        for q in 0..qubits {
            let m = self.readout.get(q).copied().unwrap_or_default().matrix();
            let m = DMatrix::from_fn(2, 2, |r, c| m[(r, c)]);
            a = a.kronecker(&m);
        }
        a
    }
}

pub fn evolve(state: &DensityMatrix, circuit: &[Gate], noise: &NoiseModel) -> Result<DensityMatrix> {
    let n = state.qubits;
    noise.validate(n)?;
    let mut out = state.clone();
    for gate in circuit {
        out.conjugate(&gate.unitary(n)?);
        let support = gate.support();
        match support.len() {
            0 => {}
            1 => out.depolarize(&support, noise.p1),
            _ => out.depolarize(&support, noise.p2),
        }
        if noise.gamma > 0.0 && !support.is_empty() {
            for q in 0..n {
                out.amplitude_damp(q, noise.gamma);
            }
        }
    }
    Ok(out)
}

/// Outcome counts keyed by computational basis index.
pub type Counts = BTreeMap<usize, u64>;

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub estimate: f64,
    pub stderr: f64,
    pub shots_used: u64,
    pub raw_counts: Counts,
}

/// Multinomial sample by successive conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(probabilities: &[f64], shots: u32, rng: &mut R) -> Counts {
    let mut counts = Counts::new();
    let mut remaining = shots as u64;
    let mut mass = 1.0;
    for (k, &p) in probabilities.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let draw = if k + 1 == probabilities.len() || mass <= 0.0 {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        if draw > 0 {
            counts.insert(k, draw);
        }
        remaining -= draw;
        mass -= p;
    }
    counts
}

fn normalized(counts: &Counts, dim: usize) -> Vec<f64> {
    let total: u64 = counts.values().sum();
    let mut p = vec![0.0; dim];
    for (&k, &c) in counts {
        p[k] = c as f64 / total as f64;
    }
    p
}

/// Measure a single non-identity Pauli string: rotate into its eigenbasis,
/// apply readout confusion, sample, optionally mitigate.
pub fn measure_pauli<R: Rng + ?Sized>(
    state: &DensityMatrix,
    term: &PauliString,
    noise: &NoiseModel,
    calibration: Option<&Calibration>,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let n = state.qubits;
    if term.qubit_count() != n {
        return Err(Error::QubitMismatch {
            left: term.qubit_count(),
            right: n,
        });
    }
    if term.is_identity() {
        return Err(Error::InvalidParameter {
            name: "term",
            reason: "identity is not measured",
        });
    }
    let rotation: Vec<Gate> = term
        .support()
        .flat_map(|q| to_z_basis(q, term.factor(q)).0)
        .collect();
    let rotated = evolve(state, &rotation, noise)?;
    let true_p = DVector::from_vec(rotated.probabilities());
    let read_p: Vec<f64> = (noise.confusion_matrix(n) * true_p).iter().copied().collect();

    let (distribution, raw_counts, shots_used) = match noise.shots {
        Shots::Infinite => (read_p, Counts::new(), 0),
        Shots::Finite(shots) => {
            let counts = sample_counts(&read_p, shots, rng);
            (normalized(&counts, 1 << n), counts, shots as u64)
        }
    };
    let distribution = match calibration {
        Some(cal) => mitigate_distribution(&distribution, cal)?,
        None => distribution,
    };
    let estimate: f64 = distribution
        .iter()
        .enumerate()
        .map(|(k, p)| p * term.parity_sign(k))
        .sum();
    let estimate = estimate.clamp(-1.0, 1.0);
    let stderr = match noise.shots {
        Shots::Infinite => 0.0,
        Shots::Finite(shots) => ((1.0 - estimate * estimate).max(0.0) / shots as f64).sqrt(),
    };
    Ok(MeasurementRecord {
        estimate,
        stderr,
        shots_used,
        raw_counts,
    })
}

/// `Σ w_h ⟨h⟩` with each non-identity term measured independently; the
/// identity coefficient is added exactly. Term `t` draws from the stream
/// produced by `stream_for(t)`.
pub fn estimate_sum<R: Rng>(
    state: &DensityMatrix,
    sum: &PauliSum,
    noise: &NoiseModel,
    calibration: Option<&Calibration>,
    mut stream_for: impl FnMut(usize) -> R,
) -> Result<MeasurementRecord> {
    let mut estimate = 0.0;
    let mut variance = 0.0;
    let mut shots_used = 0;
    let mut raw_counts = Counts::new();
    for (t, (w, term)) in sum.terms().iter().enumerate() {
        if term.is_identity() {
            estimate += w;
            continue;
        }
        let r = measure_pauli(state, term, noise, calibration, &mut stream_for(t))?;
        estimate += w * r.estimate;
        variance += w * w * r.stderr * r.stderr;
        shots_used += r.shots_used;
        for (k, c) in r.raw_counts {
            *raw_counts.entry(k).or_insert(0) += c;
        }
    }
    Ok(MeasurementRecord {
        estimate,
        stderr: variance.sqrt(),
        shots_used,
        raw_counts,
    })
}

/// Column-stochastic confusion estimate; column `j` is the read distribution
/// for prepared basis state `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub matrix: DMatrix<f64>,
}

impl Calibration {
    /// Column `j` from the counts recorded after preparing basis state `j`.
    pub fn from_counts(columns: &[Counts]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two().max(2), got: dim });
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        for (j, counts) in columns.iter().enumerate() {
            if counts.values().sum::<u64>() == 0 {
                return Err(Error::InvalidParameter {
                    name: "counts",
                    reason: "calibration column without shots",
                });
            }
            for (i, v) in normalized(counts, dim).into_iter().enumerate() {
                matrix[(i, j)] = v;
            }
        }
        Ok(Self { matrix })
    }
}

/// Read counts for each prepared basis state, in basis order.
pub fn calibration_counts<R: Rng + ?Sized>(qubits: usize, noise: &NoiseModel, shots: u32, rng: &mut R) -> Result<Vec<Counts>> {
    check_qubits(qubits)?;
    noise.validate(qubits)?;
    if shots == 0 {
        return Err(Error::InvalidParameter {
            name: "shots",
            reason: "must be at least 1",
        });
    }
    let exact = noise.confusion_matrix(qubits);
    Ok((0..1 << qubits)
        .map(|j| {
            let column: Vec<f64> = exact.column(j).iter().copied().collect();
            sample_counts(&column, shots, rng)
        })
        .collect())
}

pub fn calibrate_readout<R: Rng + ?Sized>(
    qubits: usize,
    noise: &NoiseModel,
    shots: Shots,
    rng: &mut R,
) -> Result<Calibration> {
    match shots {
        Shots::Infinite => {
            check_qubits(qubits)?;
            noise.validate(qubits)?;
            Ok(Calibration {
                matrix: noise.confusion_matrix(qubits),
            })
        }
        Shots::Finite(s) => Calibration::from_counts(&calibration_counts(qubits, noise, s, rng)?),
    }
}

pub fn mitigate_counts(raw: &Counts, calibration: &Calibration) -> Result<Vec<f64>> {
    mitigate_distribution(&normalized(raw, calibration.matrix.nrows()), calibration)
}

/// Nonnegative, normalized `q` minimizing `‖A q − p‖₂`.
pub fn mitigate_distribution(p: &[f64], calibration: &Calibration) -> Result<Vec<f64>> {
    let a = &calibration.matrix;
    if a.nrows() != p.len() || a.ncols() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: p.len(),
        });
    }
    let svd = crate::linalg::svd(a.clone());
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_min > 0.0) || s_max / s_min > CONDITION_LIMIT {
        return Err(Error::SingularCalibration {
            condition: if s_min > 0.0 { s_max / s_min } else { f64::INFINITY },
        });
    }
    let b = DVector::from_column_slice(p);
    let q = svd.solve(&b, 0.0).map_err(|_| Error::SingularCalibration {
        condition: f64::INFINITY,
    })?;
    if q.iter().all(|&x| x >= 0.0) {
        let total: f64 = q.iter().sum();
        return Ok(q.iter().map(|x| x / total).collect());
    }

    // Accelerated projected gradient on the probability simplex.
    let lipschitz = s_max * s_max;
    let ata = a.transpose() * a;
    let atb = a.transpose() * &b;
    let mut x = project_simplex(q.as_slice());
    let mut y = x.clone();
    let mut t = 1.0;
    for _ in 0..20_000 {
        let grad = &ata * DVector::from_column_slice(&y) - &atb;
        let step: Vec<f64> = y
            .iter()
            .zip(grad.iter())
            .map(|(yi, gi)| yi - gi / lipschitz)
            .collect();
        let next = project_simplex(&step);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let change: f64 = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + momentum * (n - o))
            .collect();
        x = next;
        t = t_next;
        if change.sqrt() < 1e-15 {
            break;
        }
    }
    Ok(x)
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if uk - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Checks the density-matrix invariants: unit trace, Hermiticity, positivity.
pub fn check_state(state: &DensityMatrix) -> bool {
    let rho = &state.rho;
    (state.trace() - 1.0).abs() <= TRACE_TOLERANCE
        && (rho - rho.adjoint()).norm() <= 1e-12
        && state.min_eigenvalue() >= -1e-10
}
