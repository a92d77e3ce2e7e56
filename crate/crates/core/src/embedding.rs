//! The impurity + bath embedding Hamiltonian on four spin-orbitals, its
//! restricted Hartree-Fock reference, the two-qubit reduction in the
//! Hartree-Fock basis, and an exact-diagonalization oracle.
//!
//! Spin-orbitals are ordered `(c↑, d↑, c↓, d↓)`. The embedding Hamiltonian is
//!
//! ```text
//! H = U/2 (n_c - 1)² + D Σσ (c†σ dσ + d†σ cσ) + λc Σσ dσ d†σ
//! ```
//!
//! In the two-electron, `Sz = 0` sector each spin carries exactly one
//! electron, so the sector is (up orbital) ⊗ (down orbital). Qubit 0 holds the
//! spin-up electron with `|1⟩ = bonding`, qubit 1 the spin-down electron with
//! `|0⟩ = bonding`; the Hartree-Fock determinant is therefore `|10⟩`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix2};
// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::pauli::{ps, PauliSum};

pub const MODES: usize = 4;
pub const C_UP: usize = 0;
pub const D_UP: usize = 1;
pub const C_DN: usize = 2;
pub const D_DN: usize = 3;

const FOCK_DIM: usize = 1 << MODES;
const SPECTRUM_TOLERANCE: f64 = 1e-10;

/// `(U, D, λc)`; energies in units where the benchmark uses `2D = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingParams {
    pub u: f64,
    pub d_hyb: f64,
    pub lambda_c: f64,
}

impl EmbeddingParams {
    pub fn new(u: f64, d_hyb: f64, lambda_c: f64) -> Result<Self> {
        if !(u.is_finite() && d_hyb.is_finite() && lambda_c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "embedding",
                reason: "all couplings must be finite",
            });
        }
        if d_hyb == 0.0 {
            return Err(Error::InvalidParameter {
                name: "d_hyb",
                reason: "hybridization must be nonzero",
            });
        }
        Ok(Self { u, d_hyb, lambda_c })
    }

    /// Benchmark unit system: `D = 0.5`.
    pub fn benchmark(u: f64, lambda_c: f64) -> Result<Self> {
        Self::new(u, 0.5, lambda_c)
    }
}

/// Second-quantized operator with one-body and density-density parts.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    pub constant: f64,
    /// `Σ_pq h[p][q] a†_p a_q`
    pub one_body: [[f64; MODES]; MODES],
    /// `Σ v n_p n_q`
    pub density_density: Vec<(f64, usize, usize)>,
}

impl FermionOperator {
    pub fn is_quadratic(&self) -> bool {
        self.density_density.iter().all(|(v, _, _)| *v == 0.0)
    }

    /// Dense matrix on the 16-dimensional Fock space.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(FOCK_DIM, FOCK_DIM) * self.constant;
        for p in 0..MODES {
            for q in 0..MODES {
                if self.one_body[p][q] != 0.0 {
                    m += hop(p, q) * self.one_body[p][q];
                }
            }
        }
        for &(v, p, q) in &self.density_density {
            m += number(p) * number(q) * v;
        }
        m
    }
}

/// Annihilation operator for `mode` under the Jordan-Wigner ordering.
pub fn annihilation(mode: usize) -> DMatrix<f64> {
    DMatrix::from_fn(FOCK_DIM, FOCK_DIM, |row, col| {
        let occupied = (col >> mode) & 1 == 1;
        if occupied && row == col ^ (1 << mode) {
            let below = (col & ((1 << mode) - 1)).count_ones();
            if below.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    })
}

fn hop(p: usize, q: usize) -> DMatrix<f64> {
    annihilation(p).transpose() * annihilation(q)
}

pub fn number(mode: usize) -> DMatrix<f64> {
    hop(mode, mode)
}

pub fn total_number() -> DMatrix<f64> {
    (0..MODES).map(number).fold(DMatrix::zeros(FOCK_DIM, FOCK_DIM), |a, b| a + b)
}

/// `2 Sz = N↑ − N↓`.
pub fn twice_sz() -> DMatrix<f64> {
    number(C_UP) + number(D_UP) - number(C_DN) - number(D_DN)
}

/// Total spin `S²` on the Fock space.
pub fn spin_squared() -> DMatrix<f64> {
    let sz = twice_sz() * 0.5;
    let s_plus = hop(C_UP, C_DN) + hop(D_UP, D_DN);
    let s_minus = s_plus.transpose();
    &sz * &sz + (&s_plus * &s_minus + &s_minus * &s_plus) * 0.5
}

pub fn build_fermionic_hamiltonian(p: &EmbeddingParams) -> FermionOperator {
    let mut one_body = [[0.0; MODES]; MODES];
    for (c, d) in [(C_UP, D_UP), (C_DN, D_DN)] {
        one_body[c][c] = -p.u / 2.0;
        one_body[c][d] = p.d_hyb;
        one_body[d][c] = p.d_hyb;
        // λc dσ d†σ = λc (1 − n_dσ)
        one_body[d][d] = -p.lambda_c;
    }
    FermionOperator {
        constant: p.u / 2.0 + 2.0 * p.lambda_c,
        one_body,
        density_density: alloc::vec![(p.u, C_UP, C_DN)],
    }
}

/// Fock indices with one up and one down electron.
fn singlet_sector_indices() -> Vec<usize> {
    (0..FOCK_DIM)
        .filter(|k| {
            let up = (k >> C_UP & 1) + (k >> D_UP & 1);
            let dn = (k >> C_DN & 1) + (k >> D_DN & 1);
            up == 1 && dn == 1
        })
        .collect()
}

fn restrict(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Eigenvalues of the fermionic Hamiltonian in the `N↑ = N↓ = 1` sector.
pub fn sector_spectrum(p: &EmbeddingParams) -> Vec<f64> {
    let h = build_fermionic_hamiltonian(p).matrix();
    sorted_eigen(restrict(&h, &singlet_sector_indices())).0
}

/// Ground-state energy and the observables entering the embedding loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhSolution {
    pub energy: f64,
    /// `⟨n_c↑ n_c↓⟩`
    pub docc: f64,
    /// `½ Σσ ⟨c†σ dσ⟩`
    pub f1: f64,
    /// `½ Σσ ⟨dσ d†σ⟩`
    pub f2: f64,
}

/// Dense diagonalization of the two-electron `Sz = 0` sector, restricted to
/// its spin-singlet subspace so degeneracies with the triplet are harmless.
pub fn exact_ground_state(p: &EmbeddingParams) -> EhSolution {
    let idx = singlet_sector_indices();
    let h = build_fermionic_hamiltonian(p).matrix();
    let s2 = restrict(&spin_squared(), &idx);
    let (s2_values, s2_vectors) = sorted_eigen(s2);
    let singlet_dim = s2_values.iter().filter(|&&v| v.abs() < 1e-8).count();
    let basis = s2_vectors.columns(0, singlet_dim).into_owned();
    let projected = basis.transpose() * restrict(&h, &idx) * &basis;
    let (values, vectors) = sorted_eigen(projected);
    let sector_vec = &basis * vectors.column(0);

    let mut psi = DVector::zeros(FOCK_DIM);
    for (i, &k) in idx.iter().enumerate() {
        psi[k] = sector_vec[i];
    }
    let expect = |m: DMatrix<f64>| (psi.transpose() * m * &psi)[(0, 0)];
    let f1 = 0.5 * (expect(hop(C_UP, D_UP)) + expect(hop(C_DN, D_DN)));
    let holes = |d: usize| annihilation(d) * annihilation(d).transpose();
    let f2 = 0.5 * (expect(holes(D_UP)) + expect(holes(D_DN)));
    EhSolution {
        energy: values[0],
        docc: expect(number(C_UP) * number(C_DN)),
        f1,
        f2,
    }
}

/// Restricted Hartree-Fock solution; columns of `orbitals` are the bonding
/// and antibonding orbitals expressed in the `(c, d)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HartreeFock {
    pub orbitals: Matrix2<f64>,
    pub energy: f64,
    /// `⟨n_c⟩` summed over spins.
    pub n_c: f64,
}

impl HartreeFock {
    pub fn bonding(&self) -> [f64; 2] {
        [self.orbitals[(0, 0)], self.orbitals[(1, 0)]]
    }

    pub fn antibonding(&self) -> [f64; 2] {
        [self.orbitals[(0, 1)], self.orbitals[(1, 1)]]
    }

    /// `Wᵀ A W`: a per-spin `(c, d)` one-body matrix in the orbital basis.
    pub fn rotate(&self, a: &Matrix2<f64>) -> Matrix2<f64> {
        self.orbitals.transpose() * a * self.orbitals
    }
}

/// Lowest eigenvector of a real symmetric 2×2 matrix, gauge-fixed so its
/// first nonzero component is positive.
fn lowest_orbital(m: &Matrix2<f64>) -> [f64; 2] {
    let (a, b, d) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let half_gap = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
    let low = (a + d) / 2.0 - half_gap;
    let (x, y) = if b == 0.0 {
        if a <= d {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        // (m − low) v = 0 → v ∝ (b, low − a)
        let (x, y) = (b, low - a);
        let n = (x * x + y * y).sqrt();
        (x / n, y / n)
    };
    if x < 0.0 || (x == 0.0 && y < 0.0) {
        [-x, -y]
    } else {
        [x, y]
    }
}

/// Restricted Hartree-Fock in the half-filled sector. The Hartree shift on
/// the impurity level is `U (⟨n_c⟩ − 1) / 2` per spin; the self-consistent
/// impurity occupation is found by bisection, which always brackets since
/// the bonding weight on `c` decreases monotonically with the shift.
pub fn hartree_fock(p: &EmbeddingParams) -> Result<HartreeFock> {
    let fock = |m: f64| Matrix2::new(p.u * (m - 0.5), p.d_hyb, p.d_hyb, -p.lambda_c);
    let weight = |m: f64| lowest_orbital(&fock(m))[0].powi(2);

    // Bisect down to adjacent floats; the map can be arbitrarily steep when
    // the hybridization is small, so the residual itself is no stop test.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if weight(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let m = 0.5 * (lo + hi);
    if !weight(m).is_finite() || hi - lo > 1e-15 {
        return Err(Error::HartreeFockNotConverged { iterations });
    }
    let [bc, bd] = lowest_orbital(&fock(m));
    let orbitals = Matrix2::new(bc, -bd, bd, bc);

    let h = Matrix2::new(-p.u / 2.0, p.d_hyb, p.d_hyb, -p.lambda_c);
    let h_orb = orbitals.transpose() * h * orbitals;
    let constant = p.u / 2.0 + 2.0 * p.lambda_c;
    let energy = 2.0 * h_orb[(0, 0)] + p.u * bc.powi(4) + constant;
    Ok(HartreeFock {
        orbitals,
        energy,
        n_c: 2.0 * bc * bc,
    })
}

/// Spin-summed one-body operator `Σσ Σ_pq A_pq p†σ qσ` on the two qubits,
/// with `A` given in the `(bonding, antibonding)` basis.
fn spin_summed_one_body(a: &Matrix2<f64>) -> PauliSum {
    let mean = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let delta = 0.5 * (a[(0, 0)] - a[(1, 1)]);
    let off = a[(0, 1)];
    PauliSum::new(
        2,
        [
            (2.0 * mean, ps("II")),
            (-delta, ps("ZI")),
            (delta, ps("IZ")),
            (off, ps("XI")),
            (off, ps("IX")),
        ],
    )
    .expect("two-qubit strings")
}

/// `A↑ · B↓` for one-body operators of opposite spin.
fn opposite_spin_product(a: &Matrix2<f64>, b: &Matrix2<f64>) -> PauliSum {
    // up: m − δ Z0 + g X0, down: m + δ Z1 + g X1
    let up = [(0.5 * (a[(0, 0)] + a[(1, 1)])), -0.5 * (a[(0, 0)] - a[(1, 1)]), a[(0, 1)]];
    let dn = [(0.5 * (b[(0, 0)] + b[(1, 1)])), 0.5 * (b[(0, 0)] - b[(1, 1)]), b[(0, 1)]];
    let up_labels = ['I', 'Z', 'X'];
    let dn_labels = ['I', 'Z', 'X'];
    let mut terms = Vec::with_capacity(9);
    for (i, cu) in up.iter().enumerate() {
        for (j, cd) in dn.iter().enumerate() {
            let mut label = alloc::string::String::new();
            label.push(up_labels[i]);
            label.push(dn_labels[j]);
            terms.push((cu * cd, ps(&label)));
        }
    }
    PauliSum::new(2, terms).expect("two-qubit strings")
}

/// The two-qubit Hamiltonian
/// `ζ0 + ζ1(Z0−Z1) + ζ2(X0+X1) + ζ3 Z0Z1 + ζ4(X0Z1−Z0X1) + ζ5 X0X1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitHamiltonian {
    pub zeta: [f64; 6],
    pub sum: PauliSum,
    pub hf: HartreeFock,
}

impl QubitHamiltonian {
    pub fn from_zeta(zeta: [f64; 6], hf: HartreeFock) -> Self {
        let [z0, z1, z2, z3, z4, z5] = zeta;
        let sum = PauliSum::new(
            2,
            [
                (z0, ps("II")),
                (z1, ps("ZI")),
                (-z1, ps("IZ")),
                (z2, ps("XI")),
                (z2, ps("IX")),
                (z3, ps("ZZ")),
                (z4, ps("XZ")),
                (-z4, ps("ZX")),
                (z5, ps("XX")),
            ],
        )
        .expect("two-qubit strings");
        Self { zeta, sum, hf }
    }

    /// Computational basis index of the Hartree-Fock determinant.
    pub const REFERENCE_INDEX: usize = 0b10;
}

fn impurity_number(hf: &HartreeFock) -> Matrix2<f64> {
    hf.rotate(&Matrix2::new(1.0, 0.0, 0.0, 0.0))
}

/// ζ coefficients in closed form (see module docs for the conventions).
pub fn zeta_coefficients(p: &EmbeddingParams, hf: &HartreeFock) -> [f64; 6] {
    let h = hf.rotate(&Matrix2::new(-p.u / 2.0, p.d_hyb, p.d_hyb, -p.lambda_c));
    let constant = p.u / 2.0 + 2.0 * p.lambda_c;
    let [alpha, _] = hf.bonding();
    let [beta, _] = hf.antibonding();
    let delta_nc = 0.5 * (alpha * alpha - beta * beta);
    let g = alpha * beta;
    let mean_h = 0.5 * (h[(0, 0)] + h[(1, 1)]);
    let delta_h = 0.5 * (h[(0, 0)] - h[(1, 1)]);
    [
        2.0 * mean_h + p.u / 4.0 + constant,
        -delta_h - 0.5 * p.u * delta_nc,
        h[(0, 1)] + 0.5 * p.u * g,
        -p.u * delta_nc * delta_nc,
        p.u * g * delta_nc,
        p.u * g * g,
    ]
}

/// Two-qubit form in the Hartree-Fock basis, checked against the fermionic
/// sector spectrum.
pub fn map_to_qubits(p: &EmbeddingParams) -> Result<QubitHamiltonian> {
    let hf = hartree_fock(p)?;
    let qh = QubitHamiltonian::from_zeta(zeta_coefficients(p, &hf), hf);
    let deviation = spectrum_deviation(&qh, p)?;
    if deviation > SPECTRUM_TOLERANCE {
        return Err(Error::SpectrumMismatch { deviation });
    }
    Ok(qh)
}

fn spectrum_deviation(qh: &QubitHamiltonian, p: &EmbeddingParams) -> Result<f64> {
    let m = qh.sum.matrix()?.map(|z| z.re);
    let (qubit, _) = sorted_eigen(m);
    Ok(qubit
        .iter()
        .zip(sector_spectrum(p))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Observables measured alongside the energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observable {
    Energy,
    DoubleOccupancy,
    F1,
    F2,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Energy,
        Observable::DoubleOccupancy,
        Observable::F1,
        Observable::F2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Observable::Energy => "energy",
            Observable::DoubleOccupancy => "docc",
            Observable::F1 => "f1",
            Observable::F2 => "f2",
        }
    }
}

/// Everything a VQE run on one embedding Hamiltonian needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EhProblem {
    pub params: EmbeddingParams,
    pub hamiltonian: QubitHamiltonian,
    pub docc: PauliSum,
    pub f1: PauliSum,
    pub f2: PauliSum,
}

impl EhProblem {
    pub fn new(params: EmbeddingParams) -> Result<Self> {
        let hamiltonian = map_to_qubits(&params)?;
        let hf = hamiltonian.hf;
        let nc = impurity_number(&hf);
        let docc = opposite_spin_product(&nc, &nc);
        // ½ Σσ ⟨c†d⟩ is real for real states, so symmetrize the hopping.
        let f1 = spin_summed_one_body(&hf.rotate(&Matrix2::new(0.0, 0.25, 0.25, 0.0)));
        // ½ Σσ dσ d†σ = 1 − ½ n_d
        let f2 = spin_summed_one_body(&hf.rotate(&Matrix2::new(0.0, 0.0, 0.0, -0.5)))
            .add(&PauliSum::new(2, [(1.0, ps("II"))])?)?;
        Ok(Self {
            params,
            hamiltonian,
            docc,
            f1,
            f2,
        })
    }

    pub fn observable(&self, o: Observable) -> &PauliSum {
        match o {
            Observable::Energy => &self.hamiltonian.sum,
            Observable::DoubleOccupancy => &self.docc,
            Observable::F1 => &self.f1,
            Observable::F2 => &self.f2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a * b - b * a).norm()
    }

    #[test]
    fn noninteracting_operator_is_quadratic() {
        let p = EmbeddingParams::benchmark(0.0, 0.0).unwrap();
        assert!(build_fermionic_hamiltonian(&p).is_quadratic());
        let p = EmbeddingParams::benchmark(1.0, 0.0).unwrap();
        assert!(!build_fermionic_hamiltonian(&p).is_quadratic());
    }

    #[test]
    fn hamiltonian_conserves_number_and_spin() {
        let p = EmbeddingParams::new(2.3, -0.4, 0.7).unwrap();
        let h = build_fermionic_hamiltonian(&p).matrix();
        assert!((&h - h.transpose()).norm() < 1e-14);
        assert!(commutator_norm(&h, &total_number()) < 1e-12);
        assert!(commutator_norm(&h, &twice_sz()) < 1e-12);
        assert!(commutator_norm(&h, &spin_squared()) < 1e-12);
    }

    #[test]
    fn fermionic_operators_anticommute() {
        for p in 0..MODES {
            for q in 0..MODES {
                let a = annihilation(p);
                let b = annihilation(q).transpose();
                let anti = &a * &b + &b * &a;
                let expected = if p == q {
                    DMatrix::identity(FOCK_DIM, FOCK_DIM)
                } else {
                    DMatrix::zeros(FOCK_DIM, FOCK_DIM)
                };
                assert!((anti - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sector_ground_energy_at_u1() {
        // Singlet block in the basis (covalent, ionic+) is [[0, 2D], [2D, U/2]].
        let p = EmbeddingParams::benchmark(1.0, 0.0).unwrap();
        let expected = 0.25 - (1.0f64 / 16.0 + 1.0).sqrt();
        assert_abs_diff_eq!(sector_spectrum(&p)[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_ground_state(&p).energy, expected, epsilon = 1e-12);
    }

    #[test]
    fn hartree_fock_closed_forms() {
        let hf = hartree_fock(&EmbeddingParams::benchmark(0.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(hf.energy, -1.0, epsilon = 1e-12);

        let hf = hartree_fock(&EmbeddingParams::benchmark(1.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(hf.energy, -0.75, epsilon = 1e-12);

        for u in [0.0, 0.5, 2.0, 8.0] {
            let hf = hartree_fock(&EmbeddingParams::benchmark(u, 0.0).unwrap()).unwrap();
            assert_abs_diff_eq!(hf.n_c, 1.0, epsilon = 1e-12);
        }

        for lc in [-0.7, 0.2, 1.3] {
            let hf = hartree_fock(&EmbeddingParams::benchmark(0.0, lc).unwrap()).unwrap();
            assert_abs_diff_eq!(hf.energy, lc - (lc * lc + 1.0f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn hartree_fock_handles_weak_hybridization() {
        for (u, d, lc) in [(3.0, 1e-7, 0.3), (2.5, -3e-9, -0.2), (1.0, 1e-12, 0.0), (4.0, 1e-5, 1.9)] {
            let p = EmbeddingParams::new(u, d, lc).unwrap();
            let hf = hartree_fock(&p).unwrap();
            assert!(hf.energy.is_finite() && (0.0..=2.0).contains(&hf.n_c));
            assert!(hf.energy >= sector_spectrum(&p)[0] - 1e-9);
            let q = map_to_qubits(&p).unwrap();
            assert!(q.zeta.iter().all(|z| z.is_finite()));
        }
    }

    #[test]
    fn hartree_fock_energy_is_the_reference_expectation() {
        let p = EmbeddingParams::new(1.7, 0.35, -0.3).unwrap();
        let qh = map_to_qubits(&p).unwrap();
        let m = qh.sum.matrix().unwrap();
        let r = QubitHamiltonian::REFERENCE_INDEX;
        assert_abs_diff_eq!(m[(r, r)].re, qh.hf.energy, epsilon = 1e-12);
        let [z0, z1, _, z3, _, _] = qh.zeta;
        assert_abs_diff_eq!(z0 - 2.0 * z1 - z3, qh.hf.energy, epsilon = 1e-12);
    }

    #[test]
    fn qubit_spectrum_closed_forms() {
        let lowest = |u: f64, lc: f64| {
            let qh = map_to_qubits(&EmbeddingParams::benchmark(u, lc).unwrap()).unwrap();
            let m = qh.sum.matrix().unwrap().map(|z| z.re);
            sorted_eigen(m).0[0]
        };
        assert_abs_diff_eq!(lowest(0.0, 0.0), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lowest(0.0, 0.2), 0.2 - (0.04f64 + 1.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn qubit_form_has_six_coefficient_structure() {
        let qh = map_to_qubits(&EmbeddingParams::new(2.0, 0.3, 0.4).unwrap()).unwrap();
        let s = &qh.sum;
        assert_eq!(s.coefficient(&ps("ZI")), -s.coefficient(&ps("IZ")));
        assert_eq!(s.coefficient(&ps("XI")), s.coefficient(&ps("IX")));
        assert_eq!(s.coefficient(&ps("XZ")), -s.coefficient(&ps("ZX")));
        for forbidden in ["YI", "IY", "YY", "XY", "YX", "ZY", "YZ"] {
            assert_eq!(s.coefficient(&ps(forbidden)), 0.0);
        }
    }

    #[test]
    fn noninteracting_ground_state() {
        let s = exact_ground_state(&EmbeddingParams::benchmark(0.0, 0.0).unwrap());
        assert_abs_diff_eq!(s.energy, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.docc, 0.25, epsilon = 1e-12);
        // bonding orbital (1, −1)/√2 for D > 0
        assert_abs_diff_eq!(s.f1, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.f2, 0.5, epsilon = 1e-12);

        let s = exact_ground_state(&EmbeddingParams::new(0.0, -0.5, 0.0).unwrap());
        assert_abs_diff_eq!(s.f1, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn particle_hole_symmetry_pins_f2() {
        for k in 0..=20 {
            let u = 0.4 * k as f64;
            let s = exact_ground_state(&EmbeddingParams::benchmark(u, 0.0).unwrap());
            assert_abs_diff_eq!(s.f2, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn double_occupancy_decreases_with_u() {
        let docc = |u: f64| exact_ground_state(&EmbeddingParams::benchmark(u, 0.0).unwrap()).docc;
        assert!(docc(4.0) < 0.25);
        let mut last = docc(0.0);
        for k in 1..=40 {
            let d = docc(0.2 * k as f64);
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn observables_match_ed_in_the_qubit_picture() {
        let p = EmbeddingParams::new(1.3, -0.42, 0.15).unwrap();
        let problem = EhProblem::new(p).unwrap();
        let m = problem.hamiltonian.sum.matrix().unwrap().map(|z| z.re);
        let (values, vectors) = sorted_eigen(m);
        let ed = exact_ground_state(&p);
        assert_abs_diff_eq!(values[0], ed.energy, epsilon = 1e-12);
        let v = vectors.column(0).map(|x| num_complex::Complex64::new(x, 0.0));
        let v: Vec<_> = v.iter().copied().collect();
        assert_abs_diff_eq!(problem.docc.expectation(&v).unwrap(), ed.docc, epsilon = 1e-12);
        assert_abs_diff_eq!(problem.f1.expectation(&v).unwrap(), ed.f1, epsilon = 1e-12);
        assert_abs_diff_eq!(problem.f2.expectation(&v).unwrap(), ed.f2, epsilon = 1e-12);
    }

    #[test]
    fn rejects_zero_hybridization() {
        assert!(EmbeddingParams::new(1.0, 0.0, 0.0).is_err());
        assert!(EmbeddingParams::new(f64::NAN, 0.5, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn spectra_agree(u in 0.0f64..8.0, d in 0.05f64..1.0, sign in prop::bool::ANY, lc in -2.0f64..2.0) {
            let d = if sign { d } else { -d };
            let p = EmbeddingParams::new(u, d, lc).unwrap();
            let qh = map_to_qubits(&p).unwrap();
            prop_assert!(spectrum_deviation(&qh, &p).unwrap() <= 1e-10);
        }

        #[test]
        fn ground_state_is_below_hartree_fock(u in 0.0f64..8.0, d in 0.05f64..1.0, lc in -2.0f64..2.0) {
            let p = EmbeddingParams::new(u, d, lc).unwrap();
            let e_hf = hartree_fock(&p).unwrap().energy;
            let s = exact_ground_state(&p);
            prop_assert!(s.energy <= e_hf + 1e-12);
            prop_assert!((0.0..=1.0).contains(&s.docc));
            prop_assert!((0.0..=1.0).contains(&s.f2));
            prop_assert!(s.f1.abs() <= 0.5 + 1e-12);
        }
    }
}
