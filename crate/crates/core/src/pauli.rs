//! Pauli strings and real-weighted Pauli sums on a handful of qubits.
//!
//! Qubit 0 is the leftmost tensor factor: the string `"XZ"` is `X ⊗ Z`, and
//! basis index `k` of a dense matrix has qubit 0 as its most significant bit.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register for which dense matrices are built.
pub const MAX_DENSE_QUBITS: usize = 4;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    /// `self · other = phase · product`.
    pub fn multiply(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::One, p),
            (a, b) if a == b => (Phase::One, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MinusI, Z),
            (Z, Y) => (Phase::MinusI, X),
            (X, Z) => (Phase::MinusI, Y),
            _ => unreachable!(),
        }
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(l, o, o, l),
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }

    /// `⟨φ|P|φ⟩` for a single-qubit state `φ = (a, b)`.
    fn expectation(self, [a, b]: [Complex64; 2]) -> f64 {
        match self {
            Pauli::I => a.norm_sqr() + b.norm_sqr(),
            Pauli::X => 2.0 * (a.conj() * b).re,
            Pauli::Y => 2.0 * (a.conj() * b).im,
            Pauli::Z => a.norm_sqr() - b.norm_sqr(),
        }
    }
}

/// A power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    fn power(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    fn from_power(p: u8) -> Self {
        match p % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn value(self) -> Complex64 {
        match self {
            Phase::One => Complex64::new(1.0, 0.0),
            Phase::I => Complex64::new(0.0, 1.0),
            Phase::MinusOne => Complex64::new(-1.0, 0.0),
            Phase::MinusI => Complex64::new(0.0, -1.0),
        }
    }
}

impl core::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_power(self.power() + rhs.power())
    }
}

/// Tensor product of single-qubit Paulis; `factors[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter {
                name: "qubit_count",
                reason: "a pauli string needs at least one qubit",
            });
        }
        Ok(Self { factors })
    }

    pub fn identity(qubits: usize) -> Self {
        assert!(qubits >= 1, "a pauli string needs at least one qubit");
        Self {
            factors: alloc::vec![Pauli::I; qubits],
        }
    }

    /// `pauli` on `qubit`, identity elsewhere.
    pub fn single(qubits: usize, qubit: usize, pauli: Pauli) -> Self {
        let mut s = Self::identity(qubits);
        s.factors[qubit] = pauli;
        s
    }

    pub fn qubit_count(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        self.factors[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity factor.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
    }

    pub fn weight(&self) -> usize {
        self.support().count()
    }

    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.qubit_count() != other.qubit_count() {
            return Err(Error::QubitMismatch {
                left: self.qubit_count(),
                right: other.qubit_count(),
            });
        }
        let mut phase = Phase::One;
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(&a, &b)| {
                let (p, c) = a.multiply(b);
                phase = phase * p;
                c
            })
            .collect();
        Ok((phase, PauliString { factors }))
    }

    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.qubit_count())?;
        let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for p in &self.factors {
            let f = p.matrix();
            m = m.kronecker(&f);
        }
        Ok(m)
    }

    /// Product-state expectation, one factor per qubit.
    pub fn expectation_product_state(&self, state: &[[Complex64; 2]]) -> f64 {
        self.factors
            .iter()
            .zip(state)
            .map(|(p, &phi)| p.expectation(phi))
            .product()
    }

    /// Sign of the measured eigenvalue for computational basis index `k`.
    pub fn parity_sign(&self, k: usize) -> f64 {
        let n = self.qubit_count();
        let ones = self
            .support()
            .filter(|&q| (k >> (n - 1 - q)) & 1 == 1)
            .count();
        if ones % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.factors {
            write!(f, "{}", p.label())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .trim()
            .chars()
            .map(Pauli::from_label)
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(factors)
    }
}

/// Real linear combination of Pauli strings, kept in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn zero(qubits: usize) -> Self {
        Self {
            qubits,
            terms: Vec::new(),
        }
    }

    /// Builds a normalized sum: sorted by labels, duplicates merged, exact
    /// zeros dropped.
    pub fn new(qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut terms: Vec<_> = terms.into_iter().collect();
        for (_, s) in &terms {
            if s.qubit_count() != qubits {
                return Err(Error::QubitMismatch {
                    left: qubits,
                    right: s.qubit_count(),
                });
            }
        }
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (c, s) in terms {
            match merged.last_mut() {
                Some(last) if last.1 == s => last.0 += c,
                _ => merged.push((c, s)),
            }
        }
        merged.retain(|(c, _)| *c != 0.0);
        Ok(Self {
            qubits,
            terms: merged,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Coefficient of `string`, zero if absent.
    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms
            .binary_search_by(|(_, s)| s.cmp(string))
            .map(|i| self.terms[i].0)
            .unwrap_or(0.0)
    }

    /// Coefficient of the all-identity string.
    pub fn constant(&self) -> f64 {
        self.coefficient(&PauliString::identity(self.qubits))
    }

    /// `Σ |w_h|`, a bound on any expectation value.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.qubits != other.qubits {
            return Err(Error::QubitMismatch {
                left: self.qubits,
                right: other.qubits,
            });
        }
        PauliSum::new(
            self.qubits,
            self.terms.iter().chain(&other.terms).cloned(),
        )
    }

    pub fn scale(&self, factor: f64) -> PauliSum {
        PauliSum::new(
            self.qubits,
            self.terms.iter().map(|(c, s)| (c * factor, s.clone())),
        )
        .expect("scaling preserves the qubit count")
    }

    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.qubits)?;
        let dim = 1 << self.qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, s) in &self.terms {
            m += s.matrix()? * Complex64::new(*c, 0.0);
        }
        Ok(m)
    }

    /// `⟨ψ|H|ψ⟩` for `ψ = ⊗_q state[q]`, without building the `2^n` vector.
    pub fn expectation_product_state(&self, state: &[[Complex64; 2]]) -> Result<f64> {
        if state.len() != self.qubits {
            return Err(Error::DimensionMismatch {
                expected: self.qubits,
                got: state.len(),
            });
        }
        for (index, phi) in state.iter().enumerate() {
            let norm_sqr = phi[0].norm_sqr() + phi[1].norm_sqr();
            if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Unnormalized { index, norm_sqr });
            }
        }
        Ok(self
            .terms
            .iter()
            .map(|(c, s)| c * s.expectation_product_state(state))
            .sum())
    }

    /// `⟨ψ|H|ψ⟩` for a dense state vector.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        let m = self.matrix()?;
        if psi.len() != m.nrows() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: psi.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Ok((v.adjoint() * m * &v)[(0, 0)].re)
    }
}

impl fmt::Display for PauliSum {
    /// One `c * LABELS` line per term; `{}` on `f64` round-trips exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, s) in &self.terms {
            writeln!(f, "{c} * {s}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut qubits = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (c, labels) = line
                .split_once('*')
                .ok_or(Error::Parse("expected `coefficient * labels`"))?;
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse("bad coefficient"))?;
            let s: PauliString = labels.parse()?;
            match qubits {
                None => qubits = Some(s.qubit_count()),
                Some(n) if n != s.qubit_count() => {
                    return Err(Error::QubitMismatch {
                        left: n,
                        right: s.qubit_count(),
                    })
                }
                _ => {}
            }
            terms.push((c, s));
        }
        let qubits = qubits.ok_or(Error::Parse("empty pauli sum"))?;
        PauliSum::new(qubits, terms)
    }
}

fn check_dense(qubits: usize) -> Result<()> {
    if qubits > MAX_DENSE_QUBITS {
        Err(Error::TooManyQubits {
            qubits,
            max: MAX_DENSE_QUBITS,
        })
    } else {
        Ok(())
    }
}

/// Convenience for tests and fixtures: `ps("XZ")`.
pub fn ps(labels: &str) -> PauliString {
    labels.parse().expect("valid pauli labels")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disjoint_supports_commute() {
        let (phase, p) = ps("XI").multiply(&ps("IX")).unwrap();
        assert_eq!(phase, Phase::One);
        assert_eq!(p, ps("XX"));
    }

    #[test]
    fn z_is_an_involution() {
        let (phase, p) = ps("Z").multiply(&ps("Z")).unwrap();
        assert_eq!(phase, Phase::One);
        assert!(p.is_identity());
    }

    #[test]
    fn xy_is_iz() {
        let (phase, p) = ps("X").multiply(&ps("Y")).unwrap();
        assert_eq!(phase, Phase::I);
        assert_eq!(p, ps("Z"));
    }

    #[test]
    fn multiply_rejects_mismatched_lengths() {
        assert!(matches!(
            ps("X").multiply(&ps("XX")),
            Err(Error::QubitMismatch { .. })
        ));
    }

    #[test]
    fn z_matrix_is_diagonal() {
        let m = ps("Z").matrix().unwrap();
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(1, 1)], c(-1.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn identity_matrix_on_two_qubits() {
        let m = ps("II").matrix().unwrap();
        assert_eq!(m, DMatrix::identity(4, 4));
    }

    #[test]
    fn half_x_plus_half_z_eigenvalues() {
        let h = PauliSum::new(1, [(0.5, ps("X")), (0.5, ps("Z"))]).unwrap();
        let m = h.matrix().unwrap();
        // real symmetric here, so the real part carries the whole spectrum
        let real = m.map(|z| z.re);
        let mut ev: Vec<f64> = real.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = core::f64::consts::SQRT_2 / 2.0;
        assert_abs_diff_eq!(ev[0], -r, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], r, epsilon = 1e-14);
    }

    #[test]
    fn dense_realization_is_capped() {
        let s = PauliString::identity(5);
        assert!(matches!(s.matrix(), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn product_state_expectations() {
        let h = PauliSum::new(1, [(1.0, ps("Z"))]).unwrap();
        assert_eq!(h.expectation_product_state(&[[c(1.0, 0.0), c(0.0, 0.0)]]).unwrap(), 1.0);

        let r = core::f64::consts::FRAC_1_SQRT_2;
        let x = PauliSum::new(1, [(1.0, ps("X"))]).unwrap();
        assert_abs_diff_eq!(
            x.expectation_product_state(&[[c(r, 0.0), c(r, 0.0)]]).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        // exp(-i θ Y / 2)|0> = cos(θ/2)|0> + sin(θ/2)|1>
        let theta = core::f64::consts::PI / 3.0;
        let (s, co) = libm::sincos(theta / 2.0);
        let z = h.expectation_product_state(&[[c(co, 0.0), c(s, 0.0)]]).unwrap();
        assert_abs_diff_eq!(z, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unnormalized_factor_is_rejected() {
        let h = PauliSum::new(1, [(1.0, ps("Z"))]).unwrap();
        assert!(matches!(
            h.expectation_product_state(&[[c(1.0, 0.0), c(1.0, 0.0)]]),
            Err(Error::Unnormalized { index: 0, .. })
        ));
    }

    #[test]
    fn normalization_merges_and_sorts() {
        let h = PauliSum::new(2, [(1.0, ps("ZZ")), (0.5, ps("XI")), (-1.0, ps("ZZ")), (2.0, ps("II"))]).unwrap();
        assert_eq!(h.terms(), &[(2.0, ps("II")), (0.5, ps("XI"))]);
        assert_eq!(h.constant(), 2.0);
    }

    #[test]
    fn text_format() {
        let h: PauliSum = "0.25 * ZZ\n-1.5 * XI\n\n".parse().unwrap();
        assert_eq!(h.to_string(), "-1.5 * XI\n0.25 * ZZ\n");
        assert!("0.1 * XQ".parse::<PauliSum>().is_err());
        assert!("0.1 * X\n0.2 * XX".parse::<PauliSum>().is_err());
    }

    fn arb_pauli() -> impl Strategy<Value = Pauli> {
        prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
    }

    fn arb_pair() -> impl Strategy<Value = (PauliString, PauliString)> {
        (1usize..=3).prop_flat_map(|n| {
            (
                proptest::collection::vec(arb_pauli(), n),
                proptest::collection::vec(arb_pauli(), n),
            )
                .prop_map(|(a, b)| (PauliString::new(a).unwrap(), PauliString::new(b).unwrap()))
        })
    }

    fn arb_sum() -> impl Strategy<Value = PauliSum> {
        (1usize..=3).prop_flat_map(|n| {
            proptest::collection::vec((-2.0f64..2.0, proptest::collection::vec(arb_pauli(), n)), 1..8)
                .prop_map(move |t| {
                    PauliSum::new(n, t.into_iter().map(|(c, f)| (c, PauliString::new(f).unwrap()))).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn multiply_matches_dense_product((a, b) in arb_pair()) {
            let (phase, p) = a.multiply(&b).unwrap();
            let lhs = a.matrix().unwrap() * b.matrix().unwrap();
            let rhs = p.matrix().unwrap() * phase.value();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn product_state_matches_dense(
            h in arb_sum(),
            angles in proptest::collection::vec((0.0f64..3.2, -3.2f64..3.2), 3),
        ) {
            let n = h.qubit_count();
            let state: Vec<[Complex64; 2]> = angles[..n]
                .iter()
                .map(|&(t, p)| {
                    let (s, co) = libm::sincos(t / 2.0);
                    [c(co, 0.0), Complex64::from_polar(s, p)]
                })
                .collect();
            let mut psi = vec![c(1.0, 0.0)];
            for phi in &state {
                psi = psi.iter().flat_map(|a| [a * phi[0], a * phi[1]]).collect();
            }
            let fast = h.expectation_product_state(&state).unwrap();
            let dense = h.expectation(&psi).unwrap();
            prop_assert!((fast - dense).abs() <= 1e-12);
        }

        #[test]
        fn sums_are_hermitian(h in arb_sum()) {
            let m = h.matrix().unwrap();
            prop_assert!((&m - m.adjoint()).norm() <= 1e-14);
        }

        #[test]
        fn text_round_trip(h in arb_sum()) {
            prop_assume!(!h.terms().is_empty());
            let back: PauliSum = h.to_string().parse().unwrap();
            prop_assert_eq!(back, h);
        }
    }
}
