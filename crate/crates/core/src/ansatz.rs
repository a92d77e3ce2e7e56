//! Two-parameter UCCSD ansatz on the Hartree-Fock state `|10⟩` and the
//! 25-function trigonometric basis spanning its energy landscape.
//!
//! The state is
//!
//! ```text
//! |φ(θ)⟩ = e^{iθ₁Y₁/2} e^{−iθ₁Y₀/2} e^{−iθ₂Y₀X₁/2} e^{iθ₂X₀Y₁/2} |10⟩
//! ```
//!
//! with the rightmost factor applied first. Any expectation value is a
//! homogeneous quartic in `(cos θₖ/2, sin θₖ/2)` for each angle, hence a
//! combination of `T_(i,j) = c₁^i s₁^(4−i) c₂^j s₂^(4−j)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// Float math for no_std; redundant when another crate links std.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::embedding::QubitHamiltonian;
use crate::error::{Error, Result};
use crate::pauli::{ps, PauliString, PauliSum};
use crate::simulator::{compile_pauli_rotation, Gate};

/// Polynomial order per angle.
pub const ORDER: usize = 4;
pub const BASIS_SIZE: usize = (ORDER + 1) * (ORDER + 1);
pub const QUBITS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaPoint {
    pub theta1: f64,
    pub theta2: f64,
}

impl ThetaPoint {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        for t in [theta1, theta2] {
            if !(-PI..=PI).contains(&t) {
                return Err(Error::AngleOutOfRange(t));
            }
        }
        Ok(Self { theta1, theta2 })
    }

    /// Wraps both angles into `[−π, π)`.
    pub fn wrapped(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap_angle(theta1),
            theta2: wrap_angle(theta2),
        }
    }

    pub fn origin() -> Self {
        Self {
            theta1: 0.0,
            theta2: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }
}

pub fn wrap_angle(x: f64) -> f64 {
    let y = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if y >= PI {
        -PI
    } else {
        y
    }
}

/// Values `T_s`, `s = 5i + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisVector {
    pub values: [f64; BASIS_SIZE],
}

impl BasisVector {
    pub fn index(i: usize, j: usize) -> usize {
        (ORDER + 1) * i + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[Self::index(i, j)]
    }

    pub fn dot(&self, xi: &[f64]) -> f64 {
        self.values.iter().zip(xi).map(|(a, b)| a * b).sum()
    }
}

/// `g_k(x) = cos^k(x/2) sin^(4−k)(x/2)` and its first two derivatives.
pub fn basis_1d(x: f64) -> [[f64; ORDER + 1]; 3] {
    let (s, c) = (x / 2.0).sin_cos();
    let pow = |b: f64, e: i32| if e < 0 { 0.0 } else { b.powi(e) };
    let mut out = [[0.0; ORDER + 1]; 3];
    for k in 0..=ORDER {
        let (i, m) = (k as f64, (ORDER - k) as f64);
        let (ki, km) = (k as i32, (ORDER - k) as i32);
        out[0][k] = pow(c, ki) * pow(s, km);
        out[1][k] = 0.5 * (-i * pow(c, ki - 1) * pow(s, km + 1) + m * pow(c, ki + 1) * pow(s, km - 1));
        out[2][k] = 0.25
            * (i * (i - 1.0) * pow(c, ki - 2) * pow(s, km + 2)
                - (i * (m + 1.0) + m * (i + 1.0)) * pow(c, ki) * pow(s, km)
                + m * (m - 1.0) * pow(c, ki + 2) * pow(s, km - 2));
    }
    out
}

/// Basis values at arbitrary real angles.
pub fn basis_at(theta1: f64, theta2: f64) -> BasisVector {
    let a = basis_1d(theta1)[0];
    let b = basis_1d(theta2)[0];
    let mut values = [0.0; BASIS_SIZE];
    for i in 0..=ORDER {
        for j in 0..=ORDER {
            values[BasisVector::index(i, j)] = a[i] * b[j];
        }
    }
    BasisVector { values }
}

pub fn basis_functions(theta: ThetaPoint) -> BasisVector {
    basis_at(theta.theta1, theta.theta2)
}

/// Value, gradient and Hessian `[∂₁₁, ∂₁₂, ∂₂₂]` of `Σ ξ_s T_s` at `θ`.
pub fn expansion_jet(xi: &[f64], theta1: f64, theta2: f64) -> (f64, [f64; 2], [f64; 3]) {
    let a = basis_1d(theta1);
    let b = basis_1d(theta2);
    let mut value = 0.0;
    let mut grad = [0.0; 2];
    let mut hess = [0.0; 3];
    for i in 0..=ORDER {
        for j in 0..=ORDER {
            let x = xi[BasisVector::index(i, j)];
            value += x * a[0][i] * b[0][j];
            grad[0] += x * a[1][i] * b[0][j];
            grad[1] += x * a[0][i] * b[1][j];
            hess[0] += x * a[2][i] * b[0][j];
            hess[1] += x * a[1][i] * b[1][j];
            hess[2] += x * a[0][i] * b[2][j];
        }
    }
    (value, grad, hess)
}

/// The four exponentials in application order, as `(generator, angle)` for
/// `exp(−i angle P / 2)`.
pub fn factors(theta: ThetaPoint) -> [(PauliString, f64); 4] {
    [
        (ps("XY"), -theta.theta2),
        (ps("YX"), theta.theta2),
        (ps("YI"), theta.theta1),
        (ps("IY"), -theta.theta1),
    ]
}

/// Compiled gate list: each two-qubit rotation becomes basis change, CNOT,
/// `Rz`, CNOT, inverse basis change (9 gates); 20 gates in total.
pub fn build_circuit(theta: ThetaPoint) -> Result<Vec<Gate>> {
    let theta = ThetaPoint::new(theta.theta1, theta.theta2)?;
    Ok(factors(theta)
        .iter()
        .flat_map(|(p, angle)| compile_pauli_rotation(p, *angle))
        .collect())
}

/// One gate per line.
pub fn circuit_text(circuit: &[Gate]) -> alloc::string::String {
    use core::fmt::Write;
    let mut out = alloc::string::String::new();
    for g in circuit {
        writeln!(out, "{g}").expect("writing to a string");
    }
    out
}

/// Exact state of the uncompiled ansatz.
pub fn statevector(theta: ThetaPoint) -> [Complex64; 4] {
    let mut psi = [Complex64::new(0.0, 0.0); 4];
    psi[QubitHamiltonian::REFERENCE_INDEX] = Complex64::new(1.0, 0.0);
    for (p, angle) in factors(theta) {
        let m = p.matrix().expect("two-qubit string");
        let (s, c) = (angle / 2.0).sin_cos();
        let mut next = [Complex64::new(0.0, 0.0); 4];
        for (r, out) in next.iter_mut().enumerate() {
            let rotated: Complex64 = (0..4).map(|k| m[(r, k)] * psi[k]).sum();
            *out = psi[r] * c + rotated * Complex64::new(0.0, -s);
        }
        psi = next;
    }
    psi
}

/// On `θ₂ = 0` the state is a product: `q0 = (−s, c)`, `q1 = (c, −s)` with
/// `s, c` of `θ₁/2`.
pub fn boundary_state(theta1: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta1 / 2.0).sin_cos();
    let r = |x: f64| Complex64::new(x, 0.0);
    [[r(-s), r(c)], [r(c), r(-s)]]
}

pub fn boundary_expectation(theta1: f64, sum: &PauliSum) -> Result<f64> {
    sum.expectation_product_state(&boundary_state(theta1))
}

pub fn exact_boundary_energy(theta1: f64, h: &QubitHamiltonian) -> f64 {
    boundary_expectation(theta1, &h.sum).expect("two-qubit product state")
}
