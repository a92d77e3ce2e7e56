//! Text artifacts: surrogate model dumps, circuit listings, raw counts and
//! Hamiltonian coefficients.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use pgpr_core::ansatz::{build_circuit, circuit_text, ThetaPoint, BASIS_SIZE};
use pgpr_core::embedding::{EmbeddingParams, QubitHamiltonian};
use pgpr_core::simulator::Counts;
use pgpr_core::surrogate::{SurrogateModel, VarianceFormula};

use crate::error::CliError;
use crate::table::{num, Table};

pub const MODEL_MAGIC: &str = "pgpr-surrogate";
pub const MODEL_VERSION: u32 = 1;

/// Versioned plain-text dump of a fitted surrogate.
pub fn model_to_text(observable: &str, model: &SurrogateModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}");
    let _ = writeln!(s, "observable {observable}");
    let _ = writeln!(s, "t {}", model.t);
    let variance = match model.variance_formula {
        VarianceFormula::Posterior => "posterior",
        VarianceFormula::MeanSubtracted => "mean-subtracted",
    };
    let _ = writeln!(s, "variance {variance}");
    let _ = writeln!(s, "condition {}", model.condition);
    let _ = writeln!(s, "xi {}", model.xi_bar.len());
    let _ = writeln!(s, "{}", join(model.xi_bar.iter().copied()));
    let _ = writeln!(s, "cov {}", model.coeff_cov.nrows());
    for r in 0..model.coeff_cov.nrows() {
        let _ = writeln!(s, "{}", join(model.coeff_cov.row(r).iter().copied()));
    }
    let _ = writeln!(s, "constraints {}", model.constraints.len());
    for (t, v) in &model.constraints {
        let _ = writeln!(s, "{} {} {}", t.theta1, t.theta2, v);
    }
    s
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(num).collect::<Vec<_>>().join(" ")
}

/// Inverse of [`model_to_text`]; returns the observable name and the model.
pub fn model_from_text(text: &str) -> Result<(String, SurrogateModel), CliError> {
    let bad = |message: String| CliError::Format {
        what: "model dump",
        message,
    };
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(format!("missing {what}")));
    let tagged = |line: &str, tag: &str| -> Result<String, CliError> {
        line.strip_prefix(tag)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{tag}`, got `{line}`")))
    };
    let floats = |line: &str| -> Result<Vec<f64>, CliError> {
        line.split_whitespace()
            .map(|x| x.parse().map_err(|_| bad(format!("bad number `{x}`"))))
            .collect()
    };
    let count = |s: String| -> Result<usize, CliError> { s.parse().map_err(|_| bad(format!("bad count `{s}`"))) };

    let version = tagged(next("header")?, MODEL_MAGIC)?;
    if version != MODEL_VERSION.to_string() {
        return Err(bad(format!("unsupported version {version}")));
    }
    let observable = tagged(next("observable")?, "observable")?;
    let t = floats(&tagged(next("t")?, "t")?)?;
    let variance_formula = match tagged(next("variance")?, "variance")?.as_str() {
        "posterior" => VarianceFormula::Posterior,
        "mean-subtracted" => VarianceFormula::MeanSubtracted,
        v => return Err(bad(format!("unknown variance formula `{v}`"))),
    };
    let condition = floats(&tagged(next("condition")?, "condition")?)?;
    let n = count(tagged(next("xi")?, "xi")?)?;
    let xi_bar = floats(next("xi values")?)?;
    if n != BASIS_SIZE || xi_bar.len() != n {
        return Err(bad(format!("expected {BASIS_SIZE} coefficients")));
    }
    let m = count(tagged(next("cov")?, "cov")?)?;
    if m != n {
        return Err(bad("covariance size differs from coefficient count".into()));
    }
    let mut cov = Vec::with_capacity(n * n);
    for _ in 0..n {
        let row = floats(next("covariance row")?)?;
        if row.len() != n {
            return Err(bad("short covariance row".into()));
        }
        cov.extend(row);
    }
    let k = count(tagged(next("constraints")?, "constraints")?)?;
    let mut constraints = Vec::with_capacity(k);
    for _ in 0..k {
        let v = floats(next("constraint")?)?;
        if v.len() != 3 {
            return Err(bad("constraint needs theta1 theta2 value".into()));
        }
        constraints.push((ThetaPoint::new(v[0], v[1])?, v[2]));
    }
    let (t, condition) = match (t.as_slice(), condition.as_slice()) {
        ([t], [c]) => (*t, *c),
        _ => return Err(bad("t and condition take one value".into())),
    };
    Ok((
        observable,
        SurrogateModel {
            xi_bar,
            coeff_cov: DMatrix::from_row_slice(n, n, &cov),
            t,
            variance_formula,
            constraints,
            condition,
        },
    ))
}

/// Gate listing of the compiled ansatz at `theta`, one gate per line.
pub fn circuit_dump(theta: ThetaPoint) -> Result<String, CliError> {
    Ok(circuit_text(&build_circuit(theta)?))
}

/// Computational-basis label, qubit 0 first.
pub fn bitstring(index: usize, qubits: usize) -> String {
    (0..qubits)
        .map(|q| if index >> (qubits - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// `(prepared, bitstring, count)` rows for calibration columns.
pub fn counts_table(columns: &[Counts], qubits: usize) -> Table {
    let mut t = Table::new("counts are shots; bitstrings list qubit 0 first", &["prepared", "bitstring", "count"]);
    for (j, counts) in columns.iter().enumerate() {
        for k in 0..1usize << qubits {
            let c = counts.get(&k).copied().unwrap_or(0);
            t.push(vec![bitstring(j, qubits), bitstring(k, qubits), c.to_string()]);
        }
    }
    t
}

pub const ZETA_UNITS: &str = "U, lambda_c and zeta in units of 2D (D = 0.5)";

pub fn zeta_header() -> [&'static str; 8] {
    ["u", "lambda_c", "zeta0", "zeta1", "zeta2", "zeta3", "zeta4", "zeta5"]
}

pub fn zeta_row(p: &EmbeddingParams, h: &QubitHamiltonian) -> Vec<String> {
    let mut row = vec![num(p.u), num(p.lambda_c)];
    row.extend(h.zeta.iter().map(|&z| num(z)));
    row
}

/// Writes `text` to `path`, creating nothing else.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pgpr_core::surrogate::{fit, training_mesh, FitOptions, Sample, TrainingSet};

    fn model() -> SurrogateModel {
        let samples = training_mesh()
            .into_iter()
            .map(|t| {
                let v = (t.theta1).cos() * 0.3 + (t.theta2 * 0.5).sin().powi(2);
                if t.theta2 == 0.0 {
                    Sample::exact(t, v)
                } else {
                    Sample::noisy(t, v + 0.01 * (t.theta1 * 7.0).sin(), 0.05)
                }
            })
            .collect();
        fit(&TrainingSet::new(samples).unwrap(), FitOptions::default()).unwrap()
    }

    #[test]
    fn model_dump_round_trips_exactly() {
        let m = model();
        let text = model_to_text("energy", &m);
        assert!(text.starts_with("pgpr-surrogate 1\nobservable energy\n"));
        let (name, back) = model_from_text(&text).unwrap();
        assert_eq!(name, "energy");
        assert_eq!(back, m);
    }

    #[test]
    fn model_dump_rejects_other_versions() {
        let text = model_to_text("energy", &model()).replacen("pgpr-surrogate 1", "pgpr-surrogate 2", 1);
        assert!(matches!(model_from_text(&text), Err(CliError::Format { .. })));
        let truncated: String = model_to_text("f1", &model()).lines().take(9).collect::<Vec<_>>().join("\n");
        assert!(model_from_text(&truncated).is_err());
    }

    #[test]
    fn bitstrings_are_qubit_zero_first() {
        assert_eq!(bitstring(2, 2), "10");
        assert_eq!(bitstring(1, 2), "01");
        assert_eq!(bitstring(0b011, 3), "011");
    }

    #[test]
    fn circuit_dump_has_one_gate_per_line() {
        let text = circuit_dump(ThetaPoint::new(0.5, 0.25).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 20);
        assert_eq!(text.lines().next(), Some("H 0"));
    }
}
