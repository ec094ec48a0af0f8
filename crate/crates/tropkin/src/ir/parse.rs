//! Model file format.
//!
//! Models are JSON documents with the keys:
//!
//! * `variables` — array of names,
//! * `equations` — one entry per variable; either an array of terms or
//!   `{"num": [...], "den": [...]}` for rational rates,
//! * `conservation_laws` — optional array of `{"coeffs": [...], "total": t}`,
//! * `epsilon` — optional number.
//!
//! Each term is `{"coeff": c, "eps_order": g, "exponents": [..]}` with an
//! integer ε-order and an integer exponent vector of the system dimension.
//! Parsing validates the result; syntax errors carry the line/column from the
//! JSON reader.

use super::{ConservationLaw, Equation, IrError, MonomialTerm, ODESystem};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct TermFile {
    coeff: f64,
    eps_order: i64,
    exponents: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EquationFile {
    Polynomial(Vec<TermFile>),
    Rational {
        num: Vec<TermFile>,
        den: Vec<TermFile>,
    },
}

#[derive(Serialize, Deserialize)]
struct LawFile {
    coeffs: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    variables: Vec<String>,
    equations: Vec<EquationFile>,
    #[serde(default)]
    conservation_laws: Vec<LawFile>,
    #[serde(default)]
    epsilon: Option<f64>,
}

fn term_from_file(t: TermFile) -> MonomialTerm {
    MonomialTerm {
        coeff: t.coeff,
        eps_order: Rational64::from_integer(t.eps_order),
        exponents: t.exponents,
    }
}

fn term_to_file(t: &MonomialTerm) -> TermFile {
    debug_assert!(
        t.eps_order.is_integer(),
        "only integer ε-orders are serializable"
    );
    TermFile {
        coeff: t.coeff,
        eps_order: *t.eps_order.numer() / *t.eps_order.denom(),
        exponents: t.exponents.clone(),
    }
}

/// Approximate a rational law coefficient for files. Model files carry plain
/// numbers; parse_model reconstructs small rationals from them.
fn coeff_to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn coeff_from_f64(v: f64) -> Rational64 {
    // Law coefficients are stoichiometric weights; files carry them as
    // numbers, almost always small integers or simple fractions.
    Rational64::approximate_float(v).unwrap_or_else(|| Rational64::from_integer(v.round() as i64))
}

/// Parse a model document into a validated [`ODESystem`].
pub fn parse_model(text: &str) -> Result<ODESystem, IrError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| IrError::Syntax(e.to_string()))?;
    let equations = file
        .equations
        .into_iter()
        .map(|eq| match eq {
            EquationFile::Polynomial(terms) => {
                Equation::Polynomial(terms.into_iter().map(term_from_file).collect())
            }
            EquationFile::Rational { num, den } => Equation::Rational {
                num: num.into_iter().map(term_from_file).collect(),
                den: den.into_iter().map(term_from_file).collect(),
            },
        })
        .collect();
    let conservation_laws = file
        .conservation_laws
        .into_iter()
        .map(|law| {
            ConservationLaw::new(
                law.coeffs.into_iter().map(coeff_from_f64).collect(),
                law.total,
            )
        })
        .collect();
    let sys = ODESystem {
        variables: file.variables,
        equations,
        conservation_laws,
        epsilon: file.epsilon,
    };
    sys.validate()?;
    Ok(sys)
}

/// Serialize a system back to the model file format (pretty JSON).
pub fn serialize_model(sys: &ODESystem) -> String {
    let file = ModelFile {
        variables: sys.variables.clone(),
        equations: sys
            .equations
            .iter()
            .map(|eq| match eq {
                Equation::Polynomial(terms) => {
                    EquationFile::Polynomial(terms.iter().map(term_to_file).collect())
                }
                Equation::Rational { num, den } => EquationFile::Rational {
                    num: num.iter().map(term_to_file).collect(),
                    den: den.iter().map(term_to_file).collect(),
                },
            })
            .collect(),
        conservation_laws: sys
            .conservation_laws
            .iter()
            .map(|law| LawFile {
                coeffs: law.coeffs.iter().map(|q| coeff_to_f64(*q)).collect(),
                total: law.total,
            })
            .collect(),
        epsilon: sys.epsilon,
    };
    serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
}
