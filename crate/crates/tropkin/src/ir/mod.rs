//! Core data model: ε-graded monomial terms, ODE systems, conservation laws
//! and renormalization exponents.
//!
//! A vector field component is a signed sum of terms `c · ε^γ · x^α` with a
//! real coefficient `c ≠ 0`, a rational ε-order `γ` and a Laurent multi-index
//! `α ∈ ℤ^n`. Systems are either polynomial (one term list per equation) or
//! rational (a numerator/denominator pair of term lists).
//!
//! ε-orders are integers in model files but rationals internally: the
//! renormalization exponents produced by equilibration may be rational, and
//! exact arithmetic avoids spurious ties when orders are compared.

mod parse;

pub use parse::{parse_model, serialize_model};

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from construction, validation and evaluation of systems.
#[derive(Debug, Error)]
pub enum IrError {
    #[error("model syntax error: {0}")]
    Syntax(String),
    #[error("term has zero coefficient (equation {equation}, term {term})")]
    ZeroCoefficient { equation: usize, term: usize },
    #[error(
        "dimension mismatch: term exponent vector has length {found}, system has {expected} variables (equation {equation}, term {term})"
    )]
    DimensionMismatch {
        equation: usize,
        term: usize,
        expected: usize,
        found: usize,
    },
    #[error("system has {equations} equations for {variables} variables")]
    EquationCount { equations: usize, variables: usize },
    #[error("denominator of equation {equation} is empty")]
    EmptyDenominator { equation: usize },
    #[error("equation {equation} has an empty term list")]
    EmptyEquation { equation: usize },
    #[error("conservation law {law} has no nonzero coefficient")]
    DegenerateLaw { law: usize },
    #[error("conservation law {law} has nonpositive total {total}")]
    NonpositiveTotal { law: usize, total: f64 },
    #[error("state component {index} is {value}; evaluation requires strictly positive states")]
    NonpositiveState { index: usize, value: f64 },
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("denominator of equation {equation} vanishes at the given state")]
    DivisionByZero { equation: usize },
    #[error("operation requires a polynomial system, but equation {equation} is rational; multiply the denominators through first")]
    RationalNotSupported { equation: usize },
    #[error("exponent vector has length {found}, expected {expected}")]
    ExponentLength { expected: usize, found: usize },
}

/// One signed monomial `coeff · ε^eps_order · x^exponents`.
///
/// `coeff` is the dimensionless rate constant, `eps_order` the grading of the
/// term in ε, and `exponents` a Laurent multi-index over the system variables
/// (negative entries are allowed; evaluation then requires positive states).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub eps_order: Rational64,
    pub exponents: Vec<i64>,
}

impl MonomialTerm {
    /// Build a term with an integer ε-order. Zero coefficients are rejected.
    pub fn new(coeff: f64, eps_order: i64, exponents: Vec<i64>) -> Result<Self, IrError> {
        Self::with_order(coeff, Rational64::from_integer(eps_order), exponents)
    }

    pub fn with_order(
        coeff: f64,
        eps_order: Rational64,
        exponents: Vec<i64>,
    ) -> Result<Self, IrError> {
        if coeff == 0.0 || !coeff.is_finite() {
            return Err(IrError::ZeroCoefficient {
                equation: 0,
                term: 0,
            });
        }
        Ok(Self {
            coeff,
            eps_order,
            exponents,
        })
    }

    /// Renormalized ε-order `γ + ⟨α, a⟩` of this term (before subtracting the
    /// equation's own exponent). Larger order means smaller term as ε → 0.
    pub fn order_at(&self, a: &ExponentVector) -> Rational64 {
        let mut order = self.eps_order;
        for (alpha, ai) in self.exponents.iter().zip(a.0.iter()) {
            order += Rational64::from_integer(*alpha) * ai;
        }
        order
    }

    /// Numeric value `coeff · ε^γ · x^α`.
    pub fn eval(&self, x: &[f64], eps: f64) -> f64 {
        let mut v = self.coeff * eps_powr(eps, self.eps_order);
        for (xi, &alpha) in x.iter().zip(self.exponents.iter()) {
            if alpha != 0 {
                v *= powi(*xi, alpha);
            }
        }
        v
    }

    /// Natural-log magnitude `ln|coeff| + γ ln ε + ⟨α, ln x⟩`.
    ///
    /// Working in log space keeps orders like ε⁻⁶ well inside f64 range.
    pub fn log_magnitude(&self, log_x: &[f64], log_eps: f64) -> f64 {
        let mut v = self.coeff.abs().ln() + rational_to_f64(self.eps_order) * log_eps;
        for (lx, &alpha) in log_x.iter().zip(self.exponents.iter()) {
            if alpha != 0 {
                v += alpha as f64 * lx;
            }
        }
        v
    }

    pub fn is_production(&self) -> bool {
        self.coeff > 0.0
    }
}

/// `x^alpha` for Laurent integer exponents.
pub(crate) fn powi(x: f64, alpha: i64) -> f64 {
    match alpha {
        0 => 1.0,
        1 => x,
        2 => x * x,
        -1 => 1.0 / x,
        _ => x.powi(alpha.clamp(i32::MIN as i64, i32::MAX as i64) as i32),
    }
}

/// `eps^q` for rational q.
pub(crate) fn eps_powr(eps: f64, q: Rational64) -> f64 {
    if q.is_zero() {
        1.0
    } else if q.is_integer() {
        powi(eps, *q.numer())
    } else {
        eps.powf(rational_to_f64(q))
    }
}

pub(crate) fn rational_to_f64(q: Rational64) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Right-hand side of one equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Equation {
    /// Plain sum of terms.
    Polynomial(Vec<MonomialTerm>),
    /// Quotient of two term sums.
    Rational {
        num: Vec<MonomialTerm>,
        den: Vec<MonomialTerm>,
    },
}

impl Equation {
    pub fn is_rational(&self) -> bool {
        matches!(self, Equation::Rational { .. })
    }

    /// Terms of the polynomial case; `None` for rational equations.
    pub fn terms(&self) -> Option<&[MonomialTerm]> {
        match self {
            Equation::Polynomial(t) => Some(t),
            Equation::Rational { .. } => None,
        }
    }
}

/// Linear conservation law `⟨coeffs, x⟩ = total`.
///
/// `eps_orders` is zero for laws read from files; renormalization fills in the
/// per-species orders so the law reads `Σ cᵢ ε^{aᵢ} x̄ᵢ = total`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationLaw {
    pub coeffs: Vec<Rational64>,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_orders: Vec<Rational64>,
}

impl ConservationLaw {
    pub fn new(coeffs: Vec<Rational64>, total: f64) -> Self {
        Self {
            coeffs,
            total,
            eps_orders: Vec::new(),
        }
    }

    /// Indices of species with nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect()
    }

    /// `⟨coeffs, ε^orders ∘ x⟩` at a state.
    pub fn eval(&self, x: &[f64], eps: f64) -> f64 {
        let mut s = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let scale = if self.eps_orders.is_empty() {
                1.0
            } else {
                eps_powr(eps, self.eps_orders[i])
            };
            s += rational_to_f64(*c) * scale * x[i];
        }
        s
    }
}

/// Renormalization exponent vector `a`: the substitution `x_i = ε^{a_i} x̄_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentVector(pub Vec<Rational64>);

impl ExponentVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Rational64::zero(); n])
    }

    pub fn from_integers(a: &[i64]) -> Self {
        Self(a.iter().map(|&v| Rational64::from_integer(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|q| rational_to_f64(*q)).collect()
    }
}

impl std::fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, ")")
    }
}

/// An ε-graded ODE system `x_i' = F_i(x, ε)`.
///
/// Immutable after construction; all operations on it are pure, so values can
/// be shared freely across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ODESystem {
    pub variables: Vec<String>,
    pub equations: Vec<Equation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conservation_laws: Vec<ConservationLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl ODESystem {
    pub fn new(
        variables: Vec<String>,
        equations: Vec<Equation>,
        conservation_laws: Vec<ConservationLaw>,
    ) -> Result<Self, IrError> {
        let sys = Self {
            variables,
            equations,
            conservation_laws,
            epsilon: None,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Number of variables (= number of equations).
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn is_polynomial(&self) -> bool {
        !self.equations.iter().any(Equation::is_rational)
    }

    /// Check the structural invariants: matching dimensions, no zero
    /// coefficients, nonempty denominators, nondegenerate laws.
    pub fn validate(&self) -> Result<(), IrError> {
        let n = self.variables.len();
        if self.equations.len() != n {
            return Err(IrError::EquationCount {
                equations: self.equations.len(),
                variables: n,
            });
        }
        let check_terms = |eq: usize, terms: &[MonomialTerm]| -> Result<(), IrError> {
            for (t, term) in terms.iter().enumerate() {
                if term.coeff == 0.0 || !term.coeff.is_finite() {
                    return Err(IrError::ZeroCoefficient {
                        equation: eq,
                        term: t,
                    });
                }
                if term.exponents.len() != n {
                    return Err(IrError::DimensionMismatch {
                        equation: eq,
                        term: t,
                        expected: n,
                        found: term.exponents.len(),
                    });
                }
            }
            Ok(())
        };
        for (i, eq) in self.equations.iter().enumerate() {
            match eq {
                Equation::Polynomial(terms) => {
                    if terms.is_empty() {
                        return Err(IrError::EmptyEquation { equation: i });
                    }
                    check_terms(i, terms)?;
                }
                Equation::Rational { num, den } => {
                    if den.is_empty() {
                        return Err(IrError::EmptyDenominator { equation: i });
                    }
                    if num.is_empty() {
                        return Err(IrError::EmptyEquation { equation: i });
                    }
                    check_terms(i, num)?;
                    check_terms(i, den)?;
                }
            }
        }
        for (l, law) in self.conservation_laws.iter().enumerate() {
            if law.coeffs.len() != n {
                return Err(IrError::ExponentLength {
                    expected: n,
                    found: law.coeffs.len(),
                });
            }
            if law.coeffs.iter().all(Rational64::is_zero) {
                return Err(IrError::DegenerateLaw { law: l });
            }
            if !(law.total > 0.0) {
                return Err(IrError::NonpositiveTotal {
                    law: l,
                    total: law.total,
                });
            }
        }
        Ok(())
    }

    /// Evaluate the vector field at a strictly positive state.
    pub fn evaluate_field(&self, x: &[f64], eps: f64) -> Result<Vec<f64>, IrError> {
        if !(eps > 0.0) {
            return Err(IrError::NonpositiveEpsilon(eps));
        }
        for (i, &xi) in x.iter().enumerate() {
            if !(xi > 0.0) {
                return Err(IrError::NonpositiveState {
                    index: i,
                    value: xi,
                });
            }
        }
        let mut field = Vec::with_capacity(self.equations.len());
        for (i, eq) in self.equations.iter().enumerate() {
            let value = match eq {
                Equation::Polynomial(terms) => sum_terms(terms, x, eps),
                Equation::Rational { num, den } => {
                    let q = sum_terms(den, x, eps);
                    if q == 0.0 {
                        return Err(IrError::DivisionByZero { equation: i });
                    }
                    sum_terms(num, x, eps) / q
                }
            };
            field.push(value);
        }
        Ok(field)
    }

    /// Rewrite the system in barred variables `x̄_i = ε^{-a_i} x_i`.
    ///
    /// Each term's ε-order becomes `γ + ⟨α, a⟩ - a_i`; coefficients and
    /// exponents are unchanged. Conservation laws acquire the per-species
    /// orders `a_i`. Rational systems are rejected.
    pub fn renormalize(&self, a: &ExponentVector) -> Result<ODESystem, IrError> {
        if a.len() != self.dim() {
            return Err(IrError::ExponentLength {
                expected: self.dim(),
                found: a.len(),
            });
        }
        let mut equations = Vec::with_capacity(self.equations.len());
        for (i, eq) in self.equations.iter().enumerate() {
            let terms = match eq {
                Equation::Polynomial(terms) => terms,
                Equation::Rational { .. } => {
                    return Err(IrError::RationalNotSupported { equation: i })
                }
            };
            let renormed = terms
                .iter()
                .map(|t| MonomialTerm {
                    coeff: t.coeff,
                    eps_order: t.order_at(a) - a.0[i],
                    exponents: t.exponents.clone(),
                })
                .collect();
            equations.push(Equation::Polynomial(renormed));
        }
        let conservation_laws = self
            .conservation_laws
            .iter()
            .map(|law| ConservationLaw {
                coeffs: law.coeffs.clone(),
                total: law.total,
                eps_orders: a.0.clone(),
            })
            .collect();
        Ok(ODESystem {
            variables: self.variables.iter().map(|v| format!("{v}_bar")).collect(),
            equations,
            conservation_laws,
            epsilon: self.epsilon,
        })
    }

    /// Index of a variable by name.
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Signed term lists of a polynomial system, split per equation into
    /// (production indices, degradation indices).
    pub fn sign_split(&self, equation: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let terms = self.equations[equation].terms()?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (j, t) in terms.iter().enumerate() {
            if t.coeff > 0.0 {
                pos.push(j);
            } else {
                neg.push(j);
            }
        }
        Some((pos, neg))
    }
}

fn sum_terms(terms: &[MonomialTerm], x: &[f64], eps: f64) -> f64 {
    terms.iter().map(|t| t.eval(x, eps)).sum()
}

/// Split fused numeric coefficients into an explicit grading.
///
/// For every term the helper moves `round(ln|c| / ln ε)` orders of magnitude
/// from the coefficient into `eps_order`, leaving a front factor within
/// [√ε, 1/√ε]. Meant for models whose authors wrote plain rate constants
/// (0.018 at ε = 0.1 becomes 1.8·ε²); each adjusted term is reported in the
/// returned warnings, since the split changes how the system responds to
/// sweeping ε.
pub fn split_fused_coefficients(sys: &ODESystem, eps: f64) -> (ODESystem, Vec<String>) {
    let mut out = sys.clone();
    let mut warnings = Vec::new();
    let log_eps = eps.ln();
    let mut split_list = |equation: usize, terms: &mut [MonomialTerm]| {
        for (j, t) in terms.iter_mut().enumerate() {
            let shift = (t.coeff.abs().ln() / log_eps).round();
            if shift == 0.0 || !shift.is_finite() {
                continue;
            }
            let shift = shift as i64;
            let scaled = t.coeff * eps_powr(eps, Rational64::from_integer(-shift));
            warnings.push(format!(
                "equation {equation}, term {j}: coefficient {} split as {}·eps^{}",
                t.coeff,
                scaled,
                t.eps_order + Rational64::from_integer(shift)
            ));
            t.coeff = scaled;
            t.eps_order += Rational64::from_integer(shift);
        }
    };
    for (i, eq) in out.equations.iter_mut().enumerate() {
        match eq {
            Equation::Polynomial(terms) => split_list(i, terms),
            Equation::Rational { num, den } => {
                split_list(i, num);
                split_list(i, den);
            }
        }
    }
    (out, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_var() -> ODESystem {
        // x' = 1 - x
        ODESystem::new(
            vec!["x".into()],
            vec![Equation::Polynomial(vec![
                MonomialTerm::new(1.0, 0, vec![0]).unwrap(),
                MonomialTerm::new(-1.0, 0, vec![1]).unwrap(),
            ])],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn fixed_point_of_one_var() {
        let sys = one_var();
        let f = sys.evaluate_field(&[1.0], 0.3).unwrap();
        assert_eq!(f, vec![0.0]);
    }

    #[test]
    fn rational_field_value() {
        // x' = x / (1 + x)
        let sys = ODESystem::new(
            vec!["x".into()],
            vec![Equation::Rational {
                num: vec![MonomialTerm::new(1.0, 0, vec![1]).unwrap()],
                den: vec![
                    MonomialTerm::new(1.0, 0, vec![0]).unwrap(),
                    MonomialTerm::new(1.0, 0, vec![1]).unwrap(),
                ],
            }],
            vec![],
        )
        .unwrap();
        let f = sys.evaluate_field(&[1.0], 1.0).unwrap();
        assert!((f[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_state_rejected() {
        let sys = one_var();
        assert!(matches!(
            sys.evaluate_field(&[0.0], 0.1),
            Err(IrError::NonpositiveState { index: 0, .. })
        ));
    }

    #[test]
    fn identity_renormalization() {
        let sys = one_var();
        let renormed = sys.renormalize(&ExponentVector::zeros(1)).unwrap();
        assert_eq!(renormed.equations, sys.equations);
    }

    #[test]
    fn fused_coefficients_split_into_grading() {
        // 0.018 at eps = 0.1 is 1.8 two orders down.
        let sys = ODESystem::new(
            vec!["x".into()],
            vec![Equation::Polynomial(vec![
                MonomialTerm::new(0.018, 0, vec![1]).unwrap(),
                MonomialTerm::new(-1.2, 0, vec![0]).unwrap(),
            ])],
            vec![],
        )
        .unwrap();
        let (graded, warnings) = split_fused_coefficients(&sys, 0.1);
        let terms = graded.equations[0].terms().unwrap();
        assert!((terms[0].coeff - 1.8).abs() < 1e-12);
        assert_eq!(terms[0].eps_order, Rational64::from_integer(2));
        // -1.2 is already order one: untouched.
        assert_eq!(terms[1].coeff, -1.2);
        assert_eq!(warnings.len(), 1);
        // The split preserves the field value at the given eps.
        for &x in &[0.3, 1.0, 4.0] {
            let a = sys.evaluate_field(&[x], 0.1).unwrap()[0];
            let b = graded.evaluate_field(&[x], 0.1).unwrap()[0];
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn term_order_is_affine_in_a() {
        let t = MonomialTerm::new(2.0, -2, vec![1, 0, 2]).unwrap();
        let a = ExponentVector::from_integers(&[3, 0, 4]);
        // -2 + 3 + 8 = 9
        assert_eq!(t.order_at(&a), Rational64::from_integer(9));
        assert_eq!(
            t.order_at(&ExponentVector::zeros(3)),
            Rational64::from_integer(-2)
        );
    }
}
