//! Dominance analysis: the `Dom` operator, complete and two-terms
//! tropicalizations, dominance signatures (modes) and tropical-manifold
//! margins.
//!
//! `Dom` returns the monomial of largest absolute value among a term list at
//! a state, with its sign. Replacing every term sum by its dominant monomial
//! yields a piecewise-smooth system; the locus where the maximum is attained
//! by at least two terms is the tropical manifold, and the connected regions
//! of constant dominance are the modes.
//!
//! All magnitude comparisons run in natural-log space so that ε-orders like
//! ε⁻⁶ stay far from overflow.

use crate::ir::{Equation, IrError, MonomialTerm, ODESystem};
use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TropError {
    #[error("empty term list")]
    EmptyTerms,
    #[error("need at least two terms for a margin")]
    TooFewTerms,
    #[error(
        "equation {equation} ({name}) has terms of one sign only; the two-terms tropicalization needs at least one production and one degradation term"
    )]
    OneSidedEquation { equation: usize, name: String },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Result of the `Dom` operator on one term list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomResult {
    /// Index of the dominant term (lowest index on ties).
    pub index: usize,
    /// Signed monomial value of the dominant term.
    pub value: f64,
    /// True when at least two terms attain the maximal magnitude, i.e. the
    /// state lies on the tropical manifold of this term list.
    pub tie: bool,
}

/// Dominant term of `terms` at state `x` with parameter `eps`.
///
/// Ties are broken by lowest index and reported through [`DomResult::tie`];
/// wall behavior is left to the caller.
pub fn dom(terms: &[MonomialTerm], x: &[f64], eps: f64) -> Result<DomResult, TropError> {
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    dom_logs(terms, &log_x, eps.ln(), x, eps)
}

fn dom_logs(
    terms: &[MonomialTerm],
    log_x: &[f64],
    log_eps: f64,
    x: &[f64],
    eps: f64,
) -> Result<DomResult, TropError> {
    if terms.is_empty() {
        return Err(TropError::EmptyTerms);
    }
    let mut best = 0usize;
    let mut best_log = terms[0].log_magnitude(log_x, log_eps);
    let mut tie = false;
    for (j, t) in terms.iter().enumerate().skip(1) {
        let lm = t.log_magnitude(log_x, log_eps);
        if lm > best_log {
            best = j;
            best_log = lm;
            tie = false;
        } else if lm == best_log {
            tie = true;
        }
    }
    Ok(DomResult {
        index: best,
        value: terms[best].eval(x, eps),
        tie,
    })
}

/// Gap between the largest and second-largest log-magnitudes of `terms`.
///
/// Zero exactly on the tropical manifold; continuous in the state.
pub fn manifold_margin(terms: &[MonomialTerm], x: &[f64], eps: f64) -> Result<f64, TropError> {
    if terms.len() < 2 {
        return Err(TropError::TooFewTerms);
    }
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let log_eps = eps.ln();
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for t in terms {
        let lm = t.log_magnitude(&log_x, log_eps);
        if lm > first {
            second = first;
            first = lm;
        } else if lm > second {
            second = lm;
        }
    }
    Ok(first - second)
}

/// Which flavor of tropicalization a [`HybridSystem`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TropKind {
    /// One dominant monomial per equation (numerator and denominator get
    /// independent `Dom`s in the rational case).
    Complete,
    /// Dominant production minus dominant degradation.
    TwoTerms,
}

/// Dominance of one equation at a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqDominance {
    /// Polynomial equation under the complete tropicalization.
    Single(usize),
    /// Rational equation: dominant numerator and denominator indices.
    Quotient(usize, usize),
    /// Two-terms: dominant production and dominant degradation indices.
    Pair {
        production: usize,
        degradation: usize,
    },
}

impl fmt::Display for EqDominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqDominance::Single(i) => write!(f, "{i}"),
            EqDominance::Quotient(n, d) => write!(f, "{n}/{d}"),
            EqDominance::Pair {
                production,
                degradation,
            } => {
                write!(f, "{production}-{degradation}")
            }
        }
    }
}

/// Per-equation dominance choice; identifies a mode of the hybrid system.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DominanceSignature {
    pub entries: Vec<EqDominance>,
    /// Equations whose dominant magnitude is tied at the query point.
    pub ties: Vec<bool>,
}

impl DominanceSignature {
    pub fn any_tie(&self) -> bool {
        self.ties.iter().any(|t| *t)
    }

    /// Serialized mode id: per-equation entries joined by `;`.
    pub fn id(&self) -> String {
        self.entries
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// A tropicalized system: the source equations plus the dominance rule.
///
/// Queries are pure; the truncated mode fields looked up by the integrator
/// are cached per signature (idempotent inserts, safe for concurrent
/// population).
#[derive(Debug)]
pub struct HybridSystem {
    pub source: ODESystem,
    pub kind: TropKind,
    cache: RwLock<HashMap<Vec<EqDominance>, Vec<Vec<MonomialTerm>>>>,
}

impl HybridSystem {
    pub fn source(&self) -> &ODESystem {
        &self.source
    }

    /// Dominance signature at a positive state.
    ///
    /// Scaling every coefficient of one equation by a common positive factor
    /// shifts all its log-magnitudes equally, so the signature is invariant
    /// under such rescalings.
    pub fn signature_at(&self, x: &[f64], eps: f64) -> Result<DominanceSignature, TropError> {
        let mut entries = Vec::with_capacity(self.source.equations.len());
        let mut ties = Vec::with_capacity(self.source.equations.len());
        for eq in &self.source.equations {
            let (entry, tie) = match (self.kind, eq) {
                (TropKind::Complete, Equation::Polynomial(terms)) => {
                    let d = dom(terms, x, eps)?;
                    (EqDominance::Single(d.index), d.tie)
                }
                (TropKind::Complete, Equation::Rational { num, den }) => {
                    let dn = dom(num, x, eps)?;
                    let dd = dom(den, x, eps)?;
                    (EqDominance::Quotient(dn.index, dd.index), dn.tie || dd.tie)
                }
                (TropKind::TwoTerms, Equation::Polynomial(terms)) => {
                    let (pos, neg) = split_signs(terms);
                    let dp = dom_subset(terms, &pos, x, eps)?;
                    let dn = dom_subset(terms, &neg, x, eps)?;
                    (
                        EqDominance::Pair {
                            production: dp.index,
                            degradation: dn.index,
                        },
                        dp.tie || dn.tie,
                    )
                }
                (TropKind::TwoTerms, Equation::Rational { .. }) => {
                    unreachable!("rejected at construction")
                }
            };
            entries.push(entry);
            ties.push(tie);
        }
        Ok(DominanceSignature { entries, ties })
    }

    /// Evaluate the dominant-monomial field at a positive state.
    ///
    /// Equals the source field of the mode's truncation exactly; on the
    /// tropical manifold the lowest-index term is used and the tie is
    /// reported via the signature.
    pub fn field_at(&self, x: &[f64], eps: f64) -> Result<Vec<f64>, TropError> {
        let sig = self.signature_at(x, eps)?;
        let mut field = Vec::with_capacity(sig.entries.len());
        for (i, entry) in sig.entries.iter().enumerate() {
            field.push(self.entry_value(i, entry, x, eps)?);
        }
        Ok(field)
    }

    fn entry_value(
        &self,
        equation: usize,
        entry: &EqDominance,
        x: &[f64],
        eps: f64,
    ) -> Result<f64, TropError> {
        Ok(match (&self.source.equations[equation], entry) {
            (Equation::Polynomial(terms), EqDominance::Single(j)) => terms[*j].eval(x, eps),
            (Equation::Rational { num, den }, EqDominance::Quotient(jn, jd)) => {
                let d = den[*jd].eval(x, eps);
                if d == 0.0 {
                    return Err(TropError::Ir(IrError::DivisionByZero { equation }));
                }
                num[*jn].eval(x, eps) / d
            }
            (
                Equation::Polynomial(terms),
                EqDominance::Pair {
                    production,
                    degradation,
                },
            ) => terms[*production].eval(x, eps) + terms[*degradation].eval(x, eps),
            (Equation::Polynomial(_), EqDominance::Quotient(..))
            | (Equation::Rational { .. }, _) => {
                unreachable!("signature matches system shape")
            }
        })
    }

    /// Kept terms of a fixed mode, per equation (the mode's truncation).
    pub fn mode_terms(&self, sig: &DominanceSignature) -> Vec<Vec<MonomialTerm>> {
        if let Some(hit) = self.cache.read().unwrap().get(&sig.entries) {
            return hit.clone();
        }
        let mut terms = Vec::with_capacity(sig.entries.len());
        for (i, entry) in sig.entries.iter().enumerate() {
            let kept: Vec<MonomialTerm> = match (&self.source.equations[i], entry) {
                (Equation::Polynomial(ts), EqDominance::Single(j)) => vec![ts[*j].clone()],
                (
                    Equation::Polynomial(ts),
                    EqDominance::Pair {
                        production,
                        degradation,
                    },
                ) => {
                    vec![ts[*production].clone(), ts[*degradation].clone()]
                }
                // Rational modes are evaluated through entry_value instead.
                (Equation::Rational { .. }, _) | (Equation::Polynomial(_), _) => vec![],
            };
            terms.push(kept);
        }
        self.cache
            .write()
            .unwrap()
            .insert(sig.entries.clone(), terms.clone());
        terms
    }

    /// Per-equation margin of the current dominant against the best
    /// challenger; the minimum over equations is zero exactly when the state
    /// sits on a tropical manifold of some equation.
    pub fn margins_at(&self, x: &[f64], eps: f64) -> Result<Vec<f64>, TropError> {
        let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let log_eps = eps.ln();
        let mut margins = Vec::with_capacity(self.source.equations.len());
        for eq in &self.source.equations {
            let m = match (self.kind, eq) {
                (TropKind::Complete, Equation::Polynomial(terms)) => {
                    gap(terms, None, &log_x, log_eps)
                }
                (TropKind::Complete, Equation::Rational { num, den }) => {
                    let gn = gap(num, None, &log_x, log_eps);
                    let gd = gap(den, None, &log_x, log_eps);
                    gn.min(gd)
                }
                (TropKind::TwoTerms, Equation::Polynomial(terms)) => {
                    let (pos, neg) = split_signs(terms);
                    let gp = gap(terms, Some(&pos), &log_x, log_eps);
                    let gn = gap(terms, Some(&neg), &log_x, log_eps);
                    gp.min(gn)
                }
                (TropKind::TwoTerms, Equation::Rational { .. }) => unreachable!(),
            };
            margins.push(m);
        }
        Ok(margins)
    }
}

fn split_signs(terms: &[MonomialTerm]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (j, t) in terms.iter().enumerate() {
        if t.coeff > 0.0 {
            pos.push(j);
        } else {
            neg.push(j);
        }
    }
    (pos, neg)
}

fn dom_subset(
    terms: &[MonomialTerm],
    subset: &[usize],
    x: &[f64],
    eps: f64,
) -> Result<DomResult, TropError> {
    if subset.is_empty() {
        return Err(TropError::EmptyTerms);
    }
    let log_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let log_eps = eps.ln();
    let mut best = subset[0];
    let mut best_log = terms[best].log_magnitude(&log_x, log_eps);
    let mut tie = false;
    for &j in &subset[1..] {
        let lm = terms[j].log_magnitude(&log_x, log_eps);
        if lm > best_log {
            best = j;
            best_log = lm;
            tie = false;
        } else if lm == best_log {
            tie = true;
        }
    }
    Ok(DomResult {
        index: best,
        value: terms[best].eval(x, eps),
        tie,
    })
}

/// Margin of the max over `subset` (or all terms) against the runner-up;
/// +inf for singletons.
fn gap(terms: &[MonomialTerm], subset: Option<&[usize]>, log_x: &[f64], log_eps: f64) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    let mut count = 0usize;
    let mut consider = |lm: f64| {
        count += 1;
        if lm > first {
            second = first;
            first = lm;
        } else if lm > second {
            second = lm;
        }
    };
    match subset {
        Some(idx) => {
            for &j in idx {
                consider(terms[j].log_magnitude(log_x, log_eps));
            }
        }
        None => {
            for t in terms {
                consider(t.log_magnitude(log_x, log_eps));
            }
        }
    }
    if count < 2 {
        f64::INFINITY
    } else {
        first - second
    }
}

/// Build the tropicalization of a system.
///
/// The two-terms kind requires every equation to carry at least one
/// production and one degradation term; a one-sided equation is exactly the
/// configuration that cannot be equilibrated and is reported as an error
/// naming the equation.
pub fn tropicalize(sys: &ODESystem, kind: TropKind) -> Result<HybridSystem, TropError> {
    if kind == TropKind::TwoTerms {
        for (i, eq) in sys.equations.iter().enumerate() {
            let terms = match eq {
                Equation::Polynomial(t) => t,
                Equation::Rational { .. } => {
                    return Err(TropError::Ir(IrError::RationalNotSupported { equation: i }))
                }
            };
            let (pos, neg) = split_signs(terms);
            if pos.is_empty() || neg.is_empty() {
                return Err(TropError::OneSidedEquation {
                    equation: i,
                    name: sys.variables[i].clone(),
                });
            }
        }
    }
    Ok(HybridSystem {
        source: sys.clone(),
        kind,
        cache: RwLock::new(HashMap::new()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::MonomialTerm;

    fn one_var() -> ODESystem {
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
    fn dom_singleton() {
        let t = vec![MonomialTerm::new(3.0, 0, vec![1]).unwrap()];
        let d = dom(&t, &[2.0], 1.0).unwrap();
        assert_eq!(d.index, 0);
        assert_eq!(d.value, 6.0);
        assert!(!d.tie);
    }

    #[test]
    fn dom_picks_largest_magnitude() {
        // {3 x1, -5 x2}
        let terms = vec![
            MonomialTerm::new(3.0, 0, vec![1, 0]).unwrap(),
            MonomialTerm::new(-5.0, 0, vec![0, 1]).unwrap(),
        ];
        let d = dom(&terms, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(d.index, 1);
        assert_eq!(d.value, -5.0);
        let d = dom(&terms, &[10.0, 1.0], 1.0).unwrap();
        assert_eq!(d.index, 0);
        assert!((d.value - 30.0).abs() < 1e-12);
    }

    #[test]
    fn complete_field_crossover() {
        let hsys = tropicalize(&one_var(), TropKind::Complete).unwrap();
        assert_eq!(hsys.field_at(&[0.5], 1.0).unwrap(), vec![1.0]);
        assert_eq!(hsys.field_at(&[2.0], 1.0).unwrap(), vec![-2.0]);
        // On the manifold: tie reported, lowest index (the +1 term) used.
        let sig = hsys.signature_at(&[1.0], 1.0).unwrap();
        assert!(sig.ties[0]);
        assert_eq!(sig.entries[0], EqDominance::Single(0));
        assert_eq!(hsys.field_at(&[1.0], 1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_terms_of_two_term_system_is_identity() {
        let sys = one_var();
        let hsys = tropicalize(&sys, TropKind::TwoTerms).unwrap();
        for &x in &[0.2, 0.9, 1.0, 3.7] {
            let full = sys.evaluate_field(&[x], 0.3).unwrap();
            let trop = hsys.field_at(&[x], 0.3).unwrap();
            assert_eq!(full, trop);
        }
    }

    #[test]
    fn one_sided_equation_rejected_for_two_terms() {
        let sys = ODESystem::new(
            vec!["x".into()],
            vec![Equation::Polynomial(vec![MonomialTerm::new(
                1.0,
                0,
                vec![0],
            )
            .unwrap()])],
            vec![],
        )
        .unwrap();
        match tropicalize(&sys, TropKind::TwoTerms) {
            Err(TropError::OneSidedEquation { equation: 0, name }) => assert_eq!(name, "x"),
            other => panic!("expected one-sided error, got {other:?}"),
        }
    }

    #[test]
    fn margin_values() {
        // {1, x}: tie at x = 1, gap 1 at x = e.
        let terms = vec![
            MonomialTerm::new(1.0, 0, vec![0]).unwrap(),
            MonomialTerm::new(1.0, 0, vec![1]).unwrap(),
        ];
        assert_eq!(manifold_margin(&terms, &[1.0], 1.0).unwrap(), 0.0);
        let m = manifold_margin(&terms, &[std::f64::consts::E], 1.0).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert!(matches!(
            manifold_margin(&terms[..1], &[1.0], 1.0),
            Err(TropError::TooFewTerms)
        ));
    }

    #[test]
    fn signature_scaling_invariance() {
        let sys = one_var();
        let hsys = tropicalize(&sys, TropKind::Complete).unwrap();
        let mut scaled = sys.clone();
        if let Equation::Polynomial(terms) = &mut scaled.equations[0] {
            for t in terms {
                t.coeff *= 17.0;
            }
        }
        let hscaled = tropicalize(&scaled, TropKind::Complete).unwrap();
        for &x in &[0.3, 0.99, 1.01, 5.0] {
            assert_eq!(
                hsys.signature_at(&[x], 0.5).unwrap().entries,
                hscaled.signature_at(&[x], 0.5).unwrap().entries
            );
        }
    }
}
