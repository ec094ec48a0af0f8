//! Tropical equilibration: which renormalizations `x_i = ε^{a_i} x̄_i` make at
//! least two opposite-sign terms share the minimal ε-order in each equation.
//!
//! The search runs in two steps. Step 1 enumerates, per equation, an ordered
//! pair of term indices with opposite coefficient signs (the candidate
//! balance). Step 2 solves the induced linear equality system for the
//! exponents exactly over ℚ, subject to the inequality that every other term
//! has order ≥ the pair's order μᵢ. Orientation convention used throughout:
//! **larger renormalized order means smaller term as ε → 0**.
//!
//! Solutions may be underdetermined; families are returned as a base point
//! plus free directions. Conservation laws with an O(1) total restrict the
//! families further: every supported exponent must be ≥ 0 and the minimum 0
//! must be attained at least twice (a single species cannot generically carry
//! the whole conserved total when its own equation is equilibrated), which is
//! also the rule that pins free parameters such as the cell-cycle case's a₅.
//!
//! An optional permanency screen rejects candidates whose truncation cannot
//! stay bounded: an equation whose minimal-order terms are all production
//! diverges, and a two-term balance `b₁ y^{β₁} − b₂ y^{β₂}` with β₁ > β₂ has
//! an unstable quasi-steady state (see [`permanency_1d`]).

mod rational;

use crate::ir::{ConservationLaw, Equation, ExponentVector, IrError, MonomialTerm, ODESystem};
use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use rational::{fm_feasible, rat_int, solve_equalities, AffineSet, Ineq, Rat};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquilError {
    #[error("equation {equation} is rational; clear denominators before equilibrating")]
    RationalSystem { equation: usize },
    #[error(
        "equation {equation} ({name}) cannot be equilibrated: all terms have the same sign, but a balance needs at least one production and one degradation term"
    )]
    SingleSignEquation { equation: usize, name: String },
    #[error("branch enumeration would visit {count} branches, above the cap {cap}")]
    BranchCapExceeded { count: u128, cap: u64 },
    #[error("the two exponents of a one-dimensional balance must differ")]
    EqualExponents,
    #[error(
        "inequality elimination blew up ({inequalities} rows); the feasibility solver targets systems of ~10 variables"
    )]
    EliminationBlowup { inequalities: usize },
    #[error("exponent arithmetic overflowed the 64-bit rational range")]
    Overflow,
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Per-equation choice of an opposite-sign pair `(j(i), k(i))`, `j < k`.
/// `None` marks equations left unconstrained (partial equilibration).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchChoice {
    pub pairs: Vec<Option<(usize, usize)>>,
}

/// Search configuration.
#[derive(Debug, Clone)]
pub struct EquilOptions {
    /// Equation indices to equilibrate; `None` means all.
    pub subset: Option<Vec<usize>>,
    /// Apply the permanency screen (production-only dominance and unstable
    /// two-term balances are rejected; families may get pinned by it).
    pub screen: bool,
    /// Guard against branch explosion.
    pub branch_cap: u64,
}

impl Default for EquilOptions {
    fn default() -> Self {
        Self {
            subset: None,
            screen: true,
            branch_cap: 1_000_000,
        }
    }
}

/// One equilibration: exponents, the balanced pairs, per-equation orders.
#[derive(Debug, Clone)]
pub struct ExponentSolution {
    /// Renormalization exponents (the pinned point, or the family's
    /// canonical sample when `family` is set).
    pub a: ExponentVector,
    pub branch: BranchChoice,
    /// Per-equation minimal order at `a`.
    pub mu: Vec<Rational64>,
    /// Per equation and term, the nonnegative order surplus `order − μᵢ`.
    pub slack: Vec<Vec<Rational64>>,
    /// Indices of the minimal-order terms per equation (the truncation).
    pub kept: Vec<Vec<usize>>,
    /// Free directions of an unpinned family; `None` for pinned points.
    pub family: Option<Vec<Vec<Rational64>>>,
    equalities: Vec<(Vec<Rat>, Rat)>,
    inequalities: Vec<(Vec<Rat>, Rat)>,
}

impl ExponentSolution {
    /// Does `point` satisfy this solution's defining constraints exactly?
    ///
    /// Used by the brute-force completeness oracle: a point is covered by a
    /// solution when it meets the branch equalities and all order
    /// inequalities.
    pub fn contains(&self, point: &ExponentVector) -> bool {
        let p: Vec<Rat> = point.0.iter().map(|q| to_big(*q)).collect();
        self.equalities.iter().all(|(c, d)| dot(c, &p) == *d)
            && self.inequalities.iter().all(|(c, d)| dot(c, &p) >= *d)
    }

    /// Re-check the defining order conditions directly on the system,
    /// independent of the solver path.
    pub fn verify(&self, sys: &ODESystem) -> bool {
        let orders = order_table(sys, &self.a);
        for (i, pair) in self.branch.pairs.iter().enumerate() {
            let Some(row) = orders.get(i) else {
                return false;
            };
            let min = row.iter().min().cloned().unwrap();
            if let Some((j, k)) = pair {
                if row[*j] != row[*k] || row[*j] != min {
                    return false;
                }
            }
            if to_big(self.mu[i]) != min {
                return false;
            }
        }
        true
    }
}

fn dot(c: &[Rat], p: &[Rat]) -> Rat {
    c.iter().zip(p).map(|(a, b)| a.clone() * b.clone()).sum()
}

fn to_big(q: Rational64) -> Rat {
    Rat::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn to_small(r: &Rat) -> Result<Rational64, EquilError> {
    let n = r.numer().to_i64().ok_or(EquilError::Overflow)?;
    let d = r.denom().to_i64().ok_or(EquilError::Overflow)?;
    Ok(Rational64::new(n, d))
}

/// Order of every term of every (polynomial) equation at `a`.
fn order_table(sys: &ODESystem, a: &ExponentVector) -> Vec<Vec<Rat>> {
    let ab: Vec<Rat> = a.0.iter().map(|q| to_big(*q)).collect();
    sys.equations
        .iter()
        .map(|eq| {
            eq.terms()
                .map(|terms| {
                    terms
                        .iter()
                        .map(|t| {
                            let mut o = to_big(t.eps_order);
                            for (alpha, ai) in t.exponents.iter().zip(ab.iter()) {
                                o += rat_int(*alpha) * ai.clone();
                            }
                            o
                        })
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect()
}

/// Lazily enumerate every sign-compatible pair selection over the chosen
/// equations, in equation-major, pair-minor lexicographic order.
pub fn enumerate_branches(
    sys: &ODESystem,
    subset: Option<&[usize]>,
) -> Result<impl Iterator<Item = BranchChoice>, EquilError> {
    let n = sys.dim();
    let selected: Vec<bool> = match subset {
        None => vec![true; n],
        Some(idx) => {
            let mut s = vec![false; n];
            for &i in idx {
                s[i] = true;
            }
            s
        }
    };
    let mut pair_lists: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    for i in 0..n {
        if !selected[i] {
            pair_lists.push(Vec::new());
            continue;
        }
        if sys.equations[i].is_rational() {
            return Err(EquilError::RationalSystem { equation: i });
        }
        let (pos, neg) = sys.sign_split(i).unwrap();
        if pos.is_empty() || neg.is_empty() {
            return Err(EquilError::SingleSignEquation {
                equation: i,
                name: sys.variables[i].clone(),
            });
        }
        let mut pairs: Vec<(usize, usize)> = pos
            .iter()
            .flat_map(|&p| neg.iter().map(move |&d| (p.min(d), p.max(d))))
            .collect();
        pairs.sort_unstable();
        pair_lists.push(pairs);
    }
    Ok(BranchIter {
        pair_lists,
        selected,
        counter: None,
        done: false,
    })
}

/// Number of branches the iterator will yield.
pub fn branch_count(sys: &ODESystem, subset: Option<&[usize]>) -> Result<u128, EquilError> {
    let n = sys.dim();
    let mut count: u128 = 1;
    let selected: Vec<usize> = match subset {
        None => (0..n).collect(),
        Some(idx) => idx.to_vec(),
    };
    for i in selected {
        if sys.equations[i].is_rational() {
            return Err(EquilError::RationalSystem { equation: i });
        }
        let (pos, neg) = sys.sign_split(i).unwrap();
        if pos.is_empty() || neg.is_empty() {
            return Err(EquilError::SingleSignEquation {
                equation: i,
                name: sys.variables[i].clone(),
            });
        }
        count = count.saturating_mul((pos.len() * neg.len()) as u128);
    }
    Ok(count)
}

struct BranchIter {
    pair_lists: Vec<Vec<(usize, usize)>>,
    selected: Vec<bool>,
    counter: Option<Vec<usize>>,
    done: bool,
}

impl Iterator for BranchIter {
    type Item = BranchChoice;

    fn next(&mut self) -> Option<BranchChoice> {
        if self.done {
            return None;
        }
        match &mut self.counter {
            None => self.counter = Some(vec![0; self.pair_lists.len()]),
            Some(counter) => {
                // Mixed-radix increment, last equation fastest.
                let mut i = self.pair_lists.len();
                loop {
                    if i == 0 {
                        self.done = true;
                        return None;
                    }
                    i -= 1;
                    if self.pair_lists[i].is_empty() {
                        continue;
                    }
                    counter[i] += 1;
                    if counter[i] < self.pair_lists[i].len() {
                        break;
                    }
                    counter[i] = 0;
                }
            }
        }
        let counter = self.counter.as_ref().unwrap();
        let pairs = self
            .pair_lists
            .iter()
            .enumerate()
            .map(|(i, list)| {
                if self.selected[i] && !list.is_empty() {
                    Some(list[counter[i]])
                } else {
                    None
                }
            })
            .collect();
        Some(BranchChoice { pairs })
    }
}

/// A candidate solution set during filtering: equality/inequality constraints
/// in exponent space.
#[derive(Clone)]
struct Candidate {
    equalities: Vec<(Vec<Rat>, Rat)>,
    inequalities: Vec<(Vec<Rat>, Rat)>,
}

struct Resolved {
    affine: AffineSet,
    sample: Vec<Rat>,
    all_pinned: bool,
}

fn resolve(cand: &Candidate, n: usize) -> Result<Option<Resolved>, EquilError> {
    let Some(affine) = solve_equalities(&cand.equalities, n) else {
        return Ok(None);
    };
    let dim = affine.dirs.len();
    // Substitute a = base + D t into ⟨c, a⟩ ≥ d.
    let tineqs: Vec<Ineq> = cand
        .inequalities
        .iter()
        .map(|(c, d)| {
            let constant = dot(c, &affine.base) - d.clone();
            let coeffs = affine.dirs.iter().map(|dir| dot(c, dir)).collect();
            Ineq { coeffs, constant }
        })
        .collect();
    let Some(fm) = fm_feasible(&tineqs, dim).map_err(|b| EquilError::EliminationBlowup {
        inequalities: b.inequalities,
    })?
    else {
        return Ok(None);
    };
    debug_assert!(
        tineqs.iter().all(|iq| !iq.eval(&fm.sample).is_negative()),
        "canonical sample violates an inequality"
    );
    let sample = affine.point_at(&fm.sample);
    let all_pinned = dim == 0 || fm.pinned.iter().all(|p| *p);
    Ok(Some(Resolved {
        affine,
        sample,
        all_pinned,
    }))
}

/// Solve one branch: exact feasibility, conservation filtering/pinning and
/// (optionally) the permanency screen.
///
/// Returns every surviving solution of the branch — genericity pinning of an
/// underdetermined family can produce more than one discrete point. An empty
/// vector means the branch is infeasible or filtered out.
pub fn solve_branch(
    sys: &ODESystem,
    branch: &BranchChoice,
    laws: &[ConservationLaw],
    opts: &EquilOptions,
) -> Result<Vec<ExponentSolution>, EquilError> {
    let n = sys.dim();
    let mut equalities: Vec<(Vec<Rat>, Rat)> = Vec::new();
    let mut inequalities: Vec<(Vec<Rat>, Rat)> = Vec::new();

    for (i, pair) in branch.pairs.iter().enumerate() {
        let Some((j, k)) = pair else { continue };
        let terms = sys.equations[i]
            .terms()
            .ok_or(EquilError::RationalSystem { equation: i })?;
        let tj = &terms[*j];
        let tk = &terms[*k];
        // order_j(a) = order_k(a):  ⟨α_j − α_k, a⟩ = γ_k − γ_j
        let coeffs: Vec<Rat> = (0..n)
            .map(|l| rat_int(tj.exponents[l] - tk.exponents[l]))
            .collect();
        let rhs = to_big(tk.eps_order) - to_big(tj.eps_order);
        equalities.push((coeffs, rhs));
        // Every other term m: order_m(a) ≥ μ_i = order_j(a):
        // ⟨α_m − α_j, a⟩ ≥ γ_j − γ_m
        for (m, tm) in terms.iter().enumerate() {
            if m == *j || m == *k {
                continue;
            }
            let coeffs: Vec<Rat> = (0..n)
                .map(|l| rat_int(tm.exponents[l] - tj.exponents[l]))
                .collect();
            let rhs = to_big(tj.eps_order) - to_big(tm.eps_order);
            inequalities.push((coeffs, rhs));
        }
    }

    // Conservation laws with O(1) totals: supported exponents nonnegative.
    for law in laws {
        for i in law.support() {
            let mut c = vec![Rat::zero(); n];
            c[i] = Rat::from_integer(BigInt::from(1));
            inequalities.push((c, Rat::zero()));
        }
    }

    let base = Candidate {
        equalities,
        inequalities,
    };
    if resolve(&base, n)?.is_none() {
        return Ok(Vec::new());
    }

    // Genericity pinning: the renormalized law Σ cᵢ ε^{aᵢ} x̄ᵢ = total needs
    // its minimal order 0 attained at least twice (once if the support is a
    // single species). Enumerate the zero sets.
    let mut candidates: Vec<Candidate> = vec![base];
    for law in laws {
        let supp = law.support();
        let zero_sets: Vec<Vec<usize>> = if supp.len() == 1 {
            vec![vec![supp[0]]]
        } else {
            let mut sets = Vec::new();
            for (pos, &i) in supp.iter().enumerate() {
                for &j in &supp[pos + 1..] {
                    sets.push(vec![i, j]);
                }
            }
            sets
        };
        let mut next = Vec::new();
        for cand in &candidates {
            for zs in &zero_sets {
                let mut c2 = cand.clone();
                for &i in zs {
                    let mut c = vec![Rat::zero(); n];
                    c[i] = Rat::from_integer(BigInt::from(1));
                    c2.equalities.push((c, Rat::zero()));
                }
                if resolve(&c2, n)?.is_some() {
                    next.push(c2);
                }
            }
        }
        candidates = next;
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
    }

    // Permanency screen part 1: in every unconstrained equation some
    // degradation term must reach the minimal order, otherwise the truncation
    // is pure production and grows without bound. Applied as constraint
    // branching so it can pin families.
    if opts.screen {
        for (i, pair) in branch.pairs.iter().enumerate() {
            if pair.is_some() {
                continue;
            }
            let Some(terms) = sys.equations[i].terms() else {
                continue;
            };
            let degradations: Vec<usize> = terms
                .iter()
                .enumerate()
                .filter(|(_, t)| !t.is_production())
                .map(|(j, _)| j)
                .collect();
            let mut next = Vec::new();
            for cand in &candidates {
                for &d in &degradations {
                    let mut c2 = cand.clone();
                    for (m, tm) in terms.iter().enumerate() {
                        if m == d {
                            continue;
                        }
                        // order_d ≤ order_m
                        let coeffs: Vec<Rat> = (0..n)
                            .map(|l| rat_int(tm.exponents[l] - terms[d].exponents[l]))
                            .collect();
                        let rhs = to_big(terms[d].eps_order) - to_big(tm.eps_order);
                        c2.inequalities.push((coeffs, rhs));
                    }
                    if resolve(&c2, n)?.is_some() {
                        next.push(c2);
                    }
                }
            }
            candidates = next;
            if candidates.is_empty() {
                return Ok(Vec::new());
            }
        }
    }

    // Finalize candidates into solutions; screen part 2 runs point checks.
    let mut out: Vec<ExponentSolution> = Vec::new();
    for cand in candidates {
        let Some(res) = resolve(&cand, n)? else {
            continue;
        };
        let a_small: Result<Vec<Rational64>, _> = res.sample.iter().map(to_small).collect();
        let a = ExponentVector(a_small?);
        let orders = order_table(sys, &a);
        if opts.screen && !screen_point(sys, &orders) {
            continue;
        }
        let mut mu = Vec::with_capacity(n);
        let mut slack = Vec::with_capacity(n);
        let mut kept = Vec::with_capacity(n);
        for row in &orders {
            if row.is_empty() {
                mu.push(Rational64::zero());
                slack.push(Vec::new());
                kept.push(Vec::new());
                continue;
            }
            let min = row.iter().min().cloned().unwrap();
            mu.push(to_small(&min)?);
            slack.push(
                row.iter()
                    .map(|o| to_small(&(o.clone() - min.clone())))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            kept.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, o)| **o == min)
                    .map(|(j, _)| j)
                    .collect(),
            );
        }
        let family = if res.all_pinned {
            None
        } else {
            let dirs: Result<Vec<Vec<Rational64>>, _> = res
                .affine
                .dirs
                .iter()
                .map(|d| d.iter().map(to_small).collect::<Result<Vec<_>, _>>())
                .collect();
            Some(dirs?)
        };
        out.push(ExponentSolution {
            a,
            branch: branch.clone(),
            mu,
            slack,
            kept,
            family,
            equalities: cand.equalities,
            inequalities: cand.inequalities,
        });
    }
    Ok(dedup(out))
}

/// Point checks of the permanency screen: no production-only minimal set, and
/// every strict two-term balance must be stable in the sense of
/// [`permanency_1d`] with respect to the equation's own variable.
fn screen_point(sys: &ODESystem, orders: &[Vec<Rat>]) -> bool {
    for (i, row) in orders.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let terms = sys.equations[i].terms().unwrap();
        let min = row.iter().min().unwrap();
        let minimal: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, o)| *o == min)
            .map(|(j, _)| j)
            .collect();
        if minimal.iter().all(|&j| terms[j].is_production()) {
            return false;
        }
        if minimal.len() == 2 {
            let (p, d) = if terms[minimal[0]].is_production() {
                (minimal[0], minimal[1])
            } else {
                (minimal[1], minimal[0])
            };
            if terms[p].is_production() && !terms[d].is_production() {
                let beta_p = terms[p].exponents[i];
                let beta_d = terms[d].exponents[i];
                if beta_p != beta_d
                    && !matches!(
                        permanency_1d(beta_p as f64, beta_d as f64),
                        Ok(Permanency::Permanent(_))
                    )
                {
                    return false;
                }
            }
        }
    }
    true
}

fn dedup(solutions: Vec<ExponentSolution>) -> Vec<ExponentSolution> {
    let mut map: BTreeMap<String, ExponentSolution> = BTreeMap::new();
    for sol in solutions {
        let key = format!("{}|{:?}|{}", sol.a, sol.kept, sol.family.is_some());
        map.entry(key).or_insert(sol);
    }
    map.into_values().collect()
}

/// All deduplicated equilibrations over every branch.
pub fn all_equilibrations(
    sys: &ODESystem,
    laws: &[ConservationLaw],
    opts: &EquilOptions,
) -> Result<Vec<ExponentSolution>, EquilError> {
    let count = branch_count(sys, opts.subset.as_deref())?;
    if count > opts.branch_cap as u128 {
        return Err(EquilError::BranchCapExceeded {
            count,
            cap: opts.branch_cap,
        });
    }
    let mut all = Vec::new();
    for branch in enumerate_branches(sys, opts.subset.as_deref())? {
        all.extend(solve_branch(sys, &branch, laws, opts)?);
    }
    Ok(dedup(all))
}

/// The tropically truncated system under a solution: per equation, only the
/// minimal-order terms survive (ties kept), with their renormalized ε-orders.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    /// Renormalized system containing only the kept terms.
    pub system: ODESystem,
    /// Per-equation prefactor order `μᵢ − aᵢ` of the kept terms.
    pub prefactors: Vec<Rational64>,
    /// Kept term indices into the source equations.
    pub kept: Vec<Vec<usize>>,
    /// Which equations carry an opposite-sign balance at minimal order.
    pub equilibrated: Vec<bool>,
}

/// Truncate `sys` under `sol`.
pub fn truncate(sys: &ODESystem, sol: &ExponentSolution) -> Result<TruncatedSystem, EquilError> {
    let renormed = sys.renormalize(&sol.a)?;
    let mut equations = Vec::with_capacity(renormed.equations.len());
    let mut prefactors = Vec::with_capacity(renormed.equations.len());
    let mut equilibrated = Vec::with_capacity(renormed.equations.len());
    for (i, eq) in renormed.equations.iter().enumerate() {
        let terms = eq.terms().unwrap();
        let kept_terms: Vec<MonomialTerm> = sol.kept[i].iter().map(|&j| terms[j].clone()).collect();
        prefactors.push(sol.mu[i] - sol.a.0[i]);
        equilibrated.push(
            kept_terms.iter().any(MonomialTerm::is_production)
                && kept_terms.iter().any(|t| !t.is_production()),
        );
        equations.push(Equation::Polynomial(kept_terms));
    }
    Ok(TruncatedSystem {
        system: ODESystem {
            variables: renormed.variables,
            equations,
            conservation_laws: renormed.conservation_laws,
            epsilon: renormed.epsilon,
        },
        prefactors,
        kept: sol.kept.clone(),
        equilibrated,
    })
}

/// Per-equation prefactor orders `μᵢ − aᵢ`, sorted ascending, plus whether
/// the equation-ordered sequence is strictly increasing (the chain
/// configuration in which relaxation is a plain cascade).
pub fn order_sequence(sol: &ExponentSolution) -> (Vec<Rational64>, bool) {
    let prefactors: Vec<Rational64> = sol
        .mu
        .iter()
        .zip(sol.a.0.iter())
        .map(|(m, a)| *m - *a)
        .collect();
    let is_chain = prefactors.windows(2).all(|w| w[0] < w[1]);
    let mut sorted = prefactors;
    sorted.sort_unstable();
    (sorted, is_chain)
}

/// Stability class of the scalar balance `y' = b₁ y^{β₁} − b₂ y^{β₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Permanency {
    Permanent(PermanencyCase),
    NotPermanent,
}

/// Sub-cases of the permanent regime (β₁ < β₂).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermanencyCase {
    /// 0 < β₁ < β₂ (case i).
    BothPositive,
    /// β₁ < β₂ < 0 (case ii).
    BothNegative,
    /// β₁ ≤ 0 ≤ β₂ (case iii, boundary exponents included).
    Straddling,
}

impl Permanency {
    pub fn is_permanent(&self) -> bool {
        matches!(self, Permanency::Permanent(_))
    }
}

/// Classify the scalar balance `y' = b₁ y^{β₁} − b₂ y^{β₂}` (b₁, b₂ > 0).
///
/// For β₁ < β₂ the production wins for y below the root and the degradation
/// above it, so every positive solution converges to [`quasi_steady_root`]:
/// permanent. For β₁ > β₂ the root repels and solutions escape to 0 or ∞.
/// Zero exponents sit on the case boundaries and are classified with the
/// straddling case, which matches direct integration.
pub fn permanency_1d(beta1: f64, beta2: f64) -> Result<Permanency, EquilError> {
    if beta1 == beta2 {
        return Err(EquilError::EqualExponents);
    }
    if beta1 > beta2 {
        return Ok(Permanency::NotPermanent);
    }
    let case = if beta1 > 0.0 {
        PermanencyCase::BothPositive
    } else if beta2 < 0.0 {
        PermanencyCase::BothNegative
    } else {
        PermanencyCase::Straddling
    };
    Ok(Permanency::Permanent(case))
}

/// The positive root `(b₂/b₁)^{1/(β₁−β₂)}` of `b₁ y^{β₁} − b₂ y^{β₂}`.
pub fn quasi_steady_root(b1: f64, b2: f64, beta1: f64, beta2: f64) -> f64 {
    (b2 / b1).powf(1.0 / (beta1 - beta2))
}
