//! Cross-cutting oracle harness: brute-force checkers and random-system
//! generators backing the property suites of the other modules.
//!
//! Every oracle here is an independent implementation — no code is shared
//! with the operation it checks. Dominance is recomputed with plain
//! products instead of logs, equilibrations by exhaustive integer scans,
//! Jacobians by step-halving comparisons. Generators are seeded and
//! reproducible.

use crate::ir::{Equation, ExponentVector, MonomialTerm, ODESystem};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("brute-force box of {points} points over {vars} variables exceeds the guard ({guard}); use the solver path")]
    BoxTooLarge {
        points: u128,
        vars: usize,
        guard: u128,
    },
    #[error("empty term list")]
    EmptyTerms,
}

/// Shape of randomly generated test systems.
#[derive(Debug, Clone)]
pub struct RandomSystemSpec {
    pub variables: usize,
    pub max_terms_per_equation: usize,
    /// Inclusive Laurent exponent range per variable.
    pub exponent_range: (i64, i64),
    /// Inclusive ε-order range.
    pub eps_order_range: (i64, i64),
    /// Force at least one production and one degradation term per equation.
    pub force_both_signs: bool,
    pub seed: u64,
}

impl RandomSystemSpec {
    pub fn small(seed: u64) -> Self {
        Self {
            variables: 2,
            max_terms_per_equation: 3,
            exponent_range: (-1, 2),
            eps_order_range: (-3, 3),
            force_both_signs: true,
            seed,
        }
    }

    /// Draw a system. Coefficients are uniform in ±[0.5, 2.5]; exponent
    /// vectors are deduplicated within an equation so no two terms merge.
    pub fn generate(&self) -> ODESystem {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.variables;
        let mut equations = Vec::with_capacity(n);
        for _ in 0..n {
            let terms = if self.force_both_signs {
                self.gen_terms_both_signs(&mut rng, n)
            } else {
                self.gen_terms(&mut rng, n, None)
            };
            equations.push(Equation::Polynomial(terms));
        }
        ODESystem {
            variables: (0..n).map(|i| format!("x{i}")).collect(),
            equations,
            conservation_laws: vec![],
            epsilon: None,
        }
    }

    fn gen_terms_both_signs(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<MonomialTerm> {
        loop {
            let terms = self.gen_terms(rng, n, Some(2));
            if terms.iter().any(|t| t.coeff > 0.0) && terms.iter().any(|t| t.coeff < 0.0) {
                return terms;
            }
        }
    }

    fn gen_terms(
        &self,
        rng: &mut ChaCha8Rng,
        n: usize,
        min_terms: Option<usize>,
    ) -> Vec<MonomialTerm> {
        let lo = min_terms.unwrap_or(1);
        let count = rng.random_range(lo..=self.max_terms_per_equation.max(lo));
        let mut terms: Vec<MonomialTerm> = Vec::with_capacity(count);
        let mut guard = 0;
        while terms.len() < count && guard < 1000 {
            guard += 1;
            let exponents: Vec<i64> = (0..n)
                .map(|_| rng.random_range(self.exponent_range.0..=self.exponent_range.1))
                .collect();
            if terms.iter().any(|t| t.exponents == exponents) {
                continue;
            }
            let magnitude = rng.random_range(0.5..2.5);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let eps_order = rng.random_range(self.eps_order_range.0..=self.eps_order_range.1);
            terms.push(MonomialTerm::new(sign * magnitude, eps_order, exponents).unwrap());
        }
        terms
    }
}

const BOX_GUARD: u128 = 1_000_000;

/// Exhaustive integer scan for equilibration points: keep `a` in the box
/// where each equation's minimal order is attained by at least two terms of
/// opposite signs.
///
/// Oracle for the branch-and-solve path; integer completeness only.
pub fn brute_force_equilibrations(
    sys: &ODESystem,
    box_min: i64,
    box_max: i64,
) -> Result<Vec<ExponentVector>, VerifyError> {
    let n = sys.dim();
    let width = (box_max - box_min + 1) as u128;
    let points = width.pow(n as u32);
    if n > 3 || points > BOX_GUARD {
        return Err(VerifyError::BoxTooLarge {
            points,
            vars: n,
            guard: BOX_GUARD,
        });
    }
    let mut found = Vec::new();
    let mut a = vec![box_min; n];
    loop {
        if is_equilibration(sys, &a) {
            found.push(ExponentVector::from_integers(&a));
        }
        // Odometer increment.
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(found);
            }
            i -= 1;
            a[i] += 1;
            if a[i] <= box_max {
                break;
            }
            a[i] = box_min;
        }
    }
}

fn is_equilibration(sys: &ODESystem, a: &[i64]) -> bool {
    for eq in &sys.equations {
        let Some(terms) = eq.terms() else {
            return false;
        };
        let orders: Vec<Rational64> = terms
            .iter()
            .map(|t| {
                let mut o = t.eps_order;
                for (alpha, ai) in t.exponents.iter().zip(a.iter()) {
                    o += Rational64::from_integer(alpha * ai);
                }
                o
            })
            .collect();
        let min = orders.iter().min().unwrap();
        let mut has_pos = false;
        let mut has_neg = false;
        for (t, o) in terms.iter().zip(orders.iter()) {
            if o == min {
                if t.coeff > 0.0 {
                    has_pos = true;
                } else {
                    has_neg = true;
                }
            }
        }
        if !(has_pos && has_neg) {
            return false;
        }
    }
    true
}

/// Naive dominance scan: largest `|coeff| · ε^order · x^α` by direct
/// products, ties to the lowest index. Must agree with `trop::dom`.
pub fn brute_force_dom(terms: &[MonomialTerm], x: &[f64], eps: f64) -> Result<usize, VerifyError> {
    if terms.is_empty() {
        return Err(VerifyError::EmptyTerms);
    }
    let mut best = 0usize;
    let mut best_mag = term_magnitude(&terms[0], x, eps);
    for (j, t) in terms.iter().enumerate().skip(1) {
        let mag = term_magnitude(t, x, eps);
        if mag > best_mag {
            best = j;
            best_mag = mag;
        }
    }
    Ok(best)
}

fn term_magnitude(t: &MonomialTerm, x: &[f64], eps: f64) -> f64 {
    let order = *t.eps_order.numer() as f64 / *t.eps_order.denom() as f64;
    let mut mag = t.coeff.abs() * eps.powf(order);
    for (xi, &alpha) in x.iter().zip(t.exponents.iter()) {
        mag *= xi.powf(alpha as f64);
    }
    mag
}

/// Richardson step-halving check of a finite-difference Jacobian.
///
/// Computes central-difference Jacobians at steps `h` and `h/2`, extrapolates
/// and returns the maximal relative deviation of the `h` estimate from the
/// extrapolated one. Small deviations certify the difference quotient has
/// converged at the queried point.
pub fn finite_diff_check<F>(field: &F, point: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let jh = central_jacobian(field, point, h);
    let jh2 = central_jacobian(field, point, h / 2.0);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (row_h, row_h2) in jh.iter().zip(jh2.iter()) {
        for (a, b) in row_h.iter().zip(row_h2.iter()) {
            scale = scale.max(a.abs()).max(b.abs());
        }
    }
    if scale == 0.0 {
        return 0.0;
    }
    for (row_h, row_h2) in jh.iter().zip(jh2.iter()) {
        for (a, b) in row_h.iter().zip(row_h2.iter()) {
            // Fourth-order extrapolation of two second-order estimates.
            let extrap = (4.0 * b - a) / 3.0;
            worst = worst.max((a - extrap).abs() / scale);
        }
    }
    worst
}

fn central_jacobian<F>(field: &F, point: &[f64], h: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = point.len();
    let f0 = field(point);
    let m = f0.len();
    let mut jac = vec![vec![0.0; n]; m];
    for j in 0..n {
        let mut xp = point.to_vec();
        let mut xm = point.to_vec();
        let step = h * point[j].abs().max(1.0);
        xp[j] += step;
        xm[j] -= step;
        let fp = field(&xp);
        let fm = field(&xm);
        for i in 0..m {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equil::{all_equilibrations, EquilOptions};

    #[test]
    fn one_var_box_scan() {
        let sys = ODESystem::new(
            vec!["x".into()],
            vec![Equation::Polynomial(vec![
                MonomialTerm::new(1.0, 0, vec![0]).unwrap(),
                MonomialTerm::new(-1.0, 0, vec![1]).unwrap(),
            ])],
            vec![],
        )
        .unwrap();
        let points = brute_force_equilibrations(&sys, -5, 5).unwrap();
        assert_eq!(points, vec![ExponentVector::from_integers(&[0])]);
    }

    #[test]
    fn toy_two_var_matches_solver() {
        let sys = ODESystem::new(
            vec!["x".into(), "y".into()],
            vec![
                Equation::Polynomial(vec![
                    MonomialTerm::new(1.0, 0, vec![0, 1]).unwrap(),
                    MonomialTerm::new(-1.0, 1, vec![1, 0]).unwrap(),
                ]),
                Equation::Polynomial(vec![
                    MonomialTerm::new(1.0, 1, vec![0, 0]).unwrap(),
                    MonomialTerm::new(-1.0, 0, vec![0, 1]).unwrap(),
                ]),
            ],
            vec![],
        )
        .unwrap();
        let points = brute_force_equilibrations(&sys, -5, 5).unwrap();
        let opts = EquilOptions {
            screen: false,
            ..Default::default()
        };
        let sols = all_equilibrations(&sys, &[], &opts).unwrap();
        for p in &points {
            assert!(
                sols.iter().any(|s| s.contains(p)),
                "integer point {p} not covered by the solver"
            );
        }
    }

    #[test]
    fn five_var_box_rejected_by_guard() {
        let sys = RandomSystemSpec {
            variables: 5,
            max_terms_per_equation: 2,
            exponent_range: (0, 1),
            eps_order_range: (0, 1),
            force_both_signs: true,
            seed: 7,
        }
        .generate();
        assert!(matches!(
            brute_force_equilibrations(&sys, -10, 10),
            Err(VerifyError::BoxTooLarge { .. })
        ));
    }

    #[test]
    fn jacobian_check_exact_for_linear_fields() {
        // Central differences are exact for linear fields; at h = 1e-4 the
        // remaining deviation is pure roundoff, far below 1e-10.
        let field = |x: &[f64]| vec![2.0 * x[0] - x[1], 0.5 * x[0] + 3.0 * x[1]];
        let dev = finite_diff_check(&field, &[1.0, 2.0], 1e-4);
        assert!(dev < 1e-10, "deviation {dev}");
    }

    #[test]
    fn jacobian_check_quadratic() {
        let field = |x: &[f64]| vec![x[0] * x[0]];
        let dev = finite_diff_check(&field, &[1.0], 1e-4);
        assert!(dev < 1e-6, "deviation {dev}");
    }
}
