//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! Error control is per unit step: a step of size h is accepted when the
//! embedded error estimate is ≤ tol·h, which makes the observed global error
//! scale linearly in tol. The ε-graded systems of interest are run in
//! renormalized coordinates where stiffness is tamed; in raw coordinates the
//! step size is governed by the fastest ε-order and the step-underflow error
//! reports when that budget is blown.

use super::{Event, EventKind, SimError, Trajectory};
use crate::ir::{eps_powr, powi, Equation, MonomialTerm, ODESystem};

/// Integration controls shared by all integrators in this module.
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Per-unit-step error tolerance.
    pub tol: f64,
    /// Record interval; `None` records every accepted step.
    pub record_dt: Option<f64>,
    /// Components are clamped here instead of crossing zero; each transition
    /// is recorded as a clamp event.
    pub positivity_floor: f64,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: u64,
    /// Chattering guard for the hybrid integrator: abort after this many
    /// mode switches inside one tolerance window.
    pub chatter_limit: usize,
    /// Collapse attracting dominance ties into multi-term sliding fields
    /// (hybrid integrator).
    pub tie_collapse: bool,
    /// Stop early (successfully) once any component leaves this interval.
    pub stop_outside: Option<(f64, f64)>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            record_dt: None,
            positivity_floor: 1e-30,
            max_steps: 400_000_000,
            chatter_limit: 1000,
            tie_collapse: true,
            stop_outside: None,
        }
    }
}

/// A vector field compiled for fast repeated evaluation at fixed ε: the
/// ε-power is folded into each coefficient, distinct monomials are pooled so
/// shared rate expressions are evaluated once per call, and only nonzero
/// exponents are kept.
#[derive(Debug, Clone)]
pub struct CompiledField {
    /// Distinct nontrivial monomials as sparse exponent lists.
    pool: Vec<Vec<(usize, i64)>>,
    /// Scratch for pooled monomial values.
    pool_values: Vec<f64>,
    equations: Vec<CompiledEquation>,
}

#[derive(Debug, Clone)]
enum CompiledEquation {
    Polynomial(Vec<CompiledTerm>),
    Rational {
        num: Vec<CompiledTerm>,
        den: Vec<CompiledTerm>,
    },
}

/// `scaled_coeff · pool[monomial]`; `CONSTANT` marks the empty monomial.
#[derive(Debug, Clone, Copy)]
struct CompiledTerm {
    scaled_coeff: f64,
    monomial: usize,
}

const CONSTANT: usize = usize::MAX;

fn intern(pool: &mut Vec<Vec<(usize, i64)>>, t: &MonomialTerm) -> usize {
    let factors: Vec<(usize, i64)> = t
        .exponents
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(i, &a)| (i, a))
        .collect();
    if factors.is_empty() {
        return CONSTANT;
    }
    if let Some(idx) = pool.iter().position(|f| *f == factors) {
        return idx;
    }
    pool.push(factors);
    pool.len() - 1
}

fn compile_terms(
    pool: &mut Vec<Vec<(usize, i64)>>,
    terms: &[MonomialTerm],
    eps: f64,
) -> Vec<CompiledTerm> {
    terms
        .iter()
        .map(|t| CompiledTerm {
            scaled_coeff: t.coeff * eps_powr(eps, t.eps_order),
            monomial: intern(pool, t),
        })
        .collect()
}

#[inline]
fn eval_terms(terms: &[CompiledTerm], pool_values: &[f64]) -> f64 {
    let mut sum = 0.0;
    for t in terms {
        let m = if t.monomial == CONSTANT {
            1.0
        } else {
            pool_values[t.monomial]
        };
        sum += t.scaled_coeff * m;
    }
    sum
}

impl CompiledField {
    pub fn new(sys: &ODESystem, eps: f64) -> Self {
        let mut pool = Vec::new();
        let equations = sys
            .equations
            .iter()
            .map(|eq| match eq {
                Equation::Polynomial(terms) => {
                    CompiledEquation::Polynomial(compile_terms(&mut pool, terms, eps))
                }
                Equation::Rational { num, den } => CompiledEquation::Rational {
                    num: compile_terms(&mut pool, num, eps),
                    den: compile_terms(&mut pool, den, eps),
                },
            })
            .collect();
        let pool_values = vec![0.0; pool.len()];
        Self {
            pool,
            pool_values,
            equations,
        }
    }

    /// Compile an explicit per-equation selection of terms (a mode field).
    pub fn from_term_lists(lists: &[Vec<MonomialTerm>], eps: f64) -> Self {
        let dens = vec![None; lists.len()];
        Self::from_mode_lists(lists, &dens, eps)
    }

    /// Mode field with optional per-equation denominators (rational modes).
    pub(crate) fn from_mode_lists(
        lists: &[Vec<MonomialTerm>],
        dens: &[Option<Vec<MonomialTerm>>],
        eps: f64,
    ) -> Self {
        let mut pool = Vec::new();
        let equations = lists
            .iter()
            .zip(dens.iter())
            .map(|(terms, den)| match den {
                None => CompiledEquation::Polynomial(compile_terms(&mut pool, terms, eps)),
                Some(den) => CompiledEquation::Rational {
                    num: compile_terms(&mut pool, terms, eps),
                    den: compile_terms(&mut pool, den, eps),
                },
            })
            .collect();
        let pool_values = vec![0.0; pool.len()];
        Self {
            pool,
            pool_values,
            equations,
        }
    }

    pub fn eval_into(&mut self, x: &[f64], out: &mut [f64]) {
        for (v, factors) in self.pool_values.iter_mut().zip(self.pool.iter()) {
            let mut m = 1.0;
            for &(i, a) in factors {
                m *= powi(x[i], a);
            }
            *v = m;
        }
        for (k, eq) in self.equations.iter().enumerate() {
            out[k] = match eq {
                CompiledEquation::Polynomial(terms) => eval_terms(terms, &self.pool_values),
                CompiledEquation::Rational { num, den } => {
                    eval_terms(num, &self.pool_values) / eval_terms(den, &self.pool_values)
                }
            };
        }
    }
}

/// What a right-hand side evaluation can report.
pub(crate) enum StageFailure {
    /// Not solvable at this stage state (the DAE Newton hit a fold).
    Unsolvable,
    NonFinite,
}

pub(crate) trait Rhs {
    fn eval(&mut self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), StageFailure>;
}

impl Rhs for CompiledField {
    fn eval(&mut self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<(), StageFailure> {
        self.eval_into(x, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(StageFailure::NonFinite)
        }
    }
}

// Dormand–Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One accepted step, exposed so callers can interpolate and bisect.
pub(crate) struct StepResult {
    pub t_old: f64,
    pub t_new: f64,
    pub y_old: Vec<f64>,
    pub f_old: Vec<f64>,
    pub f_new: Vec<f64>,
    pub clamped: Vec<usize>,
}

pub(crate) struct Stepper<R: Rhs> {
    pub rhs: R,
    pub t: f64,
    pub y: Vec<f64>,
    f: Vec<f64>,
    h: f64,
    t_end: f64,
    tol: f64,
    floor: f64,
    steps: u64,
    max_steps: u64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    fsal_valid: bool,
    /// Previous accepted error ratio for the PI step controller.
    err_old: f64,
}

impl<R: Rhs> Stepper<R> {
    pub fn new(
        mut rhs: R,
        t0: f64,
        y0: Vec<f64>,
        t_end: f64,
        opts: &IntegrateOptions,
    ) -> Result<Self, SimError> {
        let n = y0.len();
        let mut f = vec![0.0; n];
        rhs.eval(t0, &y0, &mut f)
            .map_err(|_| SimError::BadState { t: t0 })?;
        // Initial step: limited by the field magnitude and the horizon.
        let ynorm = y0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let span = (t_end - t0).abs().max(1e-12);
        let mut h = if fnorm > 0.0 {
            0.01 * ynorm / fnorm
        } else {
            span * 1e-3
        };
        h = h.min(span);
        Ok(Self {
            rhs,
            t: t0,
            y: y0,
            f,
            h,
            t_end,
            tol: opts.tol,
            floor: opts.positivity_floor,
            steps: 0,
            max_steps: opts.max_steps,
            k: Default::default(),
            y_stage: vec![0.0; n],
            fsal_valid: true,
            err_old: 1.0,
        })
    }

    pub fn done(&self) -> bool {
        self.t >= self.t_end
    }

    /// Reset the right-hand side mid-run (mode switches); invalidates FSAL.
    pub fn replace_rhs(&mut self, rhs: R) {
        self.rhs = rhs;
        self.fsal_valid = false;
    }

    /// Restart from an interpolated interior state (event location).
    pub fn restart_at(&mut self, t: f64, y: Vec<f64>) {
        self.t = t;
        self.y = y;
        self.fsal_valid = false;
    }

    pub fn step(&mut self) -> Result<StepResult, SimError> {
        let n = self.y.len();
        if !self.fsal_valid {
            let (t, y) = (self.t, self.y.clone());
            self.rhs
                .eval(t, &y, &mut self.f)
                .map_err(|_| SimError::BadState { t })?;
            self.fsal_valid = true;
        }
        for ki in self.k.iter_mut() {
            ki.resize(n, 0.0);
        }
        loop {
            self.steps += 1;
            if self.steps > self.max_steps {
                return Err(SimError::StepBudget {
                    t: self.t,
                    steps: self.steps,
                });
            }
            let h = self.h.min(self.t_end - self.t);
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(SimError::StepUnderflow { t: self.t });
            }
            self.k[0].copy_from_slice(&self.f);
            let ok = self.stages(h, n);
            match ok {
                Err(StageFailure::Unsolvable) | Err(StageFailure::NonFinite) => {
                    self.h = h * 0.25;
                    continue;
                }
                Ok(()) => {}
            }
            // 5th-order solution is stage 7's state; error from the E row.
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, es) in E.iter().enumerate() {
                    e += es * self.k[s][i];
                }
                e *= h;
                let scale = self.y[i].abs().max(self.y_stage[i].abs()).max(1e-30);
                err = err.max((e / scale).abs());
            }
            let err_per_unit = err / h;
            if !err_per_unit.is_finite() {
                self.h = h * 0.25;
                continue;
            }
            if err_per_unit <= self.tol {
                let t_old = self.t;
                let y_old = std::mem::replace(&mut self.y, self.y_stage.clone());
                let f_old = self.k[0].clone();
                self.t = t_old + h;
                let mut clamped = Vec::new();
                for i in 0..n {
                    if self.y[i] < self.floor {
                        if y_old[i] >= self.floor {
                            clamped.push(i);
                        }
                        self.y[i] = self.floor;
                    }
                }
                if clamped.is_empty() {
                    self.f.copy_from_slice(&self.k[6]);
                } else {
                    let (t, y) = (self.t, self.y.clone());
                    self.rhs
                        .eval(t, &y, &mut self.f)
                        .map_err(|_| SimError::BadState { t })?;
                }
                // PI step control damps the accept/reject oscillation an
                // I-controller shows at the stability boundary.
                let ratio = (err_per_unit / self.tol).max(1e-10);
                let factor = (0.9 * ratio.powf(-0.14) * self.err_old.powf(0.08)).clamp(0.2, 5.0);
                self.err_old = ratio;
                self.h = (h * factor).max(1e-300);
                return Ok(StepResult {
                    t_old,
                    t_new: self.t,
                    y_old,
                    f_old,
                    f_new: self.f.clone(),
                    clamped,
                });
            }
            self.h = h * (0.9 * (self.tol / err_per_unit).powf(0.2)).clamp(0.1, 0.9);
        }
    }

    fn stages(&mut self, h: f64, n: usize) -> Result<(), StageFailure> {
        let coeffs: [&[f64]; 6] = [&A2, &A3, &A4, &A5, &A6, &A7];
        for (s, a_row) in coeffs.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a_row.iter().enumerate() {
                    acc += aj * self.k[j][i];
                }
                self.y_stage[i] = self.y[i] + h * acc;
            }
            let t_stage = self.t + C[s + 1] * h;
            let (k_done, k_rest) = self.k.split_at_mut(s + 1);
            let _ = k_done;
            self.rhs.eval(t_stage, &self.y_stage, &mut k_rest[0])?;
        }
        // y_stage now holds the 5th-order solution (stage 7 state), k[6] its
        // derivative (FSAL).
        Ok(())
    }
}

/// Cubic Hermite interpolation inside one accepted step.
pub(crate) fn hermite(step: &StepResult, y_new: &[f64], t: f64) -> Vec<f64> {
    let h = step.t_new - step.t_old;
    let s = ((t - step.t_old) / h).clamp(0.0, 1.0);
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y_new.len())
        .map(|i| {
            h00 * step.y_old[i] + h10 * h * step.f_old[i] + h01 * y_new[i] + h11 * h * step.f_new[i]
        })
        .collect()
}

/// Integrate the full system with adaptive steps.
///
/// Per-step error is controlled to `opts.tol` per unit step; conservation
/// laws can be drift-checked on the recorded samples afterwards with
/// [`super::conservation_drift`].
pub fn integrate_full(
    sys: &ODESystem,
    x0: &[f64],
    t_end: f64,
    eps: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, SimError> {
    check_initial(x0, eps)?;
    let field = CompiledField::new(sys, eps);
    let mut stepper = Stepper::new(field, 0.0, x0.to_vec(), t_end, opts)?;
    let mut traj = Trajectory::new();
    traj.push(0.0, x0.to_vec(), "full".into());
    let mut next_record = opts.record_dt.unwrap_or(0.0);
    while !stepper.done() {
        let step = stepper.step()?;
        for &i in &step.clamped {
            traj.events.push(Event {
                time: stepper.t,
                kind: EventKind::Clamp,
                detail: format!("component {i} clamped at floor"),
            });
        }
        let escaped = opts
            .stop_outside
            .map(|(lo, hi)| stepper.y.iter().any(|&v| v < lo || v > hi))
            .unwrap_or(false);
        let record = match opts.record_dt {
            None => true,
            Some(_) => stepper.t >= next_record || stepper.done() || escaped,
        };
        if record {
            traj.push(stepper.t, stepper.y.clone(), "full".into());
            if let Some(dt) = opts.record_dt {
                while next_record <= stepper.t {
                    next_record += dt;
                }
            }
        }
        if escaped {
            break;
        }
    }
    Ok(traj)
}

pub(crate) fn check_initial(x0: &[f64], eps: f64) -> Result<(), SimError> {
    if !(eps > 0.0) {
        return Err(SimError::Ir(crate::ir::IrError::NonpositiveEpsilon(eps)));
    }
    for (i, &v) in x0.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(SimError::Ir(crate::ir::IrError::NonpositiveState {
                index: i,
                value: v,
            }));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Equation, MonomialTerm, ODESystem};

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
    fn exponential_relaxation_matches_closed_form() {
        let sys = one_var();
        let opts = IntegrateOptions {
            tol: 1e-8,
            ..Default::default()
        };
        let traj = integrate_full(&sys, &[2.0], 5.0, 1.0, &opts).unwrap();
        let x5 = traj.last_state().unwrap()[0];
        let exact = 1.0 + (-5.0f64).exp();
        assert!((x5 - exact).abs() < 1e-7, "x(5) = {x5}, exact {exact}");
    }

    #[test]
    fn tolerance_halving_improves_error_linearly() {
        let sys = one_var();
        let run = |tol: f64| {
            let opts = IntegrateOptions {
                tol,
                ..Default::default()
            };
            integrate_full(&sys, &[2.0], 3.0, 1.0, &opts)
                .unwrap()
                .last_state()
                .unwrap()[0]
        };
        let exact = 1.0 + (-3.0f64).exp();
        let mut ratios = Vec::new();
        for &tol in &[1e-4, 1e-5, 1e-6] {
            let d1 = (run(tol) - exact).abs();
            let d2 = (run(tol / 2.0) - exact).abs();
            if d1 > 1e-14 && d2 > 1e-14 {
                ratios.push(d2 / d1);
            }
        }
        let mean = ratios
            .iter()
            .product::<f64>()
            .powf(1.0 / ratios.len() as f64);
        assert!(
            mean <= 0.62,
            "observed tol-order below 1: ratios {ratios:?}"
        );
    }

    #[test]
    fn positivity_clamp_records_event() {
        // x' = -1: crosses zero in finite time.
        let sys = ODESystem::new(
            vec!["x".into()],
            vec![Equation::Polynomial(vec![MonomialTerm::new(
                -1.0,
                0,
                vec![0],
            )
            .unwrap()])],
            vec![],
        )
        .unwrap();
        let opts = IntegrateOptions {
            positivity_floor: 1e-30,
            ..Default::default()
        };
        let traj = integrate_full(&sys, &[0.5], 2.0, 1.0, &opts).unwrap();
        assert!(traj.events.iter().any(|e| e.kind == EventKind::Clamp));
        assert!(traj.last_state().unwrap()[0] >= 1e-30);
    }
}
