//! Built-in cell-cycle case study: a five-variable phosphorylation oscillator
//! with ε-graded rates, its known equilibrations, the two-dimensional
//! reduction, the slow-manifold functions and the three-mode hybrid orbit.
//!
//! Variables: y1 free kinase, y2 phosphorylated kinase, y3 active dimer
//! (the oscillating species), y4 inactive dimer, y5 free activator.
//! The pool y1 + y2 + y3 + y4 is conserved.

use crate::equil::{solve_branch, BranchChoice, EquilError, EquilOptions, ExponentSolution};
use crate::ir::{ConservationLaw, Equation, ExponentVector, IrError, MonomialTerm, ODESystem};
use crate::sim::{
    integrate_dae, integrate_full, DaeSystem, Event, EventKind, IntegrateOptions, SimError,
    Trajectory,
};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TysonError {
    #[error("rate constant {0} must be positive")]
    NonpositiveParameter(&'static str),
    #[error("known exponents failed re-verification against the solver: {0}")]
    VerificationFailed(String),
    #[error("manifold function domain is 0 < y <= k0/2, got y = {y} (k0 = {k0})")]
    OutOfDomain { y: f64, k0: f64 },
    #[error("no closed orbit found: {0}")]
    NoOrbit(String),
    #[error(transparent)]
    Equil(#[from] EquilError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Rate constants of the ε-graded system, dimensionless after grading.
///
/// The default profile carries the literature constants of the source model
/// de-graded at ε = 0.1 (each original rate divided by its ε-order), which
/// makes the graded system at ε = 0.1 numerically identical to the original.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TysonParams {
    pub k1: f64,
    pub k3: f64,
    pub k4: f64,
    pub k4p: f64,
    pub k6: f64,
    pub k8: f64,
    pub k9: f64,
    pub epsilon: f64,
}

impl Default for TysonParams {
    fn default() -> Self {
        Self::graded()
    }
}

impl TysonParams {
    /// Literature constants divided by their grading at ε = 0.1: every
    /// front factor is O(1).
    pub fn graded() -> Self {
        Self {
            k1: 1.5,
            k3: 2.0,
            k4: 1.8,
            k4p: 1.8,
            k6: 1.0,
            k8: 1.0,
            k9: 1.0,
            epsilon: 0.1,
        }
    }

    /// Raw literature magnitudes (min⁻¹). Meant for the two-variable reduced
    /// system, where they put the oscillator deep in its relaxation regime;
    /// in the graded five-variable system they would double-count the
    /// ε-orders.
    pub fn literature() -> Self {
        Self {
            k1: 0.015,
            k3: 200.0,
            k4: 180.0,
            k4p: 0.018,
            k6: 1.0,
            k8: 1.0e6,
            k9: 1.0e3,
            epsilon: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), TysonError> {
        let checks = [
            (self.k1, "k1"),
            (self.k3, "k3"),
            (self.k4, "k4"),
            (self.k4p, "k4p"),
            (self.k6, "k6"),
            (self.k8, "k8"),
            (self.k9, "k9"),
            (self.epsilon, "epsilon"),
        ];
        for (v, name) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(TysonError::NonpositiveParameter(name));
            }
        }
        Ok(())
    }
}

fn term(coeff: f64, eps_order: i64, exponents: [i64; 5]) -> MonomialTerm {
    MonomialTerm::new(coeff, eps_order, exponents.to_vec()).unwrap()
}

/// Build the five-variable ε-graded system.
///
/// Term table (sign, ε-order, monomial):
///
/// ```text
/// y1' =  ε⁻³ k9 y2  − ε⁻⁶ k8 y1  + k6 y3
/// y2' =  ε⁻⁶ k8 y1  − ε⁻³ k9 y2  − ε⁻² k3 y2 y5
/// y3' =  ε²  k4' y4 + ε⁻² k4 y4 y3² − k6 y3
/// y4' = −ε²  k4' y4 − ε⁻² k4 y4 y3² + ε⁻² k3 y2 y5
/// y5' =  ε²  k1     − ε⁻² k3 y2 y5
/// ```
///
/// with the conservation law y1 + y2 + y3 + y4 = 1.
pub fn build_tyson(params: &TysonParams) -> Result<ODESystem, TysonError> {
    params.validate()?;
    let p = params;
    let equations = vec![
        Equation::Polynomial(vec![
            term(p.k9, -3, [0, 1, 0, 0, 0]),
            term(-p.k8, -6, [1, 0, 0, 0, 0]),
            term(p.k6, 0, [0, 0, 1, 0, 0]),
        ]),
        Equation::Polynomial(vec![
            term(p.k8, -6, [1, 0, 0, 0, 0]),
            term(-p.k9, -3, [0, 1, 0, 0, 0]),
            term(-p.k3, -2, [0, 1, 0, 0, 1]),
        ]),
        Equation::Polynomial(vec![
            term(p.k4p, 2, [0, 0, 0, 1, 0]),
            term(p.k4, -2, [0, 0, 2, 1, 0]),
            term(-p.k6, 0, [0, 0, 1, 0, 0]),
        ]),
        Equation::Polynomial(vec![
            term(-p.k4p, 2, [0, 0, 0, 1, 0]),
            term(-p.k4, -2, [0, 0, 2, 1, 0]),
            term(p.k3, -2, [0, 1, 0, 0, 1]),
        ]),
        Equation::Polynomial(vec![
            term(p.k1, 2, [0, 0, 0, 0, 0]),
            term(-p.k3, -2, [0, 1, 0, 0, 1]),
        ]),
    ];
    let law = ConservationLaw::new(
        vec![
            Rational64::from_integer(1),
            Rational64::from_integer(1),
            Rational64::from_integer(1),
            Rational64::from_integer(1),
            Rational64::from_integer(0),
        ],
        1.0,
    );
    let mut sys = ODESystem::new(
        vec![
            "y1".into(),
            "y2".into(),
            "y3".into(),
            "y4".into(),
            "y5".into(),
        ],
        equations,
        vec![law],
    )?;
    sys.epsilon = Some(p.epsilon);
    Ok(sys)
}

/// The two known equilibration scalings of the case study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TysonScaling {
    /// Full equilibration: a = (3, 0, 2, 0, 4), triple balances in the dimer
    /// equations; slow manifold of the low-activity phase.
    FullEquilibration,
    /// Partial equilibration with only the inactive dimer balanced:
    /// a = (3, 0, 0, 4, 4); manifold of the recovery phase.
    PartialY4,
}

/// The documented exponent vectors, re-verified against the solver.
pub fn known_exponents(
    params: &TysonParams,
    scaling: TysonScaling,
) -> Result<ExponentSolution, TysonError> {
    let sys = build_tyson(params)?;
    let laws = sys.conservation_laws.clone();
    let (branch, expected) = match scaling {
        TysonScaling::FullEquilibration => (
            BranchChoice {
                pairs: vec![
                    Some((0, 1)),
                    Some((0, 1)),
                    Some((0, 2)),
                    Some((0, 2)),
                    Some((0, 1)),
                ],
            },
            ExponentVector::from_integers(&[3, 0, 2, 0, 4]),
        ),
        TysonScaling::PartialY4 => (
            BranchChoice {
                pairs: vec![Some((0, 1)), Some((0, 1)), None, Some((1, 2)), Some((0, 1))],
            },
            ExponentVector::from_integers(&[3, 0, 0, 4, 4]),
        ),
    };
    let opts = EquilOptions::default();
    let sols = solve_branch(&sys, &branch, &laws, &opts)?;
    sols.into_iter().find(|s| s.a == expected).ok_or_else(|| {
        TysonError::VerificationFailed(format!(
            "expected exponents {expected} not produced for {scaling:?}"
        ))
    })
}

/// The two-variable reduced model in the fully equilibrated scaling, plus
/// the reconstruction maps back to the five-variable state.
///
/// The reduction assumes the phosphorylated-kinase coordinate stays bounded
/// away from zero along the flow (`assumes_y2_bounded_below`); the companion
/// bound is checked numerically in the test suite rather than proved.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub params: TysonParams,
    /// ȳ3' = k4' ȳ4 + k4 ȳ4 ȳ3² − k6 ȳ3;  ȳ4' = ε²(−k4' ȳ4 − k4 ȳ4 ȳ3² + k1)
    pub system: ODESystem,
    pub assumes_y2_bounded_below: bool,
}

/// Scaled normal form x' = y + y x² − k0 x, y' = ε²(−y − y x² + k1) obtained
/// from the reduced system by x = s·ȳ3, y = s·ȳ4, τ = k4'·t with
/// s = √(k4/k4').
#[derive(Debug, Clone, Copy)]
pub struct NormalForm {
    pub k0: f64,
    pub k1: f64,
    /// State scale s.
    pub scale: f64,
    /// Time scale (normal-form time per model time).
    pub time_scale: f64,
}

impl NormalForm {
    /// Right-hand side of the normal form.
    pub fn field(&self, x: f64, y: f64, eps: f64) -> (f64, f64) {
        let common = y + y * x * x;
        (common - self.k0 * x, eps * eps * (self.k1 - common))
    }

    /// Fold ordinate y0 = k0/2 where the two manifold branches meet.
    pub fn fold_y(&self) -> f64 {
        self.k0 / 2.0
    }
}

impl ReducedSystem {
    /// Rest point (ȳ3*, ȳ4*) = (k1/k6, k1/(k4' + k4 (k1/k6)²)).
    pub fn rest_point(&self) -> (f64, f64) {
        let p = &self.params;
        let y3 = p.k1 / p.k6;
        let y4 = p.k1 / (p.k4p + p.k4 * y3 * y3);
        (y3, y4)
    }

    /// Newton-refined rest point with the field residual it achieves.
    pub fn refined_rest_point(&self, eps: f64) -> ((f64, f64), f64) {
        let (mut u, mut v) = self.rest_point();
        for _ in 0..30 {
            let f = self.field(u, v, eps);
            let p = &self.params;
            // Analytic Jacobian of the reduced field.
            let j00 = 2.0 * p.k4 * v * u - p.k6;
            let j01 = p.k4p + p.k4 * u * u;
            let j10 = -eps * eps * 2.0 * p.k4 * v * u;
            let j11 = -eps * eps * (p.k4p + p.k4 * u * u);
            let det = j00 * j11 - j01 * j10;
            if det.abs() < 1e-300 {
                break;
            }
            let du = (f.0 * j11 - f.1 * j01) / det;
            let dv = (j00 * f.1 - j10 * f.0) / det;
            u -= du;
            v -= dv;
            if du.abs().max(dv.abs()) < 1e-15 * u.abs().max(v.abs()).max(1e-30) {
                break;
            }
        }
        let f = self.field(u, v, eps);
        ((u, v), f.0.abs().max(f.1.abs()))
    }

    pub fn field(&self, y3: f64, y4: f64, eps: f64) -> (f64, f64) {
        let p = &self.params;
        let conv = p.k4p * y4 + p.k4 * y4 * y3 * y3;
        (conv - p.k6 * y3, eps * eps * (p.k1 - conv))
    }

    /// Reconstruction maps: given (ȳ3, ȳ4) and ȳ2, recover the remaining
    /// barred coordinates ȳ5 = k1/(k3 ȳ2) and ȳ1 = (k9 ȳ2 + k6 ε⁵ ȳ3)/k8.
    pub fn reconstruct(&self, y3b: f64, y4b: f64, y2b: f64, eps: f64) -> [f64; 5] {
        let p = &self.params;
        let y5b = p.k1 / (p.k3 * y2b);
        let y1b = (p.k9 * y2b + p.k6 * eps.powi(5) * y3b) / p.k8;
        [y1b, y2b, y3b, y4b, y5b]
    }

    /// Drift of the slaved coordinate: ȳ2' = ε² (k6 ȳ3 − k1).
    pub fn y2_rate(&self, y3b: f64, eps: f64) -> f64 {
        eps * eps * (self.params.k6 * y3b - self.params.k1)
    }

    /// Normal-form constants under the scaling x = √(k4/k4')·ȳ3.
    pub fn normal_form(&self) -> NormalForm {
        let p = &self.params;
        let scale = (p.k4 / p.k4p).sqrt();
        NormalForm {
            k0: p.k6 / p.k4p,
            k1: p.k1 * scale / p.k4p,
            scale,
            time_scale: p.k4p,
        }
    }

    /// The oscillation inequality in original constants: the fold is
    /// reachable iff k1 √k4 > k6 √k4' (equivalently, normal-form k1 > k0).
    pub fn oscillatory_inequality(&self) -> (f64, f64, bool) {
        let p = &self.params;
        let lhs = p.k1 * p.k4.sqrt();
        let rhs = p.k6 * p.k4p.sqrt();
        (lhs, rhs, lhs > rhs)
    }
}

/// Build the reduced two-variable model.
pub fn reduced_2d(params: &TysonParams) -> Result<ReducedSystem, TysonError> {
    params.validate()?;
    let p = params;
    let t2 = |coeff: f64, eps_order: i64, exponents: [i64; 2]| {
        MonomialTerm::new(coeff, eps_order, exponents.to_vec()).unwrap()
    };
    let system = ODESystem::new(
        vec!["y3_bar".into(), "y4_bar".into()],
        vec![
            Equation::Polynomial(vec![
                t2(p.k4p, 0, [0, 1]),
                t2(p.k4, 0, [2, 1]),
                t2(-p.k6, 0, [1, 0]),
            ]),
            Equation::Polynomial(vec![
                t2(-p.k4p, 2, [0, 1]),
                t2(-p.k4, 2, [2, 1]),
                t2(p.k1, 2, [0, 0]),
            ]),
        ],
        vec![],
    )?;
    Ok(ReducedSystem {
        params: *params,
        system,
        assumes_y2_bounded_below: true,
    })
}

/// Low branch of the manifold y x² − k0 x + y = 0: X(y) = (k0 − √(k0²−4y²))/(2y).
pub fn manifold_x(y: f64, k0: f64) -> Result<f64, TysonError> {
    check_domain(y, k0)?;
    let disc = k0 * k0 - 4.0 * y * y;
    Ok((k0 - disc.max(0.0).sqrt()) / (2.0 * y))
}

/// High branch X₊(y) = (k0 + √(k0²−4y²))/(2y). X·X₊ = 1 and both equal 1 at
/// the fold y = k0/2.
pub fn manifold_x_plus(y: f64, k0: f64) -> Result<f64, TysonError> {
    check_domain(y, k0)?;
    let disc = k0 * k0 - 4.0 * y * y;
    Ok((k0 + disc.max(0.0).sqrt()) / (2.0 * y))
}

fn check_domain(y: f64, k0: f64) -> Result<(), TysonError> {
    if !(y > 0.0) || y > k0 / 2.0 {
        return Err(TysonError::OutOfDomain { y, k0 });
    }
    Ok(())
}

/// A closed three-mode orbit in the original (y3, y4) plane.
#[derive(Debug, Clone)]
pub struct HybridCycle {
    /// Assembled orbit; mode labels "1" (slow manifold), "3" (fast
    /// conversion), "2" (activity decay).
    pub trajectory: Trajectory,
    /// State where the slow manifold folds and the orbit exits (end of
    /// mode 1).
    pub fold_state: [f64; 2],
    /// State where the fast conversion rebalances the inactive-dimer
    /// equation (end of mode 3).
    pub fast_capture_state: [f64; 2],
    /// State where the slow manifold recaptures the orbit (end of mode 2 =
    /// start of mode 1).
    pub slow_capture_state: [f64; 2],
    /// Durations of modes 1, 2, 3 in model time.
    pub durations: [f64; 3],
    pub laps: usize,
}

/// Either a closed orbit or the stable rest point the dynamics found
/// instead.
#[derive(Debug, Clone)]
pub enum HybridOutcome {
    Cycle(Box<HybridCycle>),
    RestPoint([f64; 2]),
}

/// Assemble the three-mode hybrid orbit at the given ε.
///
/// Mode 1 is a differential-algebraic crawl on the slow manifold
/// (inactive dimer accumulates, activity slaved to the low branch); it ends
/// at the fold, computed by the constraint solver losing its root. Mode 3 is
/// the fast truncated conversion, which preserves y3 + y4 and ends at the
/// first downward rebalancing of the inactive-dimer equation. Mode 2 is the
/// two-term decay system, which ends when production catches the decay in
/// the active-dimer equation and the slow manifold recaptures the orbit.
/// Transition points are computed, never hard-coded.
pub fn hybrid_cycle(
    params: &TysonParams,
    eps: f64,
    opts: &IntegrateOptions,
) -> Result<HybridOutcome, TysonError> {
    params.validate()?;
    let p = params;
    // The margin scans below walk the recorded samples, so the internal mode
    // integrations always record every accepted step.
    let opts = IntegrateOptions {
        record_dt: None,
        ..opts.clone()
    };
    let opts = &opts;
    let feed = eps * eps * p.k1; // equilibrated activator supply
    let fold_y4 = p.k6 / (2.0 * (p.k4 * p.k4p).sqrt());

    // Mode-1 right-hand sides over the state [y3, y4].
    let dae = DaeSystem {
        variables: vec!["y3".into(), "y4".into()],
        slow: vec![(
            1,
            vec![
                MonomialTerm::new(p.k1, 2, vec![0, 0]).unwrap(),
                MonomialTerm::new(-p.k6, 0, vec![1, 0]).unwrap(),
            ],
        )],
        algebraic: vec![(
            0,
            vec![
                MonomialTerm::new(p.k4p, 2, vec![0, 1]).unwrap(),
                MonomialTerm::new(p.k4, -2, vec![2, 1]).unwrap(),
                MonomialTerm::new(-p.k6, 0, vec![1, 0]).unwrap(),
            ],
        )],
    };
    let mode3 = ODESystem::new(
        vec!["y3".into(), "y4".into()],
        vec![
            Equation::Polynomial(vec![MonomialTerm::new(p.k4, -2, vec![2, 1]).unwrap()]),
            Equation::Polynomial(vec![MonomialTerm::new(-p.k4, -2, vec![2, 1]).unwrap()]),
        ],
        vec![],
    )?;
    let mode2 = ODESystem::new(
        vec!["y3".into(), "y4".into()],
        vec![
            Equation::Polynomial(vec![MonomialTerm::new(-p.k6, 0, vec![1, 0]).unwrap()]),
            Equation::Polynomial(vec![
                MonomialTerm::new(p.k1, 2, vec![0, 0]).unwrap(),
                MonomialTerm::new(-p.k4, -2, vec![2, 1]).unwrap(),
            ]),
        ],
        vec![],
    )?;

    // Start mode 1 halfway up the slow branch.
    let mut y4_start = 0.5 * fold_y4;
    let mut y3_start = eps * eps * p.k4p * y4_start / p.k6;
    let crawl_guard = 40.0 * fold_y4 / feed + 100.0;

    let mut prev_capture: Option<[f64; 2]> = None;
    for lap in 1..=8 {
        // ---- Mode 1: slow-manifold crawl until the fold.
        let t1 = integrate_dae(&dae, &[y3_start, y4_start], crawl_guard, eps, opts)?;
        let fold_event = t1.events.iter().find(|e| e.kind == EventKind::ManifoldExit);
        let Some(fold_event) = fold_event else {
            // No fold reached: the slow flow settled. Report the rest point.
            let y3 = eps * eps * p.k1 / p.k6;
            let y4 = p.k1 / (p.k4p + p.k4 * (p.k1 / p.k6) * (p.k1 / p.k6));
            return Ok(HybridOutcome::RestPoint([y3, y4]));
        };
        let fold_t = fold_event.time;
        let fold_state = t1.last_state().unwrap().to_vec();

        // ---- Mode 3: fast conversion until the inactive-dimer balance
        // rebalances downward (|k4 y4 y3²| falls back to the feed level).
        let margin3 = |s: &[f64]| (p.k4 / (eps * eps) * s[1] * s[0] * s[0]).ln() - feed.ln();
        let (t3, fast_capture) =
            run_until_downward_zero(&mode3, &fold_state, eps, opts, margin3, 50.0 / p.k6)
                .map_err(|e| TysonError::NoOrbit(format!("fast mode never rebalanced: {e}")))?;

        // ---- Mode 2: decay until production catches the active-dimer decay.
        let margin2 = |s: &[f64]| {
            let deg = (p.k6 * s[0]).ln();
            let prod = (eps * eps * p.k4p * s[1])
                .ln()
                .max((p.k4 / (eps * eps) * s[1] * s[0] * s[0]).ln());
            deg - prod
        };
        let (t2, slow_capture) =
            run_until_downward_zero(&mode2, &fast_capture, eps, opts, margin2, 200.0 / p.k6)
                .map_err(|e| TysonError::NoOrbit(format!("decay mode never recaptured: {e}")))?;

        let converged = prev_capture.is_some_and(|prev| {
            let d = (prev[0] - slow_capture[0]).abs() + (prev[1] - slow_capture[1]).abs();
            d <= 1e-9 + 1e-6 * (slow_capture[0].abs() + slow_capture[1].abs())
        });
        if converged || lap == 8 {
            // Assemble the final lap.
            let mut traj = Trajectory::new();
            let mut events = Vec::new();
            let mut offset = 0.0;
            for (seg, label, transition) in [
                (&t1, "1", "fold exit: slow manifold lost its root"),
                (&t3, "3", "fast balance: conversion rebalanced"),
                (&t2, "2", "slow capture: manifold reattracts"),
            ] {
                for (k, &t) in seg.times.iter().enumerate() {
                    let shifted = offset + t;
                    if traj.last_time().is_none_or(|lt| shifted > lt) {
                        traj.push(shifted, seg.states[k].clone(), label.into());
                    }
                }
                offset = traj.last_time().unwrap_or(offset);
                events.push(Event {
                    time: offset,
                    kind: EventKind::ModeSwitch,
                    detail: transition.into(),
                });
            }
            traj.events = events;
            let durations = [
                fold_t,
                t2.last_time().unwrap_or(0.0),
                t3.last_time().unwrap_or(0.0),
            ];
            return Ok(HybridOutcome::Cycle(Box::new(HybridCycle {
                trajectory: traj,
                fold_state: [fold_state[0], fold_state[1]],
                fast_capture_state: [fast_capture[0], fast_capture[1]],
                slow_capture_state: [slow_capture[0], slow_capture[1]],
                durations,
                laps: lap,
            })));
        }
        prev_capture = Some([slow_capture[0], slow_capture[1]]);
        y4_start = slow_capture[1];
        y3_start = eps * eps * p.k4p * y4_start / p.k6;
    }
    Err(TysonError::NoOrbit(
        "orbit did not close within the lap budget".into(),
    ))
}

/// Integrate `sys` until the margin function crosses zero downward; returns
/// the truncated trajectory and the crossing state.
fn run_until_downward_zero<F>(
    sys: &ODESystem,
    x0: &[f64],
    eps: f64,
    opts: &IntegrateOptions,
    margin: F,
    t_max: f64,
) -> Result<(Trajectory, Vec<f64>), SimError>
where
    F: Fn(&[f64]) -> f64,
{
    let traj = integrate_full(sys, x0, t_max, eps, opts)?;
    let mut prev = margin(&traj.states[0]);
    for k in 1..traj.len() {
        let cur = margin(&traj.states[k]);
        if prev > 0.0 && cur <= 0.0 {
            // Linear refinement of the crossing inside the step.
            let w = prev / (prev - cur);
            let t_star = traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]);
            let x_star: Vec<f64> = traj.states[k - 1]
                .iter()
                .zip(traj.states[k].iter())
                .map(|(a, b)| a + w * (b - a))
                .collect();
            let mut cut = Trajectory::new();
            for j in 0..k {
                cut.push(traj.times[j], traj.states[j].clone(), traj.modes[j].clone());
            }
            if cut.last_time().is_none_or(|lt| t_star > lt) {
                cut.push(t_star, x_star.clone(), traj.modes[k - 1].clone());
            }
            return Ok((cut, x_star));
        }
        prev = cur;
    }
    Err(SimError::NoCycle { eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts_and_orders() {
        let sys = build_tyson(&TysonParams::default()).unwrap();
        let counts: Vec<usize> = sys
            .equations
            .iter()
            .map(|e| e.terms().unwrap().len())
            .collect();
        assert_eq!(counts, vec![3, 3, 3, 3, 2]);
        // Inactive-dimer equation: orders (2, -2, -2) with signs (-, -, +).
        let t4 = sys.equations[3].terms().unwrap();
        let orders: Vec<i64> = t4.iter().map(|t| *t.eps_order.numer()).collect();
        assert_eq!(orders, vec![2, -2, -2]);
        let signs: Vec<bool> = t4.iter().map(|t| t.coeff > 0.0).collect();
        assert_eq!(signs, vec![false, false, true]);
    }

    #[test]
    fn conserved_pool_sums_to_zero_in_field() {
        let sys = build_tyson(&TysonParams::default()).unwrap();
        let x = [0.2, 0.3, 0.1, 0.4, 0.7];
        for &eps in &[0.3, 0.1] {
            let f = sys.evaluate_field(&x, eps).unwrap();
            let sum: f64 = f[..4].iter().sum();
            // Exact cancellation up to floating-point roundoff of the
            // largest participating term.
            let scale = f[..4].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            assert!(
                sum.abs() < 1e-12 * scale,
                "pool derivative {sum} at eps {eps}"
            );
        }
    }

    #[test]
    fn activator_equation_vanishes_on_its_balance() {
        // y5' = ε² k1 − ε⁻² k3 y2 y5 is zero exactly at y2 y5 = ε⁴ k1/k3.
        let p = TysonParams::default();
        let sys = build_tyson(&p).unwrap();
        for &eps in &[0.3f64, 0.1] {
            let y2 = 0.8;
            let y5 = eps.powi(4) * p.k1 / (p.k3 * y2);
            let f = sys.evaluate_field(&[0.2, y2, 0.1, 0.3, y5], eps).unwrap();
            assert!(
                f[4].abs() <= 1e-14 * (eps * eps * p.k1),
                "activator rate {} at eps {eps}",
                f[4]
            );
        }
    }

    #[test]
    fn renormalized_term_orders_match_the_scaled_system() {
        // Under a = (3, 0, 2, 0, 4) the kinase equation carries orders
        // (−6, −6, −1) and the activator equation (−2, −2).
        let sys = build_tyson(&TysonParams::default()).unwrap();
        let a = ExponentVector::from_integers(&[3, 0, 2, 0, 4]);
        let renormed = sys.renormalize(&a).unwrap();
        let orders = |i: usize| -> Vec<i64> {
            renormed.equations[i]
                .terms()
                .unwrap()
                .iter()
                .map(|t| *t.eps_order.numer())
                .collect()
        };
        assert_eq!(orders(0), vec![-6, -6, -1]);
        assert_eq!(orders(1), vec![-3, -3, 2]);
        assert_eq!(orders(2), vec![0, 0, 0]);
        assert_eq!(orders(3), vec![2, 2, 2]);
        assert_eq!(orders(4), vec![-2, -2]);
    }

    #[test]
    fn partial_truncation_and_timescale_diagnostics() {
        use crate::equil::{order_sequence, truncate};
        let p = TysonParams::default();
        // The partial scaling keeps the inactive-dimer pair at prefactor −2
        // and leaves the active dimer to its decay term.
        let partial = known_exponents(&p, TysonScaling::PartialY4).unwrap();
        let sys = build_tyson(&p).unwrap();
        let trunc = truncate(&sys, &partial).unwrap();
        assert_eq!(trunc.kept[3], vec![1, 2]);
        assert_eq!(trunc.prefactors[3], Rational64::from_integer(-2));
        assert!(!trunc.equilibrated[2]);
        assert_eq!(trunc.kept[2], vec![2]);

        // The full scaling's prefactors are separated but not an
        // equation-ordered cascade.
        let full = known_exponents(&p, TysonScaling::FullEquilibration).unwrap();
        let (sorted, chain) = order_sequence(&full);
        assert!(!chain);
        let sorted: Vec<i64> = sorted.iter().map(|q| *q.numer()).collect();
        assert_eq!(sorted, vec![-6, -3, -2, 0, 2]);
    }

    #[test]
    fn known_exponents_verify() {
        let p = TysonParams::default();
        // Sixteen sign-compatible pair selections over the five equations.
        let sys = build_tyson(&p).unwrap();
        assert_eq!(crate::equil::branch_count(&sys, None).unwrap(), 16);
        let full = known_exponents(&p, TysonScaling::FullEquilibration).unwrap();
        assert_eq!(full.a, ExponentVector::from_integers(&[3, 0, 2, 0, 4]));
        let partial = known_exponents(&p, TysonScaling::PartialY4).unwrap();
        assert_eq!(partial.a, ExponentVector::from_integers(&[3, 0, 0, 4, 4]));
    }

    #[test]
    fn rest_point_formula_and_refinement() {
        let p = TysonParams {
            k1: 0.015,
            k4: 180.0,
            k4p: 0.018,
            k6: 1.0,
            ..TysonParams::literature()
        };
        let red = reduced_2d(&p).unwrap();
        let (u, v) = red.rest_point();
        assert!((u - 0.015).abs() < 1e-15);
        assert!((v - 0.2564).abs() < 1e-4, "v = {v}");
        let ((ur, vr), residual) = red.refined_rest_point(0.1);
        assert!(residual <= 1e-12, "residual {residual}");
        let f = red.field(ur, vr, 0.1);
        assert!(f.0.abs().max(f.1.abs()) <= 1e-12);
    }

    #[test]
    fn manifold_functions() {
        let k0 = 2.0;
        // Fold value: both branches equal 1.
        assert!((manifold_x(k0 / 2.0, k0).unwrap() - 1.0).abs() < 1e-12);
        assert!((manifold_x_plus(k0 / 2.0, k0).unwrap() - 1.0).abs() < 1e-12);
        // Product of the quadratic roots is 1 for any valid y.
        for &y in &[0.1, 0.3, 0.6, 0.9] {
            let x = manifold_x(y, k0).unwrap();
            let xp = manifold_x_plus(y, k0).unwrap();
            assert!((x * xp - 1.0).abs() < 1e-12);
        }
        // Worked value: k0 = 2, y = 0.6 gives X = 1/3.
        let x = manifold_x(0.6, k0).unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-12);
        assert!((0.6 * x * x - 2.0 * x + 0.6).abs() < 1e-12);
        assert!(manifold_x(0.0, k0).is_err());
        assert!(manifold_x(1.5, k0).is_err());
    }

    #[test]
    fn normal_form_matches_reduced_field() {
        let p = TysonParams::default();
        let red = reduced_2d(&p).unwrap();
        let nf = red.normal_form();
        let eps = 0.1;
        for &(u, v) in &[(0.3, 0.2), (1.5, 0.25), (4.0, 0.05)] {
            let (du, dv) = red.field(u, v, eps);
            let (x, y) = (nf.scale * u, nf.scale * v);
            let (dx, dy) = nf.field(x, y, eps);
            // d(x)/dτ = s·du/(k4'); same for y.
            assert!(
                (dx - nf.scale * du / nf.time_scale).abs() < 1e-10 * dx.abs().max(1.0),
                "x-field mismatch at ({u}, {v})"
            );
            assert!(
                (dy - nf.scale * dv / nf.time_scale).abs() < 1e-10 * dy.abs().max(1.0),
                "y-field mismatch at ({u}, {v})"
            );
        }
    }

    #[test]
    fn fast_mode_converts_one_dimer_into_the_other() {
        // Along mode 3 the truncated fields satisfy y3' = −y4' exactly, so
        // y3 + y4 is conserved; in the partial-equilibration coordinates
        // (ỹ3 = y3, ỹ4 = ε⁻⁴ y4) the rate ratio ỹ3'/ỹ4' is −ε⁴.
        let p = TysonParams::default();
        let eps = 0.1;
        let opts = crate::sim::IntegrateOptions {
            tol: 1e-9,
            ..Default::default()
        };
        let HybridOutcome::Cycle(hc) = hybrid_cycle(&p, eps, &opts).unwrap() else {
            panic!("default profile oscillates");
        };
        let t = &hc.trajectory;
        let mut checked = 0;
        for k in 1..t.len() {
            if t.modes[k] != "3" || t.modes[k - 1] != "3" {
                continue;
            }
            let dy3 = t.states[k][0] - t.states[k - 1][0];
            let dy4 = t.states[k][1] - t.states[k - 1][1];
            if dy3.abs() < 1e-12 {
                continue;
            }
            assert!(
                (dy3 + dy4).abs() <= 1e-6 * dy3.abs(),
                "conversion not one-to-one: dy3 {dy3}, dy4 {dy4}"
            );
            // Same statement in the tilde scaling.
            let ratio = dy3 / (dy4 / eps.powi(4));
            assert!((ratio + eps.powi(4)).abs() <= 1e-6 * eps.powi(4));
            checked += 1;
        }
        assert!(checked > 10, "too few fast-mode samples: {checked}");
    }

    #[test]
    fn fast_mode_dominant_field_matches_full_signs() {
        // In the spike region the dominant-monomial field agrees with the
        // full field in sign and leading magnitude for the dimer equations.
        let p = TysonParams::default();
        let sys = build_tyson(&p).unwrap();
        let hsys = crate::trop::tropicalize(&sys, crate::trop::TropKind::Complete).unwrap();
        let eps = 0.1;
        // Mid-spike states: y3 well above the fold scale, y4 still sizable.
        for &(y3, y4) in &[(0.05, 0.2), (0.1, 0.15), (0.2, 0.05)] {
            let y2 = 0.7;
            let y5 = eps * eps * eps * eps * p.k1 / (p.k3 * y2) * 0.9;
            let x = [0.03, y2, y3, y4, y5];
            let full = sys.evaluate_field(&x, eps).unwrap();
            let trop = hsys.field_at(&x, eps).unwrap();
            for i in [2usize, 3] {
                assert_eq!(
                    full[i].signum(),
                    trop[i].signum(),
                    "sign mismatch in equation {i} at y3 = {y3}"
                );
                // Same order of magnitude: at ε = 0.1 the subdominant decay
                // still carries a visible fraction of the sum mid-spike.
                let ratio = trop[i] / full[i];
                assert!(
                    (0.3..=3.0).contains(&ratio),
                    "leading order off in equation {i}: ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn signature_constant_near_the_rest_region() {
        // Slightly off the slow manifolds the dominance signature is locally
        // constant: sample a small ball around a generic displaced state.
        let p = TysonParams::default();
        let sys = build_tyson(&p).unwrap();
        let hsys = crate::trop::tropicalize(&sys, crate::trop::TropKind::Complete).unwrap();
        let eps = 0.1;
        let red = reduced_2d(&p).unwrap();
        let (u, v) = red.rest_point();
        //

        // Rest-region state in original coordinates, pushed 30% off every
        // balance so no tie is nearby.
        let y3 = eps * eps * u;
        let y2 = 0.6;
        let center = [
            1.3 * eps.powi(3) * p.k9 * y2 / p.k8,
            y2,
            1.3 * y3,
            0.7 * v,
            1.3 * eps.powi(4) * p.k1 / (p.k3 * y2),
        ];
        let base = hsys.signature_at(&center, eps).unwrap();
        assert!(!base.any_tie());
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..200 {
            let x: Vec<f64> = center.iter().map(|c| c * (1.0 + 0.01 * next())).collect();
            let sig = hsys.signature_at(&x, eps).unwrap();
            assert_eq!(
                sig.entries, base.entries,
                "signature changed inside the ball"
            );
        }
    }

    #[test]
    fn oscillation_inequality_for_default_profile() {
        let red = reduced_2d(&TysonParams::default()).unwrap();
        let (lhs, rhs, oscillatory) = red.oscillatory_inequality();
        assert!(oscillatory, "lhs {lhs} rhs {rhs}");
        let nf = red.normal_form();
        assert!(nf.k1 > nf.k0);
    }
}
