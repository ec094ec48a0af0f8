//! Event-driven integration of tropicalized (dominant-monomial) fields.
//!
//! Between events the mode is frozen and its monomial field integrated like
//! any smooth system. Dominance-margin zero crossings are located by
//! bisection on the step interpolant and recorded as mode-switch events.
//!
//! Walls — manifolds the piecewise field pushes into from both sides — would
//! make a pure switching scheme chatter forever. When a crossing is detected
//! the integrator checks whether the candidate mode immediately drives the
//! state back; if so the tying terms are kept together as a sliding
//! multi-term field until their magnitudes genuinely separate. The chattering
//! guard remains as a backstop and reports a wall diagnostic when switching
//! degenerates.

use super::rk::{hermite, CompiledField, IntegrateOptions, StepResult, Stepper};
use super::{Event, EventKind, SimError, Trajectory};
use crate::ir::{Equation, MonomialTerm, ODESystem};
use crate::trop::{HybridSystem, TropKind};

#[derive(Clone, Copy, PartialEq, Eq)]
enum SlotRole {
    Sum,
    Production,
    Degradation,
    Numerator,
    Denominator,
}

/// One dominance competition: a subset of an equation's terms out of which a
/// kept set is currently dominant.
struct Slot {
    equation: usize,
    role: SlotRole,
    members: Vec<usize>,
    kept: Vec<usize>,
    last_gap: f64,
}

struct ModeState {
    slots: Vec<Slot>,
}

impl ModeState {
    fn label(&self, n_eq: usize) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(n_eq);
        for eq in 0..n_eq {
            let eq_slots: Vec<&Slot> = self.slots.iter().filter(|s| s.equation == eq).collect();
            let fmt_kept = |s: &Slot| {
                s.kept
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("~")
            };
            let part = match eq_slots.len() {
                1 => fmt_kept(eq_slots[0]),
                2 => format!("{}-{}", fmt_kept(eq_slots[0]), fmt_kept(eq_slots[1])),
                _ => String::new(),
            };
            parts.push(part);
        }
        parts.join(";")
    }
}

struct TermRef<'a> {
    terms: &'a [MonomialTerm],
}

fn slot_terms<'a>(sys: &'a ODESystem, slot: &Slot) -> TermRef<'a> {
    match (&sys.equations[slot.equation], slot.role) {
        (Equation::Polynomial(t), _) => TermRef { terms: t },
        (Equation::Rational { num, .. }, SlotRole::Numerator) => TermRef { terms: num },
        (Equation::Rational { den, .. }, SlotRole::Denominator) => TermRef { terms: den },
        (Equation::Rational { .. }, _) => unreachable!(),
    }
}

fn build_slots(hsys: &HybridSystem, x0: &[f64], eps: f64) -> Result<ModeState, SimError> {
    let sys = &hsys.source;
    let log_x: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    let log_eps = eps.ln();
    let mut slots = Vec::new();
    for (i, eq) in sys.equations.iter().enumerate() {
        match (hsys.kind, eq) {
            (TropKind::Complete, Equation::Polynomial(terms)) => {
                slots.push(new_slot(i, SlotRole::Sum, (0..terms.len()).collect()));
            }
            (TropKind::Complete, Equation::Rational { num, den }) => {
                slots.push(new_slot(i, SlotRole::Numerator, (0..num.len()).collect()));
                slots.push(new_slot(i, SlotRole::Denominator, (0..den.len()).collect()));
            }
            (TropKind::TwoTerms, Equation::Polynomial(terms)) => {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for (j, t) in terms.iter().enumerate() {
                    if t.coeff > 0.0 {
                        pos.push(j);
                    } else {
                        neg.push(j);
                    }
                }
                slots.push(new_slot(i, SlotRole::Production, pos));
                slots.push(new_slot(i, SlotRole::Degradation, neg));
            }
            (TropKind::TwoTerms, Equation::Rational { .. }) => {
                return Err(SimError::Ir(crate::ir::IrError::RationalNotSupported {
                    equation: i,
                }))
            }
        }
    }
    for slot in &mut slots {
        let terms = slot_terms(sys, slot);
        let w = argmax_log(terms.terms, &slot.members, &log_x, log_eps);
        slot.kept = vec![w];
        slot.last_gap = 0.0;
    }
    Ok(ModeState { slots })
}

fn new_slot(equation: usize, role: SlotRole, members: Vec<usize>) -> Slot {
    Slot {
        equation,
        role,
        members,
        kept: Vec::new(),
        last_gap: 0.0,
    }
}

fn argmax_log(terms: &[MonomialTerm], members: &[usize], log_x: &[f64], log_eps: f64) -> usize {
    let mut best = members[0];
    let mut best_log = terms[best].log_magnitude(log_x, log_eps);
    for &j in &members[1..] {
        let lm = terms[j].log_magnitude(log_x, log_eps);
        if lm > best_log {
            best = j;
            best_log = lm;
        }
    }
    best
}

fn mode_field(sys: &ODESystem, mode: &ModeState, eps: f64) -> CompiledField {
    // Kept terms per equation; rational equations keep one num/den pair and
    // are folded into a polynomial-like evaluation via CompiledField lists.
    let n = sys.equations.len();
    let mut lists: Vec<Vec<MonomialTerm>> = vec![Vec::new(); n];
    let mut dens: Vec<Option<Vec<MonomialTerm>>> = vec![None; n];
    for slot in &mode.slots {
        let terms = slot_terms(sys, slot);
        let kept: Vec<MonomialTerm> = slot.kept.iter().map(|&j| terms.terms[j].clone()).collect();
        match slot.role {
            SlotRole::Denominator => dens[slot.equation] = Some(kept),
            _ => lists[slot.equation].extend(kept),
        }
    }
    CompiledField::from_mode_lists(&lists, &dens, eps)
}

/// The released/captured bookkeeping for one located crossing.
struct Crossing {
    slot_idx: usize,
    challenger: usize,
}

/// Integrate the dominant-monomial field of a tropicalized system.
///
/// Mode switches are located by bisection to within the step interpolant's
/// accuracy and recorded as events; the mode field is swapped at the event.
/// Attracting ties become sliding multi-term fields when `opts.tie_collapse`
/// is set (the default); with it disabled, walls trip the chattering guard.
pub fn integrate_hybrid(
    hsys: &HybridSystem,
    x0: &[f64],
    t_end: f64,
    eps: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, SimError> {
    super::rk::check_initial(x0, eps)?;
    let sys = &hsys.source;
    let n_eq = sys.equations.len();
    let mut mode = build_slots(hsys, x0, eps)?;
    let mut stepper = Stepper::new(mode_field(sys, &mode, eps), 0.0, x0.to_vec(), t_end, opts)?;
    let mut traj = Trajectory::new();
    traj.push(0.0, x0.to_vec(), mode.label(n_eq));
    let mut next_record = opts.record_dt.unwrap_or(0.0);
    let mut recent_switches: Vec<f64> = Vec::new();
    let log_eps = eps.ln();

    while !stepper.done() {
        let step = stepper.step()?;
        for &i in &step.clamped {
            traj.events.push(Event {
                time: stepper.t,
                kind: EventKind::Clamp,
                detail: format!("component {i} clamped at floor"),
            });
        }
        // Earliest dominance loss across slots, if any.
        let crossing = find_crossing(sys, &mode, &stepper.y, log_eps);
        if let Some(cross) = crossing {
            let (t_star, x_star) = locate(sys, &mode, &cross, &step, &stepper.y, log_eps, opts.tol);
            let slot = &mode.slots[cross.slot_idx];
            let terms = slot_terms(sys, slot);
            let old_kept = slot.kept.clone();
            // Attractivity: does the candidate single-dominant field push the
            // old dominant straight back on top?
            let attracting = {
                let mut trial = ModeState {
                    slots: mode
                        .slots
                        .iter()
                        .map(|s| Slot {
                            equation: s.equation,
                            role: s.role,
                            members: s.members.clone(),
                            kept: s.kept.clone(),
                            last_gap: s.last_gap,
                        })
                        .collect(),
                };
                trial.slots[cross.slot_idx].kept = vec![cross.challenger];
                let mut field = mode_field(sys, &trial, eps);
                let mut f = vec![0.0; x_star.len()];
                field.eval_into(&x_star, &mut f);
                let old_top = argmax_log(terms.terms, &old_kept, &log_vec(&x_star), log_eps);
                gap_derivative(terms.terms, old_top, cross.challenger, &x_star, &f) > 0.0
            };
            let detail;
            if attracting && opts.tie_collapse {
                let slot = &mut mode.slots[cross.slot_idx];
                slot.kept.push(cross.challenger);
                slot.kept.sort_unstable();
                slot.last_gap = 0.0;
                detail = format!(
                    "equation {} slide: terms {:?} tied",
                    slot.equation, slot.kept
                );
            } else {
                let slot = &mut mode.slots[cross.slot_idx];
                slot.kept = vec![cross.challenger];
                detail = format!(
                    "equation {} dominant {:?} -> {}",
                    slot.equation, old_kept, cross.challenger
                );
            }
            traj.events.push(Event {
                time: t_star,
                kind: EventKind::ModeSwitch,
                detail,
            });
            recent_switches.push(t_star);
            let window = opts.tol.max(1e-12);
            recent_switches.retain(|&s| t_star - s <= window);
            if recent_switches.len() > opts.chatter_limit {
                return Err(SimError::Wall {
                    t: t_star,
                    switches: recent_switches.len(),
                });
            }
            if traj.last_time().is_none_or(|lt| t_star > lt) {
                traj.push(t_star, x_star.clone(), mode.label(n_eq));
            }
            stepper.restart_at(t_star, x_star);
            stepper.replace_rhs(mode_field(sys, &mode, eps));
            if let Some(dt) = opts.record_dt {
                while next_record <= t_star {
                    next_record += dt;
                }
            }
            continue;
        }
        // Release genuinely separated ties.
        let mut released = Vec::new();
        for (si, slot) in mode.slots.iter_mut().enumerate() {
            if slot.kept.len() < 2 {
                continue;
            }
            let terms = slot_terms(sys, slot);
            let log_x = log_vec(&stepper.y);
            let top = argmax_log(terms.terms, &slot.kept, &log_x, log_eps);
            let top_log = terms.terms[top].log_magnitude(&log_x, log_eps);
            let runner_log = slot
                .kept
                .iter()
                .filter(|&&j| j != top)
                .map(|&j| terms.terms[j].log_magnitude(&log_x, log_eps))
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = top_log - runner_log;
            if gap > RELEASE_GAP && gap > slot.last_gap {
                slot.kept = vec![top];
                released.push((si, slot.equation, top));
            }
            slot.last_gap = gap;
        }
        for (_, equation, top) in &released {
            traj.events.push(Event {
                time: stepper.t,
                kind: EventKind::ManifoldCrossing,
                detail: format!("equation {equation} slide released, dominant {top}"),
            });
        }
        if !released.is_empty() {
            let (t, y) = (stepper.t, stepper.y.clone());
            if traj.last_time().is_none_or(|lt| t > lt) {
                traj.push(t, y.clone(), mode.label(n_eq));
            }
            stepper.restart_at(t, y);
            stepper.replace_rhs(mode_field(sys, &mode, eps));
            if let Some(dt) = opts.record_dt {
                while next_record <= t {
                    next_record += dt;
                }
            }
            continue;
        }
        let record = match opts.record_dt {
            None => true,
            Some(_) => stepper.t >= next_record || stepper.done(),
        };
        if record {
            traj.push(stepper.t, stepper.y.clone(), mode.label(n_eq));
            if let Some(dt) = opts.record_dt {
                while next_record <= stepper.t {
                    next_record += dt;
                }
            }
        }
    }
    Ok(traj)
}

/// Natural-log gap threshold above which a sliding tie is considered
/// resolved (≈ 5% magnitude separation).
const RELEASE_GAP: f64 = 0.05;

fn log_vec(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.ln()).collect()
}

fn find_crossing(sys: &ODESystem, mode: &ModeState, y: &[f64], log_eps: f64) -> Option<Crossing> {
    let log_x = log_vec(y);
    for (si, slot) in mode.slots.iter().enumerate() {
        let terms = slot_terms(sys, slot);
        let challenger = argmax_log(terms.terms, &slot.members, &log_x, log_eps);
        if !slot.kept.contains(&challenger) {
            return Some(Crossing {
                slot_idx: si,
                challenger,
            });
        }
    }
    None
}

/// Bisect the dominance loss inside the last accepted step.
fn locate(
    sys: &ODESystem,
    mode: &ModeState,
    cross: &Crossing,
    step: &StepResult,
    y_new: &[f64],
    log_eps: f64,
    tol: f64,
) -> (f64, Vec<f64>) {
    let slot = &mode.slots[cross.slot_idx];
    let terms = slot_terms(sys, slot);
    let margin = |x: &[f64]| -> f64 {
        let log_x = log_vec(x);
        let kept_top = slot
            .kept
            .iter()
            .map(|&j| terms.terms[j].log_magnitude(&log_x, log_eps))
            .fold(f64::NEG_INFINITY, f64::max);
        kept_top - terms.terms[cross.challenger].log_magnitude(&log_x, log_eps)
    };
    let mut lo = step.t_old;
    let mut hi = step.t_new;
    let mut m_lo = margin(&step.y_old);
    if m_lo < 0.0 {
        // The previous state is already past the wall (event at step start).
        return (step.t_old, step.y_old.clone());
    }
    let target = (10.0 * tol).min(1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x_mid = positive(hermite(step, y_new, mid));
        let m = margin(&x_mid);
        if m >= 0.0 {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
        }
        if m_lo <= target || (hi - lo) < 1e-15 * step.t_new.abs().max(1.0) {
            break;
        }
    }
    let x_star = positive(hermite(step, y_new, lo));
    (lo, x_star)
}

fn positive(mut x: Vec<f64>) -> Vec<f64> {
    for v in &mut x {
        if !(*v > 0.0) {
            *v = 1e-300;
        }
    }
    x
}

/// d/dt of log|term_a| − log|term_b| along the field f at state x.
fn gap_derivative(terms: &[MonomialTerm], a: usize, b: usize, x: &[f64], f: &[f64]) -> f64 {
    let mut d = 0.0;
    for l in 0..x.len() {
        let da = terms[a].exponents[l] as f64;
        let db = terms[b].exponents[l] as f64;
        d += (da - db) / x[l] * f[l];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::MonomialTerm;
    use crate::trop::tropicalize;

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
    fn single_crossover_records_one_switch() {
        let hsys = tropicalize(&one_var(), TropKind::Complete).unwrap();
        let opts = IntegrateOptions {
            tol: 1e-8,
            ..Default::default()
        };
        let traj = integrate_hybrid(&hsys, &[2.0], 8.0, 1.0, &opts).unwrap();
        let switches: Vec<_> = traj
            .events
            .iter()
            .filter(|e| e.kind == EventKind::ModeSwitch)
            .collect();
        assert_eq!(switches.len(), 1, "events: {:?}", traj.events);
        // Switch happens where the margin vanishes, x = 1.
        let t_star = switches[0].time;
        let x_at = traj.sample(t_star)[0];
        assert!((x_at - 1.0).abs() < 1e-6, "switch at x = {x_at}");
        // Trajectory decreases toward 1 and sticks there (sliding tie);
        // monotone to within the solver tolerance.
        let x_end = traj.last_state().unwrap()[0];
        assert!((x_end - 1.0).abs() < 1e-6, "x_end = {x_end}");
        for w in traj.states.windows(2) {
            assert!(w[1][0] <= w[0][0] + 1e-6);
        }
    }

    #[test]
    fn wall_diagnostic_without_tie_collapse() {
        let hsys = tropicalize(&one_var(), TropKind::Complete).unwrap();
        let opts = IntegrateOptions {
            tol: 1e-8,
            tie_collapse: false,
            chatter_limit: 50,
            ..Default::default()
        };
        match integrate_hybrid(&hsys, &[2.0], 8.0, 1.0, &opts) {
            Err(SimError::Wall { .. }) => {}
            other => panic!("expected wall diagnostic, got {other:?}"),
        }
    }

    #[test]
    fn two_terms_equals_full_for_two_term_system() {
        let sys = one_var();
        let hsys = tropicalize(&sys, TropKind::TwoTerms).unwrap();
        let opts = IntegrateOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let htraj = integrate_hybrid(&hsys, &[2.0], 5.0, 1.0, &opts).unwrap();
        let x5 = htraj.last_state().unwrap()[0];
        let exact = 1.0 + (-5.0f64).exp();
        assert!((x5 - exact).abs() < 1e-8);
        assert!(htraj.events.is_empty());
    }

    #[test]
    fn rational_mode_switches_on_denominator_dominance() {
        // x' = x / (1 + x): the denominator dominant flips at x = 1, so the
        // hybrid field is x below the wall and 1 above it.
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
        let hsys = tropicalize(&sys, TropKind::Complete).unwrap();
        let opts = IntegrateOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let traj = integrate_hybrid(&hsys, &[0.25], 3.0, 1.0, &opts).unwrap();
        let switches: Vec<_> = traj
            .events
            .iter()
            .filter(|e| e.kind == EventKind::ModeSwitch)
            .collect();
        assert_eq!(switches.len(), 1, "events: {:?}", traj.events);
        let t_star = switches[0].time;
        // Exponential growth reaches the wall at t = ln(1/0.25).
        assert!(
            (t_star - (4.0f64).ln()).abs() < 1e-6,
            "switch at t = {t_star}"
        );
        assert!((traj.sample(t_star)[0] - 1.0).abs() < 1e-6);
        // Past the wall the field is constant 1.
        let x_end = traj.last_state().unwrap()[0];
        let exact = 1.0 + (3.0 - t_star);
        assert!((x_end - exact).abs() < 1e-6, "x_end {x_end} vs {exact}");
    }
}
