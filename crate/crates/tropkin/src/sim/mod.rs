//! Numerical integration of full, tropicalized, truncated and
//! differential-algebraic systems, with event detection at tropical-manifold
//! crossings, limit-cycle detection and trajectory comparison.

mod analysis;
mod dae;
mod hybrid;
mod rk;

pub use analysis::{
    compare, conservation_drift, detect_cycle, hausdorff_distance, linearize_eigen,
    period_scaling_fit, CompareResult, Complex64, CycleInfo, CycleKind,
};
pub use dae::{dae_residual, integrate_dae, DaeSystem};
pub use hybrid::integrate_hybrid;
pub use rk::{integrate_full, CompiledField, IntegrateOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("step size underflow at t = {t}: stiffness beyond the explicit-integrator budget")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t} ({steps} steps)")]
    StepBudget { t: f64, steps: u64 },
    #[error("wall: {switches} mode switches within one tolerance window at t = {t}; the dominant-monomial field chatters here")]
    Wall { t: f64, switches: usize },
    #[error("nonpositive or non-finite state at t = {t}")]
    BadState { t: f64 },
    #[error("field is not smooth at the requested point (dominance is ambiguous there)")]
    NonsmoothPoint,
    #[error("trajectories do not overlap in time")]
    DisjointRanges,
    #[error("trajectory too short for analysis")]
    TooShort,
    #[error("no cycle detected at eps = {eps}")]
    NoCycle { eps: f64 },
    #[error(transparent)]
    Ir(#[from] crate::ir::IrError),
    #[error(transparent)]
    Trop(#[from] crate::trop::TropError),
}

/// Kinds of events recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The dominant-monomial mode changed.
    ModeSwitch,
    /// The state crossed a tropical manifold (dominance tie).
    ManifoldCrossing,
    /// A component hit the positivity floor and was clamped.
    Clamp,
    /// A differential-algebraic run left its manifold (fold point).
    ManifoldExit,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ModeSwitch => "mode-switch",
            EventKind::ManifoldCrossing => "manifold-crossing",
            EventKind::Clamp => "clamp",
            EventKind::ManifoldExit => "manifold-exit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// A recorded solution: strictly increasing sample times, positive states,
/// an active-mode label per sample and the event log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub modes: Vec<String>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            modes: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, state: Vec<f64>, mode: String) {
        debug_assert!(self.times.last().is_none_or(|last| t > *last));
        self.times.push(t);
        self.states.push(state);
        self.modes.push(mode);
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Linear interpolation of the state at `t` (clamped to the range).
    pub fn sample(&self, t: f64) -> Vec<f64> {
        match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => self.states[i].clone(),
            Err(0) => self.states[0].clone(),
            Err(i) if i >= self.len() => self.states[self.len() - 1].clone(),
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let w = (t - t0) / (t1 - t0);
                self.states[i - 1]
                    .iter()
                    .zip(self.states[i].iter())
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    }

    /// Restrict to samples with `t >= t_from`, shifting times to start at 0.
    pub fn tail(&self, t_from: f64) -> Trajectory {
        let start = self.times.partition_point(|&t| t < t_from);
        Trajectory {
            times: self.times[start..].iter().map(|t| t - t_from).collect(),
            states: self.states[start..].to_vec(),
            modes: self.modes[start..].to_vec(),
            events: self
                .events
                .iter()
                .filter(|e| e.time >= t_from)
                .map(|e| Event {
                    time: e.time - t_from,
                    ..e.clone()
                })
                .collect(),
        }
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}
