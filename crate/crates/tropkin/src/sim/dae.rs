//! Semi-explicit index-1 differential-algebraic integration.
//!
//! The state splits into slow variables advanced by ODEs and fast variables
//! pinned by algebraic constraints `g(x) = 0`. At every Runge–Kutta stage the
//! fast variables are re-solved by damped Newton from their previous values,
//! so the constraint residual stays at the integration tolerance along the
//! whole run.
//!
//! When Newton stops converging the constraint root has become singular — a
//! fold of the manifold. The run then ends early with a `manifold-exit` event
//! carrying the last solvable state.

use super::rk::{IntegrateOptions, Rhs, StageFailure, Stepper};
use super::{Event, EventKind, SimError, Trajectory};
use crate::ir::{powi, MonomialTerm};

/// A slow/fast split system over one flat state vector.
///
/// `slow` holds `(variable index, terms)` pairs: the ODEs. `algebraic` holds
/// `(fast variable index, terms)` pairs: the constraints solved for the fast
/// variables at each stage. Terms may reference any state variable.
#[derive(Debug, Clone)]
pub struct DaeSystem {
    pub variables: Vec<String>,
    pub slow: Vec<(usize, Vec<MonomialTerm>)>,
    pub algebraic: Vec<(usize, Vec<MonomialTerm>)>,
}

impl DaeSystem {
    fn fast_indices(&self) -> Vec<usize> {
        self.algebraic.iter().map(|(i, _)| *i).collect()
    }
}

fn eval_terms(terms: &[MonomialTerm], x: &[f64], eps: f64) -> f64 {
    terms.iter().map(|t| t.eval(x, eps)).sum()
}

/// ∂/∂x_j of a term sum at x.
fn eval_terms_derivative(terms: &[MonomialTerm], x: &[f64], eps: f64, j: usize) -> f64 {
    let mut d = 0.0;
    for t in terms {
        let alpha = t.exponents[j];
        if alpha == 0 {
            continue;
        }
        let mut v = t.coeff * crate::ir::eps_powr(eps, t.eps_order) * alpha as f64;
        for (l, &a) in t.exponents.iter().enumerate() {
            let power = if l == j { a - 1 } else { a };
            if power != 0 {
                v *= powi(x[l], power);
            }
        }
        d += v;
    }
    d
}

/// Damped Newton on the fast variables. Returns false when no root is found
/// (fold or divergence).
fn solve_fast(dae: &DaeSystem, x: &mut [f64], eps: f64, tol: f64) -> bool {
    let fast = dae.fast_indices();
    let m = fast.len();
    if m == 0 {
        return true;
    }
    let mut residual = vec![0.0; m];
    let mut jac = vec![vec![0.0; m]; m];
    for _ in 0..60 {
        let mut norm: f64 = 0.0;
        for (k, (_, terms)) in dae.algebraic.iter().enumerate() {
            residual[k] = eval_terms(terms, x, eps);
            norm = norm.max(residual[k].abs());
        }
        if norm <= tol {
            return true;
        }
        for (k, (_, terms)) in dae.algebraic.iter().enumerate() {
            for (c, &j) in fast.iter().enumerate() {
                jac[k][c] = eval_terms_derivative(terms, x, eps, j);
            }
        }
        let Some(delta) = dense_solve(&mut jac.clone(), &residual) else {
            return false;
        };
        // Backtracking line search keeping fast components positive.
        let mut lambda = 1.0f64;
        let mut improved = false;
        while lambda > 1e-8 {
            let mut trial_ok = true;
            let mut saved = Vec::with_capacity(m);
            for (c, &j) in fast.iter().enumerate() {
                saved.push(x[j]);
                let next = x[j] - lambda * delta[c];
                if !(next > 0.0) || !next.is_finite() {
                    trial_ok = false;
                }
                x[j] = next;
            }
            if trial_ok {
                let mut new_norm: f64 = 0.0;
                for (_, terms) in &dae.algebraic {
                    new_norm = new_norm.max(eval_terms(terms, x, eps).abs());
                }
                if new_norm < norm {
                    improved = true;
                    break;
                }
            }
            for (c, &j) in fast.iter().enumerate() {
                x[j] = saved[c];
            }
            lambda *= 0.5;
        }
        if !improved {
            return false;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn dense_solve(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= factor * a[col][c];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

struct DaeRhs<'a> {
    dae: &'a DaeSystem,
    eps: f64,
    newton_tol: f64,
    full: Vec<f64>,
    slow_idx: Vec<usize>,
}

impl Rhs for DaeRhs<'_> {
    fn eval(&mut self, _t: f64, y_slow: &[f64], out: &mut [f64]) -> Result<(), StageFailure> {
        for (c, &i) in self.slow_idx.iter().enumerate() {
            self.full[i] = y_slow[c];
        }
        if !solve_fast(self.dae, &mut self.full, self.eps, self.newton_tol) {
            return Err(StageFailure::Unsolvable);
        }
        for (c, (_, terms)) in self.dae.slow.iter().enumerate() {
            out[c] = eval_terms(terms, &self.full, self.eps);
            if !out[c].is_finite() {
                return Err(StageFailure::NonFinite);
            }
        }
        Ok(())
    }
}

/// Integrate a semi-explicit index-1 system.
///
/// The returned trajectory carries the full state (slow and fast components).
/// A fold terminates the run early with a `manifold-exit` event at the last
/// solvable state; callers treat that as the orbit leaving the manifold.
pub fn integrate_dae(
    dae: &DaeSystem,
    x0: &[f64],
    t_end: f64,
    eps: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, SimError> {
    super::rk::check_initial(x0, eps)?;
    let mut full = x0.to_vec();
    let newton_tol = opts.tol;
    if !solve_fast(dae, &mut full, eps, newton_tol) {
        return Err(SimError::BadState { t: 0.0 });
    }
    let slow_idx: Vec<usize> = dae.slow.iter().map(|(i, _)| *i).collect();
    let y_slow: Vec<f64> = slow_idx.iter().map(|&i| full[i]).collect();
    let rhs = DaeRhs {
        dae,
        eps,
        newton_tol,
        full: full.clone(),
        slow_idx: slow_idx.clone(),
    };
    let mut stepper = Stepper::new(rhs, 0.0, y_slow, t_end, opts)?;
    let mut traj = Trajectory::new();
    traj.push(0.0, full.clone(), "dae".into());
    let mut next_record = opts.record_dt.unwrap_or(0.0);
    while !stepper.done() {
        match stepper.step() {
            Ok(_) => {
                // Recover the full state at the accepted point.
                for (c, &i) in slow_idx.iter().enumerate() {
                    full[i] = stepper.y[c];
                }
                if !solve_fast(dae, &mut full, eps, newton_tol) {
                    traj.events.push(Event {
                        time: stepper.t,
                        kind: EventKind::ManifoldExit,
                        detail: "constraint root lost after accepted step".into(),
                    });
                    traj.push(stepper.t, full.clone(), "dae".into());
                    return Ok(traj);
                }
                let record = match opts.record_dt {
                    None => true,
                    Some(_) => stepper.t >= next_record || stepper.done(),
                };
                if record {
                    traj.push(stepper.t, full.clone(), "dae".into());
                    if let Some(dt) = opts.record_dt {
                        while next_record <= stepper.t {
                            next_record += dt;
                        }
                    }
                }
            }
            Err(SimError::StepUnderflow { t }) => {
                // The stage Newton cannot pass this point: fold reached.
                traj.events.push(Event {
                    time: t,
                    kind: EventKind::ManifoldExit,
                    detail: "fold point: fast-variable root became singular".into(),
                });
                if traj.last_time() != Some(t) {
                    for (c, &i) in slow_idx.iter().enumerate() {
                        full[i] = stepper.y[c];
                    }
                    let _ = solve_fast(dae, &mut full, eps, newton_tol);
                    if traj.last_time().is_none_or(|lt| t > lt) {
                        traj.push(t, full.clone(), "dae".into());
                    }
                }
                return Ok(traj);
            }
            Err(other) => return Err(other),
        }
    }
    Ok(traj)
}

/// Maximal constraint residual of a DAE system along a trajectory.
pub fn dae_residual(dae: &DaeSystem, traj: &Trajectory, eps: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for state in &traj.states {
        for (_, terms) in &dae.algebraic {
            worst = worst.max(eval_terms(terms, state, eps).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::MonomialTerm;

    /// y4 (k4' + k4 y3^2) = k6 y3 solved for y4, y3 driven externally.
    #[test]
    fn constraint_matches_closed_form() {
        let (k4p, k4, k6) = (1.8, 1.8, 1.0);
        let dae = DaeSystem {
            variables: vec!["y3".into(), "y4".into()],
            // y3' = -0.1 y3 (arbitrary slow drive)
            slow: vec![(0, vec![MonomialTerm::new(-0.1, 0, vec![1, 0]).unwrap()])],
            // k4' y4 + k4 y4 y3^2 - k6 y3 = 0
            algebraic: vec![(
                1,
                vec![
                    MonomialTerm::new(k4p, 0, vec![0, 1]).unwrap(),
                    MonomialTerm::new(k4, 0, vec![2, 1]).unwrap(),
                    MonomialTerm::new(-k6, 0, vec![1, 0]).unwrap(),
                ],
            )],
        };
        let opts = IntegrateOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let traj = integrate_dae(&dae, &[0.5, 0.2], 3.0, 0.1, &opts).unwrap();
        for state in &traj.states {
            let (y3, y4) = (state[0], state[1]);
            let expected = k6 * y3 / (k4p + k4 * y3 * y3);
            assert!(
                (y4 - expected).abs() < 1e-8,
                "y4 {y4} vs closed form {expected}"
            );
        }
        assert!(dae_residual(&dae, &traj, 0.1) <= 1e-9);
    }

    /// x' slow relaxation with y slaved: y - x = 0 trivially.
    #[test]
    fn linear_relaxation_through_dae() {
        let dae = DaeSystem {
            variables: vec!["x".into(), "y".into()],
            // x' = eps^2 k1 - k6 x with k1 = 1.5, k6 = 1
            slow: vec![(
                0,
                vec![
                    MonomialTerm::new(1.5, 2, vec![0, 0]).unwrap(),
                    MonomialTerm::new(-1.0, 0, vec![1, 0]).unwrap(),
                ],
            )],
            algebraic: vec![(
                1,
                vec![
                    MonomialTerm::new(1.0, 0, vec![0, 1]).unwrap(),
                    MonomialTerm::new(-1.0, 0, vec![1, 0]).unwrap(),
                ],
            )],
        };
        let eps = 0.1f64;
        let opts = IntegrateOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let traj = integrate_dae(&dae, &[1.0, 1.0], 20.0, eps, &opts).unwrap();
        let x_end = traj.last_state().unwrap()[0];
        let fixed = 1.5 * eps * eps;
        assert!((x_end - fixed).abs() < 1e-6, "x_end {x_end} vs {fixed}");
    }

    /// Fold of y x^2 - k0 x + y = 0 at y = k0/2: drive y upward and expect a
    /// manifold exit near the discriminant zero.
    #[test]
    fn fold_exit_fires_near_discriminant_zero() {
        let k0 = 2.0f64;
        let dae = DaeSystem {
            variables: vec!["y".into(), "x".into()],
            // y' = +0.05 (constant drive)
            slow: vec![(0, vec![MonomialTerm::new(0.05, 0, vec![0, 0]).unwrap()])],
            // y x^2 - k0 x + y = 0, solved for x (low branch)
            algebraic: vec![(
                1,
                vec![
                    MonomialTerm::new(1.0, 0, vec![1, 2]).unwrap(),
                    MonomialTerm::new(-k0, 0, vec![0, 1]).unwrap(),
                    MonomialTerm::new(1.0, 0, vec![1, 0]).unwrap(),
                ],
            )],
        };
        let opts = IntegrateOptions {
            tol: 1e-10,
            ..Default::default()
        };
        // Start on the low branch: y = 0.5, x = X(0.5).
        let y0 = 0.5;
        let x0 = (k0 - (k0 * k0 - 4.0 * y0 * y0).sqrt()) / (2.0 * y0);
        let traj = integrate_dae(&dae, &[y0, x0], 60.0, 0.1, &opts).unwrap();
        let exit = traj
            .events
            .iter()
            .find(|e| e.kind == EventKind::ManifoldExit)
            .expect("expected a manifold exit");
        let y_exit = traj.sample(exit.time)[0];
        assert!(
            (y_exit - k0 / 2.0).abs() <= 1e-3,
            "fold at y = {y_exit}, expected {}",
            k0 / 2.0
        );
    }
}
