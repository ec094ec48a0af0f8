//! Trajectory post-processing: limit-cycle detection, trajectory comparison,
//! Jacobian eigenvalues and scaling fits.

use super::{SimError, Trajectory};
use crate::ir::ODESystem;
use nalgebra::{Complex, DMatrix};

pub type Complex64 = Complex<f64>;

/// What a long run settled into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    Cycle,
    RestPoint,
    Inconclusive,
}

/// Result of [`detect_cycle`].
#[derive(Debug, Clone)]
pub struct CycleInfo {
    pub kind: CycleKind,
    /// Estimated period; present only for converged cycles.
    pub period: Option<f64>,
    /// Peak-to-trough amplitude per variable over the analyzed tail.
    pub amplitude: Vec<f64>,
    /// Successive period estimates agreed within 1%.
    pub converged: bool,
    /// Tail-average state when the dynamics settled to an equilibrium.
    pub rest_point: Option<Vec<f64>>,
}

/// Detect a limit cycle (or rest point) from the tail of a trajectory.
///
/// The period is estimated from successive maxima of the chosen coordinate;
/// the run converged when the last two estimates agree within 1%. A rest
/// point is reported when every amplitude is below 1e-6 of the mean state
/// magnitude.
pub fn detect_cycle(
    traj: &Trajectory,
    transient_fraction: f64,
    coordinate: usize,
) -> Result<CycleInfo, SimError> {
    if traj.len() < 8 {
        return Err(SimError::TooShort);
    }
    let t_span = traj.last_time().unwrap() - traj.times[0];
    let tail = traj.tail(traj.times[0] + transient_fraction.clamp(0.0, 0.9) * t_span);
    if tail.len() < 8 {
        return Err(SimError::TooShort);
    }
    let n = tail.states[0].len();
    let mut amplitude = vec![0.0; n];
    let mut mean_mag: f64 = 0.0;
    for i in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut mean = 0.0;
        for s in &tail.states {
            lo = lo.min(s[i]);
            hi = hi.max(s[i]);
            mean += s[i].abs();
        }
        amplitude[i] = hi - lo;
        mean_mag = mean_mag.max(mean / tail.len() as f64);
    }
    if amplitude.iter().all(|&a| a < 1e-6 * mean_mag.max(1e-300)) {
        let mut rest = vec![0.0; n];
        let m = (tail.len() / 4).max(1);
        for s in &tail.states[tail.len() - m..] {
            for i in 0..n {
                rest[i] += s[i] / m as f64;
            }
        }
        return Ok(CycleInfo {
            kind: CycleKind::RestPoint,
            period: None,
            amplitude,
            converged: true,
            rest_point: Some(rest),
        });
    }
    // Successive maxima of the chosen coordinate, refined parabolically.
    let mut peaks: Vec<f64> = Vec::new();
    for w in 1..tail.len() - 1 {
        let (a, b, c) = (
            tail.states[w - 1][coordinate],
            tail.states[w][coordinate],
            tail.states[w + 1][coordinate],
        );
        if b > a && b >= c {
            let denom = a - 2.0 * b + c;
            let t = if denom.abs() > 1e-300 {
                // Vertex of the parabola through the three samples.
                let dt0 = tail.times[w] - tail.times[w - 1];
                let dt1 = tail.times[w + 1] - tail.times[w];
                let dt = 0.5 * (dt0 + dt1);
                tail.times[w] + 0.5 * dt * (a - c) / denom
            } else {
                tail.times[w]
            };
            // Ignore ripple peaks closer than a tiny fraction of the span.
            if peaks.last().is_none_or(|&p| t - p > 1e-6 * t_span) {
                peaks.push(t);
            }
        }
    }
    if peaks.len() < 3 {
        return Ok(CycleInfo {
            kind: CycleKind::Inconclusive,
            period: None,
            amplitude,
            converged: false,
            rest_point: None,
        });
    }
    let gaps: Vec<f64> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    let last = gaps[gaps.len() - 1];
    let prev = gaps[gaps.len() - 2];
    let converged = (last - prev).abs() <= 0.01 * last.abs().max(1e-300);
    Ok(CycleInfo {
        kind: if converged {
            CycleKind::Cycle
        } else {
            CycleKind::Inconclusive
        },
        period: Some(0.5 * (last + prev)),
        amplitude,
        converged,
        rest_point: None,
    })
}

/// Sup-norm comparison of two trajectories on a common grid.
#[derive(Debug, Clone)]
pub struct CompareResult {
    pub sup_error: f64,
    /// Per-grid-time max-norm differences.
    pub series: Vec<(f64, f64)>,
}

/// Align two trajectories by linear interpolation and compare.
pub fn compare(a: &Trajectory, b: &Trajectory, grid: &[f64]) -> Result<CompareResult, SimError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimError::TooShort);
    }
    let lo = a.times[0].max(b.times[0]);
    let hi = a.last_time().unwrap().min(b.last_time().unwrap());
    if hi <= lo {
        return Err(SimError::DisjointRanges);
    }
    let mut series = Vec::with_capacity(grid.len());
    let mut sup: f64 = 0.0;
    for &t in grid {
        if t < lo || t > hi {
            continue;
        }
        let xa = a.sample(t);
        let xb = b.sample(t);
        let err = xa
            .iter()
            .zip(xb.iter())
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        sup = sup.max(err);
        series.push((t, err));
    }
    if series.is_empty() {
        return Err(SimError::DisjointRanges);
    }
    Ok(CompareResult {
        sup_error: sup,
        series,
    })
}

/// Hausdorff distance between two orbits viewed as point sets in matched
/// coordinate projections, after normalizing each coordinate by the first
/// orbit's amplitude.
pub fn hausdorff_distance(
    a: &Trajectory,
    coords_a: &[usize],
    b: &Trajectory,
    coords_b: &[usize],
) -> f64 {
    assert_eq!(coords_a.len(), coords_b.len());
    let scale: Vec<f64> = coords_a
        .iter()
        .map(|&c| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &a.states {
                lo = lo.min(s[c]);
                hi = hi.max(s[c]);
            }
            (hi - lo).max(1e-300)
        })
        .collect();
    let project = |traj: &Trajectory, coords: &[usize]| -> Vec<Vec<f64>> {
        traj.states
            .iter()
            .map(|s| {
                coords
                    .iter()
                    .zip(scale.iter())
                    .map(|(&c, sc)| s[c] / sc)
                    .collect()
            })
            .collect()
    };
    let pa = project(a, coords_a);
    let pb = project(b, coords_b);
    let directed = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        let mut worst: f64 = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                let d2: f64 = p.iter().zip(q.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                if d2 < best {
                    best = d2;
                }
            }
            worst = worst.max(best.sqrt());
        }
        worst
    };
    directed(&pa, &pb).max(directed(&pb, &pa))
}

/// Eigenvalues of the finite-difference Jacobian of a smooth field.
///
/// Central differences with step `1e-6·scale`; a Richardson half-step check
/// rejects points where the difference quotients disagree (non-smooth or
/// manifold points).
pub fn linearize_eigen<F>(field: F, point: &[f64]) -> Result<Vec<Complex64>, SimError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = point.len();
    let jac_at = |h: f64| -> Vec<Vec<f64>> {
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let step = h * point[j].abs().max(1.0);
            let mut xp = point.to_vec();
            let mut xm = point.to_vec();
            xp[j] += step;
            xm[j] -= step;
            let fp = field(&xp);
            let fm = field(&xm);
            for i in 0..n {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        jac
    };
    let j1 = jac_at(1e-6);
    let j2 = jac_at(5e-7);
    let mut scale: f64 = 0.0;
    for row in &j1 {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let mut deviation: f64 = 0.0;
    for (r1, r2) in j1.iter().zip(j2.iter()) {
        for (a, b) in r1.iter().zip(r2.iter()) {
            deviation = deviation.max((a - b).abs() / scale);
        }
    }
    if deviation > 1e-3 {
        return Err(SimError::NonsmoothPoint);
    }
    let flat: Vec<f64> = j2.into_iter().flatten().collect();
    let m = DMatrix::from_row_slice(n, n, &flat);
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

/// Least-squares slope of `log period` against `log ε`.
pub fn period_scaling_fit(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, t)| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Max deviation of each conservation law from its total along a trajectory.
pub fn conservation_drift(sys: &ODESystem, traj: &Trajectory, eps: f64) -> Vec<f64> {
    sys.conservation_laws
        .iter()
        .map(|law| {
            traj.states
                .iter()
                .fold(0.0f64, |m, s| m.max((law.eval(s, eps) - law.total).abs()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_trajectory(period: f64, n: usize, t_end: f64) -> Trajectory {
        let mut traj = Trajectory::new();
        for k in 0..n {
            let t = t_end * k as f64 / (n - 1) as f64;
            let x = 2.0 + (2.0 * std::f64::consts::PI * t / period).sin();
            traj.push(t, vec![x], "full".into());
        }
        traj
    }

    #[test]
    fn constant_trajectory_is_rest_point() {
        let mut traj = Trajectory::new();
        for k in 0..64 {
            traj.push(k as f64, vec![1.5, 0.3], "full".into());
        }
        let info = detect_cycle(&traj, 0.2, 0).unwrap();
        assert_eq!(info.kind, CycleKind::RestPoint);
        let rest = info.rest_point.unwrap();
        assert!((rest[0] - 1.5).abs() < 1e-12 && (rest[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn synthetic_sine_period_within_one_percent() {
        let period = 2.0 * std::f64::consts::PI;
        let traj = sine_trajectory(period, 4000, 8.0 * period);
        let info = detect_cycle(&traj, 0.1, 0).unwrap();
        assert_eq!(info.kind, CycleKind::Cycle);
        let t = info.period.unwrap();
        assert!((t - period).abs() <= 0.01 * period, "period {t}");
    }

    #[test]
    fn identical_trajectories_compare_to_zero() {
        let traj = sine_trajectory(5.0, 500, 20.0);
        let grid: Vec<f64> = (0..100).map(|k| 0.2 * k as f64).collect();
        let r = compare(&traj, &traj, &grid).unwrap();
        assert_eq!(r.sup_error, 0.0);
    }

    #[test]
    fn linear_field_eigenvalue() {
        let eig = linearize_eigen(|x| vec![-x[0]], &[1.0]).unwrap();
        assert!((eig[0].re + 1.0).abs() < 1e-6);
        assert!(eig[0].im.abs() < 1e-9);
    }

    #[test]
    fn rotation_field_pure_imaginary_pair() {
        let eig = linearize_eigen(|x| vec![-x[1], x[0]], &[0.5, 0.5]).unwrap();
        for e in &eig {
            assert!(e.re.abs() < 1e-7, "eigenvalue {e}");
        }
        assert!(eig.iter().any(|e| (e.im - 1.0).abs() < 1e-6));
        assert!(eig.iter().any(|e| (e.im + 1.0).abs() < 1e-6));
    }

    #[test]
    fn scaling_fit_recovers_exponent() {
        let pts: Vec<(f64, f64)> = [0.3, 0.2, 0.15, 0.1]
            .iter()
            .map(|&e: &f64| (e, 7.0 * e.powi(-2)))
            .collect();
        let slope = period_scaling_fit(&pts);
        assert!((slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_tolerates_small_noise() {
        // 1% multiplicative noise moves the fitted exponent by far less
        // than 0.05.
        let noise = [1.01, 0.99, 1.008, 0.994];
        let pts: Vec<(f64, f64)> = [0.3, 0.2, 0.15, 0.1]
            .iter()
            .zip(noise.iter())
            .map(|(&e, &w): (&f64, &f64)| (e, 7.0 * w * e.powi(-2)))
            .collect();
        let slope = period_scaling_fit(&pts);
        assert!((slope + 2.0).abs() <= 0.05, "slope {slope}");
    }
}
