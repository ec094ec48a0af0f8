//! Exact rational linear algebra for the equilibration solver: Gaussian
//! elimination over ℚ for the equality systems, Fourier–Motzkin elimination
//! for the inequality systems.
//!
//! Everything runs on `BigRational`; exactness is what keeps order ties from
//! being misclassified.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

pub type Rat = BigRational;

pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Affine solution set of a linear system: `base + span(dirs)`.
#[derive(Debug, Clone)]
pub struct AffineSet {
    pub base: Vec<Rat>,
    pub dirs: Vec<Vec<Rat>>,
}

impl AffineSet {
    pub fn point_at(&self, t: &[Rat]) -> Vec<Rat> {
        let mut p = self.base.clone();
        for (dir, ti) in self.dirs.iter().zip(t.iter()) {
            for (pi, di) in p.iter_mut().zip(dir.iter()) {
                *pi += di.clone() * ti.clone();
            }
        }
        p
    }
}

/// Solve `⟨row, a⟩ = rhs` for all rows; `None` when inconsistent.
pub fn solve_equalities(rows: &[(Vec<Rat>, Rat)], n: usize) -> Option<AffineSet> {
    // Augmented row-reduction.
    let mut mat: Vec<(Vec<Rat>, Rat)> = rows.to_vec();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..n {
        let Some(pivot_row) = (rank..mat.len()).find(|&r| !mat[r].0[col].is_zero()) else {
            continue;
        };
        mat.swap(rank, pivot_row);
        let pivot = mat[rank].0[col].clone();
        for c in mat[rank].0.iter_mut() {
            *c /= pivot.clone();
        }
        mat[rank].1 = mat[rank].1.clone() / pivot;
        for r in 0..mat.len() {
            if r != rank && !mat[r].0[col].is_zero() {
                let factor = mat[r].0[col].clone();
                for c in 0..n {
                    let sub = factor.clone() * mat[rank].0[c].clone();
                    mat[r].0[c] -= sub;
                }
                let sub = factor * mat[rank].1.clone();
                mat[r].1 -= sub;
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    // Inconsistency: 0 = nonzero.
    for r in rank..mat.len() {
        if mat[r].0.iter().all(Rat::is_zero) && !mat[r].1.is_zero() {
            return None;
        }
    }
    let free_cols: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut base = vec![Rat::zero(); n];
    for (r, &pc) in pivot_cols.iter().enumerate() {
        base[pc] = mat[r].1.clone();
    }
    let mut dirs = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut d = vec![Rat::zero(); n];
        d[fc] = Rat::one();
        for (r, &pc) in pivot_cols.iter().enumerate() {
            d[pc] = -mat[r].0[fc].clone();
        }
        dirs.push(d);
    }
    Some(AffineSet { base, dirs })
}

/// Inequality `⟨coeffs, t⟩ + constant ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ineq {
    pub coeffs: Vec<Rat>,
    pub constant: Rat,
}

impl Ineq {
    pub fn eval(&self, t: &[Rat]) -> Rat {
        let mut v = self.constant.clone();
        for (c, ti) in self.coeffs.iter().zip(t.iter()) {
            v += c.clone() * ti.clone();
        }
        v
    }

    /// Scale to a primitive integer form so duplicates collapse.
    fn normalized(&self) -> Ineq {
        let mut lcm = BigInt::one();
        for c in self.coeffs.iter().chain(std::iter::once(&self.constant)) {
            lcm = num_integer::lcm(lcm, c.denom().clone());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .chain(std::iter::once(&self.constant))
            .map(|c| c.numer() * (&lcm / c.denom()))
            .collect();
        let mut gcd = BigInt::zero();
        for v in &ints {
            gcd = num_integer::gcd(gcd, v.abs());
        }
        if gcd.is_zero() {
            gcd = BigInt::one();
        }
        let scaled: Vec<Rat> = ints.iter().map(|v| Rat::from_integer(v / &gcd)).collect();
        let (coeffs, constant) = {
            let mut c = scaled;
            let k = c.pop().unwrap();
            (c, k)
        };
        Ineq { coeffs, constant }
    }
}

/// Outcome of a Fourier–Motzkin feasibility run.
#[derive(Debug, Clone)]
pub struct FmResult {
    /// A canonical feasible point (0 where admissible, else the nearest
    /// finite bound).
    pub sample: Vec<Rat>,
    /// Per variable: true when the feasible set forces a single value
    /// (lower bound equals upper bound given the earlier choices).
    pub pinned: Vec<bool>,
}

const FM_CAP: usize = 100_000;

/// Exceeding the intermediate-system cap during elimination.
#[derive(Debug, Clone, Copy)]
pub struct FmBlowup {
    pub inequalities: usize,
}

/// Feasibility of an inequality system over `dim` variables.
///
/// `Ok(None)` means infeasible. The intermediate-system cap guards against
/// elimination blowup; the solver targets n ≤ ~10, far below it.
pub fn fm_feasible(ineqs: &[Ineq], dim: usize) -> Result<Option<FmResult>, FmBlowup> {
    // systems[k] constrains variables 0..k.
    let mut systems: Vec<Vec<Ineq>> = Vec::with_capacity(dim + 1);
    let normalize = |set: &[Ineq]| -> Vec<Ineq> {
        let uniq: BTreeSet<Ineq> = set.iter().map(Ineq::normalized).collect();
        uniq.into_iter().collect()
    };
    systems.push(normalize(ineqs));
    for k in (0..dim).rev() {
        let current = systems.last().unwrap();
        let mut kept: Vec<Ineq> = Vec::new();
        let mut lowers: Vec<&Ineq> = Vec::new();
        let mut uppers: Vec<&Ineq> = Vec::new();
        for iq in current {
            if iq.coeffs[k].is_zero() {
                kept.push(iq.clone());
            } else if iq.coeffs[k].is_positive() {
                lowers.push(iq);
            } else {
                uppers.push(iq);
            }
        }
        for lo in &lowers {
            for up in &uppers {
                // lo: ck > 0, up: ck < 0; (-up_k)·lo + lo_k·up removes t_k.
                let wl = -up.coeffs[k].clone();
                let wu = lo.coeffs[k].clone();
                let mut coeffs = vec![Rat::zero(); dim];
                for c in 0..dim {
                    if c == k {
                        continue;
                    }
                    coeffs[c] =
                        wl.clone() * lo.coeffs[c].clone() + wu.clone() * up.coeffs[c].clone();
                }
                let constant = wl * lo.constant.clone() + wu.clone() * up.constant.clone();
                kept.push(Ineq { coeffs, constant });
            }
        }
        let kept = normalize(&kept);
        if kept.len() > FM_CAP {
            return Err(FmBlowup {
                inequalities: kept.len(),
            });
        }
        systems.push(kept);
    }
    // systems[dim] has no variables left: every row is a constant.
    for iq in systems.last().unwrap() {
        if iq.constant.is_negative() {
            return Ok(None);
        }
    }
    // Back-substitute a canonical sample: systems[dim - k] constrains
    // variables 0..k, so bounds for t_k come from systems[dim - 1 - k].
    let mut sample = vec![Rat::zero(); dim];
    let mut pinned = vec![false; dim];
    for k in 0..dim {
        let sys = &systems[dim - 1 - k];
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for iq in sys {
            let ck = iq.coeffs[k].clone();
            if ck.is_zero() {
                continue;
            }
            let mut rest = iq.constant.clone();
            for c in 0..k {
                rest += iq.coeffs[c].clone() * sample[c].clone();
            }
            let bound = -rest / ck.clone();
            if ck.is_positive() {
                lo = Some(match lo {
                    Some(v) if v >= bound => v,
                    _ => bound,
                });
            } else {
                hi = Some(match hi {
                    Some(v) if v <= bound => v,
                    _ => bound,
                });
            }
        }
        let value = match (&lo, &hi) {
            (Some(l), Some(h)) => {
                debug_assert!(l <= h, "back-substitution hit an empty interval");
                if *l == *h {
                    pinned[k] = true;
                    l.clone()
                } else if l <= &Rat::zero() && &Rat::zero() <= h {
                    Rat::zero()
                } else {
                    l.clone()
                }
            }
            (Some(l), None) => {
                if l <= &Rat::zero() {
                    Rat::zero()
                } else {
                    l.clone()
                }
            }
            (None, Some(h)) => {
                if h >= &Rat::zero() {
                    Rat::zero()
                } else {
                    h.clone()
                }
            }
            (None, None) => Rat::zero(),
        };
        sample[k] = value;
    }
    Ok(Some(FmResult { sample, pinned }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_simple_system() {
        // a - b = 1, a + b = 3  =>  a = 2, b = 1
        let rows = vec![
            (vec![rat_int(1), rat_int(-1)], rat_int(1)),
            (vec![rat_int(1), rat_int(1)], rat_int(3)),
        ];
        let sol = solve_equalities(&rows, 2).unwrap();
        assert!(sol.dirs.is_empty());
        assert_eq!(sol.base, vec![rat_int(2), rat_int(1)]);
    }

    #[test]
    fn underdetermined_has_directions() {
        // a + b = 4 over (a, b)
        let rows = vec![(vec![rat_int(1), rat_int(1)], rat_int(4))];
        let sol = solve_equalities(&rows, 2).unwrap();
        assert_eq!(sol.dirs.len(), 1);
        let p = sol.point_at(&[rat_int(3)]);
        assert_eq!(p[0].clone() + p[1].clone(), rat_int(4));
    }

    #[test]
    fn inconsistent_detected() {
        let rows = vec![
            (vec![rat_int(1), rat_int(1)], rat_int(1)),
            (vec![rat_int(2), rat_int(2)], rat_int(3)),
        ];
        assert!(solve_equalities(&rows, 2).is_none());
    }

    #[test]
    fn fm_interval() {
        // t >= 2 and t <= 2 pins t = 2.
        let ineqs = vec![
            Ineq {
                coeffs: vec![rat_int(1)],
                constant: rat_int(-2),
            },
            Ineq {
                coeffs: vec![rat_int(-1)],
                constant: rat_int(2),
            },
        ];
        let r = fm_feasible(&ineqs, 1).unwrap().unwrap();
        assert_eq!(r.sample, vec![rat_int(2)]);
        assert!(r.pinned[0]);
    }

    #[test]
    fn fm_infeasible() {
        let ineqs = vec![
            Ineq {
                coeffs: vec![rat_int(1)],
                constant: rat_int(-3),
            },
            Ineq {
                coeffs: vec![rat_int(-1)],
                constant: rat_int(1),
            },
        ];
        assert!(fm_feasible(&ineqs, 1).unwrap().is_none());
    }

    #[test]
    fn fm_two_vars() {
        // t0 + t1 >= 1, t0 - t1 >= -1, -t0 >= -2
        let ineqs = vec![
            Ineq {
                coeffs: vec![rat_int(1), rat_int(1)],
                constant: rat_int(-1),
            },
            Ineq {
                coeffs: vec![rat_int(1), rat_int(-1)],
                constant: rat_int(1),
            },
            Ineq {
                coeffs: vec![rat_int(-1), rat_int(0)],
                constant: rat_int(2),
            },
        ];
        let r = fm_feasible(&ineqs, 2).unwrap().unwrap();
        for iq in &ineqs {
            assert!(!iq.eval(&r.sample).is_negative());
        }
    }
}
