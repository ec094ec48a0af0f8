//! Command implementations.

use crate::output::{events_csv, fmt_f64, trajectory_csv, write_atomic};
use serde_json::{json, Value};
use std::error::Error;
use std::path::Path;
use tropkin::equil::{all_equilibrations, truncate, EquilError, EquilOptions, ExponentSolution};
use tropkin::ir::{parse_model, serialize_model, ODESystem};
use tropkin::sim::{
    compare, conservation_drift, detect_cycle, integrate_full, integrate_hybrid, linearize_eigen,
    CycleKind, IntegrateOptions, Trajectory,
};
use tropkin::trop::{tropicalize, TropKind};
use tropkin::tyson::{build_tyson, hybrid_cycle, reduced_2d, HybridOutcome, TysonParams};

pub enum Outcome {
    Done,
    NoSolution(String),
}

type RunResult = Result<Outcome, Box<dyn Error>>;

fn load_model(name: &str) -> Result<(ODESystem, bool), Box<dyn Error>> {
    if name == "tyson" {
        return Ok((build_tyson(&TysonParams::default())?, true));
    }
    let text =
        std::fs::read_to_string(name).map_err(|e| format!("cannot read model file {name}: {e}"))?;
    Ok((parse_model(&text)?, false))
}

fn parse_state(
    spec: Option<&str>,
    sys: &ODESystem,
    builtin: bool,
    eps: f64,
) -> Result<Vec<f64>, Box<dyn Error>> {
    if let Some(raw) = spec {
        let parsed: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let x0 = parsed.map_err(|e| format!("bad --x0: {e}"))?;
        if x0.len() != sys.dim() {
            return Err(format!("--x0 has {} entries, model has {}", x0.len(), sys.dim()).into());
        }
        return Ok(x0);
    }
    if builtin {
        let p = TysonParams::default();
        let y2 = 0.8;
        return Ok(vec![0.05, y2, 0.05, 0.10, eps.powi(4) * p.k1 / (p.k3 * y2)]);
    }
    Ok(vec![1.0; sys.dim()])
}

fn effective_eps(flag: Option<f64>, sys: &ODESystem) -> f64 {
    flag.or(sys.epsilon).unwrap_or(1.0)
}

fn rational_str(q: &num_rational::Rational64) -> String {
    q.to_string()
}

fn solution_json(sol: &ExponentSolution) -> Value {
    json!({
        "a": sol.a.0.iter().map(rational_str).collect::<Vec<_>>(),
        "branch": sol.branch.pairs.iter().map(|p| match p {
            Some((j, k)) => json!([j, k]),
            None => Value::Null,
        }).collect::<Vec<_>>(),
        "mu": sol.mu.iter().map(rational_str).collect::<Vec<_>>(),
        "truncated_terms": sol.kept,
        "family": sol.family.as_ref().map(|dirs| json!({
            "directions": dirs.iter().map(|d| d.iter().map(rational_str).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })),
    })
}

fn subset_indices(
    spec: Option<&str>,
    sys: &ODESystem,
) -> Result<Option<Vec<usize>>, Box<dyn Error>> {
    let Some(raw) = spec else { return Ok(None) };
    let mut idx = Vec::new();
    for name in raw.split(',') {
        let name = name.trim();
        let i = sys
            .variable_index(name)
            .ok_or_else(|| format!("unknown variable in --subset: {name}"))?;
        idx.push(i);
    }
    Ok(Some(idx))
}

pub fn equilibrate(
    model: &str,
    conservation: bool,
    subset: Option<&str>,
    screen: bool,
    out: &Path,
) -> RunResult {
    let (sys, _) = load_model(model)?;
    let laws = if conservation {
        if sys.conservation_laws.is_empty() {
            return Err(
                "--conservation requested but the model declares no conservation laws".into(),
            );
        }
        sys.conservation_laws.clone()
    } else {
        Vec::new()
    };
    let opts = EquilOptions {
        subset: subset_indices(subset, &sys)?,
        screen,
        ..Default::default()
    };
    let sols = match all_equilibrations(&sys, &laws, &opts) {
        Ok(sols) => sols,
        Err(e @ EquilError::SingleSignEquation { .. }) => {
            // Not an input error: the model genuinely admits no balance.
            return Ok(Outcome::NoSolution(format!("no equilibration: {e}")));
        }
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "model": model,
        "conservation": conservation,
        "solutions": sols.iter().map(solution_json).collect::<Vec<_>>(),
    });
    write_atomic(out, "equilibration.json", &format!("{:#}\n", report))?;
    if sols.is_empty() {
        return Ok(Outcome::NoSolution(
            "no equilibration: every branch infeasible".into(),
        ));
    }
    println!(
        "{} equilibration(s) written to {}",
        sols.len(),
        out.join("equilibration.json").display()
    );
    for s in &sols {
        println!(
            "  a = {}{}",
            s.a,
            if s.family.is_some() { "  (family)" } else { "" }
        );
    }
    Ok(Outcome::Done)
}

fn parse_kind(kind: &str) -> Result<TropKind, Box<dyn Error>> {
    match kind {
        "complete" => Ok(TropKind::Complete),
        "two-terms" => Ok(TropKind::TwoTerms),
        other => Err(format!("unknown tropicalization kind: {other}").into()),
    }
}

pub fn tropicalize_cmd(model: &str, kind: &str, eps: Option<f64>, out: &Path) -> RunResult {
    let (sys, _) = load_model(model)?;
    let kind = parse_kind(kind)?;
    let hsys = tropicalize(&sys, kind)?;
    let eps = effective_eps(eps, &sys);
    let ones = vec![1.0; sys.dim()];
    let sig = hsys.signature_at(&ones, eps)?;
    let margins = hsys.margins_at(&ones, eps)?;
    let per_eq: Vec<Value> = sys
        .equations
        .iter()
        .enumerate()
        .map(|(i, eq)| {
            let (pos, neg) = sys.sign_split(i).unwrap_or_default();
            json!({
                "variable": sys.variables[i],
                "terms": eq.terms().map(|t| t.len()),
                "productions": pos,
                "degradations": neg,
            })
        })
        .collect();
    let report = json!({
        "model": model,
        "kind": match kind { TropKind::Complete => "complete", TropKind::TwoTerms => "two-terms" },
        "equations": per_eq,
        "signature_at_ones": sig.id(),
        "margins_at_ones": margins.iter().map(|m| fmt_f64(*m)).collect::<Vec<_>>(),
        "eps": fmt_f64(eps),
    });
    write_atomic(out, "tropicalization.json", &format!("{:#}\n", report))?;
    println!("mode at the all-ones state: {}", sig.id());
    Ok(Outcome::Done)
}

fn observed_coordinate(sys: &ODESystem) -> usize {
    sys.variable_index("y3").unwrap_or(0)
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    model: &str,
    kind: &str,
    eps: Option<f64>,
    tol: f64,
    t_end: f64,
    x0: Option<&str>,
    record_dt: Option<f64>,
    out: &Path,
) -> RunResult {
    let (sys, builtin) = load_model(model)?;
    let eps = effective_eps(eps, &sys);
    let opts = IntegrateOptions {
        tol,
        record_dt,
        ..Default::default()
    };
    let (traj, variables): (Trajectory, Vec<String>) = match kind {
        "full" => {
            let x0 = parse_state(x0, &sys, builtin, eps)?;
            (
                integrate_full(&sys, &x0, t_end, eps, &opts)?,
                sys.variables.clone(),
            )
        }
        "complete" | "two-terms" => {
            let x0 = parse_state(x0, &sys, builtin, eps)?;
            let hsys = tropicalize(&sys, parse_kind(kind)?)?;
            (
                integrate_hybrid(&hsys, &x0, t_end, eps, &opts)?,
                sys.variables.clone(),
            )
        }
        "hybrid3" => {
            if !builtin {
                return Err("--kind hybrid3 requires --model tyson".into());
            }
            let p = TysonParams::default();
            match hybrid_cycle(&p, eps, &opts)? {
                HybridOutcome::Cycle(hc) => {
                    println!(
                        "three-mode orbit: durations = {} / {} / {} (modes 1/2/3)",
                        fmt_f64(hc.durations[0]),
                        fmt_f64(hc.durations[1]),
                        fmt_f64(hc.durations[2])
                    );
                    println!(
                        "transitions: fold O = ({}, {}), fast capture O2 = ({}, {}), slow capture O1 = ({}, {})",
                        fmt_f64(hc.fold_state[0]),
                        fmt_f64(hc.fold_state[1]),
                        fmt_f64(hc.fast_capture_state[0]),
                        fmt_f64(hc.fast_capture_state[1]),
                        fmt_f64(hc.slow_capture_state[0]),
                        fmt_f64(hc.slow_capture_state[1])
                    );
                    (hc.trajectory, vec!["y3".into(), "y4".into()])
                }
                HybridOutcome::RestPoint(r) => {
                    write_atomic(out, "trajectory.csv", "t,y3,y4,mode\n")?;
                    write_atomic(out, "events.csv", "t,kind,detail\n")?;
                    return Ok(Outcome::NoSolution(format!(
                        "no closed orbit: dynamics settles at the rest point ({}, {})",
                        fmt_f64(r[0]),
                        fmt_f64(r[1])
                    )));
                }
            }
        }
        other => return Err(format!("unknown simulation kind: {other}").into()),
    };
    write_atomic(out, "trajectory.csv", &trajectory_csv(&traj, &variables))?;
    write_atomic(out, "events.csv", &events_csv(&traj))?;

    // Summary: cycle/rest verdict, conservation drift, mode occupancy.
    // The three-mode assembly is a single closed lap; peak counting does not
    // apply to it.
    if kind != "hybrid3" && traj.len() >= 8 {
        let coord = observed_coordinate(&sys).min(variables.len() - 1);
        if let Ok(info) = detect_cycle(&traj, 0.3, coord) {
            match info.kind {
                CycleKind::Cycle => println!(
                    "cycle detected: period {} (converged: {})",
                    fmt_f64(info.period.unwrap()),
                    info.converged
                ),
                CycleKind::RestPoint => println!("rest point reached"),
                CycleKind::Inconclusive => println!("no cycle or rest point within the horizon"),
            }
        }
    }
    if kind == "full" && !sys.conservation_laws.is_empty() {
        let drift = conservation_drift(&sys, &traj, eps);
        for (i, d) in drift.iter().enumerate() {
            println!("conservation law {i} drift: {}", fmt_f64(*d));
        }
    }
    let mut occupancy: Vec<(String, usize)> = Vec::new();
    for m in &traj.modes {
        match occupancy.iter_mut().find(|(label, _)| label == m) {
            Some((_, n)) => *n += 1,
            None => occupancy.push((m.clone(), 1)),
        }
    }
    occupancy.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for (label, n) in occupancy.iter().take(5) {
        println!(
            "mode {label}: {:.1}% of samples",
            100.0 * *n as f64 / traj.len() as f64
        );
    }
    println!(
        "{} samples, {} events -> {}",
        traj.len(),
        traj.events.len(),
        out.display()
    );
    Ok(Outcome::Done)
}

pub fn reduce(model: &str, conservation: bool, out: &Path) -> RunResult {
    let (sys, builtin) = load_model(model)?;
    let laws = if conservation {
        sys.conservation_laws.clone()
    } else {
        Vec::new()
    };
    let sols = match all_equilibrations(&sys, &laws, &EquilOptions::default()) {
        Ok(s) => s,
        Err(e @ EquilError::SingleSignEquation { .. }) => {
            return Ok(Outcome::NoSolution(format!("no equilibration: {e}")))
        }
        Err(e) => return Err(e.into()),
    };
    if sols.is_empty() {
        return Ok(Outcome::NoSolution(
            "no equilibration: every branch infeasible".into(),
        ));
    }
    for (k, sol) in sols.iter().enumerate() {
        let trunc = truncate(&sys, sol)?;
        let integer_orders = trunc
            .system
            .equations
            .iter()
            .all(|eq| eq.terms().unwrap().iter().all(|t| t.eps_order.is_integer()));
        if integer_orders {
            write_atomic(
                out,
                &format!("truncation_{k}.json"),
                &(serialize_model(&trunc.system) + "\n"),
            )?;
        }
        println!(
            "solution {k}: a = {}, prefactor orders {:?}",
            sol.a,
            trunc
                .prefactors
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
        );
    }
    if builtin {
        let red = reduced_2d(&TysonParams::default())?;
        write_atomic(out, "reduced.json", &(serialize_model(&red.system) + "\n"))?;
        let (u, v) = red.rest_point();
        let nf = red.normal_form();
        let report = json!({
            "rest_point": [fmt_f64(u), fmt_f64(v)],
            "normal_form": { "k0": fmt_f64(nf.k0), "k1": fmt_f64(nf.k1), "scale": fmt_f64(nf.scale) },
            "oscillatory": red.oscillatory_inequality().2,
        });
        write_atomic(out, "reduction_summary.json", &format!("{:#}\n", report))?;
        println!(
            "two-variable reduction written; rest point ({}, {})",
            fmt_f64(u),
            fmt_f64(v)
        );
    }
    Ok(Outcome::Done)
}

#[allow(clippy::too_many_arguments)]
pub fn compare_cmd(
    model: &str,
    kind_a: &str,
    kind_b: &str,
    eps_list: &str,
    tol: f64,
    t_end: f64,
    x0: Option<&str>,
    out: &Path,
) -> RunResult {
    let (sys, builtin) = load_model(model)?;
    let eps_values: Result<Vec<f64>, _> = eps_list
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let eps_values = eps_values.map_err(|e| format!("bad --eps-list: {e}"))?;
    let grid_n = 200;
    let mut rows = Vec::new();
    for &eps in &eps_values {
        let x0 = parse_state(x0, &sys, builtin, eps)?;
        let opts = IntegrateOptions {
            tol,
            record_dt: Some(t_end / 2000.0),
            ..Default::default()
        };
        let run = |kind: &str| -> Result<Trajectory, Box<dyn Error>> {
            match kind {
                "full" => Ok(integrate_full(&sys, &x0, t_end, eps, &opts)?),
                "complete" | "two-terms" => {
                    let hsys = tropicalize(&sys, parse_kind(kind)?)?;
                    Ok(integrate_hybrid(&hsys, &x0, t_end, eps, &opts)?)
                }
                other => Err(format!("unknown kind: {other}").into()),
            }
        };
        let ta = run(kind_a)?;
        let tb = run(kind_b)?;
        let grid: Vec<f64> = (0..=grid_n)
            .map(|k| t_end * k as f64 / grid_n as f64)
            .collect();
        let cmp = compare(&ta, &tb, &grid)?;
        rows.push((eps, cmp.sup_error));
    }
    let mut csv = String::from("eps,sup_error\n");
    for (eps, err) in &rows {
        csv.push_str(&format!("{},{}\n", fmt_f64(*eps), fmt_f64(*err)));
    }
    write_atomic(out, "scaling.csv", &csv)?;
    let max_err = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    if kind_a == kind_b || max_err < 1e-13 {
        println!("verdict: identical (max sup error {})", fmt_f64(max_err));
    } else if rows.len() >= 2 {
        let gamma = tropkin::sim::period_scaling_fit(&rows);
        println!(
            "verdict: gamma = {} ({})",
            fmt_f64(gamma),
            if gamma > 0.0 {
                "error shrinks with eps"
            } else {
                "no positive scaling"
            }
        );
    }
    for (eps, err) in &rows {
        println!("eps {}: sup error {}", fmt_f64(*eps), fmt_f64(*err));
    }
    Ok(Outcome::Done)
}

pub fn tyson_demo(profile: Option<&Path>, eps: Option<f64>, tol: f64, out: &Path) -> RunResult {
    let params: TysonParams = match profile {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read profile {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("bad profile: {e}"))?
        }
        None => TysonParams::default(),
    };
    let eps = eps.unwrap_or(params.epsilon);
    let sys = build_tyson(&params)?;
    let laws = sys.conservation_laws.clone();

    let sols = all_equilibrations(&sys, &laws, &EquilOptions::default())?;
    let report = json!({
        "solutions": sols.iter().map(solution_json).collect::<Vec<_>>(),
    });
    write_atomic(out, "equilibration.json", &format!("{:#}\n", report))?;
    println!("full equilibration: {} solution(s)", sols.len());
    for s in &sols {
        println!("  a = {}", s.a);
    }

    let red = reduced_2d(&params)?;
    write_atomic(out, "reduced.json", &(serialize_model(&red.system) + "\n"))?;
    let ((u, v), residual) = red.refined_rest_point(eps);
    let eig = linearize_eigen(
        |x| {
            let f = red.field(x[0], x[1], eps);
            vec![f.0, f.1]
        },
        &[u, v],
    )?;
    let max_re = eig.iter().map(|e| e.re).fold(f64::MIN, f64::max);
    println!(
        "reduced rest point ({}, {}), residual {}, max Re eigenvalue {}",
        fmt_f64(u),
        fmt_f64(v),
        fmt_f64(residual),
        fmt_f64(max_re)
    );

    let opts = IntegrateOptions {
        tol,
        ..Default::default()
    };
    match hybrid_cycle(&params, eps, &opts)? {
        HybridOutcome::Cycle(hc) => {
            println!(
                "three-mode orbit closed after {} lap(s); durations {} / {} / {}",
                hc.laps,
                fmt_f64(hc.durations[0]),
                fmt_f64(hc.durations[1]),
                fmt_f64(hc.durations[2])
            );
            let summary = json!({
                "eps": fmt_f64(eps),
                "rest_point": [fmt_f64(u), fmt_f64(v)],
                "max_re_eigenvalue": fmt_f64(max_re),
                "durations": hc.durations.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>(),
                "fold": hc.fold_state.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>(),
                "fast_capture": hc.fast_capture_state.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>(),
                "slow_capture": hc.slow_capture_state.iter().map(|d| fmt_f64(*d)).collect::<Vec<_>>(),
            });
            write_atomic(out, "summary.json", &format!("{:#}\n", summary))?;
            write_atomic(
                out,
                "hybrid_trajectory.csv",
                &trajectory_csv(&hc.trajectory, &["y3".into(), "y4".into()]),
            )?;
            write_atomic(out, "hybrid_events.csv", &events_csv(&hc.trajectory))?;
            println!("artifacts in {}", out.display());
            Ok(Outcome::Done)
        }
        HybridOutcome::RestPoint(r) => Ok(Outcome::NoSolution(format!(
            "non-oscillatory profile: stable rest point at ({}, {})",
            fmt_f64(r[0]),
            fmt_f64(r[1])
        ))),
    }
}
