//! Deterministic, atomic file output.
//!
//! Numbers are serialized with 17 significant digits so a reread recovers
//! the exact f64; files are staged in the target directory and renamed into
//! place so failed runs leave nothing partial behind.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use tropkin::sim::Trajectory;

/// 17-significant-digit scientific form, round-trip safe.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write atomically: stage under a dot-file in the same directory, then
/// rename over the target.
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".tmp-{name}"));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, dir.join(name))
}

/// Trajectory CSV: `t,<variables...>,mode`, one row per recorded sample.
pub fn trajectory_csv(traj: &Trajectory, variables: &[String]) -> String {
    let mut csv = String::from("t");
    for v in variables {
        let _ = write!(csv, ",{v}");
    }
    csv.push_str(",mode\n");
    for (k, t) in traj.times.iter().enumerate() {
        let _ = write!(csv, "{}", fmt_f64(*t));
        for x in &traj.states[k] {
            let _ = write!(csv, ",{}", fmt_f64(*x));
        }
        let _ = writeln!(csv, ",{}", traj.modes[k]);
    }
    csv
}

/// Events CSV: `t,kind,detail`.
pub fn events_csv(traj: &Trajectory) -> String {
    let mut csv = String::from("t,kind,detail\n");
    for e in &traj.events {
        let detail = e.detail.replace(',', ";");
        let _ = writeln!(csv, "{},{},{detail}", fmt_f64(e.time), e.kind.name());
    }
    csv
}
