//! Spec-file loading, CSV export and run manifests for the `discflow`
//! command-line tool.

pub mod schema;
pub mod suites;

use std::fmt::Write as _;

pub use schema::{parse_spec, LoadedSpec, ProblemSpec, SpecError, SpecErrors};
pub use suites::{run_suite, Suite};

use discflow_core::kernel::TransitionKernel;
use discflow_core::sampler::{PathSegment, SamplePath};

/// CSV with a header row, `.` decimal separator and deterministic row
/// order.
pub fn csv_pairs(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(rows.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (a, b) in rows {
        let _ = writeln!(out, "{a},{b}");
    }
    out
}

/// Kernel export: an `atoms` section followed by the cumulative
/// distribution of the full law on the smooth grid.
pub fn kernel_csv(kernel: &TransitionKernel) -> String {
    let mut out = String::new();
    out.push_str("section,x,value\n");
    for (x, m) in &kernel.atoms {
        let _ = writeln!(out, "atom,{x},{m}");
    }
    let mut xs: Vec<f64> = kernel.smooth_cdf.iter().map(|&(x, _)| x).collect();
    xs.extend(kernel.atoms.iter().map(|&(x, _)| x));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    for x in xs {
        let _ = writeln!(out, "cdf,{x},{}", kernel.cdf(x));
    }
    out
}

/// One CSV per sampled path: exact event rows plus the motion samples.
pub fn path_csv(path: &SamplePath) -> String {
    let mut rows: Vec<(f64, f64)> = vec![(0.0, path.x0)];
    for seg in &path.segments {
        match seg {
            PathSegment::Wait { enter, leave, at } => {
                rows.push((*enter, *at));
                rows.push((leave.min(path.horizon), *at));
            }
            PathSegment::Motion { samples } => rows.extend(samples.iter().copied()),
        }
    }
    rows.push((path.horizon, path.final_state));
    rows.dedup();
    csv_pairs("t,x", &rows)
}

/// Reproducibility manifest emitted with every run.
#[derive(serde::Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'a str,
    pub version: &'a str,
    pub command: String,
    pub spec_path: String,
    pub seed: Option<u64>,
    pub tolerances: schema::TolerancesDto,
    pub threads: Option<usize>,
}

pub fn manifest_json(m: &RunManifest<'_>) -> String {
    serde_json::to_string(m).expect("manifest serializes")
}

/// Thread cap from `DISCFLOW_THREADS`, if set and sane.
pub fn thread_cap() -> Option<usize> {
    std::env::var("DISCFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
}
