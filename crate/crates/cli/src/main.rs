use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use discflow::schema::{parse_spec, LoadedSpec};
use discflow::suites::{run_suite, Suite};
use discflow::{csv_pairs, kernel_csv, manifest_json, path_csv, thread_cap, RunManifest};
use discflow_core::sampler;
use discflow_core::verify::ks_statistic;

/// Deterministic and Markov semigroups of scalar ODEs with discontinuous
/// right-hand sides: classify the zero set, evaluate flows and transition
/// kernels, sample paths, and verify the structural identities.
#[derive(Parser)]
#[command(name = "discflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the zero set of the right-hand side.
    Classify(ClassifyArgs),
    /// Evaluate the deterministic flow on a time grid.
    Flow(FlowArgs),
    /// Compute the analytic transition kernel at one (x0, t).
    Kernel(KernelArgs),
    /// Sample paths and aggregate an empirical distribution.
    Sample(SampleArgs),
    /// Run a verification suite; exit code reflects pass/fail.
    Verify(VerifyArgs),
    /// Re-emit the parsed spec as canonical JSON.
    Export(ExportArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    spec: PathBuf,
    /// Emit machine-readable JSON instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct FlowArgs {
    spec: PathBuf,
    #[arg(long)]
    x0: f64,
    /// Comma-separated times, e.g. `0,1,2.5`.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    spec: PathBuf,
    #[arg(long)]
    x0: f64,
    #[arg(long)]
    t: f64,
    /// Mass resolution of the exported grid.
    #[arg(long)]
    grid_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    spec: PathBuf,
    #[arg(long)]
    x0: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluation time for the aggregate distribution (default: horizon).
    #[arg(long)]
    at: Option<f64>,
    /// Also write one CSV per path into this directory.
    #[arg(long)]
    emit_paths: Option<PathBuf>,
    /// Print the Kolmogorov-Smirnov distance to the analytic kernel.
    #[arg(long)]
    ks: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    spec: PathBuf,
    /// One of: ck | semigroup | limits | closure.
    #[arg(long)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the suite's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct ExportArgs {
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_cap() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<LoadedSpec> {
    parse_spec(path).map_err(|errs| anyhow::anyhow!("invalid spec {}:\n{errs}", path.display()))
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn manifest(command: &str, spec_path: &Path, spec: &LoadedSpec, seed: Option<u64>) {
    let m = RunManifest {
        tool: "discflow",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        spec_path: spec_path.display().to_string(),
        seed,
        tolerances: spec.tolerances.clone(),
        threads: thread_cap(),
    };
    eprintln!("{}", manifest_json(&m));
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify(args) => {
            let spec = load(&args.spec)?;
            let flow = spec.det_flow()?;
            manifest("classify", &args.spec, &spec, None);
            if args.json {
                println!("{}", classification_json(&spec, &flow)?);
            } else {
                print!("{}", classification_table(&flow));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Flow(args) => {
            let spec = load(&args.spec)?;
            let flow = spec.det_flow()?;
            manifest("flow", &args.spec, &spec, None);
            let mut grid = args.t.clone();
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let path = flow.trajectory(args.x0, &grid)?;
            emit(args.out.as_ref(), &csv_pairs("t,x", &path))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Kernel(args) => {
            let spec = load(&args.spec)?;
            let proc = spec.markov_process()?;
            manifest("kernel", &args.spec, &spec, None);
            let grid_tol = args.grid_tol.unwrap_or(spec.tolerances.kernel_grid);
            let kernel = proc.kernel_with_grid(args.x0, args.t, grid_tol)?;
            emit(args.out.as_ref(), &kernel_csv(&kernel))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample(args) => {
            let spec = load(&args.spec)?;
            let proc = spec.markov_process()?;
            manifest("sample", &args.spec, &spec, Some(args.seed));
            let at = args.at.unwrap_or(args.horizon);

            if let Some(dir) = &args.emit_paths {
                std::fs::create_dir_all(dir)?;
                for i in 0..args.n {
                    let path = sampler::sample_path_indexed(
                        &proc,
                        args.x0,
                        args.horizon,
                        args.seed,
                        i as u64,
                    )?;
                    let file = dir.join(format!("path_{i:06}.csv"));
                    std::fs::write(file, path_csv(&path))?;
                }
            }

            // per-path seeds derive from (seed, index), so a parallel fold
            // reproduces the sequential stream exactly
            let mut states: Vec<f64> = (0..args.n)
                .into_par_iter()
                .map(|i| sampler::sample_state(&proc, args.x0, at, args.seed, i as u64))
                .collect::<discflow_core::Result<Vec<f64>>>()?;
            states.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = states.len() as f64;
            // one staircase row per distinct state
            let mut rows: Vec<(f64, f64)> = Vec::new();
            for (i, &x) in states.iter().enumerate() {
                let level = (i + 1) as f64 / n;
                match rows.last_mut() {
                    Some(last) if last.0 == x => last.1 = level,
                    _ => rows.push((x, level)),
                }
            }

            if args.ks {
                let atoms = proc.atoms(args.x0, at)?;
                let cdf = |x: f64| proc.kernel_cdf(args.x0, at, x).unwrap_or(f64::NAN);
                let cdf_left = |x: f64| {
                    cdf(x)
                        - atoms
                            .iter()
                            .filter(|&&(loc, _)| loc == x)
                            .map(|&(_, m)| m)
                            .sum::<f64>()
                };
                let d = ks_statistic(&states, cdf, cdf_left);
                eprintln!("ks,{d}");
            }
            emit(args.out.as_ref(), &csv_pairs("x,ecdf", &rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let spec = load(&args.spec)?;
            manifest("verify", &args.spec, &spec, Some(args.seed));
            let reports = run_suite(&spec, args.suite, args.seed, args.tol)?;
            let mut all_pass = true;
            for r in &reports {
                print!("{r}");
                all_pass &= r.pass;
            }
            println!(
                "{}",
                serde_json::json!({
                    "suite": format!("{:?}", args.suite),
                    "pass": all_pass,
                    "max_residual": reports.iter().map(|r| r.max_residual).fold(0.0f64, f64::max),
                })
            );
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Export(args) => {
            let spec = load(&args.spec)?;
            manifest("export", &args.spec, &spec, None);
            let json = serde_json::to_string_pretty(&spec.raw)?;
            emit(args.out.as_ref(), &format!("{json}\n"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn classification_table(flow: &discflow_core::DetFlow) -> String {
    use std::fmt::Write;
    let zs = flow.zero_structure();
    let mut out = String::new();
    let _ = writeln!(out, "kind,location,escape_down,escape_up");
    for z in &zs.isolated {
        let _ = writeln!(out, "isolated,{},{},{}", z.x, z.in_r_minus, z.in_r_plus);
    }
    for iv in &zs.intervals {
        let _ = writeln!(
            out,
            "interval,[{}:{}],{},{}",
            iv.lo, iv.hi, iv.lo_in_r_minus, iv.hi_in_r_plus
        );
    }
    for c in &zs.cantor {
        let _ = writeln!(
            out,
            "cantor,[{}:{}],{},{}",
            c.lo,
            c.hi,
            c.interior_in_r_minus || c.lo_in_r_minus,
            c.interior_in_r_plus || c.hi_in_r_plus
        );
    }
    for bp in flow.branch_points() {
        let _ = writeln!(out, "branch_point,{bp},true,true");
    }
    let d = flow.domains();
    for iv in &d.increase {
        let _ = writeln!(
            out,
            "increase,{}{}:{}),,",
            if iv.closed_lo { "[" } else { "(" },
            iv.lo,
            iv.hi
        );
    }
    for iv in &d.decrease {
        let _ = writeln!(
            out,
            "decrease,({}:{}{},,",
            iv.lo,
            iv.hi,
            if iv.closed_hi { "]" } else { ")" }
        );
    }
    out
}

fn classification_json(spec: &LoadedSpec, flow: &discflow_core::DetFlow) -> Result<String> {
    let zs = flow.zero_structure();
    let d = flow.domains();
    let value = serde_json::json!({
        "isolated": zs.isolated.iter().map(|z| serde_json::json!({
            "x": z.x, "in_r_minus": z.in_r_minus, "in_r_plus": z.in_r_plus,
        })).collect::<Vec<_>>(),
        "intervals": zs.intervals.iter().map(|iv| serde_json::json!({
            "lo": iv.lo, "hi": iv.hi,
            "lo_in_r_minus": iv.lo_in_r_minus, "hi_in_r_plus": iv.hi_in_r_plus,
        })).collect::<Vec<_>>(),
        "cantor": zs.cantor.iter().map(|c| serde_json::json!({
            "lo": c.lo, "hi": c.hi, "ratio": c.gaps.ratio,
            "interior_in_r_plus": c.interior_in_r_plus,
            "interior_in_r_minus": c.interior_in_r_minus,
        })).collect::<Vec<_>>(),
        "branch_points": flow.branch_points(),
        "increase": d.increase.iter().map(|iv| serde_json::json!({
            "lo": iv.lo, "hi": iv.hi, "closed_lo": iv.closed_lo,
        })).collect::<Vec<_>>(),
        "decrease": d.decrease.iter().map(|iv| serde_json::json!({
            "lo": iv.lo, "hi": iv.hi, "closed_hi": iv.closed_hi,
        })).collect::<Vec<_>>(),
        "stop_set": spec.stop_set,
    });
    Ok(serde_json::to_string_pretty(&value)?)
}
