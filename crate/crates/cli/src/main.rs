use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use nessforge::config::{parse_assignment, ModelConfig};
use nessforge::experiments::{fig_dataset, run_sweep, sidecar_path, SweepConfig};
use nessforge::observables::{magnetization_profile, parse_observables, psr_audit};
use nessforge::symmetry::{forced_zeros, liouvillian_commutes, make_transform, observable_parity, INVARIANCE_TOL, PARITY_TOL};
use nessforge::{check_uniqueness, solve_ness, Method, Model, SolveOptions};

#[derive(Parser)]
#[command(name = "nessforge", version, about = "Steady states of boundary-driven qubit chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the steady state and write its density matrix as CSV.
    Ness {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "nullspace")]
        method: Method,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter sweep described by a sweep config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Produce the dataset of one of the canonical figures.
    Fig {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        /// Override as key=value; bare keys address preset parameters (e.g. A=1, sweep.steps=11).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Test Lindbladian invariance under a transform and classify observables.
    CheckSymmetry {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        transform: String,
        /// Observable selections to classify (comma separated).
        #[arg(long, value_delimiter = ',')]
        observables: Vec<String>,
    },
    /// Report the dimension of the algebra generated by H and the Lindblad operators.
    Uniqueness {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve for the steady state and audit the parity selection rule.
    Psr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn load_model(path: &Path) -> Result<Model> {
    let cfg = ModelConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(cfg.build()?)
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ness { config, method, tol, out } => {
            let model = load_model(&config)?;
            let mut opts = SolveOptions { method, ..Default::default() };
            if let Some(t) = tol {
                opts.tol = t;
            }
            let ss = solve_ness(&model, &opts)?;
            let mut w = csv::Writer::from_path(&out)?;
            w.write_record(["row", "col", "re", "im"])?;
            let op = ss.rho.op();
            for r in 0..op.dim() {
                for c in 0..op.dim() {
                    let z = op[(r, c)];
                    w.write_record([r.to_string(), c.to_string(), format!("{:.16e}", z.re), format!("{:.16e}", z.im)])?;
                }
            }
            w.flush()?;
            let summary = json!({
                "method": ss.method,
                "residual": ss.residual,
                "converged": ss.converged,
                "steps": ss.steps,
                "time": ss.time,
                "purity": ss.rho.purity(),
                "profile": magnetization_profile(&ss.rho),
            });
            std::fs::write(sidecar_path(&out), serde_json::to_string_pretty(&summary)? + "\n")?;
            print_json(&summary)?;
            if !ss.converged {
                log::warn!("integration stopped before reaching tol");
            }
        }
        Command::Sweep { config, out, workers } => {
            let cfg = SweepConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| nessforge::Error::Config("no --out given and config has no output".into()))?;
            let result = run_sweep(&cfg, workers)?;
            result.save(&cfg, &out)?;
            report_rows(&result, &out);
        }
        Command::Fig { id, set, out, workers } => {
            let overrides = set.iter().map(|s| parse_assignment(s)).collect::<nessforge::Result<Vec<_>>>()?;
            let (cfg, result) = fig_dataset(id, &overrides, workers)?;
            result.save(&cfg, &out)?;
            report_rows(&result, &out);
        }
        Command::CheckSymmetry { config, transform, observables } => {
            let model = load_model(&config)?;
            let t = make_transform(&transform, model.n_sites)?;
            let inv = liouvillian_commutes(&model, &t, INVARIANCE_TOL)?;
            let mut parities = serde_json::Map::new();
            let mut named_ops = Vec::new();
            for o in parse_observables(&observables)? {
                o.validate(&model)?;
                let Some(op) = o.operator(&model)? else {
                    return Err(nessforge::Error::Config(format!("{o} has no operator to classify")).into());
                };
                parities.insert(o.to_string(), json!(observable_parity(&op, &t, PARITY_TOL)?));
                named_ops.push((o.to_string(), op));
            }
            let mut report = json!({
                "transform": transform,
                "invariant": inv.invariant,
                "residual": inv.residual,
                "parity": parities,
            });
            if inv.invariant && !named_ops.is_empty() {
                match forced_zeros(&model, std::slice::from_ref(&t), &named_ops) {
                    Ok(cat) => {
                        let zeros: Vec<_> = cat.predicted().map(|f| f.observable.clone()).collect();
                        report["forced_zeros"] = json!(zeros);
                    }
                    Err(e @ nessforge::Error::UniquenessNotEstablished { .. }) => {
                        report["forced_zeros_refused"] = json!(e.to_string());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            print_json(&report)?;
        }
        Command::Uniqueness { config } => {
            let model = load_model(&config)?;
            print_json(&json!(check_uniqueness(&model)?))?;
        }
        Command::Psr { config, tol } => {
            let model = load_model(&config)?;
            let ss = solve_ness(&model, &SolveOptions::default())?;
            let rep = psr_audit(&ss.rho, tol);
            print_json(&json!({
                "passes": rep.passes(),
                "max_violation": rep.max_violation,
                "violations": rep.violating_indices.len(),
                "first_violations": rep.violating_indices.iter().take(8).collect::<Vec<_>>(),
                "zeros_per_row": rep.zero_histogram(),
                "xstate_pass": rep.xstate_pass,
            }))?;
        }
    }
    Ok(())
}

fn report_rows(result: &nessforge::experiments::SweepResult, out: &Path) {
    let failed = result.rows.iter().filter(|r| r.error.is_some() || !r.converged).count();
    eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
    if failed > 0 {
        log::warn!("{failed} sweep point(s) flagged; see {}", sidecar_path(out).display());
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<nessforge::Error>() {
        Some(e) if e.is_solver_failure() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
