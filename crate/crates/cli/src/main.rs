use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use iterint_cli::report::Relation;
use iterint_cli::{execute, CliError, Command, RunConfig, EXIT_CONFIG};

/// Exact-identity and convergence studies for double stochastic integrals over discrete
/// chaos.
#[derive(Debug, Parser)]
#[command(name = "iterint", version, allow_negative_numbers = true)]
struct Cli {
    /// product-check, riemann, ibp, norm, square-decomp, moment-bound, qv, martingale or selftest
    command: String,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    basis_level: Option<u32>,
    /// Family tag or comma-separated per-index list; repeat for several models.
    #[arg(long = "model")]
    models: Vec<String>,
    /// Constant, `file.csv` or `file.csv@level`.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    h1: Option<String>,
    #[arg(long)]
    h2: Option<String>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Inclusive range `lo:hi`.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to ITERINT_THREADS, then all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Cli {
    fn overrides(&self) -> Result<RunConfig, CliError> {
        let models = if self.models.is_empty() {
            None
        } else {
            Some(self.models.iter().map(|m| m.parse()).collect::<Result<Vec<_>, _>>()?)
        };
        Ok(RunConfig {
            horizon: self.horizon,
            basis_level: self.basis_level,
            models,
            h: self.h.as_deref().map(str::parse).transpose()?,
            g: self.g.as_deref().map(str::parse).transpose()?,
            h1: self.h1.as_deref().map(str::parse).transpose()?,
            h2: self.h2.as_deref().map(str::parse).transpose()?,
            t: self.t,
            s: self.s,
            seed: self.seed,
            replicates: self.replicates,
            levels: self.levels.as_deref().map(str::parse).transpose()?,
            cases: self.cases,
            out: self.out.clone(),
            threads: self.threads,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<i32, CliError> {
        let command: Command = cli.command.parse()?;
        let file = match &cli.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let outcome = execute(command, &file.merge(cli.overrides()?))?;
        for c in &outcome.checks {
            let rel = match c.relation {
                Relation::Below => "<",
                Relation::AtMost => "<=",
                Relation::Within => "in",
            };
            let limit: Vec<String> = c.limit.iter().map(|x| format!("{x:e}")).collect();
            println!(
                "{} {} [{}] {}: {:e} {} {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.study,
                c.model,
                c.name,
                c.value,
                rel,
                limit.join(".."),
            );
        }
        println!("summary: {}", outcome.summary.display());
        Ok(outcome.exit_code())
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("iterint: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
