use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grid_entropy::commands;
use grid_entropy::error::{EXIT_IO, EXIT_OK, EXIT_VERIFY};
use grid_entropy::{CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "grid-entropy", version, about = "Grid entropy experiments for last-passage percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prokhorov distance between `mu` and `nu`.
    Metric(Opts),
    /// Number of NE paths to an endpoint, or along the `n` ladder in direction `q`.
    Count(Opts),
    /// Order-statistic entropy estimate.
    Orderstats(Opts),
    /// Cost-sum entropy estimate.
    EntropyEps(Opts),
    /// Direction-free cost-sum entropy estimate at level `t`.
    EntropyLevel(Opts),
    /// Free energy limit.
    Gibbs(Opts),
    /// Last passage times and geodesics.
    Lpp(Opts),
    /// Polymer path samples or the empirical-measure convergence diagnostic.
    Sample(Opts),
    /// Entropy as the negative conjugate of the free energy.
    Conjugate(Opts),
    /// Checks KL(nu) + entropy <= H(q).
    Klbudget(Opts),
    /// Counts of paths with many weight-one Bernoulli edges.
    Bernoulli(Opts),
    /// Variational supremum over a candidate family against the free energy.
    Variational(Opts),
    /// Runs the acceptance suite.
    Verify(Opts),
    /// Renders an SVG from a run CSV.
    Plot(Opts),
}

impl Command {
    fn parts(&self) -> (&'static str, &Opts) {
        match self {
            Command::Metric(o) => ("metric", o),
            Command::Count(o) => ("count", o),
            Command::Orderstats(o) => ("orderstats", o),
            Command::EntropyEps(o) => ("entropy-eps", o),
            Command::EntropyLevel(o) => ("entropy-level", o),
            Command::Gibbs(o) => ("gibbs", o),
            Command::Lpp(o) => ("lpp", o),
            Command::Sample(o) => ("sample", o),
            Command::Conjugate(o) => ("conjugate", o),
            Command::Klbudget(o) => ("klbudget", o),
            Command::Bernoulli(o) => ("bernoulli", o),
            Command::Variational(o) => ("variational", o),
            Command::Verify(o) => ("verify", o),
            Command::Plot(o) => ("plot", o),
        }
    }
}

/// Flags shared by every subcommand; each overrides the config-file key of
/// the same name.
#[derive(Args, Debug, Default)]
struct Opts {
    /// `key=value` config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "D")]
    dim: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    random_taus: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    resolution: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    family: Option<String>,
    #[arg(long)]
    entropy_n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tolerance_scale: Option<String>,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    json: Option<String>,
    #[arg(long)]
    svg: Option<String>,
    #[arg(long)]
    dump: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(&'static str, String)> {
        let all = [
            ("D", &self.dim),
            ("q", &self.q),
            ("t", &self.t),
            ("endpoint", &self.endpoint),
            ("nu", &self.nu),
            ("mu", &self.mu),
            ("tau", &self.tau),
            ("beta", &self.beta),
            ("n", &self.n),
            ("eps", &self.eps),
            ("alpha", &self.alpha),
            ("seeds", &self.seeds),
            ("seed", &self.seed),
            ("budget", &self.budget),
            ("samples", &self.samples),
            ("p", &self.p),
            ("s", &self.s),
            ("bins", &self.bins),
            ("random_taus", &self.random_taus),
            ("restarts", &self.restarts),
            ("resolution", &self.resolution),
            ("method", &self.method),
            ("family", &self.family),
            ("entropy_n", &self.entropy_n),
            ("tolerance_scale", &self.tolerance_scale),
            ("csv", &self.csv),
            ("json", &self.json),
            ("svg", &self.svg),
            ("dump", &self.dump),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v.clone())))
            .collect()
    }
}

fn execute(command: &str, opts: &Opts) -> CliResult<i32> {
    let cfg = ExperimentConfig::resolve(command, opts.config.as_deref(), &opts.flags())?;
    let outcome = commands::run(&cfg)?;
    commands::emit(&cfg, &outcome)?;
    let mut out = std::io::stdout().lock();
    if out.write_all(outcome.text.as_bytes()).is_err() {
        return Ok(EXIT_IO);
    }
    Ok(if outcome.verify_failed { EXIT_VERIFY } else { EXIT_OK })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = cli.command.parts();
    let code = match execute(command, opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("grid-entropy {command}: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
