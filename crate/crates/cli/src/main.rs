use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsep_cli::config::{parse_config_text, CliError, Scenario, ScenarioConfig};
use qsep_cli::{experiments, output, selftest};

/// Entropy-production experiments on the collision model and beyond.
#[derive(Parser)]
#[command(name = "qsep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Input-term, output-term and total difference between the two averages.
    Fig1(Flags),
    /// Both averages with γ = ξ and τ = N^n(ρ).
    Fig2(Flags),
    /// Average entropy production with τ = ξ.
    Fig3(Flags),
    /// Jarzynski value, Crooks table and superadditivity gap as JSON.
    Report(Flags),
    /// Runs built-in consistency checks.
    Selftest,
}

#[derive(Args)]
struct Flags {
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    xi_pop: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Comma-separated collision counts.
    #[arg(long)]
    n: Option<String>,
    /// `x,y,z` or `xi`.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// `x,y,z`, `output` or `xi`.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Input state `x,y,z` for `report`.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    /// Points per axis.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    radius_clip: Option<String>,
    /// `collision`, `unitary` or `classical` for `report`.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Use the alternative reverse state over time.
    #[arg(long)]
    variant_reverse: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = [
            ("xi-pop", &self.xi_pop),
            ("phi", &self.phi),
            ("n", &self.n),
            ("gamma", &self.gamma),
            ("tau", &self.tau),
            ("rho", &self.rho),
            ("grid", &self.grid),
            ("radius-clip", &self.radius_clip),
            ("channel", &self.channel),
            ("out", &self.out),
            ("format", &self.format),
            ("threads", &self.threads),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.variant_reverse {
            v.push(("variant-reverse", "true".into()));
        }
        v
    }

    fn build(&self, scenario: Scenario) -> Result<ScenarioConfig, CliError> {
        let mut cfg = ScenarioConfig::defaults(scenario);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let pairs = parse_config_text(&text)?;
            cfg.apply_all(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        }
        let pairs = self.pairs();
        cfg.apply_all(pairs.iter().map(|(k, v)| (*k, v.as_str())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(scenario: Scenario, flags: &Flags) -> Result<(), CliError> {
    let cfg = flags.build(scenario)?;
    if scenario == Scenario::Report {
        let report = experiments::run_report(&cfg)?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
        return output::emit_text(&text, cfg.out.as_deref());
    }
    let results = experiments::run_figure(&cfg)?;
    for p in output::emit_grids(&results, cfg.format, cfg.out.as_deref())? {
        eprintln!("wrote {}", p.display());
    }
    let flagged: usize = results.iter().map(|r| r.flagged()).sum();
    if flagged > 0 {
        return Err(CliError::Numerical { message: "grid contains singular points".into(), flagged });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, flags) = match &cli.command {
        Command::Fig1(f) => (Scenario::Fig1Diff, f),
        Command::Fig2(f) => (Scenario::Fig2FixedPoint, f),
        Command::Fig3(f) => (Scenario::Fig3TauXi, f),
        Command::Report(f) => (Scenario::Report, f),
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return if checks.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
    };
    match run(scenario, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical { message, flagged }) => {
            eprintln!("error: numerical failure: {message}");
            eprintln!("flagged rows: {flagged}");
            ExitCode::from(3)
        }
        Err(e @ CliError::Io(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
