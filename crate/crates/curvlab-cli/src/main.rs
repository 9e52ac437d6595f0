use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod report;
mod settings;

use commands::Experiment;
use settings::{ExperimentConfig, ScanSection};

/// Curvature experiments on Lie groups, loop groups and configuration groups.
#[derive(Debug, Parser)]
#[command(name = "curvlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Connection, curvature and Ricci identities for bi-invariant metrics.
    BiinvariantCheck(Flags),
    /// Decay of z -> R(x,y)z on high modes.
    OrderProbe(Flags),
    /// Operator identities of the G-form curvature expansion.
    IdentityCheck(Flags),
    /// Two-step Ricci traces on the circle.
    CircleRicci(Flags),
    /// Residue Ricci formula on the torus and its checks.
    TorusRicci(Flags),
    /// Relative Ricci bounds of point configurations.
    ConfigScan(Flags),
}

/// Every flag overrides the matching config key.
#[derive(Debug, Args)]
struct Flags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long, value_delimiter = ',')]
    algebras: Option<Vec<String>>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    s_values: Option<Vec<f64>>,
    #[arg(long)]
    m0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    m0_values: Option<Vec<f64>>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    cutoffs: Option<Vec<usize>>,
    /// Test vector such as `cos:1:e1 + 0.5*sin:2:e2`; repeat for several.
    #[arg(long = "vector")]
    vectors: Option<Vec<String>>,
    #[arg(long)]
    direction: Option<usize>,
    /// Mode window `lo,hi` of the decay probe.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    momenta: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Tolerance override `key=value`; repeatable.
    #[arg(long = "tol", value_parser = parse_kv)]
    tolerances: Vec<(String, f64)>,
    /// Points file for config-scan.
    #[arg(long)]
    points_file: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn parse_kv(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?))
}

impl Flags {
    fn as_config(&self) -> Result<ExperimentConfig> {
        let window = match self.window.as_deref() {
            Some(&[lo, hi]) => Some([lo, hi]),
            Some(w) => anyhow::bail!("field `window`: expected two values lo,hi, got {}", w.len()),
            None => None,
        };
        Ok(ExperimentConfig {
            name: self.name.clone(),
            domain: self.domain.clone(),
            algebra: self.algebra.clone(),
            algebras: self.algebras.clone(),
            s: self.s,
            s_values: self.s_values.clone(),
            m0: self.m0,
            m0_values: self.m0_values.clone(),
            cutoff: self.cutoff,
            cutoffs: self.cutoffs.clone(),
            vectors: self.vectors.clone(),
            direction: self.direction,
            window,
            momenta: self.momenta.clone(),
            seed: self.seed,
            samples: self.samples,
            output: self.output.clone(),
            tolerances: if self.tolerances.is_empty() { None } else { Some(self.tolerances.iter().cloned().collect::<BTreeMap<_, _>>()) },
            expected_signs: None,
            scan: self.points_file.as_ref().map(|p| ScanSection { points_file: Some(p.clone()), ..Default::default() }),
        })
    }
}

fn resolve(exp: Experiment, flags: &Flags) -> Result<ExperimentConfig> {
    let file = match &flags.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let user = file.overlay(&flags.as_config()?);
    Ok(exp.defaults(&user).overlay(&user))
}

fn execute(exp: Experiment, flags: &Flags) -> Result<bool> {
    let cfg = resolve(exp, flags)?;
    if flags.print_config {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    exp.validate(&cfg)?;
    let rep = exp.run(&cfg).with_context(|| format!("running {}", exp.name()))?;
    let (csv, json) = rep.write(&cfg)?;
    for a in &rep.assertions {
        println!("{} {} = {:e} ({} {:e})", if a.pass { "PASS" } else { "FAIL" }, a.name, a.value, a.comparison, a.threshold);
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(rep.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (exp, flags) = match &cli.command {
        Command::BiinvariantCheck(f) => (Experiment::BiinvariantCheck, f),
        Command::OrderProbe(f) => (Experiment::OrderProbe, f),
        Command::IdentityCheck(f) => (Experiment::IdentityCheck, f),
        Command::CircleRicci(f) => (Experiment::CircleRicci, f),
        Command::TorusRicci(f) => (Experiment::TorusRicci, f),
        Command::ConfigScan(f) => (Experiment::ConfigScan, f),
    };
    match execute(exp, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
