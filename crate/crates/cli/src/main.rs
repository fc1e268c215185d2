use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cacrl_core::{run_experiment, ExperimentConfig, RunSummary, Variant};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "cacrl", version, about = "Constrained RL power scheduling for XR downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write metrics, evaluations and checkpoints.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured number of policy iterations.
        #[arg(long)]
        iterations: Option<usize>,
        /// Use the encoder KL gradient without its constant variance term.
        #[arg(long)]
        strict_paper: bool,
    },
    /// Run a range of seeds in parallel, one output directory per run.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Half-open `a..b` or inclusive `a..=b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Range<u64>,
        /// Comma-separated variants; defaults to the one in the config.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<Variant>,
        /// Parent directory for the runs; defaults to the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Print the default configuration as TOML.
    Defaults,
}

fn parse_seeds(s: &str) -> Result<Range<u64>> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        bail!("expected a seed range like 0..10, got `{s}`");
    };
    let a: u64 = a.trim().parse().with_context(|| format!("bad range start in `{s}`"))?;
    let b: u64 = b.trim().parse().with_context(|| format!("bad range end in `{s}`"))?;
    let end = if inclusive { b + 1 } else { b };
    if end <= a {
        bail!("seed range `{s}` is empty");
    }
    Ok(a..end)
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn print_summary(variant: Variant, seed: u64, s: &RunSummary) {
    let rates: Vec<String> = s.final_eval.dropout_rate.iter().map(|r| format!("{r:.4}")).collect();
    println!(
        "{variant} seed={seed} iterations={} eval_power={:.6e} eval_dropout=[{}] first_feasible={} dir={}",
        s.iterations,
        s.final_eval.mean_power,
        rates.join(", "),
        s.first_feasible.map_or_else(|| "none".to_string(), |i| i.to_string()),
        s.output_dir.display()
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            variant,
            out,
            iterations,
            strict_paper,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.seed = seed;
            cfg.variant = variant;
            cfg.output_dir = out;
            cfg.strict_paper |= strict_paper;
            if let Some(n) = iterations {
                cfg.iterations = n;
            }
            let summary = run_experiment(&cfg).context("training run failed")?;
            print_summary(variant, seed, &summary);
        }
        Command::Sweep {
            config,
            seeds,
            variants,
            out,
            iterations,
        } => {
            let base = load_config(&config)?;
            let parent = out.unwrap_or_else(|| base.output_dir.clone());
            let variants = if variants.is_empty() { vec![base.variant] } else { variants };
            let jobs: Vec<ExperimentConfig> = seeds
                .flat_map(|seed| variants.iter().map(move |&v| (seed, v)))
                .map(|(seed, variant)| {
                    let mut cfg = base.clone();
                    cfg.seed = seed;
                    cfg.variant = variant;
                    cfg.output_dir = parent.join(format!("{variant}_seed{seed}"));
                    if let Some(n) = iterations {
                        cfg.iterations = n;
                    }
                    cfg
                })
                .collect();
            let results: Vec<(ExperimentConfig, Result<RunSummary>)> = jobs
                .into_par_iter()
                .map(|cfg| {
                    let r = run_experiment(&cfg)
                        .with_context(|| format!("{} seed {} failed", cfg.variant, cfg.seed));
                    (cfg, r)
                })
                .collect();
            let mut failed = 0;
            for (cfg, r) in &results {
                match r {
                    Ok(s) => print_summary(cfg.variant, cfg.seed, s),
                    Err(e) => {
                        failed += 1;
                        eprintln!("error: {e:#}");
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} of {} runs failed", results.len());
            }
        }
        Command::Defaults => {
            print!("{}", ExperimentConfig::default().to_toml_string()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), 0..3);
        assert_eq!(parse_seeds("2..=4").unwrap(), 2..5);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("5").is_err());
        assert!(parse_seeds("a..b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
