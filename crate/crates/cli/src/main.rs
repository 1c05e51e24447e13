use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use asrti::benchmark::{
    pareto_front, parse_algorithms, read_results_csv, run_benchmark, run_traces, write_pareto_csv,
    write_results_csv, write_traces_csv, BenchmarkConfig, DEFAULT_ALGORITHMS,
};
use asrti::Algorithm;
use clap::{Parser, Subcommand};

/// Closed-loop inverted pendulum benchmark for RTI, AS-RTI and SQP controllers.
#[derive(Debug, Parser)]
#[command(name = "benchmark", version)]
struct Cli {
    /// JSON file overriding model parameters, scenario ranges, grids and tolerances.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate every algorithm on the seeded scenarios and write the results table.
    Run {
        #[arg(long, default_value = DEFAULT_ALGORITHMS)]
        algorithms: String,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Scenarios simulated in parallel (timings are less reliable above 1).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Write inner and feedback residuals of one closed-loop run.
    Traces {
        #[arg(long, default_value = "as-rti-b-2")]
        algorithm: String,
        #[arg(long, default_value_t = 0)]
        scenario: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "traces.csv")]
        out: PathBuf,
    },
    /// Timing vs. suboptimality points from a results table.
    Pareto {
        #[arg(long = "in", default_value = "results.csv")]
        input: PathBuf,
        #[arg(long, default_value = "pareto.csv")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<BenchmarkConfig> {
    match path {
        Some(p) => BenchmarkConfig::from_json_file(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(BenchmarkConfig::default()),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { algorithms, scenarios, seed, jobs, out } => {
            let mut cfg = load_config(cli.config.as_ref())?;
            if let Some(n) = scenarios {
                cfg.scenario.scenarios = n;
            }
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            cfg.validate()?;
            let algs = parse_algorithms(&algorithms)?;
            let results = run_benchmark(&cfg, &algs)?;
            write_results_csv(&out, &results.rows).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{:<12} {:>12} {:>15} {:>10} {:>12} {:>12} {:>7}",
                "algorithm", "max_prep_ms", "max_feedback_ms", "subopt_%", "mean_g_x1e3", "mean_gradL", "failed"
            );
            for r in &results.rows {
                println!(
                    "{:<12} {:>12.3} {:>15.3} {:>10.3} {:>12.4} {:>12.3e} {:>7}",
                    r.algorithm,
                    r.max_prep_ms,
                    r.max_feedback_ms,
                    r.rel_subopt_pct,
                    r.mean_g_norm_x1e3,
                    r.mean_lagrange_grad,
                    r.failed_scenarios
                );
            }
        }
        Command::Traces { algorithm, scenario, seed, out } => {
            let mut cfg = load_config(cli.config.as_ref())?;
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            let alg: Algorithm = algorithm.parse()?;
            let run = run_traces(&cfg, alg, scenario)?;
            if let Some(e) = &run.metrics.error {
                bail!("closed-loop run failed: {e}");
            }
            write_traces_csv(&out, &run.trace).with_context(|| format!("writing {}", out.display()))?;
            println!("{} trace records written to {}", run.trace.len(), out.display());
        }
        Command::Pareto { input, out } => {
            let rows = read_results_csv(&input).with_context(|| format!("reading {}", input.display()))?;
            let points = pareto_front(&rows);
            write_pareto_csv(&out, &points).with_context(|| format!("writing {}", out.display()))?;
            for p in points.iter().filter(|p| p.pareto_optimal) {
                println!("{:<12} {:>10.3} ms {:>8.3} %", p.algorithm, p.max_total_ms, p.rel_subopt_pct);
            }
        }
    }
    Ok(())
}
