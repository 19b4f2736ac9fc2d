use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use signid_core::graph::EdgeRef;
use signid_core::model::DEFAULT_ZERO_TOL;

use crate::commands::{self, ClassifyArgs, Format, Output, SamplerFlags};
use crate::input::{parse_proxy, parse_range};

/// Decide whether the sign of a causal edge is identifiable from the
/// stationary covariance of a linear (Ornstein-Uhlenbeck) causal model.
///
/// `classify` exits with 0 for an identifiable sign, 10 when the sign is not
/// identifiable, 11 on a boundary verdict and 1 on errors. `table1` exits
/// with 12 when a cell falls outside its tolerance.
#[derive(Debug, Parser)]
#[command(name = "signid", version)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Master seed for sampling.
    #[arg(long, global = true, env = "SIGNID_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Uniform range of drift entries, including self-loops.
    #[arg(long, global = true, value_name = "LO,HI", value_parser = parse_range)]
    pub drift_range: Option<(f64, f64)>,
    /// Uniform range of diffusion diagonal entries.
    #[arg(long, global = true, value_name = "LO,HI", value_parser = parse_range)]
    pub diffusion_range: Option<(f64, f64)>,
    /// Relative tolerance under which a covariance entry counts as zero.
    #[arg(long, global = true)]
    pub zero_tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in graph structures.
    Catalog {
        /// Show one structure only.
        #[arg(long)]
        name: Option<String>,
    },
    /// Decide the sign of an edge for a given covariance matrix.
    Classify {
        /// Graph JSON file or catalog structure name.
        #[arg(long)]
        graph: String,
        /// Covariance as header-less CSV or {"nodes": [...], "sigma": [[...]]}.
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Target edge, e.g. X->Y. Defaults to the graph's target_edge.
        #[arg(long)]
        edge: Option<EdgeRef>,
    },
    /// Apply the sufficient graphical identifiability criterion.
    Graphical {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        edge: Option<EdgeRef>,
    },
    /// Draw random stable models and their covariances.
    Sample {
        #[arg(long)]
        graph: String,
        /// Number of accepted models.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Reproduce the identifiable-fraction table for the catalog structures.
    Table1 {
        /// Samples per structure.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        /// Proxy structure for column g, h or i, as COLUMN=PATH.
        #[arg(long, value_name = "COLUMN=PATH", value_parser = parse_proxy)]
        proxy: Vec<(char, String)>,
    },
    /// Show the closed-form quantities behind a catalog verdict.
    Explain {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        edge: Option<EdgeRef>,
    },
}

/// Runs one parsed invocation. Table notes (low-n warning, wall time) go to
/// stderr; the caller writes `Output::stdout` and exits with `Output::code`.
pub fn run(cli: &Cli) -> Result<Output> {
    let flags = SamplerFlags {
        seed: cli.seed,
        drift_range: cli.drift_range,
        diffusion_range: cli.diffusion_range,
        zero_tol: cli.zero_tol,
    };
    match &cli.command {
        Command::Catalog { name } => commands::cmd_catalog(name.as_deref(), cli.format),
        Command::Classify { graph, sigma, edge } => commands::cmd_classify(
            &ClassifyArgs {
                graph,
                sigma: sigma.as_deref(),
                edge: edge.as_ref(),
                zero_tol: cli.zero_tol.unwrap_or(DEFAULT_ZERO_TOL),
            },
            cli.format,
        ),
        Command::Graphical { graph, edge } => commands::cmd_graphical(graph, edge.as_ref(), cli.format),
        Command::Sample { graph, n } => commands::cmd_sample(graph, *n, &flags, cli.format),
        Command::Table1 { n, proxy } => {
            let run = commands::cmd_table1(*n, proxy, &flags, cli.format)?;
            if run.low_n {
                eprintln!("warning: low-n, tolerances widened (n = {n} < 1000)");
            }
            eprintln!("wall time: {:.2} s", run.wall_time_s);
            Ok(run.output)
        }
        Command::Explain { graph, sigma, edge } => commands::cmd_explain(graph, sigma, edge.as_ref(), cli.format),
    }
}
