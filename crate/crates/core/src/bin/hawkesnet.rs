use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hawkesnet::cli::{self, CliError, CmdOutput, Overrides, RunConfig};
use hawkesnet::markmodel::{ActivityMode, EdgeScope, MarkVariant};

#[derive(Parser)]
#[command(name = "hawkesnet", version, about = "Simulate, fit and check network-growth Hawkes processes")]
struct Cli {
    /// Print the annotated default configuration and exit.
    #[arg(long)]
    explain: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration (see --explain).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed [default: seeds.master, 0].
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output path [default: io.out, else stdout].
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct ModelFlags {
    /// Mark model [default: mark.model, ba].
    #[arg(long, value_parser = |s: &str| s.parse::<MarkVariant>())]
    model: Option<MarkVariant>,
    /// Candidate edges [default: mark.edge_scope; all-pairs for cs, else new-node].
    #[arg(long, value_name = "new-node|all-pairs", value_parser = cli::parse_edge_scope)]
    edge_scope: Option<EdgeScope>,
    /// Activity time used for edge decay [default: mark.activity, arrival].
    #[arg(long, value_name = "arrival|last-edge", value_parser = cli::parse_activity)]
    activity: Option<ActivityMode>,
    /// No new nodes after this fraction of T [default: mark.node_cutoff, none].
    #[arg(long, value_name = "FRACTION")]
    node_cutoff: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an event stream.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Fit a model family to an event stream and write a report.
    Fit {
        /// Event-stream file.
        events: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Repeatedly simulate and refit; write a parameter summary table.
    Replicate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        /// Number of replications [default: optimizer.reps, 100].
        #[arg(long, value_name = "N")]
        reps: Option<usize>,
        /// Worker threads [default: optimizer.jobs, 1].
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
    /// Summary statistics and degree/ESP histograms as CSV (--out is a directory).
    Stats {
        /// Event-stream file.
        events: PathBuf,
        /// Directory for summary.csv, degree.csv and esp.csv.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Time-rescaling goodness of fit (--out is a directory).
    Gof {
        /// Event-stream file.
        events: PathBuf,
        /// Report written by `fit`.
        #[arg(long, value_name = "PATH")]
        fit: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Parametric bootstrap replications, 0 or >= 99 [default: optimizer.bootstrap, 0].
        #[arg(long, value_name = "N")]
        bootstrap: Option<usize>,
        /// Worker threads for the bootstrap [default: optimizer.jobs, 1].
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
    /// Convert whitespace-separated `t i j` contact rows to an event stream.
    Convert {
        /// Contact file.
        input: PathBuf,
        /// Output stream; the id dictionary goes to <PATH>.dict.tsv [default: stdout].
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Map the observed time range onto [0, T] [default: keep raw times].
        #[arg(long, value_name = "T")]
        rescale: Option<f64>,
    },
}

fn config(common: &Common, model: &ModelFlags, extra: Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        out: common.out.clone(),
        model: model.model,
        edge_scope: model.edge_scope,
        activity: model.activity,
        node_cutoff: model.node_cutoff,
        ..extra
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command) -> Result<CmdOutput, CliError> {
    match command {
        Command::Simulate { common, model } => cli::cmd_simulate(&config(&common, &model, Overrides::default())?),
        Command::Fit { events, common, model } => {
            cli::cmd_fit(&config(&common, &model, Overrides::default())?, &events)
        }
        Command::Replicate { common, model, reps, jobs } => {
            cli::cmd_replicate(&config(&common, &model, Overrides { reps, jobs, ..Default::default() })?)
        }
        Command::Stats { events, out } => cli::cmd_stats(&events, out.as_deref()),
        Command::Gof { events, fit, common, bootstrap, jobs } => {
            let extra = Overrides { bootstrap, jobs, ..Default::default() };
            cli::cmd_gof(&config(&common, &ModelFlags::default(), extra)?, &events, &fit)
        }
        Command::Convert { input, out, rescale } => cli::cmd_convert(&input, out.as_deref(), rescale),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).format_timestamp(None).init();
    let args = Cli::parse();
    if args.explain {
        print!("{}", cli::EXPLAIN);
        return ExitCode::SUCCESS;
    }
    let Some(command) = args.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    match run(command) {
        Ok(out) => {
            for line in &out.stderr {
                eprintln!("{line}");
            }
            print!("{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
