use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use otss_sim::experiment::{
    load_topology, run_experiment, summarize, validate_experiment, write_outputs, ExperimentConfig,
    ExperimentError,
};
use otss_sim::sim::{erlang_b, Scheme};
use otss_sim::topology::RouteTable;

/// OTSS vs flexi-grid latency and blocking simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full sweep and write CSV, manifest and a summary.
    Run(Common),
    /// Check the config and topology without simulating.
    Validate(Common),
    /// Print Erlang-B blocking for the given loads and server counts.
    Oracle {
        /// Offered loads in Erlangs.
        #[arg(long, value_delimiter = ',', required = true)]
        load: Vec<f64>,
        /// Server counts.
        #[arg(long, value_delimiter = ',', default_value = "100")]
        servers: Vec<u32>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topology file, overriding the config.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// CSV output path, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds replacing the configured ones.
    #[arg(long, value_delimiter = ',')]
    seed_override: Option<Vec<u64>>,
    /// Comma-separated scheme labels to keep (e.g. OTSS-AR5,FG-6.25GHz).
    #[arg(long, value_delimiter = ',')]
    scheme_filter: Option<Vec<Scheme>>,
}

fn load_config(args: &Common) -> Result<(ExperimentConfig, PathBuf), ExperimentError> {
    let (mut config, base) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ExperimentError::Read {
                path: path.clone(),
                source,
            })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::parse(&text)?, base)
        }
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    let mut base = base;
    if let Some(t) = &args.topology {
        config.topology_path = Some(t.clone());
        base = PathBuf::new();
    }
    if let Some(out) = &args.out {
        config.output_path = out.clone();
    }
    if let Some(seeds) = &args.seed_override {
        config.seeds = seeds.clone();
    }
    if let Some(keep) = &args.scheme_filter {
        config.schemes.retain(|s| keep.contains(s));
    }
    config.validate()?;
    Ok((config, base))
}

fn run(args: &Common) -> Result<(), ExperimentError> {
    let (config, base) = load_config(args)?;
    let topology = load_topology(&config, &base)?;
    let output = run_experiment(&config, &topology)?;
    write_outputs(&config.output_path, &config, &output)?;
    print!(
        "{}",
        summarize(&output.rows, config.workload.class.latency_bound_s)
    );
    eprintln!("wrote {}", config.output_path.display());
    Ok(())
}

fn validate(args: &Common) -> Result<(), ExperimentError> {
    let (config, base) = load_config(args)?;
    let topology = load_topology(&config, &base)?;
    validate_experiment(&config, &topology)?;
    let routes = RouteTable::new(&topology, 1);
    println!(
        "ok: {} nodes, {} directed links, delay diameter {:.3} ms, {} schemes x {} loads x {} seeds",
        topology.node_count(),
        topology.link_count(),
        routes.diameter_s() * 1e3,
        config.schemes.len(),
        config.loads_erlangs.len(),
        config.seeds.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::Oracle { load, servers } => {
            println!("{:>10} {:>8} {:>14}", "load(E)", "servers", "erlang_b");
            for &e in load {
                for &c in servers {
                    println!("{e:>10} {c:>8} {:>14.9}", erlang_b(e, c));
                }
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
