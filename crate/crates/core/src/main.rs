use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ricluster::experiment::{self, fit_delta, read_points, ConfigMap, ExperimentConfig};
use ricluster::spectrum::{read_edge_list, spectrum};
use ricluster::theory::{delta_exponent, negative_delta_warning, TheoryCurve};
use ricluster::Error;

#[derive(Parser)]
#[command(
    name = "ricluster",
    version,
    about = "Clustering spectra of random intersection graphs"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limit curves a(k), b(k), A(k), B(k) and the predicted c(k), C(k).
    Theory(ConfigArgs),
    /// Sample replicate graphs and write the pooled clustering spectrum.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write the first replicate's graph as an edge list.
        #[arg(long)]
        export_edges: Option<PathBuf>,
    },
    /// Simulate, compute theory and write report.csv / report.json.
    Compare(ConfigArgs),
    /// Fit a power law to a column of a CSV over a k-window.
    FitDelta {
        input: PathBuf,
        #[arg(long, default_value = "C_hat")]
        column: String,
        #[arg(long)]
        k_lo: f64,
        #[arg(long)]
        k_hi: f64,
    },
    /// Clustering spectrum of an edge-list file.
    Stats {
        edges: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct ConfigArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    x_law: Option<String>,
    #[arg(long)]
    y_law: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    k_min: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long)]
    pmf_k_max: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    crossover_width: Option<String>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    edge_budget: Option<String>,
    #[arg(long)]
    fit_k_lo: Option<String>,
    #[arg(long)]
    fit_k_hi: Option<String>,
    #[arg(long)]
    save_replicates: Option<String>,
    #[arg(long, short)]
    output_dir: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut map = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::default(),
        };
        let overrides = [
            ("n", &self.n),
            ("m", &self.m),
            ("beta", &self.beta),
            ("x_law", &self.x_law),
            ("y_law", &self.y_law),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("k_min", &self.k_min),
            ("k_max", &self.k_max),
            ("pmf_k_max", &self.pmf_k_max),
            ("tol", &self.tol),
            ("crossover_width", &self.crossover_width),
            ("generator", &self.generator),
            ("edge_budget", &self.edge_budget),
            ("fit_k_lo", &self.fit_k_lo),
            ("fit_k_hi", &self.fit_k_hi),
            ("save_replicates", &self.save_replicates),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                map.set(key, v)?;
            }
        }
        ExperimentConfig::from_map(&map)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Theory(args) => {
            let config = args.load()?;
            let curve = TheoryCurve::compute(&config.params, &config.curve_options())?;
            if let Ok((alpha, gamma)) = config.params.pareto_indices() {
                if let Some(w) = negative_delta_warning(delta_exponent(alpha, gamma)) {
                    eprintln!("warning: {w}");
                }
            }
            let out = config.output_dir.as_ref().map(|d| d.join("theory.csv"));
            write_or_print(out.as_deref(), &curve.to_csv())
        }
        Command::Simulate {
            config,
            export_edges,
        } => {
            let config = config.load()?;
            let sim = experiment::simulate(&config)?;
            if sim.failed() > 0 {
                eprintln!(
                    "warning: {} of {} replicates exceeded the edge budget",
                    sim.failed(),
                    config.replicates
                );
            }
            if let Some(path) = export_edges {
                let g = experiment::sample_graph(&config, 0)?;
                g.write_edge_list(io::BufWriter::new(fs::File::create(path)?))?;
            }
            let out = config.output_dir.as_ref().map(|d| d.join("spectrum.csv"));
            write_or_print(out.as_deref(), &sim.pooled.to_csv())
        }
        Command::Compare(args) => {
            let config = args.load()?;
            let dir = config
                .output_dir
                .clone()
                .ok_or_else(|| Error::Config("compare needs output_dir".into()))?;
            let (report, sim, timing) = experiment::run(&config)?;
            report.write(&dir, &sim, &timing, config.save_replicates)?;
            println!(
                "replicates ok {}/{}; max |C gap| {}; max |c gap| {}; delta {} (fit {})",
                report.replicates_succeeded,
                report.replicates_requested,
                fmt(report.max_big_c_gap),
                fmt(report.max_c_gap),
                fmt(report.delta.theory),
                fmt(report.delta.estimate)
            );
            Ok(())
        }
        Command::FitDelta {
            input,
            column,
            k_lo,
            k_hi,
        } => {
            let points = read_points(&fs::read_to_string(&input)?, &input, &column)?;
            let fit = fit_delta(&points, (k_lo, k_hi))?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(())
        }
        Command::Stats { edges, output } => {
            let g = read_edge_list(BufReader::new(fs::File::open(&edges)?), &edges)?;
            let s = spectrum(&g);
            if s.is_empty() {
                eprintln!("warning: {} contains no edges", edges.display());
            }
            write_or_print(output.as_deref(), &s.to_csv())
        }
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EdgeBudget { .. } | Error::AllReplicatesFailed(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
