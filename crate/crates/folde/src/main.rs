use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use folde::campaign::{CampaignConfig, CampaignServer, CampaignService, CampaignStore, CreateRequest, Submission};
use folde::config::{RunConfig, DATA_DIR_ENV};
use folde::formats::{load_results, save_dataset, save_embeddings, save_logprobs, save_results};
use folde::report::{build_report, render_tables};
use folde::simulate::simulate;
use folde::{Error, Result};
use folde_core::sim::{synth_landscape, LandscapeConfig, Policy};

#[derive(Parser)]
#[command(name = "folde", version, about = "Active-learning-assisted directed evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over replicates and write a results file.
    Simulate(RunArgs),
    /// Run every configured policy over the same replicates.
    Ablate(RunArgs),
    /// Summarize a results file.
    Report {
        results: PathBuf,
        /// Policy tested against each of the others.
        #[arg(long, default_value = "folde")]
        focus: Policy,
        /// Print the report as JSON series instead of tables.
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic landscape as dataset, embedding and log-prob files.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n_variants: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
    },
    /// Live campaigns.
    #[command(subcommand)]
    Campaign(CampaignCommand),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results.tsv")]
    out: PathBuf,
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base directory for relative data paths.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    /// Worker threads for replicates (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StoreArgs {
    /// Directory holding campaign state.
    #[arg(long, env = DATA_DIR_ENV, default_value = "campaigns")]
    data_dir: PathBuf,
}

#[derive(Subcommand)]
enum CampaignCommand {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Create a campaign.
    Create {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        reference: String,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        logprobs: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// TOML campaign configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Propose the next batch.
    Propose {
        id: String,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Record measurements from a `mutant<TAB>activity` file; `NA` marks a failure.
    Record {
        id: String,
        file: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Print a campaign's state, or its metrics.
    Show {
        id: String,
        #[arg(long)]
        metrics: bool,
        #[command(flatten)]
        store: StoreArgs,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run_benchmark(args: RunArgs, sweep: bool) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = args.policy {
        config.simulation.policy = p;
    }
    if let Some(r) = args.replicates {
        config.simulation.replicates = r;
    }
    if let Some(s) = args.seed {
        config.simulation.seed = s;
    }
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let base = args
        .config
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf));
    let data_dir = folde::config::data_dir(args.data_dir, base);
    let artifacts = config.artifacts(data_dir.as_deref())?;
    let policies = if sweep {
        config.sweep()
    } else {
        vec![config.simulation.policy]
    };
    let runs = simulate(&artifacts, &config.simulation, &policies)?;
    save_results(&args.out, &runs)?;
    eprintln!("wrote {} runs to {}", runs.len(), args.out.display());
    Ok(())
}

fn parse_measurements(text: &str) -> Result<Vec<Submission>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with("mutant")) {
            continue;
        }
        let (variant, value) = line.split_once('\t').unwrap_or((line, ""));
        let value = value.trim();
        let activity = if value.is_empty() || value.eq_ignore_ascii_case("na") {
            None
        } else {
            Some(value.parse::<f64>().map_err(|_| Error::Parse {
                what: "measurements".into(),
                line: n + 1,
                message: format!("unparseable activity `{value}`"),
            })?)
        };
        out.push(Submission {
            variant: variant.trim().to_string(),
            activity,
        });
    }
    Ok(out)
}

fn campaign(cmd: CampaignCommand) -> Result<()> {
    let service = |store: StoreArgs| -> Result<CampaignService> { Ok(CampaignService::new(CampaignStore::open(store.data_dir)?)) };
    match cmd {
        CampaignCommand::Serve { port, host, store } => {
            let server = CampaignServer::bind(service(store)?, &format!("{host}:{port}"))?;
            if let Some(addr) = server.local_addr() {
                eprintln!("listening on http://{addr}");
            }
            server.run();
            Ok(())
        }
        CampaignCommand::Create {
            id,
            reference,
            embeddings,
            logprobs,
            truth,
            config,
            store,
        } => {
            let config: CampaignConfig = match config {
                Some(p) => toml::from_str(&read(&p)?).map_err(|e| Error::Config(e.to_string()))?,
                None => CampaignConfig::default(),
            };
            let state = service(store)?.create(CreateRequest {
                id,
                reference,
                embeddings,
                logprobs,
                truth,
                config,
            })?;
            print_json(&state)
        }
        CampaignCommand::Propose { id, store } => {
            let state = service(store)?.propose(&id)?;
            print_json(state.rounds.last().expect("a round was just proposed"))
        }
        CampaignCommand::Record { id, file, store } => {
            let entries = parse_measurements(&read(&file)?)?;
            print_json(&service(store)?.record(&id, &entries)?)
        }
        CampaignCommand::Show { id, metrics, store } => {
            let s = service(store)?;
            if metrics {
                print_json(&s.metrics(&id)?)
            } else {
                print_json(&s.get(&id)?)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => run_benchmark(args, false),
        Command::Ablate(args) => run_benchmark(args, true),
        Command::Report { results, focus, json } => {
            let report = build_report(&load_results(&results)?, focus);
            if json {
                print_json(&report)
            } else {
                print!("{}", render_tables(&report));
                Ok(())
            }
        }
        Command::Synth {
            out_dir,
            seed,
            n_variants,
            length,
        } => {
            let defaults = LandscapeConfig::default();
            let config = LandscapeConfig {
                seed,
                n_variants: n_variants.unwrap_or(defaults.n_variants),
                length: length.unwrap_or(defaults.length),
                ..defaults
            };
            let l = synth_landscape(&config)?;
            std::fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
                path: out_dir.clone(),
                source,
            })?;
            save_dataset(out_dir.join("dataset.tsv"), &l.dataset)?;
            save_embeddings(out_dir.join("embeddings.flde"), &l.embeddings)?;
            save_logprobs(out_dir.join("logprobs.tsv"), &l.logprobs)?;
            eprintln!(
                "{} variants, naturalness rho {:.3}, written to {}",
                l.dataset.len(),
                l.meta.naturalness_rho,
                out_dir.display()
            );
            Ok(())
        }
        Command::Campaign(cmd) => campaign(cmd),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
