use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use phogad::artifacts::{Checkpoint, REPORT};
use phogad::graph_dir::read_graph;
use phogad::manifest::{Dataset, RunManifest};
use phogad::pipeline::{self, Structure};
use phogad::synthetic::SyntheticSpec;
use phogad_core::embed::NetConfig;
use phogad_core::features::SamplingSpec;
use phogad_core::homology::{PersistenceRule, PhoConfig};
use phogad_core::train::{FocalConfig, SplitPart, TrainConfig, TrainSettings};
use serde::Serialize;

/// Anomalous-behavior detection on attributed behavior graphs.
#[derive(Parser)]
#[command(name = "phogad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset into a graph directory.
    Ingest(IngestArgs),
    /// Persistence diagram, structure selection and attribute optimization.
    Ph(PhArgs),
    /// Train the edge-embedding detector on a graph directory.
    Train(TrainArgs),
    /// Score a checkpoint on one part of a graph's split.
    Eval(EvalArgs),
    /// Every stage from one manifest.
    Run(ManifestArgs),
    /// The five-row ablation table from one manifest.
    Ablate(ManifestArgs),
}

#[derive(Args, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "ham", "synthetic"]))]
struct IngestArgs {
    /// Flow CSV.
    #[arg(long, requires = "schema")]
    input: Option<PathBuf>,
    /// JSON schema naming the key, label and feature columns of `--input`.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Directory of normal e-mails.
    #[arg(long, requires = "spam")]
    ham: Option<PathBuf>,
    /// Directory of spam e-mails.
    #[arg(long, requires = "ham")]
    spam: Option<PathBuf>,
    /// Vocabulary size for e-mail features.
    #[arg(long, default_value_t = 500)]
    vocab: usize,
    /// Generate the synthetic ring dataset instead of reading files.
    #[arg(long)]
    synthetic: bool,
    /// Down-sample anomalies to at most this share of the records.
    #[arg(long)]
    anomaly_prop: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PhArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Weight kept on an edge's own attribute.
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    /// `mean_plus_std` or `top_fraction:<f>`.
    #[arg(long, default_value = "mean_plus_std")]
    rule: String,
    #[arg(long, default_value_t = 2000)]
    max_points: usize,
    /// Quantile of pairwise distances used as the filtration cutoff.
    #[arg(long, default_value_t = 0.5)]
    max_scale_quantile: f64,
    /// Homology dimensions taking part in selection.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    dims: Vec<u8>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    early_stop_patience: Option<usize>,
    #[arg(long)]
    dropout_rate: Option<f64>,
    /// Aggregate neighbors without the cosine weights.
    #[arg(long)]
    no_weights: bool,
    /// Add the neighbor aggregate to the edge's own part instead of
    /// concatenating them.
    #[arg(long)]
    no_disentangle: bool,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Use the focal loss with the signed normal-class coefficient.
    #[arg(long)]
    printed_focal: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_parser = parse_split, default_value = "val")]
    split: SplitPart,
    /// Also write `report.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ManifestArgs {
    #[arg(long)]
    manifest: PathBuf,
}

fn parse_split(s: &str) -> Result<SplitPart, String> {
    match s {
        "train" => Ok(SplitPart::Train),
        "val" => Ok(SplitPart::Val),
        "test" => Ok(SplitPart::Test),
        "all" => Ok(SplitPart::All),
        _ => Err(format!("`{s}` is not one of train, val, test, all")),
    }
}

/// What a standalone command writes as its directory's manifest snapshot.
#[derive(Serialize)]
struct CommandSnapshot<'a, T> {
    command: &'a str,
    args: &'a T,
}

fn ingest(args: &IngestArgs) -> phogad::Result<()> {
    let dataset = if let Some(input) = &args.input {
        Dataset::Flows {
            input: input.clone(),
            schema: args.schema.clone().expect("clap enforces --schema"),
        }
    } else if let (Some(ham), Some(spam)) = (&args.ham, &args.spam) {
        Dataset::Email {
            ham: ham.clone(),
            spam: spam.clone(),
            vocab: args.vocab,
        }
    } else {
        Dataset::Synthetic(SyntheticSpec {
            seed: args.seed,
            ..SyntheticSpec::default()
        })
    };
    let sampling = args.anomaly_prop.map(|p| SamplingSpec {
        target_anomaly_proportion: p,
        seed: args.seed,
    });
    let (g, provenance) = pipeline::prepare(pipeline::load(&dataset)?, sampling.as_ref())?;
    pipeline::write_ingested(&g, &provenance, &args.out)?;
    pipeline::snapshot(&args.out, &CommandSnapshot { command: "ingest", args })?;
    info!(
        "{} nodes, {} edges, anomaly proportion {}",
        g.node_count(),
        g.edge_count(),
        provenance.achieved_anomaly_proportion
    );
    Ok(())
}

fn ph(args: &PhArgs) -> phogad::Result<()> {
    let cfg = PhoConfig {
        alpha: args.alpha,
        max_points: args.max_points,
        max_scale_quantile: args.max_scale_quantile,
        rule: PersistenceRule::parse(&args.rule)?,
        dims: args.dims.clone(),
        seed: args.seed,
    };
    let g = read_graph(&args.graph)?;
    let stage = pipeline::homology(&g, &cfg)?;
    pipeline::write_homology(&stage, &args.out, &CommandSnapshot { command: "ph", args })
}

fn train_settings(args: &TrainArgs) -> TrainSettings {
    let d = TrainSettings::default();
    TrainSettings {
        net: NetConfig {
            dropout_rate: args.dropout_rate.unwrap_or(d.net.dropout_rate),
            use_weights: !args.no_weights,
            use_disentangle: !args.no_disentangle,
        },
        focal: FocalConfig {
            delta: args.delta.unwrap_or(d.focal.delta),
            gamma: args.gamma.unwrap_or(d.focal.gamma),
            standard_focal: !args.printed_focal,
        },
        train: TrainConfig {
            epochs: args.epochs.unwrap_or(d.train.epochs),
            learning_rate: args.learning_rate.unwrap_or(d.train.learning_rate),
            train_fraction: args.train_fraction.unwrap_or(d.train.train_fraction),
            val_fraction: args.val_fraction.unwrap_or(d.train.val_fraction),
            early_stop_patience: args.early_stop_patience.unwrap_or(d.train.early_stop_patience),
            seed: args.seed,
            ..d.train
        },
    }
}

fn train(args: &TrainArgs) -> phogad::Result<()> {
    let settings = train_settings(args);
    let g = read_graph(&args.graph)?;
    let structure = Structure::of(&g)?;
    let fitted = pipeline::fit(&g, &structure, &settings)?;
    pipeline::write_fit(&fitted, &settings, &args.out)?;
    pipeline::snapshot(&args.out, &CommandSnapshot { command: "train", args })
}

fn eval(args: &EvalArgs) -> phogad::Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let g = read_graph(&args.graph)?;
    let structure = Structure::of(&g)?;
    let report = pipeline::score(&ck.net, &g, &structure, &ck.settings.train, args.split)?;
    if let Some(out) = &args.out {
        pipeline::snapshot(out, &CommandSnapshot { command: "eval", args })?;
        report.save(&out.join(REPORT))?;
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn execute(cli: Cli) -> phogad::Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(&a),
        Command::Ph(a) => ph(&a),
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Run(a) => {
            let report = pipeline::run(&RunManifest::load(&a.manifest)?)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::Ablate(a) => {
            let m = RunManifest::load(&a.manifest)?;
            for r in pipeline::ablate(&m)? {
                println!("{:<15} {:.4}", r.row.as_str(), r.report.f1);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
