//! Stage drivers shared by the command line and the tests: each stage runs
//! one part of the pipeline and can write its artifacts to a directory.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use phogad_core::embed::{compute_adjacency_weights, EdgeEmbedNet, EdgeWeights};
use phogad_core::features::{downsample_anomalies, normalize_features, records_to_graph, FlowRecord, MinMax, SamplingSpec};
use phogad_core::graph::build_edge_adjacency;
use phogad_core::homology::{persistent_homology_optimize, structure_composition, PhOutcome, PhoConfig};
use phogad_core::train::{self, run_ablation, Ablation, AblationResult, Split, SplitPart, TrainOutcome, TrainSettings};
use phogad_core::{BehaviorGraph, EdgeAdjacencyIndex, Error as CoreError, Label};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{write_ablation, write_history, Checkpoint, Report, ABLATION, CHECKPOINT, HISTORY, REPORT};
use crate::diagram::{write_diagram_csv, CompositionReport, DiagramMeta, COMPOSITION, DIAGRAM_CSV, DIAGRAM_META};
use crate::error::{IoContext, Result};
use crate::fmt::{read_json, write_json};
use crate::graph_dir::write_graph;
use crate::ingest::{parse_email_corpus, parse_flow_csv, Schema};
use crate::manifest::{Dataset, RunManifest, SNAPSHOT};
use crate::synthetic::SyntheticSpec;

pub const PROVENANCE: &str = "provenance.json";
pub const OPTIMIZED_GRAPH: &str = "graph-opt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl SourceDigest {
    pub fn file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).at(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }

    /// Digest over the sorted file names and contents of a directory.
    pub fn dir(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for entry in fs::read_dir(path).at(path)? {
            let p = entry.at(path)?.path();
            if p.is_file() {
                entries.push(p);
            }
        }
        entries.sort();
        let mut h = Sha256::new();
        for p in entries {
            h.update(p.file_name().unwrap_or_default().as_encoded_bytes());
            h.update([0]);
            h.update(Sha256::digest(fs::read(&p).at(&p)?));
        }
        Ok(Self {
            path: path.to_path_buf(),
            sha256: hex::encode(h.finalize()),
        })
    }
}

/// Where an ingested graph came from and what preprocessing did to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceDigest>,
    pub generator: Option<SyntheticSpec>,
    pub sampling: Option<SamplingSpec>,
    pub records_read: usize,
    pub normal: usize,
    pub anomalous: usize,
    pub achieved_anomaly_proportion: f64,
    pub feature_names: Vec<String>,
    pub normalization: Vec<MinMax>,
}

/// Raw records of a dataset plus their digests.
pub struct Loaded {
    pub records: Vec<FlowRecord>,
    pub sources: Vec<SourceDigest>,
    pub feature_names: Vec<String>,
    pub generator: Option<SyntheticSpec>,
}

pub fn load(dataset: &Dataset) -> Result<Loaded> {
    match dataset {
        Dataset::Flows { input, schema } => {
            let parsed: Schema = read_json(schema)?;
            Ok(Loaded {
                records: parse_flow_csv(input, &parsed)?,
                sources: vec![SourceDigest::file(input)?, SourceDigest::file(schema)?],
                feature_names: parsed.feature_names(),
                generator: None,
            })
        }
        Dataset::Email { ham, spam, vocab } => {
            let corpus = parse_email_corpus(ham, spam, *vocab)?;
            Ok(Loaded {
                records: corpus.records,
                sources: vec![SourceDigest::dir(ham)?, SourceDigest::dir(spam)?],
                feature_names: corpus.vocabulary,
                generator: None,
            })
        }
        Dataset::Synthetic(spec) => Ok(Loaded {
            records: spec.generate(),
            sources: Vec::new(),
            feature_names: (0..spec.dim).map(|i| format!("x{i}")).collect(),
            generator: Some(spec.clone()),
        }),
    }
}

/// Down-sampling, then min–max scaling, then graph construction.
pub fn prepare(loaded: Loaded, sampling: Option<&SamplingSpec>) -> Result<(BehaviorGraph, Provenance)> {
    let records_read = loaded.records.len();
    let mut records = match sampling {
        Some(spec) => downsample_anomalies(&loaded.records, spec)?.records,
        None => loaded.records,
    };
    let normalization = normalize_features(&mut records)?;
    let g = records_to_graph(&records)?;
    let count = |l: Label| records.iter().filter(|r| r.label == l).count();
    let (normal, anomalous) = (count(Label::Normal), count(Label::Anomalous));
    let provenance = Provenance {
        sources: loaded.sources,
        generator: loaded.generator,
        sampling: sampling.copied(),
        records_read,
        normal,
        anomalous,
        achieved_anomaly_proportion: anomalous as f64 / (normal + anomalous).max(1) as f64,
        feature_names: loaded.feature_names,
        normalization,
    };
    Ok((g, provenance))
}

/// Writes the graph directory with its provenance record.
pub fn write_ingested(g: &BehaviorGraph, provenance: &Provenance, dir: &Path) -> Result<()> {
    write_graph(g, dir)?;
    write_json(&dir.join(PROVENANCE), provenance)
}

/// Copies the configuration that produced a directory into it.
pub fn snapshot<T: Serialize>(dir: &Path, config: &T) -> Result<()> {
    fs::create_dir_all(dir).at(dir)?;
    write_json(&dir.join(SNAPSHOT), config)
}

pub fn global_anomaly_fraction(g: &BehaviorGraph) -> f64 {
    let labeled = g.edges().iter().filter(|e| e.label != Label::Unlabeled).count();
    let anomalous = g.edges().iter().filter(|e| e.label == Label::Anomalous).count();
    if labeled == 0 {
        0.0
    } else {
        anomalous as f64 / labeled as f64
    }
}

pub struct HomologyStage {
    pub outcome: PhOutcome,
    pub meta: DiagramMeta,
    pub composition: CompositionReport,
}

pub fn homology(g: &BehaviorGraph, cfg: &PhoConfig) -> Result<HomologyStage> {
    let outcome = persistent_homology_optimize(g, cfg)?;
    let composition = match structure_composition(&outcome.selected, g) {
        Ok(c) => Some(c),
        Err(CoreError::EmptySelection) => None,
        Err(e) => return Err(e.into()),
    };
    info!(
        "{} features over {} points, {} edges selected",
        outcome.diagram.features.len(),
        outcome.diagram.point_count,
        outcome.selected.len()
    );
    Ok(HomologyStage {
        meta: DiagramMeta::new(&outcome.diagram, cfg, outcome.selected.len()),
        composition: CompositionReport::new(outcome.selected.len(), composition, global_anomaly_fraction(g)),
        outcome,
    })
}

/// `diagram.csv`, `diagram.json`, `composition.json` and the optimized
/// graph under `graph-opt/`.
pub fn write_homology<T: Serialize>(stage: &HomologyStage, dir: &Path, config: &T) -> Result<()> {
    snapshot(dir, config)?;
    write_diagram_csv(&stage.outcome.diagram, &dir.join(DIAGRAM_CSV))?;
    write_json(&dir.join(DIAGRAM_META), &stage.meta)?;
    write_json(&dir.join(COMPOSITION), &stage.composition)?;
    let opt = dir.join(OPTIMIZED_GRAPH);
    write_graph(&stage.outcome.optimized, &opt)?;
    snapshot(&opt, config)
}

/// Edge adjacency and its cosine weights, shared by training and scoring.
pub struct Structure {
    pub adj: EdgeAdjacencyIndex,
    pub weights: EdgeWeights,
}

impl Structure {
    pub fn of(g: &BehaviorGraph) -> Result<Self> {
        let adj = build_edge_adjacency(g);
        let weights = compute_adjacency_weights(g, &adj)?;
        Ok(Self { adj, weights })
    }
}

pub struct Fitted {
    pub outcome: TrainOutcome,
    pub split: Split,
}

pub fn fit(g: &BehaviorGraph, structure: &Structure, settings: &TrainSettings) -> Result<Fitted> {
    let split = settings.train.split(g);
    let outcome = train::train(g, &structure.adj, &structure.weights, &split, settings)?;
    info!(
        "trained {} epochs, best epoch {} with validation F1 {:.4}",
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_record().val.f1
    );
    Ok(Fitted { outcome, split })
}

/// `checkpoint.json` and `history.csv`.
pub fn write_fit(fitted: &Fitted, settings: &TrainSettings, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).at(dir)?;
    Checkpoint::new(fitted.outcome.net.clone(), *settings, fitted.outcome.best_epoch).save(&dir.join(CHECKPOINT))?;
    write_history(&fitted.outcome.history, &dir.join(HISTORY))
}

/// Scores `net` on one part of the split that `train` derives from `g`.
pub fn score(
    net: &EdgeEmbedNet,
    g: &BehaviorGraph,
    structure: &Structure,
    train: &phogad_core::train::TrainConfig,
    part: SplitPart,
) -> Result<Report> {
    let edges = train.split(g).part(part);
    let metrics = train::evaluate(net, g, &structure.adj, &structure.weights, &edges)?;
    Ok(Report::new(part, metrics))
}

/// Ingest, homology, training and test-split evaluation from one manifest.
/// Artifacts go to `manifest.output`: `graph/`, `ph/`, `checkpoint.json`,
/// `history.csv` and `report.json`, each directory with a manifest snapshot.
pub fn run(m: &RunManifest) -> Result<Report> {
    let out = &m.output;
    snapshot(out, m)?;
    let settings = m.settings();
    settings.validate()?;
    m.pho.validate()?;

    let (g, provenance) = prepare(load(&m.dataset)?, m.sampling.as_ref())?;
    let graph_dir = out.join("graph");
    write_ingested(&g, &provenance, &graph_dir)?;
    snapshot(&graph_dir, m)?;
    info!("ingested {} nodes, {} edges", g.node_count(), g.edge_count());

    let ph = homology(&g, &m.pho)?;
    write_homology(&ph, &out.join("ph"), m)?;

    let optimized = &ph.outcome.optimized;
    let structure = Structure::of(optimized)?;
    let fitted = fit(optimized, &structure, &settings)?;
    write_fit(&fitted, &settings, out)?;

    let metrics = train::evaluate(&fitted.outcome.net, optimized, &structure.adj, &structure.weights, &fitted.split.test)?;
    let report = Report::new(SplitPart::Test, metrics);
    report.save(&out.join(REPORT))?;
    Ok(report)
}

/// All five ablation rows from one manifest, written to `ablation.csv`.
pub fn ablate(m: &RunManifest) -> Result<Vec<AblationResult>> {
    snapshot(&m.output, m)?;
    let settings = m.settings();
    settings.validate()?;
    let (g, _) = prepare(load(&m.dataset)?, m.sampling.as_ref())?;
    let ph = homology(&g, &m.pho)?;
    let structure = Structure::of(&g)?;
    let rows = run_ablation(
        &g,
        &ph.outcome.optimized,
        &structure.adj,
        &structure.weights,
        &settings,
        &Ablation::ALL,
    )?;
    for r in &rows {
        info!("{:>15}  F1 {:.4}", r.row.as_str(), r.report.f1);
    }
    write_ablation(&rows, &m.output.join(ABLATION))?;
    Ok(rows)
}
