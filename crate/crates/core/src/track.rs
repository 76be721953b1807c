//! Multi-pair track harness: one model trained over every reference-aligned
//! pair of a directory, evaluated against a label-cosine baseline.
//!
//! Directory layout (flat): `<name>.json` interchange ontologies,
//! `<a>-<b>.json` reference alignments between `<a>` and `<b>`, and an
//! optional `embeddings.emb`. Without the embedding file the hash backend
//! stands in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;

use crate::embedding::{Embedder, EmbeddingTable, Granularity};
use crate::error::{Error, Result};
use crate::features::OntologyFeatures;
use crate::gat::{ModelConfig, SiameseModel};
use crate::matcher::{
    extract_alignment, match_ontologies, score_candidates_by_label, score_label_pair, AlignmentSet,
};
use crate::metrics::{aggregate, evaluate_case, EvalReport, Variant};
use crate::neighborhood::DEFAULT_MAX_NEIGHBORS;
use crate::ontology::Ontology;
use crate::trainer::{
    build_dataset, class_examples, score_pair, select_threshold, train, LabeledPair, TrainConfig,
};

pub const EMBEDDING_FILE: &str = "embeddings.emb";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackCase {
    pub name: String,
    pub left: String,
    pub right: String,
    pub reference: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct TrackLayout {
    pub ontologies: BTreeMap<String, PathBuf>,
    pub cases: Vec<TrackCase>,
    pub embeddings: Option<PathBuf>,
}

impl TrackLayout {
    pub fn discover(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::NotFound("track directory", dir.to_path_buf()));
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        paths.sort();
        let mut layout = TrackLayout::default();
        let mut references = Vec::new();
        for path in paths {
            let Some(stem) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(str::to_string)
            else {
                continue;
            };
            match path.extension().and_then(|e| e.to_str()) {
                Some("json") if stem.contains('-') => references.push((stem, path)),
                Some("json") => {
                    layout.ontologies.insert(stem, path);
                }
                Some("emb")
                    if path.file_name().and_then(|n| n.to_str()) == Some(EMBEDDING_FILE) =>
                {
                    layout.embeddings = Some(path)
                }
                _ => {}
            }
        }
        for (stem, reference) in references {
            let (left, right) = stem.split_once('-').expect("stem contains '-'");
            for side in [left, right] {
                if !layout.ontologies.contains_key(side) {
                    return Err(Error::Dataset(format!(
                        "reference {stem} names missing ontology {side}"
                    )));
                }
            }
            layout.cases.push(TrackCase {
                name: stem.clone(),
                left: left.to_string(),
                right: right.to_string(),
                reference,
            });
        }
        Ok(layout)
    }
}

#[derive(Debug, Clone)]
pub struct TrackSettings {
    pub train: TrainConfig,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub max_neighbors: usize,
    pub granularity: Granularity,
    /// Dimension of the hash backend when no embedding file is present.
    pub hash_dim: usize,
}

impl Default for TrackSettings {
    fn default() -> Self {
        let m = ModelConfig::new(1);
        TrackSettings {
            train: TrainConfig::default(),
            hidden_dim: m.hidden_dim,
            output_dim: m.output_dim,
            max_neighbors: DEFAULT_MAX_NEIGHBORS,
            granularity: Granularity::LabelSentence,
            hash_dim: 512,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub name: String,
    pub system: AlignmentSet,
    pub baseline: AlignmentSet,
    pub system_m1: EvalReport,
    pub system_m3: EvalReport,
    pub baseline_m1: EvalReport,
    pub baseline_m3: EvalReport,
}

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub cases: Vec<CaseResult>,
    pub threshold: f64,
    pub baseline_threshold: f64,
    pub loss_trace: Vec<f64>,
    pub system_m1: EvalReport,
    pub system_m3: EvalReport,
    pub baseline_m1: EvalReport,
    pub baseline_m3: EvalReport,
}

struct Loaded {
    ontology: Ontology,
    features: OntologyFeatures<f64>,
}

/// Trains on the union of every case's training split, picks both thresholds
/// on the union of validation splits, then matches and scores every case.
pub fn run_track(layout: &TrackLayout, settings: &TrackSettings) -> Result<TrackResult> {
    if layout.cases.is_empty() {
        return Err(Error::Dataset("track has no reference alignments".into()));
    }
    let table = match &layout.embeddings {
        Some(p) => EmbeddingTable::load(p)?.with_oov_seed(settings.train.seed),
        None => EmbeddingTable::hashing(settings.hash_dim, settings.train.seed),
    };
    let embedder = Embedder::new(table, settings.granularity);
    let mut loaded = BTreeMap::new();
    for (name, path) in &layout.ontologies {
        let ontology = Ontology::load(path)?;
        let features = OntologyFeatures::build(&ontology, &embedder, settings.max_neighbors)?;
        loaded.insert(name.clone(), Loaded { ontology, features });
    }

    let mut references = Vec::new();
    let mut validation: Vec<(usize, LabeledPair)> = Vec::new();
    let mut examples = Vec::new();
    for (i, case) in layout.cases.iter().enumerate() {
        let (l, r) = (&loaded[&case.left], &loaded[&case.right]);
        let reference = AlignmentSet::load(&case.reference)?;
        let dataset = build_dataset(&l.ontology, &r.ontology, &reference, &settings.train)?;
        examples.extend(class_examples(&dataset.train, &l.features, &r.features)?);
        validation.extend(dataset.validation.into_iter().map(|p| (i, p)));
        references.push(reference);
    }

    let config = ModelConfig {
        hidden_dim: settings.hidden_dim,
        output_dim: settings.output_dim,
        ..ModelConfig::new(embedder.dim())
    };
    let mut model = SiameseModel::init(config, settings.train.seed)?;
    let outcome = train(&mut model, &examples, &settings.train)?;

    let sides = |i: usize| {
        let c = &layout.cases[i];
        (&loaded[&c.left], &loaded[&c.right])
    };
    let mut scored = Vec::with_capacity(validation.len());
    let mut baseline_scored = Vec::with_capacity(validation.len());
    for (i, pair) in &validation {
        let (l, r) = sides(*i);
        scored.push((
            score_pair(&model, pair, &l.features, &r.features)?,
            pair.aligned,
        ));
        baseline_scored.push((
            score_label_pair(&pair.left, &pair.right, &l.features, &r.features)?,
            pair.aligned,
        ));
    }
    let threshold = select_threshold(&scored)?.threshold;
    let baseline_threshold = select_threshold(&baseline_scored)?.threshold;
    info!("track thresholds: system {threshold}, baseline {baseline_threshold}");

    let mut cases = Vec::with_capacity(layout.cases.len());
    for (i, case) in layout.cases.iter().enumerate() {
        let (l, r) = sides(i);
        let system = match_ontologies(&model, &l.features, &r.features, threshold)?;
        let (classes, properties) = score_candidates_by_label(&l.features, &r.features)?;
        let mut baseline = extract_alignment(&classes, baseline_threshold);
        baseline.extend(extract_alignment(&properties, baseline_threshold));
        let eval =
            |a: &AlignmentSet, v| evaluate_case(a, &references[i], v, &l.ontology, &r.ontology);
        cases.push(CaseResult {
            name: case.name.clone(),
            system_m1: eval(&system, Variant::M1)?,
            system_m3: eval(&system, Variant::M3)?,
            baseline_m1: eval(&baseline, Variant::M1)?,
            baseline_m3: eval(&baseline, Variant::M3)?,
            system,
            baseline,
        });
    }
    let micro =
        |f: fn(&CaseResult) -> EvalReport| aggregate(&cases.iter().map(f).collect::<Vec<_>>());
    Ok(TrackResult {
        system_m1: micro(|c| c.system_m1)?,
        system_m3: micro(|c| c.system_m3)?,
        baseline_m1: micro(|c| c.baseline_m1)?,
        baseline_m3: micro(|c| c.baseline_m3)?,
        threshold,
        baseline_threshold,
        loss_trace: outcome.loss_trace,
        cases,
    })
}
