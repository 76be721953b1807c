//! The command implementations behind the binary. Each returns its results
//! so tests can drive the pipeline without spawning a process.

use std::path::Path;

use log::{info, warn};

use crate::checkpoint::Checkpoint;
use crate::config::{Backend, RunConfig};
use crate::embedding::{Embedder, EmbeddingTable};
use crate::error::{Error, Result};
use crate::features::OntologyFeatures;
use crate::gat::SiameseModel;
use crate::gradcheck::{run_seed, CheckReport, ToySizes, DEFAULT_EPSILON, DEFAULT_TOLERANCE};
use crate::matcher::{match_ontologies, AlignmentSet};
use crate::metrics::{evaluate_case, report_csv, Variant};
use crate::ontology::Ontology;
use crate::preprocess::{AbbreviationDict, Preprocessor, StopWords};
use crate::trainer::{
    build_dataset, class_examples, score_pair, select_threshold, train, TrainOutcome,
};

fn require(what: &'static str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::NotFound(what, path.to_path_buf()))
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Both ontologies with their feature caches.
pub struct Prepared {
    pub left: Ontology,
    pub right: Ontology,
    pub left_features: OntologyFeatures<f64>,
    pub right_features: OntologyFeatures<f64>,
    pub input_dim: usize,
}

/// Checks every input path, then loads ontologies and embeddings and builds
/// the neighbourhood features.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let input = &cfg.input;
    require("ontology file", &input.left)?;
    require("ontology file", &input.right)?;
    if cfg.embedding.backend == Backend::File {
        if let Some(p) = &input.embeddings {
            require("embedding file", p)?;
        }
    }
    if let Some(p) = &input.stopwords {
        require("stopword file", p)?;
    }
    if let Some(p) = &input.abbreviations {
        require("abbreviation file", p)?;
    }

    let table = match (&cfg.embedding.backend, &input.embeddings) {
        (Backend::File, Some(p)) => EmbeddingTable::load(p)?.with_oov_seed(cfg.seed),
        (Backend::File, None) => {
            return Err(Error::Config(
                "embedding backend \"file\" needs input.embeddings".into(),
            ))
        }
        (Backend::Hash, _) => EmbeddingTable::hashing(cfg.embedding.dim, cfg.seed),
    };
    let mut preprocessor = Preprocessor::default();
    if let Some(p) = &input.stopwords {
        preprocessor.stopwords = StopWords::load(p)?;
    }
    if let Some(p) = &input.abbreviations {
        preprocessor.abbreviations = AbbreviationDict::load(p)?;
    }
    let mut embedder = Embedder::new(table, cfg.embedding.granularity);
    embedder.preprocessor = preprocessor;

    let left = Ontology::load(&input.left)?;
    let right = Ontology::load(&input.right)?;
    let n_max = cfg.model.max_neighbors;
    let left_features = OntologyFeatures::build(&left, &embedder, n_max)?;
    let right_features = OntologyFeatures::build(&right, &embedder, n_max)?;
    Ok(Prepared {
        left,
        right,
        left_features,
        right_features,
        input_dim: embedder.dim(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub outcome: TrainOutcome,
    pub threshold: f64,
    pub validation_f1: f64,
    pub train_pairs: usize,
    pub validation_pairs: usize,
}

/// Trains on the reference alignment and writes checkpoint, threshold and loss trace.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let reference_path = cfg
        .input
        .reference
        .as_ref()
        .ok_or_else(|| Error::Config("train needs input.reference".into()))?;
    require("reference file", reference_path)?;
    let p = prepare(cfg)?;
    let reference = AlignmentSet::load(reference_path)?;
    let tc = cfg.train_config();
    let dataset = build_dataset(&p.left, &p.right, &reference, &tc)?;
    info!(
        "{} training pairs, {} validation pairs",
        dataset.train.len(),
        dataset.validation.len()
    );

    let mut model = SiameseModel::init(cfg.model.model_config(p.input_dim), cfg.seed)?;
    let examples = class_examples(&dataset.train, &p.left_features, &p.right_features)?;
    let outcome = train(&mut model, &examples, &tc)?;

    let scored = dataset
        .validation
        .iter()
        .map(|pair| {
            Ok((
                score_pair(&model, pair, &p.left_features, &p.right_features)?,
                pair.aligned,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let choice = select_threshold(&scored)?;
    info!(
        "threshold {} (validation F1 {:.4})",
        choice.threshold, choice.f1
    );

    write(
        &cfg.output.checkpoint,
        &Checkpoint::from_model(&model).to_json_string(),
    )?;
    write(&cfg.output.threshold, &format!("{}\n", choice.threshold))?;
    write(&cfg.output.loss, &outcome.loss_csv())?;
    Ok(TrainSummary {
        outcome,
        threshold: choice.threshold,
        validation_f1: choice.f1,
        train_pairs: dataset.train.len(),
        validation_pairs: dataset.validation.len(),
    })
}

pub fn read_threshold(path: &Path) -> Result<f64> {
    require("threshold file", path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let t: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("threshold file {} is not a number", path.display())))?;
    if !t.is_finite() {
        return Err(Error::NonFinite("threshold".into()));
    }
    Ok(t)
}

/// Loads checkpoint and threshold, matches the configured pair and writes TSV and RDF/XML.
pub fn cmd_match(cfg: &RunConfig, threshold: Option<f64>) -> Result<AlignmentSet> {
    let checkpoint = Checkpoint::load(&cfg.output.checkpoint)?;
    let threshold = match threshold {
        Some(t) => t,
        None => read_threshold(&cfg.output.threshold)?,
    };
    let p = prepare(cfg)?;
    let expected = cfg.model.model_config(p.input_dim);
    for (what, ck, conf) in [
        ("input_dim", checkpoint.dims.input_dim, expected.input_dim),
        (
            "hidden_dim",
            checkpoint.dims.hidden_dim,
            expected.hidden_dim,
        ),
        (
            "output_dim",
            checkpoint.dims.output_dim,
            expected.output_dim,
        ),
    ] {
        if ck != conf {
            return Err(Error::DimensionMismatch {
                what,
                checkpoint: ck,
                config: conf,
            });
        }
    }
    if checkpoint.config != expected {
        warn!("checkpoint model settings differ from config; using the checkpoint");
    }
    let model: SiameseModel<f64> = checkpoint.to_model()?;
    let alignment = match_ontologies(&model, &p.left_features, &p.right_features, threshold)?;
    info!("{} cells at threshold {}", alignment.len(), threshold);
    write(&cfg.output.alignment_tsv, &alignment.to_tsv())?;
    write(
        &cfg.output.alignment_rdf,
        &alignment.to_rdf_xml(p.left.iri(), p.right.iri()),
    )?;
    Ok(alignment)
}

/// Report CSV for one system alignment against its reference.
pub fn cmd_eval(
    system: &Path,
    reference: &Path,
    variant: Variant,
    left: &Path,
    right: &Path,
) -> Result<String> {
    require("system alignment", system)?;
    require("reference file", reference)?;
    require("ontology file", left)?;
    require("ontology file", right)?;
    let sys = AlignmentSet::load(system)?;
    let refs = AlignmentSet::load(reference)?;
    let (a, b) = (Ontology::load(left)?, Ontology::load(right)?);
    let report = evaluate_case(&sys, &refs, variant, &a, &b)?;
    let case = system
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "system".into());
    report_csv(&[(case, report)])
}

/// Gradient checks for `count` consecutive seeds starting at `seed`.
pub fn cmd_gradcheck(seed: u64, count: u64, corrupt: bool) -> Result<Vec<CheckReport>> {
    (seed..seed + count)
        .map(|s| run_seed(s, ToySizes::default(), DEFAULT_EPSILON, corrupt))
        .collect()
}

/// `Err(Verification)` when any report exceeds the tolerance.
pub fn gradcheck_verdict(reports: &[CheckReport]) -> Result<()> {
    let failed: Vec<u64> = reports
        .iter()
        .filter(|r| !r.passed(DEFAULT_TOLERANCE))
        .map(|r| r.seed)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(format!(
            "seeds {failed:?} exceed {DEFAULT_TOLERANCE}"
        )))
    }
}
