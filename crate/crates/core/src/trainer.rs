//! Dataset construction, SGD training and validation threshold selection.

use std::collections::HashSet;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::OntologyFeatures;
use crate::gat::{Gradients, GraphFeatures, SiameseModel};
use crate::matcher::{score_class_pair, score_property_pair, AlignmentSet};
use crate::ontology::{EntityId, EntityKind, Ontology};
use crate::scalar::Scalar;

const DATASET_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub negative_ratio: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 5,
            weight_decay: 0.001,
            batch_size: 16,
            negative_ratio: 5,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.negative_ratio == 0 {
            return bad("negative_ratio must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return bad("validation_fraction must lie in (0, 0.5)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub left: EntityId,
    pub right: EntityId,
    pub kind: EntityKind,
    pub aligned: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledPair>,
    pub validation: Vec<LabeledPair>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &LabeledPair> {
        self.train.iter().chain(&self.validation)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reference cells become positives. Negatives are drawn without
/// replacement from the same-kind cross product minus the positives,
/// `negative_ratio` per positive, then both strata are split into
/// train/validation by `validation_fraction`.
pub fn build_dataset(
    left: &Ontology,
    right: &Ontology,
    reference: &AlignmentSet,
    cfg: &TrainConfig,
) -> Result<Dataset> {
    cfg.validate()?;
    let mut positives = Vec::new();
    let mut seen = HashSet::new();
    for cell in reference.iter() {
        let (Some(a), Some(b)) = (left.kind_of(&cell.left), right.kind_of(&cell.right)) else {
            warn!(
                "reference cell {} = {} names an unknown entity; skipped",
                cell.left, cell.right
            );
            continue;
        };
        if a != b {
            warn!(
                "reference cell {} = {} joins different kinds; skipped",
                cell.left, cell.right
            );
            continue;
        }
        if seen.insert((cell.left.clone(), cell.right.clone())) {
            positives.push(LabeledPair {
                left: cell.left.clone(),
                right: cell.right.clone(),
                kind: a,
                aligned: true,
            });
        }
    }
    if positives.is_empty() {
        return Err(Error::Dataset(
            "reference alignment has no usable positive pairs".into(),
        ));
    }

    let mut candidates = Vec::new();
    for kind in [
        EntityKind::Class,
        EntityKind::ObjectProperty,
        EntityKind::DatatypeProperty,
    ] {
        for a in left.entities_of_kind(kind) {
            for b in right.entities_of_kind(kind) {
                if !seen.contains(&(a.id.clone(), b.id.clone())) {
                    candidates.push(LabeledPair {
                        left: a.id.clone(),
                        right: b.id.clone(),
                        kind,
                        aligned: false,
                    });
                }
            }
        }
    }
    let wanted = cfg.negative_ratio * positives.len();
    if candidates.len() < wanted {
        warn!(
            "only {} negative pairs exist, {} requested; using all",
            candidates.len(),
            wanted
        );
    }
    let mut rng = rng_for(cfg.seed, DATASET_STREAM);
    candidates.shuffle(&mut rng);
    candidates.truncate(wanted);
    let mut negatives = candidates;
    positives.shuffle(&mut rng);

    let split = |n: usize| -> usize {
        if n < 2 {
            0
        } else {
            ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1)
        }
    };
    let (vp, vn) = (split(positives.len()), split(negatives.len()));
    let mut validation: Vec<LabeledPair> = positives.drain(..vp).collect();
    validation.extend(negatives.drain(..vn));
    let mut train = positives;
    train.extend(negatives);
    Ok(Dataset { train, validation })
}

/// One training pair as encoder inputs.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a, T> {
    pub left: &'a GraphFeatures<T>,
    pub right: &'a GraphFeatures<T>,
    pub label: T,
}

/// Class pairs as encoder inputs. Property pairs are skipped: properties
/// are scored from label embeddings and have nothing to train.
pub fn class_examples<'a, T: Scalar>(
    pairs: &[LabeledPair],
    left: &'a OntologyFeatures<T>,
    right: &'a OntologyFeatures<T>,
) -> Result<Vec<Example<'a, T>>> {
    pairs
        .iter()
        .filter(|p| p.kind == EntityKind::Class)
        .map(|p| {
            Ok(Example {
                left: left.class_features(&p.left)?,
                right: right.class_features(&p.right)?,
                label: if p.aligned { T::one() } else { T::zero() },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Mean per-pair loss of each epoch.
    pub loss_trace: Vec<f64>,
    pub steps: usize,
}

impl TrainOutcome {
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss\n");
        for (e, l) in self.loss_trace.iter().enumerate() {
            out.push_str(&format!("{},{:.10}\n", e + 1, l));
        }
        out
    }
}

/// Mini-batch SGD on the squared cosine error with L2 weight decay. Pair
/// gradients inside a batch run in parallel and are reduced in index order,
/// so a fixed seed gives bit-identical parameters.
pub fn train<T: Scalar>(
    model: &mut SiameseModel<T>,
    examples: &[Example<'_, T>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::Dataset("no class pairs to train on".into()));
    }
    let lr = T::of(cfg.learning_rate);
    let decay = T::of(cfg.weight_decay);
    let mut rng = rng_for(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let diverged = || Error::Diverged {
                epoch: epoch + 1,
                batch: batch + 1,
            };
            let results: Vec<Result<(T, Gradients<T>)>> = chunk
                .par_iter()
                .map(|&i| {
                    let ex = &examples[i];
                    model.loss_and_gradients(ex.left, ex.right, ex.label, decay)
                })
                .collect();
            let mut sum = Gradients::zeros(&model.config);
            let scale = T::one() / T::of(chunk.len() as f64);
            for r in results {
                let (loss, grad) = r.map_err(|e| match e {
                    Error::NonFinite(_) => diverged(),
                    other => other,
                })?;
                if !loss.is_finite() {
                    return Err(diverged());
                }
                epoch_loss += loss.as_f64();
                sum.accumulate(scale, &grad);
            }
            model.apply_gradients(lr, &sum);
            steps += 1;
        }
        let mean = epoch_loss / examples.len() as f64;
        log::info!("epoch {} mean loss {:.6}", epoch + 1, mean);
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { loss_trace, steps })
}

/// Score of one labelled pair: encoder path for classes, label cosine for properties.
pub fn score_pair<T: Scalar>(
    model: &SiameseModel<T>,
    pair: &LabeledPair,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<f64> {
    match pair.kind {
        EntityKind::Class => score_class_pair(model, &pair.left, &pair.right, left, right),
        _ => score_property_pair(&pair.left, &pair.right, left, right),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub f1: f64,
}

/// Picks the observed score maximising validation F1 when predicting
/// "aligned" for `score >= t`; ties go to the largest threshold.
pub fn select_threshold(scored: &[(f64, bool)]) -> Result<ThresholdChoice> {
    let positives = scored.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == scored.len() {
        return Err(Error::Dataset(
            "threshold selection needs at least one positive and one negative pair".into(),
        ));
    }
    if scored.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("validation scores".into()));
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.first().map(|s| s.0) == sorted.last().map(|s| s.0) {
        warn!("all validation scores are identical; threshold is that score");
    }

    // Sweep thresholds from high to low; at each distinct score every pair at
    // or above it is predicted positive.
    let mut best: Option<(usize, usize, f64)> = None; // (tp, fp, threshold)
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let better = match best {
            None => true,
            Some((btp, bfp, _)) => {
                // F1 = 2tp / (tp + fp + P); compare without division
                let lhs = (2 * tp) as u128 * (btp + bfp + positives) as u128;
                let rhs = (2 * btp) as u128 * (tp + fp + positives) as u128;
                lhs > rhs
            }
        };
        if better {
            best = Some((tp, fp, t));
        }
    }
    let (tp, fp, threshold) = best.expect("nonempty validation set");
    Ok(ThresholdChoice {
        threshold,
        f1: 2.0 * tp as f64 / (tp + fp + positives) as f64,
    })
}
