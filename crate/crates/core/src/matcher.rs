//! Candidate scoring, one-to-one extraction and alignment file I/O.
//!
//! Classes are scored through the Siamese encoder; properties by the cosine
//! of their label embeddings alone. Scores are cosines rescaled from
//! `[-1, 1]` to `[0, 1]`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::features::OntologyFeatures;
use crate::gat::{cosine_similarity, SiameseModel};
use crate::ontology::{EntityId, EntityKind};
use crate::scalar::Scalar;

pub const EQUIVALENCE: &str = "=";

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentCell {
    pub left: EntityId,
    pub right: EntityId,
    pub relation: String,
    pub confidence: f64,
}

impl AlignmentCell {
    pub fn new(left: EntityId, right: EntityId, confidence: f64) -> Self {
        AlignmentCell {
            left,
            right,
            relation: EQUIVALENCE.to_string(),
            confidence,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentSet {
    pub cells: Vec<AlignmentCell>,
}

impl AlignmentSet {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AlignmentCell> {
        self.cells.iter()
    }

    pub fn extend(&mut self, other: AlignmentSet) {
        self.cells.extend(other.cells);
    }

    /// `left<TAB>right<TAB>=<TAB>confidence` with six decimals, one line per cell.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.6}",
                c.left, c.right, c.relation, c.confidence
            );
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Alignment(format!(
                    "TSV line {}: expected 4 fields, found {}",
                    n + 1,
                    fields.len()
                )));
            }
            let confidence = fields[3].trim().parse::<f64>().map_err(|_| {
                Error::Alignment(format!(
                    "TSV line {}: invalid confidence {:?}",
                    n + 1,
                    fields[3]
                ))
            })?;
            cells.push(AlignmentCell {
                left: EntityId::new(fields[0].trim()),
                right: EntityId::new(fields[1].trim()),
                relation: fields[2].trim().to_string(),
                confidence,
            });
        }
        Ok(AlignmentSet { cells })
    }

    /// Alignment-format RDF/XML with one `Cell` per alignment.
    pub fn to_rdf_xml(&self, onto1: &str, onto2: &str) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"utf-8\"?>\n");
        out.push_str(
            "<rdf:RDF xmlns=\"http://knowledgeweb.semanticweb.org/heterogeneity/alignment#\"\n\
             \x20        xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n\
             \x20        xmlns:xsd=\"http://www.w3.org/2001/XMLSchema#\">\n",
        );
        out.push_str("<Alignment>\n  <xml>yes</xml>\n  <level>0</level>\n  <type>11</type>\n");
        let _ = writeln!(out, "  <onto1>{}</onto1>", escape(onto1));
        let _ = writeln!(out, "  <onto2>{}</onto2>", escape(onto2));
        for c in &self.cells {
            out.push_str("  <map>\n    <Cell>\n");
            let _ = writeln!(
                out,
                "      <entity1 rdf:resource=\"{}\"/>",
                escape(c.left.as_str())
            );
            let _ = writeln!(
                out,
                "      <entity2 rdf:resource=\"{}\"/>",
                escape(c.right.as_str())
            );
            let _ = writeln!(out, "      <relation>{}</relation>", escape(&c.relation));
            let _ = writeln!(
                out,
                "      <measure rdf:datatype=\"http://www.w3.org/2001/XMLSchema#float\">{:.6}</measure>",
                c.confidence
            );
            out.push_str("    </Cell>\n  </map>\n");
        }
        out.push_str("</Alignment>\n</rdf:RDF>\n");
        out
    }

    /// Reads the `Cell` elements of an Alignment-format document. Cells
    /// missing an entity are skipped with a warning; a missing relation
    /// defaults to `=` and a missing measure to 1.
    pub fn parse_rdf_xml(text: &str) -> Result<Self> {
        let mut reader = Reader::from_str(text);
        let mut cells = Vec::new();
        let mut cell: Option<PartialCell> = None;
        let mut field: Option<&'static str> = None;
        loop {
            let event = reader.read_event().map_err(|e| {
                Error::Alignment(format!(
                    "XML error at byte {}: {e}",
                    reader.buffer_position()
                ))
            })?;
            match event {
                Event::Start(ref e) | Event::Empty(ref e) => {
                    let is_empty = matches!(event, Event::Empty(_));
                    match e.local_name().as_ref() {
                        b"Cell" if !is_empty => cell = Some(PartialCell::default()),
                        b"entity1" | b"entity2" => {
                            if let Some(c) = cell.as_mut() {
                                let which = e.local_name().as_ref() == b"entity1";
                                if let Some(iri) = resource_attr(e)? {
                                    if which {
                                        c.left = Some(iri);
                                    } else {
                                        c.right = Some(iri);
                                    }
                                }
                            }
                        }
                        b"relation" if !is_empty => field = Some("relation"),
                        b"measure" if !is_empty => field = Some("measure"),
                        _ => {}
                    }
                }
                Event::Text(t) => {
                    if let (Some(c), Some(f)) = (cell.as_mut(), field) {
                        let text = t
                            .unescape()
                            .map_err(|e| Error::Alignment(e.to_string()))?
                            .trim()
                            .to_string();
                        if f == "relation" {
                            c.relation = Some(text);
                        } else {
                            c.measure = Some(text);
                        }
                    }
                }
                Event::End(e) => match e.local_name().as_ref() {
                    b"Cell" => {
                        if let Some(c) = cell.take() {
                            if let Some(done) = c.finish()? {
                                cells.push(done);
                            }
                        }
                    }
                    b"relation" | b"measure" => field = None,
                    _ => {}
                },
                Event::Eof => break,
                _ => {}
            }
        }
        Ok(AlignmentSet { cells })
    }

    /// A JSON array of `{"entity1", "entity2", "relation", "measure"}` records;
    /// `measure` may be a number or a numeric string.
    pub fn parse_reference_json(text: &str) -> Result<Self> {
        let records: Vec<ReferenceRecord> = serde_json::from_str(text)?;
        let mut cells = Vec::with_capacity(records.len());
        for r in records {
            let confidence = match r.measure {
                None => 1.0,
                Some(Measure::Number(x)) => x,
                Some(Measure::Text(s)) => s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Alignment(format!("invalid measure {s:?}")))?,
            };
            cells.push(AlignmentCell {
                left: EntityId::new(r.entity1.trim()),
                right: EntityId::new(r.entity2.trim()),
                relation: r.relation.unwrap_or_else(|| EQUIVALENCE.to_string()),
                confidence,
            });
        }
        Ok(AlignmentSet { cells })
    }

    /// Sniffs the format: `[` starts reference JSON, `<` RDF/XML, anything else TSV.
    pub fn parse_any(text: &str) -> Result<Self> {
        match text.trim_start().chars().next() {
            Some('[') => Self::parse_reference_json(text),
            Some('<') => Self::parse_rdf_xml(text),
            _ => Self::parse_tsv(text),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound("alignment file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_any(&text)
    }
}

#[derive(Deserialize)]
struct ReferenceRecord {
    entity1: String,
    entity2: String,
    #[serde(default)]
    relation: Option<String>,
    #[serde(default)]
    measure: Option<Measure>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Measure {
    Number(f64),
    Text(String),
}

#[derive(Default)]
struct PartialCell {
    left: Option<String>,
    right: Option<String>,
    relation: Option<String>,
    measure: Option<String>,
}

impl PartialCell {
    fn finish(self) -> Result<Option<AlignmentCell>> {
        let (Some(left), Some(right)) = (self.left, self.right) else {
            log::warn!("skipping alignment cell without both entities");
            return Ok(None);
        };
        let confidence = match self.measure {
            Some(m) => m
                .parse::<f64>()
                .map_err(|_| Error::Alignment(format!("invalid measure {m:?}")))?,
            None => 1.0,
        };
        Ok(Some(AlignmentCell {
            left: EntityId::new(left.trim()),
            right: EntityId::new(right.trim()),
            relation: self.relation.unwrap_or_else(|| EQUIVALENCE.to_string()),
            confidence,
        }))
    }
}

fn resource_attr(e: &BytesStart<'_>) -> Result<Option<String>> {
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::Alignment(err.to_string()))?;
        if attr.key.local_name().as_ref() == b"resource" {
            let v = attr
                .unescape_value()
                .map_err(|err| Error::Alignment(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn escape(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

fn rescale<T: Scalar>(cosine: T) -> f64 {
    ((cosine.as_f64() + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Rescaled cosine of the two class encodings.
pub fn score_class_pair<T: Scalar>(
    model: &SiameseModel<T>,
    a: &EntityId,
    b: &EntityId,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<f64> {
    let u = model.encode(left.class_features(a)?)?;
    let v = model.encode(right.class_features(b)?)?;
    Ok(rescale(cosine_similarity(&u, &v)?))
}

/// Rescaled cosine of the raw label embeddings of two same-kind properties.
pub fn score_property_pair<T: Scalar>(
    a: &EntityId,
    b: &EntityId,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<f64> {
    let (ka, kb) = (left.kind(a)?, right.kind(b)?);
    if !ka.is_property() {
        return Err(Error::KindMismatch {
            iri: a.to_string(),
            expected: "property",
            actual: ka.name(),
        });
    }
    if ka != kb {
        return Err(Error::KindMismatch {
            iri: b.to_string(),
            expected: ka.name(),
            actual: kb.name(),
        });
    }
    Ok(rescale(cosine_similarity(
        left.vector(a)?,
        right.vector(b)?,
    )?))
}

/// Label-embedding cosine for any same-kind pair, classes included. Used as
/// the no-context baseline.
pub fn score_label_pair<T: Scalar>(
    a: &EntityId,
    b: &EntityId,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<f64> {
    let (ka, kb) = (left.kind(a)?, right.kind(b)?);
    if ka != kb {
        return Err(Error::KindMismatch {
            iri: b.to_string(),
            expected: ka.name(),
            actual: kb.name(),
        });
    }
    Ok(rescale(cosine_similarity(
        left.vector(a)?,
        right.vector(b)?,
    )?))
}

pub type ScoreMap = BTreeMap<(EntityId, EntityId), f64>;

/// Greedy one-to-one extraction: highest score first (ties by ascending
/// `(left, right)`), accepting a pair when it clears `threshold` and neither
/// side is taken.
pub fn extract_alignment(scores: &ScoreMap, threshold: f64) -> AlignmentSet {
    let mut ranked: Vec<(&(EntityId, EntityId), f64)> = scores
        .iter()
        .map(|(k, &v)| (k, v))
        .filter(|(_, s)| *s >= threshold)
        .collect();
    ranked.sort_by(|(ka, sa), (kb, sb)| sb.total_cmp(sa).then_with(|| ka.cmp(kb)));
    let mut used_left: HashSet<&EntityId> = HashSet::new();
    let mut used_right: HashSet<&EntityId> = HashSet::new();
    let mut cells = Vec::new();
    for ((l, r), s) in ranked {
        if used_left.contains(l) || used_right.contains(r) {
            continue;
        }
        used_left.insert(l);
        used_right.insert(r);
        cells.push(AlignmentCell::new(l.clone(), r.clone(), s));
    }
    AlignmentSet { cells }
}

/// Scores of every same-kind pair: model scores for classes, label cosine
/// for properties. Returned separately so each is extracted independently.
pub fn score_candidates<T: Scalar>(
    model: &SiameseModel<T>,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<(ScoreMap, ScoreMap)> {
    let enc_left = left.encode_classes(model)?;
    let enc_right = right.encode_classes(model)?;
    let mut classes = ScoreMap::new();
    for (a, u) in &enc_left {
        for (b, v) in &enc_right {
            classes.insert((a.clone(), b.clone()), rescale(cosine_similarity(u, v)?));
        }
    }
    let mut properties = ScoreMap::new();
    for kind in [EntityKind::ObjectProperty, EntityKind::DatatypeProperty] {
        for a in left.ids_of_kind(kind) {
            for b in right.ids_of_kind(kind) {
                properties.insert(
                    (a.clone(), b.clone()),
                    score_property_pair(a, b, left, right)?,
                );
            }
        }
    }
    Ok((classes, properties))
}

/// Label-cosine scores of every same-kind pair, classes and properties kept apart.
pub fn score_candidates_by_label<T: Scalar>(
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
) -> Result<(ScoreMap, ScoreMap)> {
    let mut classes = ScoreMap::new();
    let mut properties = ScoreMap::new();
    for kind in [
        EntityKind::Class,
        EntityKind::ObjectProperty,
        EntityKind::DatatypeProperty,
    ] {
        let target = if kind == EntityKind::Class {
            &mut classes
        } else {
            &mut properties
        };
        for a in left.ids_of_kind(kind) {
            for b in right.ids_of_kind(kind) {
                target.insert((a.clone(), b.clone()), score_label_pair(a, b, left, right)?);
            }
        }
    }
    Ok((classes, properties))
}

/// Class alignment plus property alignment, each extracted one-to-one.
pub fn match_ontologies<T: Scalar>(
    model: &SiameseModel<T>,
    left: &OntologyFeatures<T>,
    right: &OntologyFeatures<T>,
    threshold: f64,
) -> Result<AlignmentSet> {
    let (classes, properties) = score_candidates(model, left, right)?;
    let mut out = extract_alignment(&classes, threshold);
    out.extend(extract_alignment(&properties, threshold));
    Ok(out)
}
