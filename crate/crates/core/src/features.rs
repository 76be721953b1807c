//! Per-ontology feature cache: one vector per entity and the gathered
//! neighbourhood features of every class.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::embedding::Embedder;
use crate::error::{Error, Result};
use crate::gat::{GraphFeatures, SiameseModel};
use crate::neighborhood::{build_neighborhood, NeighborhoodGraph};
use crate::ontology::{EntityId, EntityKind, Ontology};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct OntologyFeatures<T> {
    iri: String,
    kinds: BTreeMap<EntityId, EntityKind>,
    vectors: BTreeMap<EntityId, Vec<T>>,
    graphs: BTreeMap<EntityId, NeighborhoodGraph>,
    class_features: BTreeMap<EntityId, GraphFeatures<T>>,
}

impl<T: Scalar> OntologyFeatures<T> {
    pub fn build(
        ontology: &Ontology,
        embedder: &Embedder<T>,
        max_neighbors: usize,
    ) -> Result<Self> {
        let mut kinds = BTreeMap::new();
        let mut vectors = BTreeMap::new();
        for entity in ontology.entities() {
            kinds.insert(entity.id.clone(), entity.kind);
            vectors.insert(entity.id.clone(), embedder.embed(entity)?);
        }
        let mut graphs = BTreeMap::new();
        let mut class_features = BTreeMap::new();
        for class in ontology.classes() {
            let graph = build_neighborhood(ontology, &class.id, max_neighbors)?;
            let centre = vectors[&class.id].clone();
            let features = GraphFeatures::gather(&graph, centre, |id| {
                vectors
                    .get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownEntity(id.to_string()))
            })?;
            class_features.insert(class.id.clone(), features);
            graphs.insert(class.id.clone(), graph);
        }
        Ok(OntologyFeatures {
            iri: ontology.iri().to_string(),
            kinds,
            vectors,
            graphs,
            class_features,
        })
    }

    pub fn iri(&self) -> &str {
        &self.iri
    }

    pub fn kind(&self, id: &EntityId) -> Result<EntityKind> {
        self.kinds
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    /// Entity ids of `kind`, ascending.
    pub fn ids_of_kind(&self, kind: EntityKind) -> Vec<&EntityId> {
        self.kinds
            .iter()
            .filter(|(_, &k)| k == kind)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn vector(&self, id: &EntityId) -> Result<&[T]> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn graph(&self, id: &EntityId) -> Option<&NeighborhoodGraph> {
        self.graphs.get(id)
    }

    pub fn class_features(&self, id: &EntityId) -> Result<&GraphFeatures<T>> {
        match self.class_features.get(id) {
            Some(f) => Ok(f),
            None => Err(match self.kinds.get(id) {
                Some(kind) => Error::KindMismatch {
                    iri: id.to_string(),
                    expected: "class",
                    actual: kind.name(),
                },
                None => Error::UnknownEntity(id.to_string()),
            }),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.vectors.values().next().map(Vec::len)
    }

    /// Model encodings of every class, computed in parallel.
    pub fn encode_classes(&self, model: &SiameseModel<T>) -> Result<BTreeMap<EntityId, Vec<T>>> {
        let entries: Vec<(&EntityId, &GraphFeatures<T>)> = self.class_features.iter().collect();
        entries
            .into_par_iter()
            .map(|(id, f)| Ok((id.clone(), model.encode(f)?)))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().collect())
    }
}
