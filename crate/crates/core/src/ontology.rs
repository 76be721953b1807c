//! In-memory ontology loaded from the interchange JSON document.
//!
//! The document shape is
//!
//! ```json
//! {"ontology_iri": "...",
//!  "entities": [{"id": "...", "kind": "class", "label": "..."}],
//!  "edges": [{"src": "...", "rel": "subClassOf", "dst": "..."}]}
//! ```
//!
//! An [`Ontology`] is immutable once loaded.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute IRI naming an entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(iri: impl Into<String>) -> Self {
        EntityId(iri.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Fragment after the last `#` or `/`, or the whole IRI when neither occurs.
    pub fn local_name(&self) -> &str {
        let iri = self.0.trim_end_matches(['#', '/']);
        iri.rsplit(['#', '/']).next().unwrap_or(iri)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Class,
    ObjectProperty,
    DatatypeProperty,
}

impl EntityKind {
    pub fn is_property(self) -> bool {
        !matches!(self, EntityKind::Class)
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Class => "class",
            EntityKind::ObjectProperty => "object_property",
            EntityKind::DatatypeProperty => "datatype_property",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "subClassOf")]
    SubClassOf,
    #[serde(rename = "equivalentClass")]
    EquivalentClass,
    #[serde(rename = "domain")]
    Domain,
    #[serde(rename = "range")]
    Range,
    #[serde(rename = "restriction")]
    Restriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub src: EntityId,
    pub rel: Relation,
    pub dst: EntityId,
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    ontology_iri: String,
    entities: Vec<Entity>,
    edges: Vec<RelationEdge>,
}

#[derive(Debug, Clone)]
pub struct Ontology {
    iri: String,
    entities: Vec<Entity>,
    edges: Vec<RelationEdge>,
    index: HashMap<EntityId, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl Ontology {
    pub fn from_json_str(document: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(document)?;
        Self::new(doc.ontology_iri, doc.entities, doc.edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound("ontology file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Validates and indexes entities and edges. Edge order is kept as given.
    pub fn new(iri: String, mut entities: Vec<Entity>, edges: Vec<RelationEdge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entities.len());
        for (i, entity) in entities.iter_mut().enumerate() {
            if entity.id.as_str().is_empty() {
                return Err(Error::Ontology("entity with empty id".into()));
            }
            if index.insert(entity.id.clone(), i).is_some() {
                return Err(Error::DuplicateEntity(entity.id.to_string()));
            }
            if entity.label.trim().is_empty() {
                entity.label = entity.id.local_name().to_string();
            }
            if entity.label.trim().is_empty() {
                return Err(Error::Ontology(format!(
                    "entity {} has no usable label",
                    entity.id
                )));
            }
        }

        let mut outgoing = vec![Vec::new(); entities.len()];
        let mut incoming = vec![Vec::new(); entities.len()];
        for (e, edge) in edges.iter().enumerate() {
            let src = *index
                .get(&edge.src)
                .ok_or_else(|| Error::DanglingEndpoint(edge.src.to_string()))?;
            let dst = *index
                .get(&edge.dst)
                .ok_or_else(|| Error::DanglingEndpoint(edge.dst.to_string()))?;
            check_edge_kinds(edge, entities[src].kind, entities[dst].kind)?;
            outgoing[src].push(e);
            incoming[dst].push(e);
        }

        Ok(Ontology {
            iri,
            entities,
            edges,
            index,
            outgoing,
            incoming,
        })
    }

    pub fn iri(&self) -> &str {
        &self.iri
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn edges(&self) -> &[RelationEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: &EntityId) -> Option<&Entity> {
        self.index.get(id).map(|&i| &self.entities[i])
    }

    pub fn entity(&self, id: &EntityId) -> Result<&Entity> {
        self.get(id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.index.contains_key(id)
    }

    pub fn kind_of(&self, id: &EntityId) -> Option<EntityKind> {
        self.get(id).map(|e| e.kind)
    }

    /// Entities of one kind, ascending by IRI.
    pub fn entities_of_kind(&self, kind: EntityKind) -> Vec<&Entity> {
        let mut out: Vec<&Entity> = self.entities.iter().filter(|e| e.kind == kind).collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn classes(&self) -> Vec<&Entity> {
        self.entities_of_kind(EntityKind::Class)
    }

    /// Endpoints of `rel` edges at `centre`: destinations of outgoing edges or
    /// sources of incoming ones, ascending by IRI. Duplicates from repeated
    /// edges are kept.
    pub fn neighbors(
        &self,
        centre: &EntityId,
        rel: Relation,
        direction: Direction,
    ) -> Result<Vec<EntityId>> {
        let &i = self
            .index
            .get(centre)
            .ok_or_else(|| Error::UnknownEntity(centre.to_string()))?;
        let mut out: Vec<EntityId> = match direction {
            Direction::Outgoing => self.outgoing[i]
                .iter()
                .map(|&e| &self.edges[e])
                .filter(|edge| edge.rel == rel)
                .map(|edge| edge.dst.clone())
                .collect(),
            Direction::Incoming => self.incoming[i]
                .iter()
                .map(|&e| &self.edges[e])
                .filter(|edge| edge.rel == rel)
                .map(|edge| edge.src.clone())
                .collect(),
        };
        out.sort();
        Ok(out)
    }

    /// Equivalence is symmetric: both edge directions, deduplicated, ascending.
    pub fn equivalents(&self, centre: &EntityId) -> Result<Vec<EntityId>> {
        let mut out = self.neighbors(centre, Relation::EquivalentClass, Direction::Outgoing)?;
        out.extend(self.neighbors(centre, Relation::EquivalentClass, Direction::Incoming)?);
        out.sort();
        out.dedup();
        out.retain(|id| id != centre);
        Ok(out)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = Document {
            ontology_iri: self.iri.clone(),
            entities: self.entities.clone(),
            edges: self.edges.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

fn check_edge_kinds(edge: &RelationEdge, src: EntityKind, dst: EntityKind) -> Result<()> {
    let ok = match edge.rel {
        Relation::SubClassOf | Relation::EquivalentClass => {
            src == EntityKind::Class && dst == EntityKind::Class
        }
        Relation::Domain | Relation::Range => src.is_property() && dst == EntityKind::Class,
        Relation::Restriction => src == EntityKind::Class && dst == EntityKind::ObjectProperty,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Ontology(format!(
            "edge {} {:?} {} joins a {} to a {}",
            edge.src,
            edge.rel,
            edge.dst,
            src.name(),
            dst.name()
        )))
    }
}
