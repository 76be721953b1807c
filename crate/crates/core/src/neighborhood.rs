//! Per-class heterogeneous neighbourhood: five homogeneous subgraphs, one per
//! relation type around the centre class.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ontology::{Direction, EntityId, EntityKind, Ontology, Relation};

pub const DEFAULT_MAX_NEIGHBORS: usize = 8;

/// The five subgraph kinds, in the fixed order used for head binding and
/// concatenation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubgraphKind {
    Parents,
    Children,
    Equivalents,
    DomainOfProperties,
    RangeOfProperties,
}

impl SubgraphKind {
    pub const ALL: [SubgraphKind; 5] = [
        SubgraphKind::Parents,
        SubgraphKind::Children,
        SubgraphKind::Equivalents,
        SubgraphKind::DomainOfProperties,
        SubgraphKind::RangeOfProperties,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Whether restriction properties of member classes join this subgraph.
    fn carries_restrictions(self) -> bool {
        matches!(
            self,
            SubgraphKind::Parents | SubgraphKind::Children | SubgraphKind::Equivalents
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousSubgraph {
    pub kind: SubgraphKind,
    pub centre: EntityId,
    /// Deduplicated, IRI-ascending, never containing the centre.
    pub members: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodGraph {
    pub centre: EntityId,
    subgraphs: [HomogeneousSubgraph; 5],
}

impl NeighborhoodGraph {
    pub fn subgraphs(&self) -> &[HomogeneousSubgraph; 5] {
        &self.subgraphs
    }

    pub fn subgraph(&self, kind: SubgraphKind) -> &HomogeneousSubgraph {
        &self.subgraphs[kind.index()]
    }

    pub fn members(&self, kind: SubgraphKind) -> &[EntityId] {
        &self.subgraph(kind).members
    }

    pub fn is_isolated(&self) -> bool {
        self.subgraphs.iter().all(|s| s.members.is_empty())
    }
}

pub fn build_neighborhood(
    ontology: &Ontology,
    centre: &EntityId,
    max_neighbors: usize,
) -> Result<NeighborhoodGraph> {
    let entity = ontology.entity(centre)?;
    if entity.kind != EntityKind::Class {
        return Err(Error::KindMismatch {
            iri: centre.to_string(),
            expected: "class",
            actual: entity.kind.name(),
        });
    }
    if max_neighbors == 0 {
        return Err(Error::Config("neighbourhood size must be positive".into()));
    }

    let members = |kind: SubgraphKind| -> Result<HomogeneousSubgraph> {
        let mut ids = match kind {
            SubgraphKind::Parents => {
                ontology.neighbors(centre, Relation::SubClassOf, Direction::Outgoing)?
            }
            SubgraphKind::Children => {
                ontology.neighbors(centre, Relation::SubClassOf, Direction::Incoming)?
            }
            SubgraphKind::Equivalents => ontology.equivalents(centre)?,
            SubgraphKind::DomainOfProperties => {
                ontology.neighbors(centre, Relation::Domain, Direction::Incoming)?
            }
            SubgraphKind::RangeOfProperties => {
                ontology.neighbors(centre, Relation::Range, Direction::Incoming)?
            }
        };
        if kind.carries_restrictions() {
            let mut restricted = Vec::new();
            for class in &ids {
                restricted.extend(ontology.neighbors(
                    class,
                    Relation::Restriction,
                    Direction::Outgoing,
                )?);
            }
            ids.extend(restricted);
        }
        ids.sort();
        ids.dedup();
        ids.retain(|id| id != centre);
        ids.truncate(max_neighbors);
        Ok(HomogeneousSubgraph {
            kind,
            centre: centre.clone(),
            members: ids,
        })
    };

    let subgraphs = [
        members(SubgraphKind::Parents)?,
        members(SubgraphKind::Children)?,
        members(SubgraphKind::Equivalents)?,
        members(SubgraphKind::DomainOfProperties)?,
        members(SubgraphKind::RangeOfProperties)?,
    ];
    Ok(NeighborhoodGraph {
        centre: centre.clone(),
        subgraphs,
    })
}

/// Neighbourhoods of every class in the ontology, keyed by class IRI.
pub fn build_all(
    ontology: &Ontology,
    max_neighbors: usize,
) -> Result<BTreeMap<EntityId, NeighborhoodGraph>> {
    ontology
        .classes()
        .into_iter()
        .map(|c| {
            Ok((
                c.id.clone(),
                build_neighborhood(ontology, &c.id, max_neighbors)?,
            ))
        })
        .collect()
}
