//! Naive restatements used as test oracles.

use std::collections::BTreeSet;

use ontogat::matcher::{AlignmentCell, ScoreMap};
use ontogat::ontology::{EntityId, Ontology, Relation};

/// Member lists of the five subgraphs by a plain scan over every edge.
pub fn neighborhood(o: &Ontology, centre: &EntityId, n_max: usize) -> [Vec<EntityId>; 5] {
    let edges = o.edges();
    let scan =
        |keep: &dyn Fn(&EntityId, Relation, &EntityId) -> Option<EntityId>| -> BTreeSet<EntityId> {
            edges
                .iter()
                .filter_map(|e| keep(&e.src, e.rel, &e.dst))
                .collect()
        };
    let parents = scan(&|s, r, d| (r == Relation::SubClassOf && s == centre).then(|| d.clone()));
    let children = scan(&|s, r, d| (r == Relation::SubClassOf && d == centre).then(|| s.clone()));
    let equivalents = scan(&|s, r, d| {
        if r != Relation::EquivalentClass {
            None
        } else if s == centre {
            Some(d.clone())
        } else if d == centre {
            Some(s.clone())
        } else {
            None
        }
    });
    let domain = scan(&|s, r, d| (r == Relation::Domain && d == centre).then(|| s.clone()));
    let range = scan(&|s, r, d| (r == Relation::Range && d == centre).then(|| s.clone()));
    let with_restrictions = |classes: BTreeSet<EntityId>| -> BTreeSet<EntityId> {
        let mut out = classes.clone();
        for e in edges {
            if e.rel == Relation::Restriction && classes.contains(&e.src) {
                out.insert(e.dst.clone());
            }
        }
        out
    };
    let finish = |set: BTreeSet<EntityId>| -> Vec<EntityId> {
        set.into_iter()
            .filter(|x| x != centre)
            .take(n_max)
            .collect()
    };
    [
        finish(with_restrictions(parents)),
        finish(with_restrictions(children)),
        finish(with_restrictions(equivalents)),
        finish(domain),
        finish(range),
    ]
}

/// Greedy matching by repeated full scans: each round takes the best
/// remaining admissible pair.
pub fn greedy(scores: &ScoreMap, threshold: f64) -> Vec<AlignmentCell> {
    let mut used_left = BTreeSet::new();
    let mut used_right = BTreeSet::new();
    let mut out = Vec::new();
    loop {
        let mut best: Option<(&(EntityId, EntityId), f64)> = None;
        for (key, &s) in scores {
            if s < threshold || used_left.contains(&key.0) || used_right.contains(&key.1) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bk, bs)) => s > bs || (s == bs && key < bk),
            };
            if better {
                best = Some((key, s));
            }
        }
        let Some(((l, r), s)) = best else { break };
        used_left.insert(l.clone());
        used_right.insert(r.clone());
        out.push(AlignmentCell::new(l.clone(), r.clone(), s));
    }
    out
}
