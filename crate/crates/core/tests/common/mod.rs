#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ontogat::ontology::{Entity, EntityId, EntityKind, Ontology, Relation, RelationEdge};
use rand::Rng;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn conference_ontologies() -> Vec<PathBuf> {
    ["cmt", "confOf", "ekaw"]
        .iter()
        .map(|n| fixture(&format!("conference/{n}.json")))
        .collect()
}

/// Toy run config with absolute inputs and outputs under `dir`.
pub fn toy_config_text(dir: &Path) -> String {
    format!(
        r#"seed = 0

[input]
left = "{left}"
right = "{right}"
reference = "{reference}"
embeddings = "{embeddings}"

[embedding]
backend = "file"
granularity = "token-mean"

[model]
hidden_dim = 8
output_dim = 16

[train]
epochs = 5

[output]
checkpoint = "{out}/model.json"
threshold = "{out}/threshold.txt"
loss = "{out}/loss.csv"
alignment_tsv = "{out}/alignment.tsv"
alignment_rdf = "{out}/alignment.rdf"
"#,
        left = fixture("toy/left.json").display(),
        right = fixture("toy/right.json").display(),
        reference = fixture("toy/reference.json").display(),
        embeddings = fixture("toy/embeddings.emb").display(),
        out = dir.display(),
    )
}

pub fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn ontogat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontogat"))
        .args(args)
        .env("ONTOGAT_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Random small ontology: `classes` classes, `properties` object properties,
/// edges of every relation drawn independently.
pub fn random_ontology(rng: &mut impl Rng, classes: usize, properties: usize) -> Ontology {
    let iri = "http://random.example.org/o";
    let cid = |i: usize| EntityId::new(format!("{iri}#C{i:02}"));
    let pid = |i: usize| EntityId::new(format!("{iri}#p{i:02}"));
    let mut entities: Vec<Entity> = (0..classes)
        .map(|i| Entity {
            id: cid(i),
            kind: EntityKind::Class,
            label: format!("C{i}"),
        })
        .collect();
    entities.extend((0..properties).map(|i| Entity {
        id: pid(i),
        kind: EntityKind::ObjectProperty,
        label: format!("p{i}"),
    }));
    let mut edges = Vec::new();
    let density = rng.gen_range(0.05..0.4);
    for a in 0..classes {
        for b in 0..classes {
            if a != b && rng.gen_bool(density) {
                edges.push(RelationEdge {
                    src: cid(a),
                    rel: Relation::SubClassOf,
                    dst: cid(b),
                });
            }
            if a != b && rng.gen_bool(density / 3.0) {
                edges.push(RelationEdge {
                    src: cid(a),
                    rel: Relation::EquivalentClass,
                    dst: cid(b),
                });
            }
        }
        for p in 0..properties {
            if rng.gen_bool(density / 2.0) {
                edges.push(RelationEdge {
                    src: cid(a),
                    rel: Relation::Restriction,
                    dst: pid(p),
                });
            }
        }
    }
    for p in 0..properties {
        for c in 0..classes {
            if rng.gen_bool(density) {
                edges.push(RelationEdge {
                    src: pid(p),
                    rel: Relation::Domain,
                    dst: cid(c),
                });
            }
            if rng.gen_bool(density) {
                edges.push(RelationEdge {
                    src: pid(p),
                    rel: Relation::Range,
                    dst: cid(c),
                });
            }
        }
    }
    Ontology::new(iri.into(), entities, edges).unwrap()
}
pub mod oracle;
