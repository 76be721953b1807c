//! Fixed-dimension vectors for entities and tokens.
//!
//! File format: the first line is the ASCII decimal dimension; each further
//! line is `id<TAB>f_1 f_2 ... f_dim` (single spaces, decimal floats), UTF-8
//! with LF endings.
//!
//! Tokens missing from a table get a deterministic hashed vector, see
//! [`hash_vector`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::Entity;
use crate::preprocess::{BagOfWords, Preprocessor};
use crate::scalar::{norm, Scalar};

#[derive(Debug, Clone)]
pub struct EmbeddingTable<T> {
    dim: usize,
    ids: Vec<String>,
    vectors: HashMap<String, Vec<T>>,
    oov_seed: u64,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// A table with no rows; every lookup falls through to hashing.
    pub fn hashing(dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            ids: Vec::new(),
            vectors: HashMap::new(),
            oov_seed: seed,
        }
    }

    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<T>)>,
    {
        let mut table = Self::hashing(dim, 0);
        for (line, (id, v)) in rows.into_iter().enumerate() {
            table.insert(line + 2, id, v)?;
        }
        Ok(table)
    }

    fn insert(&mut self, line: usize, id: String, v: Vec<T>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Embedding {
                line,
                message: format!("expected {} components, found {}", self.dim, v.len()),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Embedding {
                line,
                message: "non-finite component".into(),
            });
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::Embedding {
                line,
                message: format!("duplicate id {id}"),
            });
        }
        self.ids.push(id.clone());
        self.vectors.insert(id, v);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let header = lines.next().unwrap_or("").trim_end_matches('\r');
        let dim: usize = header.trim().parse().map_err(|_| Error::Embedding {
            line: 1,
            message: format!("header must be a positive decimal dimension, found {header:?}"),
        })?;
        if dim == 0 {
            return Err(Error::Embedding {
                line: 1,
                message: "dimension must be positive".into(),
            });
        }
        let mut table = Self::hashing(dim, 0);
        for (i, raw) in lines.enumerate() {
            let line_no = i + 2;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (id, rest) = line.split_once('\t').ok_or_else(|| Error::Embedding {
                line: line_no,
                message: "expected id<TAB>values".into(),
            })?;
            let values = rest
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    f64::from_str(s).map(T::of).map_err(|_| Error::Embedding {
                        line: line_no,
                        message: format!("invalid float {s:?}"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            table.insert(line_no, id.to_string(), values)?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::NotFound("embedding file", path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = format!("{}\n", self.dim);
        for id in &self.ids {
            out.push_str(id);
            out.push('\t');
            for (i, x) in self.vectors[id].iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn with_oov_seed(mut self, seed: u64) -> Self {
        self.oov_seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[T]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    /// Table row, or the hashed fallback for ids the table lacks.
    pub fn token_vector(&self, token: &str) -> Vec<T> {
        match self.get(token) {
            Some(v) => v.to_vec(),
            None => hash_vector(token, self.dim, self.oov_seed),
        }
    }

    /// Arithmetic mean of the token vectors of `bag`.
    pub fn entity_vector(&self, bag: &BagOfWords) -> Result<Vec<T>> {
        if bag.is_empty() {
            return Err(Error::EmptyBag);
        }
        let mut acc = vec![T::zero(); self.dim];
        for token in bag.tokens() {
            let v = match self.get(token) {
                Some(v) => std::borrow::Cow::Borrowed(v),
                None => std::borrow::Cow::Owned(hash_vector(token, self.dim, self.oov_seed)),
            };
            for (a, &x) in acc.iter_mut().zip(v.iter()) {
                *a = *a + x;
            }
        }
        let n = T::of(bag.len() as f64);
        Ok(acc.into_iter().map(|x| x / n).collect())
    }
}

/// FNV-1a over the bytes of `(seed as u64 LE, token UTF-8, 0xFF, index as u64 LE)`,
/// then the SplitMix64 finaliser.
pub fn component_hash(seed: u64, token: &str, index: u64) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(&seed.to_le_bytes());
    feed(token.as_bytes());
    feed(&[0xff]);
    feed(&index.to_le_bytes());
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic unit vector for `token`. Component `i` is
/// `2 * (component_hash(seed, token, i) >> 11) / 2^53 - 1` before normalisation.
pub fn hash_vector<T: Scalar>(token: &str, dim: usize, seed: u64) -> Vec<T> {
    assert!(dim >= 1, "embedding dimension must be positive");
    let raw: Vec<f64> = (0..dim as u64)
        .map(|i| {
            let bits = component_hash(seed, token, i) >> 11;
            2.0 * (bits as f64) / (1u64 << 53) as f64 - 1.0
        })
        .collect();
    let n = norm(&raw);
    if n == 0.0 {
        let mut v = vec![T::zero(); dim];
        v[0] = T::one();
        return v;
    }
    raw.into_iter().map(|x| T::of(x / n)).collect()
}

/// How one entity becomes one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// Mean of the bag-of-words token vectors.
    TokenMean,
    /// A whole-label sentence vector keyed by entity IRI (or raw label).
    /// Falls back to the token mean when the table has neither.
    #[default]
    LabelSentence,
}

/// Table plus the label pipeline: turns entities into feature vectors.
#[derive(Debug, Clone)]
pub struct Embedder<T> {
    pub table: EmbeddingTable<T>,
    pub granularity: Granularity,
    pub preprocessor: Preprocessor,
}

impl<T: Scalar> Embedder<T> {
    pub fn new(table: EmbeddingTable<T>, granularity: Granularity) -> Self {
        Embedder {
            table,
            granularity,
            preprocessor: Preprocessor::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn embed(&self, entity: &Entity) -> Result<Vec<T>> {
        if self.granularity == Granularity::LabelSentence {
            if let Some(v) = self
                .table
                .get(entity.id.as_str())
                .or_else(|| self.table.get(&entity.label))
            {
                return Ok(v.to_vec());
            }
        }
        self.table
            .entity_vector(&self.preprocessor.bag(&entity.label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{remove_stopwords, StopWords};
    use crate::scalar::dot;

    fn bag(tokens: &[&str]) -> BagOfWords {
        let t: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        remove_stopwords(&t, &StopWords::default())
    }

    #[test]
    fn parse_512_dim_header() {
        let row = vec!["0.5"; 512].join(" ");
        let text = format!("512\na\t{row}\nb\t{row}\nc\t{row}\n");
        let t = EmbeddingTable::<f64>::parse(&text).unwrap();
        assert_eq!(t.dim(), 512);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn short_row_reports_line() {
        let err = EmbeddingTable::<f64>::parse("4\nx\t1 2 3 4\ny\t1 2 3\n").unwrap_err();
        match err {
            Error::Embedding { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_id_rejected() {
        assert!(EmbeddingTable::<f64>::parse("1\nx\t1\nx\t2\n").is_err());
    }

    #[test]
    fn header_only_is_empty() {
        let t = EmbeddingTable::<f32>::parse("8\n").unwrap();
        assert!(t.is_empty());
        assert_eq!(t.dim(), 8);
    }

    #[test]
    fn file_string_roundtrip() {
        let t = EmbeddingTable::<f64>::parse("2\na\t0.1 -2.5\nb\t3 4e-3\n").unwrap();
        let again = EmbeddingTable::<f64>::parse(&t.to_file_string()).unwrap();
        assert_eq!(again.get("a"), t.get("a"));
        assert_eq!(again.get("b").unwrap(), &[3.0, 0.004]);
        assert!(t.to_file_string().starts_with("2\na\t0.1 -2.5\n"));
    }

    #[test]
    fn token_means() {
        let t = EmbeddingTable::<f64>::parse("2\na\t1 0\nb\t0 1\n").unwrap();
        assert_eq!(t.entity_vector(&bag(&["a"])).unwrap(), vec![1.0, 0.0]);
        assert_eq!(t.entity_vector(&bag(&["a", "b"])).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            t.entity_vector(&bag(&["b", "a"])).unwrap(),
            t.entity_vector(&bag(&["a", "b"])).unwrap()
        );
        assert!(matches!(t.entity_vector(&bag(&[])), Err(Error::EmptyBag)));
    }

    /// Straight-line restatement of the documented hash.
    fn oracle_component(seed: u64, token: &str, i: u64) -> f64 {
        let mut bytes = seed.to_le_bytes().to_vec();
        bytes.extend_from_slice(token.as_bytes());
        bytes.push(0xff);
        bytes.extend_from_slice(&i.to_le_bytes());
        let mut h: u64 = 14695981039346656037;
        for b in bytes {
            h = (h ^ b as u64).wrapping_mul(1099511628211);
        }
        let mut z = h.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        (z >> 11) as f64 / 9007199254740992.0 * 2.0 - 1.0
    }

    #[test]
    fn oov_token_uses_hash_oracle() {
        let t = EmbeddingTable::<f64>::parse("3\na\t1 0 0\n").unwrap();
        let raw: Vec<f64> = (0..3).map(|i| oracle_component(0, "zebra", i)).collect();
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let oov: Vec<f64> = raw.iter().map(|x| x / n).collect();
        let got = t.entity_vector(&bag(&["a", "zebra"])).unwrap();
        for i in 0..3 {
            let a = if i == 0 { 1.0 } else { 0.0 };
            assert!((got[i] - (a + oov[i]) / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hash_vector_is_deterministic_unit() {
        let a: Vec<f64> = hash_vector("paper", 64, 7);
        assert_eq!(a, hash_vector::<f64>("paper", 64, 7));
        assert!((norm(&a) - 1.0).abs() < 1e-9);
        assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert_ne!(a, hash_vector::<f64>("paper", 64, 8));
        assert_eq!(hash_vector::<f64>("x", 1, 0).len(), 1);
    }

    #[test]
    fn hashed_tokens_are_nearly_orthogonal() {
        let tokens: Vec<String> = (0..50).map(|i| format!("token{i}")).collect();
        let vs: Vec<Vec<f64>> = tokens.iter().map(|t| hash_vector(t, 512, 0)).collect();
        let mut max_abs: f64 = 0.0;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let c = dot(&vs[i], &vs[j]);
                assert!(c > -0.3 && c < 0.3, "{i},{j}: {c}");
                max_abs = max_abs.max(c.abs());
            }
        }
        // snapshot of the fixture's largest |cosine|
        assert!(
            (max_abs - HASH_FIXTURE_MAX_ABS_COS).abs() < 1e-12,
            "{max_abs}"
        );
    }

    const HASH_FIXTURE_MAX_ABS_COS: f64 = 0.14839319234136833;

    #[test]
    fn label_sentence_prefers_iri_row() {
        use crate::ontology::{EntityId, EntityKind};
        let t = EmbeddingTable::<f64>::parse("2\nhttp://x#A\t0 1\nthing\t1 0\n").unwrap();
        let e = Entity {
            id: EntityId::new("http://x#A"),
            kind: EntityKind::Class,
            label: "Thing".into(),
        };
        let sentence = Embedder::new(t.clone(), Granularity::LabelSentence);
        assert_eq!(sentence.embed(&e).unwrap(), vec![0.0, 1.0]);
        let mean = Embedder::new(t, Granularity::TokenMean);
        assert_eq!(mean.embed(&e).unwrap(), vec![1.0, 0.0]);
    }
}
