//! Label normalisation: tokenisation, abbreviation expansion and stopword
//! removal, producing the bag of words that represents an entity.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_ABBREVIATIONS: &str = include_str!("../data/abbreviations.tsv");

/// Lowercase tokens of one label, in label order. Never empty for a nonempty label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagOfWords {
    tokens: Vec<String>,
}

impl BagOfWords {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
    Separator,
}

fn class_of(c: char) -> CharClass {
    if c.is_numeric() {
        CharClass::Digit
    } else if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_alphabetic() {
        CharClass::Lower
    } else {
        CharClass::Separator
    }
}

/// Splits a label on camelCase humps, acronym ends (`PCMember` → `PC|Member`),
/// digit/letter boundaries and any non-alphanumeric character, then lowercases.
pub fn tokenize(label: &str) -> Vec<String> {
    let chars: Vec<char> = label.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let class = class_of(c);
        if class == CharClass::Separator {
            flush(&mut current, &mut tokens);
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).map(|p| &chars[p]) {
            let prev = class_of(prev);
            let next = chars.get(i + 1).copied().map(class_of);
            let boundary = match (prev, class) {
                (CharClass::Lower, CharClass::Upper) => true,
                (CharClass::Upper, CharClass::Upper) => next == Some(CharClass::Lower),
                (CharClass::Digit, CharClass::Upper | CharClass::Lower) => true,
                (CharClass::Upper | CharClass::Lower, CharClass::Digit) => true,
                _ => false,
            };
            if boundary {
                flush(&mut current, &mut tokens);
            }
        }
        current.extend(c.to_lowercase());
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

/// Lowercase abbreviation → expansion phrase.
#[derive(Debug, Clone, Default)]
pub struct AbbreviationDict {
    entries: BTreeMap<String, Vec<String>>,
}

impl AbbreviationDict {
    /// Builds a dictionary, rejecting self-mappings and expansions that
    /// contain another key (expansion is applied once, not to a fixpoint).
    pub fn new<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (k, v) in pairs {
            let key = k.as_ref().trim().to_lowercase();
            if key.is_empty() {
                return Err(Error::Config("empty abbreviation key".into()));
            }
            let expansion = tokenize(v.as_ref());
            if expansion.is_empty() {
                return Err(Error::Config(format!(
                    "abbreviation {key} has empty expansion"
                )));
            }
            entries.insert(key, expansion);
        }
        for (key, expansion) in &entries {
            if let Some(hit) = expansion.iter().find(|t| entries.contains_key(*t)) {
                return Err(Error::Config(format!(
                    "expansion of abbreviation {key} contains the abbreviation {hit}"
                )));
            }
        }
        Ok(AbbreviationDict { entries })
    }

    /// `key<TAB>expansion` per line; blank lines and `#` comments ignored.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!(
                    "abbreviations line {}: expected key<TAB>expansion",
                    n + 1
                ))
            })?;
            pairs.push((k.to_string(), v.to_string()));
        }
        Self::new(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    /// The shipped conference-domain dictionary.
    pub fn conference_default() -> Self {
        Self::parse_tsv(DEFAULT_ABBREVIATIONS).expect("bundled abbreviations are valid")
    }

    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn expand_abbreviations(tokens: &[String], dict: &AbbreviationDict) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        match dict.get(token) {
            Some(expansion) => out.extend(expansion.iter().cloned()),
            None => out.push(token.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopWords {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().filter(|l| !l.starts_with('#')))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }
}

/// Drops stopwords, keeping order. When every token is a stopword the input
/// is returned unchanged so a nonempty label never yields an empty bag.
pub fn remove_stopwords(tokens: &[String], stopwords: &StopWords) -> BagOfWords {
    let kept: Vec<String> = tokens
        .iter()
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .cloned()
        .collect();
    let tokens = if kept.is_empty() {
        tokens.iter().filter(|t| !t.is_empty()).cloned().collect()
    } else {
        kept
    };
    BagOfWords { tokens }
}

/// Tokenise → expand → remove stopwords.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub abbreviations: AbbreviationDict,
    pub stopwords: StopWords,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            abbreviations: AbbreviationDict::conference_default(),
            stopwords: StopWords::english(),
        }
    }
}

impl Preprocessor {
    pub fn bag(&self, label: &str) -> BagOfWords {
        let tokens = tokenize(label);
        let expanded = expand_abbreviations(&tokens, &self.abbreviations);
        remove_stopwords(&expanded, &self.stopwords)
    }
}
