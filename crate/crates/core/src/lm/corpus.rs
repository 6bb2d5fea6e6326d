use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const EOS: &str = "<eos>";
pub const UNK: &str = "<unk>";

/// How a text file is cut into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    /// Whitespace-separated words, `<eos>` after every line.
    #[default]
    Word,
    /// One token per character, newline becomes `<eos>`.
    Char,
}

impl std::str::FromStr for TokenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(TokenMode::Word),
            "char" => Ok(TokenMode::Char),
            other => Err(Error::Config(format!("unknown token mode {other:?} (expected word or char)"))),
        }
    }
}

pub fn tokenize(text: &str, mode: TokenMode) -> Vec<String> {
    match mode {
        TokenMode::Word => {
            let mut out = Vec::new();
            for line in text.lines() {
                out.extend(line.split_whitespace().map(str::to_string));
                out.push(EOS.to_string());
            }
            out
        }
        TokenMode::Char => text
            .chars()
            .map(|c| if c == '\n' { EOS.to_string() } else { c.to_string() })
            .collect(),
    }
}

/// Reads and tokenizes a corpus file.
pub fn load_corpus(path: &Path, mode: TokenMode) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tokens = tokenize(&text, mode);
    if tokens.is_empty() {
        return Err(Error::InvalidInput(format!("{}: corpus is empty", path.display())));
    }
    Ok(tokens)
}

/// Token ↔ id mapping. `<eos>` is id 0 and `<unk>` id 1; other tokens follow
/// in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocab {
    pub fn build<S: AsRef<str>>(tokens: &[S]) -> Vocab {
        let mut v = Vocab {
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        v.insert(EOS);
        v.insert(UNK);
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    fn insert(&mut self, t: &str) {
        if !self.ids.contains_key(t) {
            self.ids.insert(t.to_string(), self.tokens.len());
            self.tokens.push(t.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn eos_id(&self) -> usize {
        0
    }

    pub fn unk_id(&self) -> usize {
        1
    }

    /// Unknown tokens map to `<unk>`.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref()).unwrap_or(1)).collect()
    }
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != EOS || tokens[1] != UNK {
            return Err(Error::Integrity("vocabulary must start with <eos>, <unk>".into()));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (k, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), k).is_some() {
                return Err(Error::Integrity(format!("duplicate vocabulary entry {t:?}")));
            }
        }
        Ok(Vocab { tokens, ids })
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

/// Train, validation and test splits encoded with the training vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub vocab: Vocab,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Corpus {
    pub fn from_tokens<S: AsRef<str>>(train: &[S], valid: &[S], test: &[S]) -> Corpus {
        let vocab = Vocab::build(train);
        Corpus {
            train: vocab.encode(train),
            valid: vocab.encode(valid),
            test: vocab.encode(test),
            vocab,
        }
    }

    /// Loads `ptb.{train,valid,test}.txt` or `{train,valid,test}.txt` from
    /// `dir`, building the vocabulary from the training split.
    pub fn load_dir(dir: &Path, mode: TokenMode) -> Result<Corpus> {
        let train = load_split(dir, "train", mode)?;
        let valid = load_split(dir, "valid", mode)?;
        let test = load_split(dir, "test", mode)?;
        Ok(Corpus::from_tokens(&train, &valid, &test))
    }

    /// Like [`Corpus::load_dir`] but encodes every split with `vocab`.
    pub fn load_dir_with_vocab(dir: &Path, mode: TokenMode, vocab: Vocab) -> Result<Corpus> {
        let train = load_split(dir, "train", mode)?;
        let valid = load_split(dir, "valid", mode)?;
        let test = load_split(dir, "test", mode)?;
        Ok(Corpus {
            train: vocab.encode(&train),
            valid: vocab.encode(&valid),
            test: vocab.encode(&test),
            vocab,
        })
    }

    pub fn split(&self, name: &str) -> Option<&[usize]> {
        match name {
            "train" => Some(&self.train),
            "valid" => Some(&self.valid),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// Tokens of one split (`train`, `valid` or `test`) of a corpus directory.
pub fn load_split(dir: &Path, split: &str, mode: TokenMode) -> Result<Vec<String>> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    load_corpus(&split_path(dir, split)?, mode)
}

fn split_path(dir: &Path, split: &str) -> Result<PathBuf> {
    let candidates = [dir.join(format!("ptb.{split}.txt")), dir.join(format!("{split}.txt"))];
    for c in &candidates {
        if c.is_file() {
            return Ok(c.clone());
        }
    }
    Err(Error::io(
        &candidates[1],
        std::io::Error::new(std::io::ErrorKind::NotFound, format!("no {split} split found")),
    ))
}
