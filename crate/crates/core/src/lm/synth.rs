//! Seeded synthetic text for character-level experiments.
//!
//! Lines mix several sentence families with checkable structure: subject–verb
//! agreement across relative clauses, two-digit addition, counting runs and
//! verbatim copies.

use std::fmt::Write as _;
use std::path::Path;

use crate::math::Rng;
use crate::{Error, Result};

const NOUNS: &[(&str, &str)] = &[
    ("cat", "cats"),
    ("dog", "dogs"),
    ("bird", "birds"),
    ("child", "children"),
    ("teacher", "teachers"),
    ("farmer", "farmers"),
    ("river", "rivers"),
    ("city", "cities"),
    ("mouse", "mice"),
    ("engine", "engines"),
    ("painter", "painters"),
    ("window", "windows"),
    ("garden", "gardens"),
    ("letter", "letters"),
    ("sailor", "sailors"),
    ("box", "boxes"),
    ("wolf", "wolves"),
    ("story", "stories"),
];

const VERBS: &[(&str, &str)] = &[
    ("sees", "see"),
    ("likes", "like"),
    ("follows", "follow"),
    ("watches", "watch"),
    ("finds", "find"),
    ("carries", "carry"),
    ("paints", "paint"),
    ("remembers", "remember"),
    ("chases", "chase"),
    ("builds", "build"),
    ("reads", "read"),
    ("fixes", "fix"),
];

const ADJECTIVES: &[&str] = &[
    "small", "old", "quiet", "green", "bright", "heavy", "strange", "happy", "cold", "tall", "young", "red",
];

const PLACES: &[&str] = &["near the hill", "in the house", "by the sea", "under the bridge", "at night", "in winter"];

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
];

fn pick<'a, T>(rng: &mut Rng, items: &'a [T]) -> &'a T {
    &items[(rng.next_u64() % items.len() as u64) as usize]
}

fn noun_phrase(rng: &mut Rng, out: &mut String) -> bool {
    let plural = rng.bernoulli(0.4);
    let (s, p) = pick(rng, NOUNS);
    out.push_str(if plural { "the " } else { pick(rng, &["the ", "a ", "this "]) });
    if rng.bernoulli(0.5) {
        out.push_str(pick(rng, ADJECTIVES));
        out.push(' ');
    }
    out.push_str(if plural { p } else { s });
    plural
}

fn verb(rng: &mut Rng, plural: bool, out: &mut String) {
    let (s, p) = pick(rng, VERBS);
    out.push_str(if plural { p } else { s });
}

fn clause(rng: &mut Rng, out: &mut String) {
    let plural = noun_phrase(rng, out);
    if rng.bernoulli(0.4) {
        out.push_str(" that ");
        let inner = noun_phrase(rng, out);
        out.push(' ');
        verb(rng, inner, out);
    }
    out.push(' ');
    verb(rng, plural, out);
    out.push(' ');
    noun_phrase(rng, out);
    if rng.bernoulli(0.3) {
        out.push(' ');
        out.push_str(pick(rng, PLACES));
    }
    out.push_str(" .");
}

fn sum(rng: &mut Rng, out: &mut String) {
    let a = rng.next_u64() % 50;
    let b = rng.next_u64() % 50;
    let _ = write!(out, "{a} plus {b} is {} .", a + b);
}

fn count(rng: &mut Rng, out: &mut String) {
    let len = 3 + (rng.next_u64() % 4) as usize;
    let start = (rng.next_u64() % (NUMBER_WORDS.len() - len + 1) as u64) as usize;
    let words: Vec<&str> = NUMBER_WORDS[start..start + len].to_vec();
    let _ = write!(out, "count {} .", words.join(" "));
}

fn copy(rng: &mut Rng, out: &mut String) {
    let len = 3 + (rng.next_u64() % 4) as usize;
    let word: String = (0..len).map(|_| (b'a' + (rng.next_u64() % 26) as u8) as char).collect();
    let _ = write!(out, "say {word} {word} .");
}

/// At least `min_chars` characters of synthetic text, ending on a newline.
pub fn synthetic_text(seed: u64, min_chars: usize) -> String {
    let mut rng = Rng::new(seed);
    let mut out = String::with_capacity(min_chars + 128);
    while out.len() < min_chars {
        let sentences = 1 + (rng.next_u64() % 3) as usize;
        for s in 0..sentences {
            if s > 0 {
                out.push(' ');
            }
            match rng.next_u64() % 10 {
                0..=4 => clause(&mut rng, &mut out),
                5 | 6 => sum(&mut rng, &mut out),
                7 => count(&mut rng, &mut out),
                _ => copy(&mut rng, &mut out),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`, each drawn
/// from its own stream derived from `seed`.
pub fn write_synthetic_corpus(dir: &Path, seed: u64, train_chars: usize, eval_chars: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (k, (name, len)) in [("train.txt", train_chars), ("valid.txt", eval_chars), ("test.txt", eval_chars)]
        .into_iter()
        .enumerate()
    {
        let path = dir.join(name);
        let text = synthetic_text(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)), len);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
