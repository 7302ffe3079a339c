//! Word list with a prefix trie, and the ring-coverage word features.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textcore::{Alphabet, Code};

pub const DEFAULT_MIN_WORD_LEN: usize = 2;
pub const DEFAULT_MAX_WORD_LEN: usize = 11;

#[derive(Debug, Clone, Default)]
struct Node {
    children: Vec<(Code, u32)>,
    terminal: bool,
}

impl Node {
    fn child(&self, c: Code) -> Option<u32> {
        self.children.iter().find(|(k, _)| *k == c).map(|&(_, i)| i)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: usize,
    pub dropped_length: usize,
    pub dropped_symbols: usize,
    pub duplicates: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.dropped_length + self.dropped_symbols
    }
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    min_len: usize,
    max_len: usize,
    words: BTreeSet<Vec<Code>>,
    nodes: Vec<Node>,
}

impl Lexicon {
    /// Builds a lexicon from already-encoded words. Words outside
    /// `[min_len, max_len]` are dropped and counted in the report.
    pub fn new(words: impl IntoIterator<Item = Vec<Code>>, min_len: usize, max_len: usize) -> (Self, LoadReport) {
        let mut report = LoadReport::default();
        let mut lex = Lexicon {
            min_len,
            max_len,
            words: BTreeSet::new(),
            nodes: vec![Node::default()],
        };
        for w in words {
            if !(min_len..=max_len).contains(&w.len()) {
                report.dropped_length += 1;
            } else if lex.insert(w) {
                report.loaded += 1;
            } else {
                report.duplicates += 1;
            }
        }
        (lex, report)
    }

    fn insert(&mut self, word: Vec<Code>) -> bool {
        let mut node = 0usize;
        for &c in &word {
            node = match self.nodes[node].child(c) {
                Some(next) => next as usize,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.push((c, next as u32));
                    next
                }
            };
        }
        self.nodes[node].terminal = true;
        self.words.insert(word)
    }

    /// One word per line; words with symbols outside the alphabet are dropped.
    pub fn parse(text: &str, alphabet: &Alphabet, min_len: usize, max_len: usize) -> Result<(Self, LoadReport)> {
        let mut dropped_symbols = 0;
        let words: Vec<Vec<Code>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .filter_map(|l| match alphabet.encode_exact(l) {
                Some(seq) => Some(seq.into_inner()),
                None => {
                    dropped_symbols += 1;
                    None
                }
            })
            .collect();
        let (lex, mut report) = Lexicon::new(words, min_len, max_len);
        report.dropped_symbols = dropped_symbols;
        if lex.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        Ok((lex, report))
    }

    pub fn load(path: impl AsRef<Path>, alphabet: &Alphabet, min_len: usize) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text, alphabet, min_len, DEFAULT_MAX_WORD_LEN)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn min_len(&self) -> usize {
        self.min_len
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn contains(&self, word: &[Code]) -> bool {
        self.words.contains(word)
    }

    /// Calls `f(len)` for every word starting at `pos` of the ring `seq`, in
    /// increasing length. Words longer than the ring are never matched.
    #[inline]
    pub fn for_each_word_at(&self, seq: &[Code], pos: usize, mut f: impl FnMut(usize)) {
        let n = seq.len();
        let limit = self.max_len.min(n);
        let mut node = 0usize;
        let mut idx = pos;
        for len in 1..=limit {
            match self.nodes[node].child(seq[idx]) {
                Some(next) => node = next as usize,
                None => return,
            }
            if self.nodes[node].terminal && len >= self.min_len {
                f(len);
            }
            idx += 1;
            if idx == n {
                idx = 0;
            }
        }
    }

    /// Lengths of the words starting at `pos`, reading round the ring.
    pub fn words_at(&self, seq: &[Code], pos: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if pos < seq.len() {
            self.for_each_word_at(seq, pos, |l| out.push(l));
        }
        out
    }

    /// All `(start, length)` word hits on the ring.
    pub fn ring_hits(&self, seq: &[Code]) -> Vec<(usize, usize)> {
        let mut hits = Vec::new();
        for p in 0..seq.len() {
            self.for_each_word_at(seq, p, |l| hits.push((p, l)));
        }
        hits
    }

    pub fn word_features(&self, seq: &[Code]) -> WordFeatures {
        let n = seq.len();
        if n == 0 {
            return WordFeatures::default();
        }
        // difference array over two laps, folded back onto one
        let mut diff = vec![0i64; 2 * n + 1];
        let mut wordnum = 0u64;
        for p in 0..n {
            self.for_each_word_at(seq, p, |l| {
                wordnum += 1;
                diff[p] += 1;
                diff[p + l] -= 1;
            });
        }
        let mut span = vec![0u64; n];
        let mut running = 0i64;
        for (i, d) in diff.iter().take(2 * n).enumerate() {
            running += d;
            span[i % n] += running as u64;
        }
        WordFeatures {
            wordnum,
            maxspan: span.iter().copied().max().unwrap_or(0),
            minspan: span.iter().copied().min().unwrap_or(0),
            unspan: span.iter().filter(|&&s| s == 0).count() as u64,
            totspan: span.iter().sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordFeatures {
    pub wordnum: u64,
    pub maxspan: u64,
    pub minspan: u64,
    pub unspan: u64,
    pub totspan: u64,
}

impl WordFeatures {
    pub const NAMES: [&'static str; 5] = ["maxspan", "minspan", "totspan", "unspan", "wordnum"];

    pub fn to_vector(&self) -> [f64; 5] {
        [
            self.maxspan as f64,
            self.minspan as f64,
            self.totspan as f64,
            self.unspan as f64,
            self.wordnum as f64,
        ]
    }
}
