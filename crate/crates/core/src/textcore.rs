//! Alphabets, symbol sequences, grids and corpus ingestion.
//!
//! Every other module works on small integer symbol codes (`0..K`). The
//! alphabet is the only place that knows about display codepoints and the
//! per-symbol byte values used by [`sequence_id`].

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A symbol code, always `< Alphabet::len()`.
pub type Code = u8;

pub const MIN_ALPHABET: usize = 2;
pub const MAX_ALPHABET: usize = 64;

/// Two 85-symbol sampling windows.
pub const MIN_CORPUS_LEN: usize = 170;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Symbol {
    pub display: char,
    pub byte: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
    lookup: HashMap<char, Code>,
}

impl Alphabet {
    /// Codes are assigned in the order given.
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if !(MIN_ALPHABET..=MAX_ALPHABET).contains(&symbols.len()) {
            return Err(Error::Alphabet(format!(
                "{} symbols, expected {MIN_ALPHABET}..={MAX_ALPHABET}",
                symbols.len()
            )));
        }
        let mut lookup = HashMap::with_capacity(symbols.len());
        for (code, sym) in symbols.iter().enumerate() {
            if lookup.insert(sym.display, code as Code).is_some() {
                return Err(Error::Alphabet(format!(
                    "duplicate codepoint {:?} (U+{:04X})",
                    sym.display, sym.display as u32
                )));
            }
        }
        Ok(Alphabet { symbols, lookup })
    }

    /// Parses the `codepoint<TAB>byte_value` format; `#` starts a comment line.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(cp), Some(byte), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::parse(context, idx + 1, "expected `codepoint<TAB>byte_value`"));
            };
            let mut chars = cp.chars();
            let (Some(display), None) = (chars.next(), chars.next()) else {
                return Err(Error::parse(context, idx + 1, format!("{cp:?} is not a single codepoint")));
            };
            let byte = byte
                .parse::<u8>()
                .map_err(|e| Error::parse(context, idx + 1, format!("byte value {byte:?}: {e}")))?;
            symbols.push(Symbol { display, byte });
        }
        Alphabet::new(symbols)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Alphabet::parse(&text, &path.display().to_string())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn code_of(&self, c: char) -> Option<Code> {
        self.lookup.get(&c).copied()
    }

    pub fn display(&self, code: Code) -> char {
        self.symbols[code as usize].display
    }

    pub fn byte(&self, code: Code) -> u8 {
        self.symbols[code as usize].byte
    }

    /// Maps every known codepoint and silently drops the rest.
    pub fn encode_lossy(&self, text: &str) -> Seq {
        Seq(text.chars().filter_map(|c| self.code_of(c)).collect())
    }

    /// Maps `text` only if every codepoint belongs to the alphabet.
    pub fn encode_exact(&self, text: &str) -> Option<Seq> {
        text.chars().map(|c| self.code_of(c)).collect::<Option<Vec<_>>>().map(Seq)
    }

    pub fn decode(&self, codes: &[Code]) -> String {
        codes.iter().map(|&c| self.display(c)).collect()
    }

    /// All display codepoints in code order.
    pub fn codepoints(&self) -> String {
        self.symbols.iter().map(|s| s.display).collect()
    }

    pub fn check(&self, seq: &[Code]) -> Result<()> {
        match seq.iter().position(|&c| c as usize >= self.len()) {
            None => Ok(()),
            Some(pos) => Err(Error::Alphabet(format!(
                "code {} at position {pos} is outside an alphabet of {}",
                seq[pos],
                self.len()
            ))),
        }
    }
}

/// A sequence of symbol codes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seq(pub Vec<Code>);

impl Seq {
    pub fn into_inner(self) -> Vec<Code> {
        self.0
    }
}

impl Deref for Seq {
    type Target = [Code];

    fn deref(&self) -> &[Code] {
        &self.0
    }
}

impl From<Vec<Code>> for Seq {
    fn from(v: Vec<Code>) -> Self {
        Seq(v)
    }
}

impl From<&[Code]> for Seq {
    fn from(v: &[Code]) -> Self {
        Seq(v.to_vec())
    }
}

/// An `rows × cols` grid of symbol codes stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    rows: usize,
    cols: usize,
    cells: Vec<Code>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, cells: Vec<Code>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("grid dimensions must be positive, got {rows}x{cols}")));
        }
        if rows * cols != cells.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} grid needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        Ok(Grid { rows, cols, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Code] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[Code] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    pub fn flatten(&self) -> Seq {
        Seq(self.cells.clone())
    }

    pub fn into_cells(self) -> Vec<Code> {
        self.cells
    }
}

/// Row-major fill of `seq` into `rows` rows.
pub fn reshape(seq: &[Code], rows: usize) -> Result<Grid> {
    if rows == 0 || seq.is_empty() || !seq.len().is_multiple_of(rows) {
        return Err(Error::Shape(format!(
            "{rows} rows do not divide a sequence of length {}",
            seq.len()
        )));
    }
    Grid::new(rows, seq.len() / rows, seq.to_vec())
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub codes: Seq,
    pub source: String,
}

impl Corpus {
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    /// Symbol counts indexed by code.
    pub fn unigram_counts(&self, alphabet_len: usize) -> Vec<u64> {
        let mut counts = vec![0u64; alphabet_len];
        for &c in self.codes.iter() {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Splits off the tail starting at `at`; both halves must stay large enough.
    pub fn split_at(&self, at: usize) -> Result<(Corpus, Corpus)> {
        let at = at.min(self.len());
        let head = Corpus::from_codes(self.codes[..at].to_vec(), format!("{} [..{at}]", self.source))?;
        let tail = Corpus::from_codes(self.codes[at..].to_vec(), format!("{} [{at}..]", self.source))?;
        Ok((head, tail))
    }

    pub fn from_codes(codes: Vec<Code>, source: impl Into<String>) -> Result<Self> {
        if codes.len() < MIN_CORPUS_LEN {
            return Err(Error::CorpusTooSmall {
                len: codes.len(),
                min: MIN_CORPUS_LEN,
            });
        }
        Ok(Corpus {
            codes: Seq(codes),
            source: source.into(),
        })
    }
}

pub fn ingest_corpus(text: &str, alphabet: &Alphabet, source: impl Into<String>) -> Result<Corpus> {
    Corpus::from_codes(alphabet.encode_lossy(text).0, source)
}

pub fn load_corpus(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ingest_corpus(&text, alphabet, path.display().to_string())
}

/// How adjacent byte values are combined by [`sequence_id_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IdFormula {
    /// `Σ (b_i² + b_{i+1}²)`
    #[default]
    SumOfSquares,
    /// `Σ (b_i + b_{i+1})²`
    SquareOfSum,
}

impl fmt::Display for IdFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdFormula::SumOfSquares => "sum-of-squares",
            IdFormula::SquareOfSum => "square-of-sum",
        })
    }
}

impl FromStr for IdFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum-of-squares" => Ok(IdFormula::SumOfSquares),
            "square-of-sum" => Ok(IdFormula::SquareOfSum),
            other => Err(Error::Usage(format!(
                "unknown id formula {other:?} (expected sum-of-squares or square-of-sum)"
            ))),
        }
    }
}

pub fn sequence_id(seq: &[Code], alphabet: &Alphabet) -> Result<u64> {
    sequence_id_with(seq, alphabet, IdFormula::default())
}

pub fn sequence_id_with(seq: &[Code], alphabet: &Alphabet, formula: IdFormula) -> Result<u64> {
    if seq.len() < 2 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 2 });
    }
    alphabet.check(seq)?;
    Ok(seq
        .windows(2)
        .map(|w| {
            let (a, b) = (alphabet.byte(w[0]) as u64, alphabet.byte(w[1]) as u64);
            match formula {
                IdFormula::SumOfSquares => a * a + b * b,
                IdFormula::SquareOfSum => (a + b) * (a + b),
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn latin() -> Alphabet {
        let text: String = (b'A'..=b'Z').map(|b| format!("{}\t{}\n", b as char, b)).collect();
        Alphabet::parse(&text, "latin").unwrap()
    }

    #[test]
    fn alphabet_codes_follow_file_order() {
        let a = latin();
        assert_eq!(a.len(), 26);
        assert_eq!(a.byte(0), 65);
        assert_eq!(a.code_of('C'), Some(2));
        assert_eq!(a.display(25), 'Z');
    }

    #[test]
    fn alphabet_comments_and_blank_lines() {
        let a = Alphabet::parse("# header\n\nX\t1\n  # indented\nY\t2\n", "t").unwrap();
        assert_eq!(a.codepoints(), "XY");
    }

    #[test]
    fn hebrew_alphabet_has_22_symbols() {
        let heb = "אבגדהוזחטיכלמנסעפצקרשת";
        let text: String = heb.chars().enumerate().map(|(i, c)| format!("{c}\t{}\n", 224 + i)).collect();
        assert_eq!(Alphabet::parse(&text, "heb").unwrap().len(), 22);
    }

    #[test]
    fn alphabet_rejects_duplicates_and_bad_lines() {
        assert!(matches!(Alphabet::parse("A\t1\nA\t2\n", "t"), Err(Error::Alphabet(_))));
        match Alphabet::parse("A\t1\nB\n", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Alphabet::parse("AB\t1\nC\t2\n", "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Alphabet::parse("A\t300\nC\t2\n", "t"), Err(Error::Parse { .. })));
        assert!(matches!(Alphabet::parse("A\t1\n", "t"), Err(Error::Alphabet(_))));
    }

    #[test]
    fn alphabet_rejects_more_than_64() {
        let text: String = (0..65u32).map(|i| format!("{}\t{}\n", char::from_u32(0x100 + i).unwrap(), i)).collect();
        assert!(matches!(Alphabet::parse(&text, "t"), Err(Error::Alphabet(_))));
    }

    #[test]
    fn ingest_drops_unknown_codepoints() {
        let a = latin();
        assert_eq!(a.encode_lossy("AB CD").0, vec![0, 1, 2, 3]);
        let text = "AB CD".repeat(50);
        let corpus = ingest_corpus(&text, &a, "t").unwrap();
        assert_eq!(corpus.len(), 200);
        assert_eq!(&corpus.codes[..4], &[0, 1, 2, 3]);
    }

    #[test]
    fn ingest_empty_is_too_small() {
        assert!(matches!(
            ingest_corpus("", &latin(), "t"),
            Err(Error::CorpusTooSmall { len: 0, .. })
        ));
    }

    #[test]
    fn ingest_keeps_full_length() {
        let text: String = "ABCDEFG".chars().cycle().take(304_805).collect();
        assert_eq!(ingest_corpus(&text, &latin(), "t").unwrap().len(), 304_805);
    }

    #[test]
    fn reshape_row_major() {
        let g = reshape(&[0, 1, 2, 3, 4, 5], 2).unwrap();
        assert_eq!((g.rows(), g.cols()), (2, 3));
        assert_eq!(g.row(0), &[0, 1, 2]);
        assert_eq!(g.row(1), &[3, 4, 5]);
        assert!(matches!(reshape(&[0; 6], 4), Err(Error::Shape(_))));
        let g = reshape(&[0; 85], 5).unwrap();
        assert_eq!((g.rows(), g.cols()), (5, 17));
    }

    #[test]
    fn sequence_id_formulas() {
        let a = Alphabet::new(vec![Symbol { display: 'x', byte: 3 }, Symbol { display: 'y', byte: 4 }]).unwrap();
        assert_eq!(sequence_id(&[0, 1], &a).unwrap(), 25);
        assert_eq!(sequence_id_with(&[0, 1], &a, IdFormula::SquareOfSum).unwrap(), 49);
        assert!(matches!(sequence_id(&[0], &a), Err(Error::SequenceTooShort { .. })));
    }

    #[test]
    fn sequence_id_constant_sequence() {
        let a = Alphabet::new(vec![Symbol { display: 'a', byte: 224 }, Symbol { display: 'b', byte: 1 }]).unwrap();
        // direct summation: 84 adjacent pairs of 224² + 224²
        let expected: u64 = (0..84).map(|_| 224u64 * 224 + 224 * 224).sum();
        assert_eq!(expected, 8_429_568);
        assert_eq!(sequence_id(&[0; 85], &a).unwrap(), expected);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flatten_inverts_reshape(rows in 1usize..8, cols in 1usize..20, seed in any::<u64>()) {
                let cells: Vec<Code> = (0..rows * cols).map(|i| ((seed >> (i % 60)) as u8) % 7).collect();
                let g = reshape(&cells, rows).unwrap();
                prop_assert_eq!(g.flatten().0, cells);
            }

            #[test]
            fn ingest_is_order_preserving_filter(text in "[A-Z a-z0-9]{0,400}") {
                let a = latin();
                let seq = a.encode_lossy(&text);
                let expected: Vec<Code> = text.bytes().filter(u8::is_ascii_uppercase).map(|b| b - b'A').collect();
                prop_assert!(seq.iter().all(|&c| (c as usize) < a.len()));
                prop_assert_eq!(seq.0, expected);
            }
        }
    }
}
