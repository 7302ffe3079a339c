//! Pruned pair/triple/quad count tables, the six QPT features and the
//! quads-in-common rejection test.
//!
//! Tables are dense arrays indexed by the n-gram read as a base-K number, so a
//! feature lookup is one load per window position.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textcore::{Alphabet, Code, Corpus};

pub const DEFAULT_PRUNE_THRESHOLD: u32 = 5;

/// Lengths of the stored n-grams.
pub const ORDERS: [usize; 3] = [2, 3, 4];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramModel {
    alphabet_len: usize,
    prune_threshold: u32,
    // pairs, triples, quads
    tables: [Vec<u32>; 3],
    unigrams: Vec<u64>,
}

fn slot(n: usize) -> usize {
    n - 2
}

fn index_of(gram: &[Code], k: usize) -> usize {
    gram.iter().fold(0, |acc, &c| acc * k + c as usize)
}

fn gram_of(mut index: usize, n: usize, k: usize) -> Vec<Code> {
    let mut out = vec![0; n];
    for c in out.iter_mut().rev() {
        *c = (index % k) as Code;
        index /= k;
    }
    out
}

impl NgramModel {
    pub fn build(corpus: &Corpus, alphabet_len: usize, prune_threshold: u32) -> Result<Self> {
        NgramModel::from_codes(&corpus.codes, alphabet_len, prune_threshold)
    }

    /// Counts every contiguous, non-wrapping 2-, 3- and 4-gram of `codes` and
    /// deletes entries seen `prune_threshold` times or fewer.
    pub fn from_codes(codes: &[Code], alphabet_len: usize, prune_threshold: u32) -> Result<Self> {
        if codes.len() < 4 {
            return Err(Error::CorpusTooSmall { len: codes.len(), min: 4 });
        }
        if codes.len() > u32::MAX as usize {
            return Err(Error::Usage("corpus longer than 2^32 symbols".into()));
        }
        if let Some(&bad) = codes.iter().find(|&&c| c as usize >= alphabet_len) {
            return Err(Error::Alphabet(format!("code {bad} outside an alphabet of {alphabet_len}")));
        }
        let k = alphabet_len;
        let mut tables = [vec![0u32; k.pow(2)], vec![0u32; k.pow(3)], vec![0u32; k.pow(4)]];
        let mut unigrams = vec![0u64; k];
        for &c in codes {
            unigrams[c as usize] += 1;
        }
        for n in ORDERS {
            let table = &mut tables[slot(n)];
            for w in codes.windows(n) {
                table[index_of(w, k)] += 1;
            }
            for count in table.iter_mut() {
                if *count <= prune_threshold {
                    *count = 0;
                }
            }
        }
        Ok(NgramModel {
            alphabet_len,
            prune_threshold,
            tables,
            unigrams,
        })
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn prune_threshold(&self) -> u32 {
        self.prune_threshold
    }

    /// Unpruned symbol counts of the source corpus.
    pub fn unigram_counts(&self) -> &[u64] {
        &self.unigrams
    }

    /// Stored count of `gram`, zero when absent or pruned.
    pub fn count(&self, gram: &[Code]) -> u32 {
        match gram.len() {
            2..=4 if gram.iter().all(|&c| (c as usize) < self.alphabet_len) => {
                self.tables[slot(gram.len())][index_of(gram, self.alphabet_len)]
            }
            _ => 0,
        }
    }

    /// Number of retained entries in table `n`.
    pub fn entries(&self, n: usize) -> usize {
        self.tables[slot(n)].iter().filter(|&&c| c > 0).count()
    }

    fn table_entries(&self, n: usize) -> impl Iterator<Item = (Vec<Code>, u32)> + '_ {
        let k = self.alphabet_len;
        self.tables[slot(n)]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (gram_of(i, n, k), c))
    }

    pub fn qpt_features(&self, seq: &[Code]) -> QptFeatures {
        let k = self.alphabet_len;
        let [pairs, triples, quads] = &self.tables;
        let mut f = QptFeatures::default();
        let len = seq.len();
        for i in 0..len.saturating_sub(1) {
            let p = seq[i] as usize * k + seq[i + 1] as usize;
            let c = pairs[p];
            if c > 0 {
                f.pairnum += 1;
                f.pairscore += c as u64;
            }
            if i + 2 < len {
                let t = p * k + seq[i + 2] as usize;
                let c = triples[t];
                if c > 0 {
                    f.tripnum += 1;
                    f.tripscore += c as u64;
                }
                if i + 3 < len {
                    let c = quads[t * k + seq[i + 3] as usize];
                    if c > 0 {
                        f.quadnum += 1;
                        f.quadscore += c as u64;
                    }
                }
            }
        }
        f
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        let mut out = String::new();
        out.push_str("# gridsieve n-gram model\n");
        let _ = writeln!(out, "alphabet\t{}", alphabet.codepoints());
        let _ = writeln!(out, "prune_threshold\t{}", self.prune_threshold);
        let _ = writeln!(out, "unigram\t{}", self.alphabet_len);
        for (code, count) in self.unigrams.iter().enumerate() {
            let _ = writeln!(out, "{}\t{count}", alphabet.display(code as Code));
        }
        for n in ORDERS {
            let _ = writeln!(out, "table\t{n}\t{}", self.entries(n));
            for (gram, count) in self.table_entries(n) {
                let _ = writeln!(out, "{}\t{count}", alphabet.decode(&gram));
            }
        }
        out
    }

    pub fn parse(text: &str, alphabet: &Alphabet, context: &str) -> Result<Self> {
        let k = alphabet.len();
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| Error::parse(context, 0, format!("missing `{key}` header")))?;
            let mut fields = line.split('\t');
            if fields.next() != Some(key) {
                return Err(Error::parse(context, idx + 1, format!("expected `{key}` header")));
            }
            Ok((idx + 1, fields.map(str::to_owned).collect()))
        };

        let (line, fields) = header("alphabet")?;
        if fields.first().map(String::as_str) != Some(&alphabet.codepoints()) {
            return Err(Error::parse(context, line, "model was built with a different alphabet"));
        }
        let (line, fields) = header("prune_threshold")?;
        let prune_threshold = parse_field::<u32>(fields.first(), context, line)?;
        let (line, fields) = header("unigram")?;
        if parse_field::<usize>(fields.first(), context, line)? != k {
            return Err(Error::parse(context, line, "unigram table size differs from the alphabet"));
        }
        let mut model = NgramModel {
            alphabet_len: k,
            prune_threshold,
            tables: [vec![0; k.pow(2)], vec![0; k.pow(3)], vec![0; k.pow(4)]],
            unigrams: vec![0; k],
        };

        let mut section: Option<(usize, usize)> = None;
        let mut remaining = k;
        let mut seen_tables = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(line) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            if let Some(rest) = line.strip_prefix("table\t") {
                if remaining != 0 {
                    return Err(Error::parse(context, lineno, format!("{remaining} entries missing before this table")));
                }
                let mut f = rest.split('\t');
                let n = parse_field::<usize>(f.next().map(str::to_owned).as_ref(), context, lineno)?;
                if !ORDERS.contains(&n) || seen_tables.contains(&n) {
                    return Err(Error::parse(context, lineno, format!("unexpected table {n}")));
                }
                seen_tables.push(n);
                remaining = parse_field::<usize>(f.next().map(str::to_owned).as_ref(), context, lineno)?;
                section = Some((n, lineno));
                continue;
            }
            let (gram, count) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse(context, lineno, "expected `ngram<TAB>count`"))?;
            if remaining == 0 {
                return Err(Error::parse(context, lineno, "more entries than the header declares"));
            }
            remaining -= 1;
            let codes = alphabet
                .encode_exact(gram)
                .ok_or_else(|| Error::parse(context, lineno, format!("{gram:?} is not in the alphabet")))?;
            match section {
                None => {
                    let [c] = codes[..] else {
                        return Err(Error::parse(context, lineno, "unigram entry must be one symbol"));
                    };
                    model.unigrams[c as usize] = parse_field(Some(&count.to_owned()), context, lineno)?;
                }
                Some((n, _)) => {
                    if codes.len() != n {
                        return Err(Error::parse(context, lineno, format!("{gram:?} is not a {n}-gram")));
                    }
                    let count: u32 = parse_field(Some(&count.to_owned()), context, lineno)?;
                    if count <= prune_threshold {
                        return Err(Error::parse(context, lineno, "count does not exceed the prune threshold"));
                    }
                    model.tables[slot(n)][index_of(&codes, k)] = count;
                }
            }
        }
        if remaining != 0 || seen_tables.len() != ORDERS.len() {
            return Err(Error::parse(context, text.lines().count(), "model file is truncated"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text(alphabet)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NgramModel::parse(&text, alphabet, &path.display().to_string())
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&String>, context: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let field = field.ok_or_else(|| Error::parse(context, line, "missing field"))?;
    field
        .parse()
        .map_err(|e| Error::parse(context, line, format!("{field:?}: {e}")))
}

/// Window counts and summed corpus counts for pairs, triples and quads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QptFeatures {
    pub quadnum: u64,
    pub quadscore: u64,
    pub tripnum: u64,
    pub tripscore: u64,
    pub pairnum: u64,
    pub pairscore: u64,
}

impl QptFeatures {
    pub const NAMES: [&'static str; 6] = ["quadnum", "quadscore", "tripnum", "tripscore", "pairnum", "pairscore"];

    pub fn to_vector(&self) -> [f64; 6] {
        [
            self.quadnum as f64,
            self.quadscore as f64,
            self.tripnum as f64,
            self.tripscore as f64,
            self.pairnum as f64,
            self.pairscore as f64,
        ]
    }
}

/// Distinct 4-grams of a reference text.
#[derive(Debug, Clone)]
pub struct QuadSet {
    alphabet_len: usize,
    bits: Vec<u64>,
    len: usize,
}

fn distinct_quads(seq: &[Code], k: usize) -> Vec<usize> {
    let mut quads: Vec<usize> = seq.windows(4).map(|w| index_of(w, k)).collect();
    quads.sort_unstable();
    quads.dedup();
    quads
}

impl QuadSet {
    pub fn from_seq(seq: &[Code], alphabet_len: usize) -> Self {
        let mut bits = vec![0u64; alphabet_len.pow(4).div_ceil(64)];
        let quads = distinct_quads(seq, alphabet_len);
        for &q in &quads {
            bits[q / 64] |= 1 << (q % 64);
        }
        QuadSet {
            alphabet_len,
            bits,
            len: quads.len(),
        }
    }

    pub fn from_quads<'a>(quads: impl IntoIterator<Item = &'a [Code]>, alphabet_len: usize) -> Self {
        let mut set = QuadSet {
            alphabet_len,
            bits: vec![0u64; alphabet_len.pow(4).div_ceil(64)],
            len: 0,
        };
        for q in quads.into_iter().filter(|q| q.len() == 4) {
            let i = index_of(q, alphabet_len);
            if !set.contains_index(i) {
                set.bits[i / 64] |= 1 << (i % 64);
                set.len += 1;
            }
        }
        set
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, quad: &[Code]) -> bool {
        quad.len() == 4 && self.contains_index(index_of(quad, self.alphabet_len))
    }

    fn contains_index(&self, q: usize) -> bool {
        self.bits.get(q / 64).is_some_and(|w| w >> (q % 64) & 1 == 1)
    }
}

/// Number of distinct 4-grams of `seq` that also occur in `reference`.
pub fn quads_in_common(seq: &[Code], reference: &QuadSet) -> usize {
    distinct_quads(seq, reference.alphabet_len)
        .into_iter()
        .filter(|&q| reference.contains_index(q))
        .count()
}
