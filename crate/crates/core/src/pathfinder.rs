//! The Lehmer minimal-standard generator, control-sequence generation, corpus
//! window sampling and the stochastic word-path features.

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::textcore::{Code, Corpus, Seq};

/// `2^31 − 1`
pub const MODULUS: u32 = 0x7fff_ffff;
pub const MULTIPLIER: u32 = 16_807;

/// Park–Miller minimal standard generator: `x ← 16807·x mod (2^31 − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prng {
    state: u32,
}

impl Prng {
    /// `state` must lie in `[1, 2^31 − 2]`.
    pub fn from_state(state: u32) -> Result<Self> {
        if state == 0 || state >= MODULUS {
            return Err(Error::Usage(format!("PRNG state {state} outside [1, 2^31-2]")));
        }
        Ok(Prng { state })
    }

    /// Maps an arbitrary 64-bit seed onto a valid state.
    pub fn seeded(seed: u64) -> Self {
        Prng {
            state: (splitmix64(seed) % (MODULUS as u64 - 1)) as u32 + 1,
        }
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    #[inline]
    pub fn next_value(&mut self) -> u32 {
        self.state = ((self.state as u64 * MULTIPLIER as u64) % MODULUS as u64) as u32;
        self.state
    }

    /// Next value scaled into the open interval (0, 1).
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        self.next_value() as f64 / MODULUS as f64
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_unit() * n as f64) as usize).min(n - 1)
    }

    /// Derives an independent generator, e.g. one per training model.
    pub fn fork(&mut self) -> Prng {
        let a = self.next_value() as u64;
        let b = self.next_value() as u64;
        Prng::seeded(a << 32 | b)
    }
}

pub fn prng_next(p: Prng) -> (u32, Prng) {
    let mut p = p;
    let v = p.next_value();
    (v, p)
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the codes.
pub fn seq_hash(codes: &[Code]) -> u64 {
    codes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &c| {
        (h ^ c as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Per-symbol probabilities with a precomputed cumulative table.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramDist {
    probs: Vec<f64>,
    cdf: Vec<f64>,
    last_positive: usize,
}

impl UnigramDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("no symbols".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Distribution(format!("probability {p} is not a finite non-negative value")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("probabilities sum to {total}, not 1")));
        }
        let cdf = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Ok(UnigramDist {
            probs,
            cdf,
            last_positive,
        })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Distribution("all counts are zero".into()));
        }
        UnigramDist::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        UnigramDist::new(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn sample(&self, u: f64) -> Code {
        self.cdf.partition_point(|&c| c <= u).min(self.last_positive) as Code
    }
}

/// Draws `len` symbols by inverting the cumulative distribution.
pub fn gen_control(dist: &UnigramDist, len: usize, prng: &mut Prng) -> Seq {
    Seq((0..len).map(|_| dist.sample(prng.next_unit())).collect())
}

/// `count` windows of length `len` at uniformly drawn start offsets.
pub fn sample_windows(corpus: &Corpus, count: usize, len: usize, prng: &mut Prng) -> Result<Vec<Seq>> {
    if len == 0 || corpus.len() < len {
        return Err(Error::CorpusTooSmall { len: corpus.len(), min: len });
    }
    let starts = corpus.len() - len + 1;
    Ok((0..count)
        .map(|_| {
            let s = prng.below(starts);
            Seq(corpus.codes[s..s + len].to_vec())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathConfig {
    pub trials: usize,
    pub attempts_per_trial: usize,
    pub seed: u64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            trials: 1000,
            attempts_per_trial: 1500,
            seed: 0,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.attempts_per_trial == 0 {
            return Err(Error::Usage("path trials and attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathFeatures {
    pub maxpara: u64,
    pub num25: u64,
    pub num45: u64,
    pub num65: u64,
    pub num85: u64,
    pub iterations_to_85: u64,
}

impl PathFeatures {
    pub const NAMES: [&'static str; 6] = ["maxpara", "num25", "num45", "num65", "num85", "iterations_to_85"];

    pub fn to_vector(&self) -> [f64; 6] {
        [
            self.maxpara as f64,
            self.num25 as f64,
            self.num45 as f64,
            self.num65 as f64,
            self.num85 as f64,
            self.iterations_to_85 as f64,
        ]
    }
}

/// Coverage thresholds for a ring of `len`: 25, 45, 65 and 85 out of 85,
/// rounded up, the last one always the full ring.
pub fn path_thresholds(len: usize) -> [usize; 4] {
    let scaled = |t: usize| (len * t).div_ceil(85);
    [scaled(25), scaled(45), scaled(65), len]
}

/// One random walk of abutting words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub start: usize,
    /// Word lengths in the order they were appended.
    pub words: Vec<usize>,
    /// Characters covered, capped at the ring length.
    pub covered: usize,
}

/// Word lengths by start position, flattened.
struct HitIndex {
    offsets: Vec<u32>,
    lengths: Vec<u8>,
}

impl HitIndex {
    fn new(seq: &[Code], lex: &Lexicon) -> Self {
        let mut offsets = Vec::with_capacity(seq.len() + 1);
        let mut lengths = Vec::new();
        offsets.push(0);
        for p in 0..seq.len() {
            lex.for_each_word_at(seq, p, |l| lengths.push(l as u8));
            offsets.push(lengths.len() as u32);
        }
        HitIndex { offsets, lengths }
    }

    #[inline]
    fn at(&self, p: usize) -> &[u8] {
        &self.lengths[self.offsets[p] as usize..self.offsets[p + 1] as usize]
    }
}

fn walk_prng(seq: &[Code], cfg: &PathConfig) -> Prng {
    Prng::seeded(splitmix64(cfg.seed) ^ seq_hash(seq))
}

fn run_walks(seq: &[Code], lex: &Lexicon, cfg: &PathConfig, mut f: impl FnMut(usize, &[u8], usize)) {
    let n = seq.len();
    if n == 0 {
        return;
    }
    let hits = HitIndex::new(seq, lex);
    let mut prng = walk_prng(seq, cfg);
    let mut words = Vec::new();
    for _ in 0..cfg.trials {
        words.clear();
        let start = prng.below(n);
        let mut pos = start;
        let mut covered = 0usize;
        for _ in 0..cfg.attempts_per_trial {
            if covered >= n {
                break;
            }
            let options = hits.at(pos);
            if options.is_empty() {
                break;
            }
            let l = options[prng.below(options.len())];
            words.push(l);
            covered += l as usize;
            pos = (pos + l as usize) % n;
        }
        f(start, &words, covered.min(n));
    }
}

/// Every walk that [`path_features`] takes, for inspection.
pub fn walks(seq: &[Code], lex: &Lexicon, cfg: &PathConfig) -> Vec<Walk> {
    let mut out = Vec::with_capacity(cfg.trials);
    run_walks(seq, lex, cfg, |start, words, covered| {
        out.push(Walk {
            start,
            words: words.iter().map(|&l| l as usize).collect(),
            covered,
        })
    });
    out
}

/// Runs `cfg.trials` random walks over the ring. Each walk starts at a
/// uniform position and repeatedly appends a uniformly chosen word starting
/// exactly where the previous one ended, until no word abuts, the ring is
/// covered, or `attempts_per_trial` steps were taken.
///
/// The walk generator is seeded from `cfg.seed` and the sequence content, so
/// the result depends only on the inputs.
pub fn path_features(seq: &[Code], lex: &Lexicon, cfg: &PathConfig) -> PathFeatures {
    let [t25, t45, t65, t85] = path_thresholds(seq.len());
    let mut f = PathFeatures {
        iterations_to_85: cfg.trials as u64 + 1,
        ..Default::default()
    };
    let mut trial = 0u64;
    run_walks(seq, lex, cfg, |_, _, covered| {
        trial += 1;
        f.maxpara = f.maxpara.max(covered as u64);
        f.num25 += (covered >= t25) as u64;
        f.num45 += (covered >= t45) as u64;
        f.num65 += (covered >= t65) as u64;
        if covered >= t85 {
            f.num85 += 1;
            f.iterations_to_85 = f.iterations_to_85.min(trial);
        }
    });
    f
}
