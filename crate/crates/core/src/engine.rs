//! The cascaded search: score every permuted sequence through the QPT, QIC,
//! Word and Path stages, shard the level-1 key space over a worker pool,
//! checkpoint finished shards, and merge the hits into one sorted file.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::ngram::{quads_in_common, NgramModel, QuadSet};
use crate::pathfinder::{gen_control, path_features, seq_hash, PathConfig, Prng, UnigramDist};
use crate::permuter::{KeyPath, KeySpace, KeyTable};
use crate::regressor::{FilterModels, LinearModel};
use crate::textcore::{sequence_id_with, Alphabet, Code, Grid, IdFormula};

pub const MAX_LEVEL: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeConfig {
    pub qpt_threshold: f64,
    /// A sequence passes the QIC stage iff it shares at most this many
    /// distinct quads with the reference text.
    pub qic_max: usize,
    pub word_threshold: f64,
    pub path_threshold: f64,
    pub level: u32,
    pub path: PathConfig,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            qpt_threshold: 0.5,
            qic_max: 5,
            word_threshold: 0.5,
            path_threshold: 0.5,
            level: 2,
            path: PathConfig::default(),
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("qpt", self.qpt_threshold),
            ("word", self.word_threshold),
            ("path", self.path_threshold),
        ] {
            if !t.is_finite() {
                return Err(Error::Usage(format!("{name} threshold {t} is not finite")));
            }
        }
        if !(1..=MAX_LEVEL).contains(&self.level) {
            return Err(Error::Usage(format!("level {} is outside 1..={MAX_LEVEL}", self.level)));
        }
        self.path.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Qpt,
    Qic,
    Word,
    Path,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Qpt, Stage::Qic, Stage::Word, Stage::Path];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Qpt => "qpt",
            Stage::Qic => "qic",
            Stage::Word => "word",
            Stage::Path => "path",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounters {
    pub evaluated: u64,
    /// Rejections per stage, indexed in cascade order.
    pub rejected: [u64; 4],
    pub hits: u64,
}

impl StageCounters {
    pub fn merge(&mut self, other: &StageCounters) {
        self.evaluated += other.evaluated;
        for (a, b) in self.rejected.iter_mut().zip(other.rejected) {
            *a += b;
        }
        self.hits += other.hits;
    }

    pub fn rejected_at(&self, stage: Stage) -> u64 {
        self.rejected[stage as usize]
    }

    /// Sequences that reached `stage` and passed it.
    pub fn passed(&self, stage: Stage) -> u64 {
        let upto = stage as usize;
        self.evaluated - self.rejected[..=upto].iter().sum::<u64>()
    }

    /// Sequences that reached `stage`.
    pub fn reached(&self, stage: Stage) -> u64 {
        self.evaluated - self.rejected[..stage as usize].iter().sum::<u64>()
    }

    pub fn is_conserved(&self) -> bool {
        self.evaluated == self.rejected.iter().sum::<u64>() + self.hits
    }
}

impl fmt::Display for StageCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evaluated={}", self.evaluated)?;
        for s in Stage::ALL {
            write!(f, " rejected_{}={}", s.name(), self.rejected_at(s))?;
        }
        write!(f, " hits={}", self.hits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub qptscore: f64,
    pub qic: usize,
    pub wordscore: f64,
    pub pathscore: f64,
}

/// Everything the four stages need, shared read-only by all workers.
#[derive(Debug, Clone, Copy)]
pub struct Cascade<'a> {
    pub models: &'a FilterModels,
    pub ngram: &'a NgramModel,
    pub lexicon: &'a Lexicon,
    /// Quads of the source text; `None` disables the QIC stage.
    pub reference: Option<&'a QuadSet>,
    pub cfg: CascadeConfig,
}

impl<'a> Cascade<'a> {
    pub fn new(
        models: &'a FilterModels,
        ngram: &'a NgramModel,
        lexicon: &'a Lexicon,
        reference: Option<&'a QuadSet>,
        cfg: CascadeConfig,
    ) -> Result<Self> {
        models.validate()?;
        cfg.validate()?;
        Ok(Cascade {
            models,
            ngram,
            lexicon,
            reference,
            cfg,
        })
    }

    pub fn qpt_score(&self, seq: &[Code]) -> f64 {
        self.models.qpt.score_unchecked(&self.ngram.qpt_features(seq).to_vector())
    }

    pub fn qic(&self, seq: &[Code]) -> usize {
        self.reference.map_or(0, |r| quads_in_common(seq, r))
    }

    pub fn word_score(&self, seq: &[Code]) -> f64 {
        self.models.word.score_unchecked(&self.lexicon.word_features(seq).to_vector())
    }

    pub fn path_score(&self, seq: &[Code]) -> f64 {
        self.models
            .path
            .score_unchecked(&path_features(seq, self.lexicon, &self.cfg.path).to_vector())
    }

    /// All four scores without short-circuiting.
    pub fn score_all(&self, seq: &[Code]) -> Scores {
        Scores {
            qptscore: self.qpt_score(seq),
            qic: self.qic(seq),
            wordscore: self.word_score(seq),
            pathscore: self.path_score(seq),
        }
    }

    /// Runs the stages in order QPT, QIC, Word, Path and stops at the first
    /// rejection. Returns the scores of a hit.
    pub fn evaluate(&self, seq: &[Code], counters: &mut StageCounters) -> Option<Scores> {
        counters.evaluated += 1;
        let cfg = &self.cfg;
        let reject = |counters: &mut StageCounters, stage: Stage| {
            counters.rejected[stage as usize] += 1;
            None
        };
        let qptscore = self.qpt_score(seq);
        if !passes(qptscore, cfg.qpt_threshold) {
            return reject(counters, Stage::Qpt);
        }
        let qic = self.qic(seq);
        if qic > cfg.qic_max {
            return reject(counters, Stage::Qic);
        }
        let wordscore = self.word_score(seq);
        if !passes(wordscore, cfg.word_threshold) {
            return reject(counters, Stage::Word);
        }
        let pathscore = self.path_score(seq);
        if !passes(pathscore, cfg.path_threshold) {
            return reject(counters, Stage::Path);
        }
        counters.hits += 1;
        Some(Scores {
            qptscore,
            qic,
            wordscore,
            pathscore,
        })
    }
}

pub fn evaluate_sequence(seq: &[Code], cascade: &Cascade<'_>, counters: &mut StageCounters) -> Option<Scores> {
    cascade.evaluate(seq, counters)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub level1: u64,
    pub level2: Option<u64>,
    pub key_path: KeyPath,
    pub sequence: String,
    pub sequence_id: u64,
    pub scores: Scores,
}

impl HitRecord {
    pub const COLUMNS: [&'static str; 9] = [
        "level1",
        "level2",
        "key_path",
        "sequence_id",
        "qic",
        "qptscore",
        "wordscore",
        "pathscore",
        "sequence",
    ];

    pub fn to_line(&self) -> String {
        let level2 = self.level2.map_or_else(|| "-".to_owned(), |o| o.to_string());
        format!(
            "{}\t{level2}\t{}\t{}\t{}\t{:.8e}\t{:.8e}\t{:.8e}\t{}",
            self.level1,
            self.key_path,
            self.sequence_id,
            self.scores.qic,
            self.scores.qptscore,
            self.scores.wordscore,
            self.scores.pathscore,
            self.sequence
        )
    }
}

/// Sort key of a hit line: its level-1 and level-2 ordinals.
fn line_order(line: &str) -> (u64, Option<u64>) {
    let mut fields = line.split('\t');
    let level1 = fields.next().and_then(|f| f.parse().ok()).unwrap_or(u64::MAX);
    let level2 = fields.next().and_then(|f| f.parse().ok());
    (level1, level2)
}

/// A contiguous range `[lo, hi)` of level-1 ordinals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    pub index: usize,
    pub lo: u64,
    pub hi: u64,
}

impl Shard {
    pub fn len(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardPlan {
    lo: u64,
    hi: u64,
    shards: Vec<Shard>,
}

impl ShardPlan {
    /// Splits `[lo, hi)` into consecutive shards of `shard_size` ordinals.
    pub fn new(lo: u64, hi: u64, shard_size: u64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Usage(format!("empty shard range {lo}:{hi}")));
        }
        if shard_size == 0 {
            return Err(Error::Usage("shard size must be positive".into()));
        }
        let shards = (lo..hi)
            .step_by(shard_size as usize)
            .enumerate()
            .map(|(index, start)| Shard {
                index,
                lo: start,
                hi: (start + shard_size).min(hi),
            })
            .collect();
        Ok(ShardPlan { lo, hi, shards })
    }

    /// Parses `lo:hi`.
    pub fn parse_range(text: &str) -> Result<(u64, u64)> {
        let bad = || Error::Usage(format!("shard range {text:?} is not lo:hi"));
        let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
        Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn range(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }

    pub fn ordinals(&self) -> u64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct SearchPlan {
    pub shards: ShardPlan,
    pub workers: usize,
    /// Final hit file. The checkpoint and per-shard part files live beside it.
    pub out: PathBuf,
    pub id_formula: IdFormula,
    /// Finish this many shards in this run and return without merging.
    pub stop_after: Option<usize>,
    /// Extra `# ` header lines for the hit file, such as input paths.
    pub notes: Vec<String>,
}

impl SearchPlan {
    pub fn new(shards: ShardPlan, workers: usize, out: impl Into<PathBuf>) -> Self {
        SearchPlan {
            shards,
            workers,
            out: out.into(),
            id_formula: IdFormula::default(),
            stop_after: None,
            notes: Vec::new(),
        }
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        sibling(&self.out, ".checkpoint")
    }

    pub fn parts_dir(&self) -> PathBuf {
        sibling(&self.out, ".parts")
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSummary {
    /// Counters for the shards evaluated in this run.
    pub counters: StageCounters,
    pub shards_total: usize,
    pub shards_resumed: usize,
    pub shards_run: usize,
    pub complete: bool,
    /// Lines in the final hit file, when complete.
    pub hits_written: Option<usize>,
    pub seconds: f64,
}

impl SearchSummary {
    pub fn throughput(&self) -> f64 {
        if self.seconds > 0.0 {
            self.counters.evaluated as f64 / self.seconds
        } else {
            0.0
        }
    }
}

impl fmt::Display for SearchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "shards: total={} resumed={} run={} complete={}",
            self.shards_total, self.shards_resumed, self.shards_run, self.complete
        )?;
        writeln!(f, "counters: {}", self.counters)?;
        if let Some(h) = self.hits_written {
            writeln!(f, "hits_written: {h}")?;
        }
        write!(f, "seconds: {:.3} throughput: {:.0}/s", self.seconds, self.throughput())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShardStatus {
    Pending,
    Done(usize),
}

fn header_lines(grid: &Grid, cascade: &Cascade<'_>, plan: &SearchPlan) -> Vec<String> {
    let c = &cascade.cfg;
    let (lo, hi) = plan.shards.range();
    let mut lines = vec![
        format!("grid={}x{}", grid.rows(), grid.cols()),
        format!("level={}", c.level),
        format!("shards={lo}:{hi}"),
        format!("shard_count={}", plan.shards.shards().len()),
        format!("qpt_threshold={:e}", c.qpt_threshold),
        format!("qic_max={}", c.qic_max),
        format!("qic_reference={}", if cascade.reference.is_some() { "source" } else { "disabled" }),
        format!("word_threshold={:e}", c.word_threshold),
        format!("path_threshold={:e}", c.path_threshold),
        format!("path_trials={}", c.path.trials),
        format!("path_attempts={}", c.path.attempts_per_trial),
        format!("seed={}", c.path.seed),
        format!("id_formula={}", plan.id_formula),
        format!("source_hash={:016x}", seq_hash(grid.cells())),
    ];
    lines.extend(plan.notes.iter().cloned());
    lines
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = sibling(path, ".tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Checkpoint {
    path: PathBuf,
    fingerprint: u64,
    status: Vec<ShardStatus>,
}

impl Checkpoint {
    fn open(path: PathBuf, fingerprint: u64, plan: &ShardPlan) -> Result<Self> {
        let mut cp = Checkpoint {
            path,
            fingerprint,
            status: vec![ShardStatus::Pending; plan.shards().len()],
        };
        let text = match fs::read_to_string(&cp.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cp),
            Err(e) => return Err(Error::io(&cp.path, e)),
        };
        let shown = cp.path.display().to_string();
        let corrupt = |msg: String| Error::Checkpoint(format!("{shown}: {msg}"));
        let mut seen_fingerprint = false;
        let mut rows = 0;
        for line in text.lines() {
            if let Some(fp) = line.strip_prefix("# config ") {
                if u64::from_str_radix(fp.trim(), 16).ok() != Some(fingerprint) {
                    return Err(corrupt("written for a different search configuration".into()));
                }
                seen_fingerprint = true;
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let parsed = match f[..] {
                [i, lo, hi, state, hits] => (|| {
                    let i: usize = i.parse().ok()?;
                    let lo: u64 = lo.parse().ok()?;
                    let hi: u64 = hi.parse().ok()?;
                    let hits: usize = hits.parse().ok()?;
                    let status = match state {
                        "done" => ShardStatus::Done(hits),
                        "pending" => ShardStatus::Pending,
                        _ => return None,
                    };
                    Some((i, lo, hi, status))
                })(),
                _ => None,
            };
            let (i, lo, hi, status) = parsed.ok_or_else(|| corrupt(format!("bad line {line:?}")))?;
            match plan.shards().get(i) {
                Some(s) if s.lo == lo && s.hi == hi => cp.status[i] = status,
                _ => return Err(corrupt(format!("shard {i} [{lo},{hi}) is not in the plan"))),
            }
            rows += 1;
        }
        if !seen_fingerprint || rows != plan.shards().len() {
            return Err(corrupt("incomplete".into()));
        }
        Ok(cp)
    }

    fn save(&self, plan: &ShardPlan) -> Result<()> {
        let mut out = String::from("# gridsieve checkpoint: shard lo hi state hits\n");
        let _ = writeln!(out, "# config {:016x}", self.fingerprint);
        for (s, st) in plan.shards().iter().zip(&self.status) {
            let (state, hits) = match st {
                ShardStatus::Done(h) => ("done", *h),
                ShardStatus::Pending => ("pending", 0),
            };
            let _ = writeln!(out, "{} {} {} {state} {hits}", s.index, s.lo, s.hi);
        }
        write_atomic(&self.path, &out)
    }
}

fn part_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("shard-{index:06}.tsv"))
}

/// Strict comparison; NaN scores never pass.
fn passes(score: f64, threshold: f64) -> bool {
    score > threshold
}

/// Evaluates one shard and returns its hit lines in ordinal order.
#[allow(clippy::too_many_arguments)]
fn run_shard(
    shard: &Shard,
    cascade: &Cascade<'_>,
    table: &KeyTable,
    space: &KeySpace,
    grid: &Grid,
    alphabet: &Alphabet,
    id_formula: IdFormula,
    counters: &mut StageCounters,
) -> Result<Vec<String>> {
    let len = grid.len();
    let mut first = vec![0 as Code; len];
    let mut second = vec![0 as Code; len];
    let mut lines = Vec::new();
    let mut emit = |o1: u64, o2: Option<u64>, seq: &[Code], scores: Scores| -> Result<()> {
        let mut keys = vec![space.key_at(o1).expect("ordinal in range")];
        if let Some(o2) = o2 {
            keys.push(space.key_at(o2).expect("ordinal in range"));
        }
        let record = HitRecord {
            level1: o1,
            level2: o2,
            key_path: KeyPath::new(keys)?,
            sequence: alphabet.decode(seq),
            sequence_id: sequence_id_with(seq, alphabet, id_formula)?,
            scores,
        };
        lines.push(record.to_line());
        Ok(())
    };
    for o1 in shard.lo..shard.hi {
        table.apply_into(o1 as usize, grid.cells(), &mut first);
        if cascade.cfg.level == 1 {
            if let Some(scores) = cascade.evaluate(&first, counters) {
                emit(o1, None, &first, scores)?;
            }
            continue;
        }
        for o2 in 0..table.len() {
            table.apply_into(o2, &first, &mut second);
            if let Some(scores) = cascade.evaluate(&second, counters) {
                emit(o1, Some(o2 as u64), &second, scores)?;
            }
        }
    }
    Ok(lines)
}

/// Searches the level-1 ordinals of `plan` (and, at level 2, every level-2
/// key under each), writing hits to `plan.out`.
///
/// Finished shards are recorded in a checkpoint beside the output, so a run
/// that stops early resumes where it left off. The merged file is sorted by
/// ordinal and does not depend on the worker count.
pub fn run_search(grid: &Grid, alphabet: &Alphabet, cascade: &Cascade<'_>, plan: &SearchPlan) -> Result<SearchSummary> {
    let started = Instant::now();
    cascade.cfg.validate()?;
    cascade.models.validate()?;
    if plan.workers == 0 {
        return Err(Error::Usage("at least one worker is required".into()));
    }
    alphabet.check(grid.cells())?;
    let space = KeySpace::new(grid.rows(), grid.cols())?;
    let (_, hi) = plan.shards.range();
    if hi > space.size() {
        return Err(Error::Usage(format!(
            "shard range ends at {hi} but the key space has {} keys",
            space.size()
        )));
    }
    let table = KeyTable::new(&space)?;

    let header = header_lines(grid, cascade, plan);
    let fingerprint = seq_hash(header.join("\n").as_bytes());
    let mut checkpoint = Checkpoint::open(plan.checkpoint_path(), fingerprint, &plan.shards)?;
    checkpoint.save(&plan.shards)?;
    let parts = plan.parts_dir();
    fs::create_dir_all(&parts).map_err(|e| Error::io(&parts, e))?;

    let pending: Vec<Shard> = plan
        .shards
        .shards()
        .iter()
        .filter(|s| checkpoint.status[s.index] == ShardStatus::Pending)
        .copied()
        .collect();
    let shards_resumed = plan.shards.shards().len() - pending.len();
    let budget = plan.stop_after.unwrap_or(usize::MAX).min(pending.len());

    let next = AtomicUsize::new(0);
    let mut counters = StageCounters::default();
    let mut shards_run = 0;
    let mut failure = None;
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Result<(usize, usize, StageCounters)>>();
        for _ in 0..plan.workers.min(budget.max(1)) {
            let tx = tx.clone();
            let (next, pending, table, space, parts) = (&next, &pending, &table, &space, &parts);
            scope.spawn(move || loop {
                let claimed = next.fetch_add(1, Ordering::Relaxed);
                if claimed >= budget {
                    break;
                }
                let shard = pending[claimed];
                let mut local = StageCounters::default();
                let result = run_shard(&shard, cascade, table, space, grid, alphabet, plan.id_formula, &mut local)
                    .and_then(|lines| {
                        let mut body = lines.join("\n");
                        if !body.is_empty() {
                            body.push('\n');
                        }
                        write_atomic(&part_path(parts, shard.index), &body)?;
                        Ok((shard.index, lines.len(), local))
                    });
                let failed = result.is_err();
                if tx.send(result).is_err() || failed {
                    // stop handing out work once anything fails
                    next.store(usize::MAX / 2, Ordering::Relaxed);
                    break;
                }
            });
        }
        drop(tx);
        for msg in rx {
            match msg {
                Ok((index, hits, local)) => {
                    counters.merge(&local);
                    checkpoint.status[index] = ShardStatus::Done(hits);
                    shards_run += 1;
                    if let Err(e) = checkpoint.save(&plan.shards) {
                        failure.get_or_insert(e);
                        next.store(usize::MAX / 2, Ordering::Relaxed);
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let complete = checkpoint.status.iter().all(|s| *s != ShardStatus::Pending);
    let hits_written = if complete {
        Some(merge_parts(plan, &parts, &header, &checkpoint)?)
    } else {
        None
    };
    Ok(SearchSummary {
        counters,
        shards_total: plan.shards.shards().len(),
        shards_resumed,
        shards_run,
        complete,
        hits_written,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn merge_parts(plan: &SearchPlan, parts: &Path, header: &[String], checkpoint: &Checkpoint) -> Result<usize> {
    let mut lines = Vec::new();
    for (shard, status) in plan.shards.shards().iter().zip(&checkpoint.status) {
        let path = part_path(parts, shard.index);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let before = lines.len();
        lines.extend(text.lines().map(str::to_owned));
        if *status != ShardStatus::Done(lines.len() - before) {
            return Err(Error::Checkpoint(format!(
                "{} does not hold the hit count recorded for shard {}",
                path.display(),
                shard.index
            )));
        }
    }
    lines.sort_by_key(|l| line_order(l));
    let mut out = String::from("# gridsieve hits\n");
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "{}", HitRecord::COLUMNS.join("\t"));
    for l in &lines {
        out.push_str(l);
        out.push('\n');
    }
    write_atomic(&plan.out, &out)?;
    Ok(lines.len())
}

/// A binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub lower: f64,
    pub upper: f64,
}

impl Rate {
    const Z95: f64 = 1.959_963_984_540_054;

    pub fn wilson(successes: u64, trials: u64) -> Option<Rate> {
        if trials == 0 || successes > trials {
            return None;
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Self::Z95 * Self::Z95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Self::Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Some(Rate {
            successes,
            trials,
            lower: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            upper: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
        })
    }

    pub fn value(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} = {:.3e} [{:.3e}, {:.3e}]",
            self.successes,
            self.trials,
            self.value(),
            self.lower,
            self.upper
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlReport {
    pub counters: StageCounters,
    /// Cumulative pass rate after each stage, as a fraction of all controls.
    pub cumulative: Vec<(Stage, Rate)>,
}

impl ControlReport {
    pub fn is_empty(&self) -> bool {
        self.counters.evaluated == 0
    }

    pub fn rate(&self, stage: Stage) -> Option<Rate> {
        self.cumulative.iter().find(|(s, _)| *s == stage).map(|&(_, r)| r)
    }
}

impl fmt::Display for ControlReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "controls: {}", self.counters.evaluated)?;
        for (stage, rate) in &self.cumulative {
            writeln!(f, "pass_through_{}: {rate}", stage.name())?;
        }
        write!(f, "counters: {}", self.counters)
    }
}

/// Generates `n` control sequences of length `len` from `dist` and runs them
/// through the cascade.
pub fn calibrate_controls(cascade: &Cascade<'_>, dist: &UnigramDist, n: u64, len: usize, seed: u64) -> ControlReport {
    let mut prng = Prng::seeded(seed);
    let mut counters = StageCounters::default();
    for _ in 0..n {
        let seq = gen_control(dist, len, &mut prng);
        cascade.evaluate(&seq, &mut counters);
    }
    let cumulative = Stage::ALL
        .iter()
        .filter_map(|&s| Rate::wilson(counters.passed(s), n).map(|r| (s, r)))
        .collect();
    ControlReport { counters, cumulative }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub sequences: u64,
    pub seconds: f64,
    pub passed: u64,
}

impl Benchmark {
    pub fn per_second(&self) -> f64 {
        self.sequences as f64 / self.seconds
    }
}

/// Single-threaded QPT stage timing: feature extraction plus scoring on
/// `count` sequences of length `len`, cycled from a pool of controls.
pub fn benchmark_qpt(
    ngram: &NgramModel,
    model: &LinearModel,
    threshold: f64,
    dist: &UnigramDist,
    len: usize,
    count: u64,
    seed: u64,
) -> Benchmark {
    let mut prng = Prng::seeded(seed);
    let pool: Vec<_> = (0..1024).map(|_| gen_control(dist, len, &mut prng)).collect();
    let started = Instant::now();
    let mut passed = 0;
    for i in 0..count {
        let seq = std::hint::black_box(&pool[(i % pool.len() as u64) as usize]);
        let score = model.score_unchecked(&ngram.qpt_features(seq).to_vector());
        passed += (score > threshold) as u64;
    }
    Benchmark {
        sequences: count,
        seconds: started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE),
        passed: std::hint::black_box(passed),
    }
}
