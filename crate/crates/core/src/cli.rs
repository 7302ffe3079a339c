//! Command-line front end. Every command prints its effective configuration
//! as `# key=value` lines before any results.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{
    benchmark_qpt, calibrate_controls, run_search, Cascade, CascadeConfig, SearchPlan, ShardPlan, Stage,
};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, DEFAULT_MIN_WORD_LEN};
use crate::ngram::{NgramModel, QuadSet, DEFAULT_PRUNE_THRESHOLD};
use crate::pathfinder::{path_features, PathConfig, UnigramDist};
use crate::permuter::{replay, replay_inverse, KeyPath, KeySpace};
use crate::regressor::{train_filter_models, FilterModels, TrainingConfig, DEFAULT_RIDGE};
use crate::textcore::{load_corpus, reshape, sequence_id_with, Alphabet, Grid, IdFormula, Seq};

pub const NGRAM_FILE: &str = "ngram.model";
pub const UNIGRAM_FILE: &str = "unigram.tsv";

#[derive(Debug, Parser)]
#[command(name = "gridsieve", version, about = "Grid permutation search with a trainable readability cascade")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count n-grams of a corpus and write the model and letter distribution.
    Build(BuildArgs),
    /// Fit the QPT, Word and Path score equations.
    Train(TrainArgs),
    /// Search the key space of a grid through the cascade.
    Search(SearchArgs),
    /// Apply a recorded key path to a grid of any width.
    Replay(ReplayArgs),
    /// Print all stage scores of one sequence.
    Score(ScoreArgs),
    /// Measure cascade pass rates on generated control sequences.
    Controls(ControlsArgs),
    /// Print the identifier of a sequence.
    Id(IdArgs),
    /// Time the QPT stage on a single core.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct AlphabetArg {
    /// Alphabet file: one `symbol<TAB>byte` per line.
    #[arg(long)]
    pub alphabet: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[arg(long, default_value_t = PathConfig::default().trials)]
    pub path_trials: usize,
    #[arg(long, default_value_t = PathConfig::default().attempts_per_trial)]
    pub path_attempts: usize,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// N-gram model written by `build`.
    #[arg(long)]
    pub ngram: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_WORD_LEN)]
    pub min_word_len: usize,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.5)]
    pub qpt_threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub qic_max: usize,
    #[arg(long, default_value_t = 0.5)]
    pub word_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub path_threshold: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Counts at or below this value are dropped.
    #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
    pub prune: u32,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub ngram: PathBuf,
    /// Output directory for the three model files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub positives: usize,
    #[arg(long, default_value_t = 3000)]
    pub negatives: usize,
    #[arg(long, default_value_t = 85)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_WORD_LEN)]
    pub min_word_len: usize,
    #[command(flatten)]
    pub path: PathArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Text holding the source grid.
    #[arg(long)]
    pub source: PathBuf,
    /// Symbol offset of the grid within the source text.
    #[arg(long, default_value_t = 0)]
    pub offset: usize,
    #[arg(long, default_value_t = 5)]
    pub rows: usize,
    #[arg(long, default_value_t = 17)]
    pub cols: usize,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long, default_value_t = 2)]
    pub level: u32,
    /// Level-1 ordinal range `lo:hi`; defaults to the whole key space.
    #[arg(long)]
    pub shards: Option<String>,
    /// Level-1 ordinals per shard; defaults to 1 at level 2 and 1024 at level 1.
    #[arg(long)]
    pub shard_size: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Skip the quads-in-common stage.
    #[arg(long)]
    pub no_qic: bool,
    #[arg(long, default_value_t = IdFormula::default())]
    pub id_formula: IdFormula,
    /// Return after finishing this many shards; rerun to resume.
    #[arg(long)]
    pub stop_after: Option<usize>,
    #[command(flatten)]
    pub path: PathArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    /// Key path file: one `rank,mask,skip` key per line.
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub rows: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Undo the key path instead of applying it.
    #[arg(long)]
    pub inverse: bool,
}

#[derive(Debug, Args)]
pub struct SequenceInput {
    /// The sequence itself.
    #[arg(long, conflicts_with = "input")]
    pub sequence: Option<String>,
    /// File holding the sequence.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub sequence: SequenceInput,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Source text for the QIC stage; QIC is reported as 0 without it.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub path: PathArgs,
}

#[derive(Debug, Args)]
pub struct ControlsArgs {
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    #[arg(long, default_value_t = 85)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw controls from this corpus's letter distribution instead of the
    /// n-gram model's.
    #[arg(long, conflicts_with = "uniform")]
    pub distribution_corpus: Option<PathBuf>,
    /// Draw controls uniformly over the alphabet.
    #[arg(long)]
    pub uniform: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub path: PathArgs,
}

#[derive(Debug, Args)]
pub struct IdArgs {
    #[command(flatten)]
    pub sequence: SequenceInput,
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[arg(long, default_value_t = IdFormula::default())]
    pub formula: IdFormula,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub alphabet: AlphabetArg,
    #[arg(long)]
    pub ngram: PathBuf,
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value_t = 2_000_000)]
    pub count: u64,
    #[arg(long, default_value_t = 85)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name), runs the command, writes its
/// report to `out` and errors to `err`, and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let mut report = String::new();
    let result = run(&cli.command, &mut report);
    let _ = out.write_all(report.as_bytes());
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command, out: &mut String) -> Result<()> {
    match command {
        Command::Build(a) => cmd_build(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Search(a) => cmd_search(a, out),
        Command::Replay(a) => cmd_replay(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Controls(a) => cmd_controls(a, out),
        Command::Id(a) => cmd_id(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

fn echo(out: &mut String, command: &str, config: &[(&str, String)]) {
    let _ = writeln!(out, "# gridsieve {command}");
    for (k, v) in config {
        let _ = writeln!(out, "# {k}={v}");
    }
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn shown_opt(p: &Option<PathBuf>) -> String {
    p.as_deref().map_or_else(|| "none".into(), shown)
}

fn path_config(a: &PathArgs, seed: u64) -> PathConfig {
    PathConfig {
        trials: a.path_trials,
        attempts_per_trial: a.path_attempts,
        seed,
    }
}

fn path_echo(a: &PathArgs) -> [(&'static str, String); 2] {
    [
        ("path_trials", a.path_trials.to_string()),
        ("path_attempts", a.path_attempts.to_string()),
    ]
}

fn threshold_echo(t: &ThresholdArgs) -> [(&'static str, String); 4] {
    [
        ("qpt_threshold", t.qpt_threshold.to_string()),
        ("qic_max", t.qic_max.to_string()),
        ("word_threshold", t.word_threshold.to_string()),
        ("path_threshold", t.path_threshold.to_string()),
    ]
}

fn model_echo(m: &ModelArgs) -> [(&'static str, String); 4] {
    [
        ("ngram", shown(&m.ngram)),
        ("lexicon", shown(&m.lexicon)),
        ("models", shown(&m.models)),
        ("min_word_len", m.min_word_len.to_string()),
    ]
}

struct Loaded {
    ngram: NgramModel,
    lexicon: Lexicon,
    models: FilterModels,
}

fn load_models(m: &ModelArgs, alphabet: &Alphabet) -> Result<Loaded> {
    Ok(Loaded {
        ngram: NgramModel::load(&m.ngram, alphabet)?,
        lexicon: Lexicon::load(&m.lexicon, alphabet, m.min_word_len)?.0,
        models: FilterModels::load(&m.models)?,
    })
}

fn read_sequence(input: &SequenceInput, alphabet: &Alphabet) -> Result<Seq> {
    let text = match (&input.sequence, &input.input) {
        (Some(s), None) => s.clone(),
        (None, Some(p)) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        _ => return Err(Error::Usage("give exactly one of --sequence or --input".into())),
    };
    Ok(alphabet.encode_lossy(&text))
}

pub fn cmd_build(a: &BuildArgs, out: &mut String) -> Result<()> {
    echo(
        out,
        "build",
        &[
            ("corpus", shown(&a.corpus)),
            ("alphabet", shown(&a.alphabet.alphabet)),
            ("out", shown(&a.out)),
            ("prune", a.prune.to_string()),
        ],
    );
    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let corpus = load_corpus(&a.corpus, &alphabet)?;
    let model = NgramModel::build(&corpus, alphabet.len(), a.prune)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    model.save(a.out.join(NGRAM_FILE), &alphabet)?;

    let counts = model.unigram_counts();
    let total: u64 = counts.iter().sum();
    let mut dist = String::from("# symbol\tcount\tprobability\n");
    for (sym, &c) in alphabet.symbols().iter().zip(counts) {
        let _ = writeln!(dist, "{}\t{c}\t{:.9e}", sym.display, c as f64 / total as f64);
    }
    let dist_path = a.out.join(UNIGRAM_FILE);
    fs::write(&dist_path, dist).map_err(|e| Error::io(&dist_path, e))?;

    let _ = writeln!(out, "corpus_symbols\t{}", corpus.len());
    for n in [2, 3, 4] {
        let _ = writeln!(out, "table_{n}_entries\t{}", model.entries(n));
    }
    Ok(())
}

pub fn cmd_train(a: &TrainArgs, out: &mut String) -> Result<()> {
    let mut config = vec![
        ("corpus", shown(&a.corpus)),
        ("alphabet", shown(&a.alphabet.alphabet)),
        ("lexicon", shown(&a.lexicon)),
        ("ngram", shown(&a.ngram)),
        ("out", shown(&a.out)),
        ("seed", a.seed.to_string()),
        ("positives", a.positives.to_string()),
        ("negatives", a.negatives.to_string()),
        ("window", a.window.to_string()),
        ("ridge", format!("{:e}", a.ridge)),
        ("min_word_len", a.min_word_len.to_string()),
    ];
    config.extend(path_echo(&a.path));
    echo(out, "train", &config);

    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let corpus = load_corpus(&a.corpus, &alphabet)?;
    let ngram = NgramModel::load(&a.ngram, &alphabet)?;
    let (lexicon, report) = Lexicon::load(&a.lexicon, &alphabet, a.min_word_len)?;
    let dist = UnigramDist::from_counts(ngram.unigram_counts())?;
    let cfg = TrainingConfig {
        positives: a.positives,
        negatives: a.negatives,
        window: a.window,
        seed: a.seed,
        ridge: a.ridge,
        path: path_config(&a.path, a.seed),
    };
    let models = train_filter_models(&corpus, &ngram, &lexicon, &dist, &cfg)?;
    models.save(&a.out)?;
    let _ = writeln!(
        out,
        "lexicon_words\t{} (dropped {}, duplicates {})",
        report.loaded,
        report.dropped(),
        report.duplicates
    );
    for m in [&models.qpt, &models.word, &models.path] {
        let _ = writeln!(out, "{}", m.diagnostics());
    }
    Ok(())
}

fn source_grid(a: &SearchArgs, alphabet: &Alphabet) -> Result<Grid> {
    let text = fs::read_to_string(&a.source).map_err(|e| Error::io(&a.source, e))?;
    let codes = alphabet.encode_lossy(&text);
    let len = a.rows * a.cols;
    let end = a.offset.checked_add(len).filter(|&e| e <= codes.len()).ok_or_else(|| {
        Error::Shape(format!(
            "{} holds {} symbols, too few for a {}x{} grid at offset {}",
            a.source.display(),
            codes.len(),
            a.rows,
            a.cols,
            a.offset
        ))
    })?;
    reshape(&codes[a.offset..end], a.rows)
}

pub fn cmd_search(a: &SearchArgs, out: &mut String) -> Result<()> {
    let space = KeySpace::new(a.rows, a.cols)?;
    let (lo, hi) = match &a.shards {
        Some(s) => ShardPlan::parse_range(s)?,
        None => (0, space.size()),
    };
    let shard_size = a.shard_size.unwrap_or(if a.level >= 2 { 1 } else { 1024 });
    let mut config = vec![
        ("source", shown(&a.source)),
        ("offset", a.offset.to_string()),
        ("rows", a.rows.to_string()),
        ("cols", a.cols.to_string()),
        ("alphabet", shown(&a.alphabet.alphabet)),
    ];
    config.extend(model_echo(&a.models));
    config.extend([
        ("level", a.level.to_string()),
        ("shards", format!("{lo}:{hi}")),
        ("shard_size", shard_size.to_string()),
        ("workers", a.workers.to_string()),
        ("out", shown(&a.out)),
        ("seed", a.seed.to_string()),
        ("qic", (!a.no_qic).to_string()),
        ("id_formula", a.id_formula.to_string()),
        ("stop_after", a.stop_after.map_or_else(|| "none".into(), |s| s.to_string())),
    ]);
    config.extend(threshold_echo(&a.thresholds));
    config.extend(path_echo(&a.path));
    echo(out, "search", &config);

    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let grid = source_grid(a, &alphabet)?;
    let loaded = load_models(&a.models, &alphabet)?;
    let reference = QuadSet::from_seq(grid.cells(), alphabet.len());
    let t = &a.thresholds;
    let cfg = CascadeConfig {
        qpt_threshold: t.qpt_threshold,
        qic_max: t.qic_max,
        word_threshold: t.word_threshold,
        path_threshold: t.path_threshold,
        level: a.level,
        path: path_config(&a.path, a.seed),
    };
    let cascade = Cascade::new(
        &loaded.models,
        &loaded.ngram,
        &loaded.lexicon,
        (!a.no_qic).then_some(&reference),
        cfg,
    )?;
    let mut plan = SearchPlan::new(ShardPlan::new(lo, hi, shard_size)?, a.workers, &a.out);
    plan.id_formula = a.id_formula;
    plan.stop_after = a.stop_after;
    plan.notes = model_echo(&a.models)
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .chain([format!("source={}", shown(&a.source)), format!("offset={}", a.offset)])
        .collect();
    let summary = run_search(&grid, &alphabet, &cascade, &plan)?;
    let _ = writeln!(out, "keys_per_level\t{}", space.size());
    let _ = writeln!(out, "{summary}");
    Ok(())
}

pub fn cmd_replay(a: &ReplayArgs, out: &mut String) -> Result<()> {
    echo(
        out,
        "replay",
        &[
            ("input", shown(&a.input)),
            ("alphabet", shown(&a.alphabet.alphabet)),
            ("keys", shown(&a.keys)),
            ("rows", a.rows.to_string()),
            ("out", shown(&a.out)),
            ("inverse", a.inverse.to_string()),
        ],
    );
    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let text = fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let grid = reshape(&alphabet.encode_lossy(&text), a.rows)?;
    let path = KeyPath::load(&a.keys, a.rows)?;
    let result = if a.inverse {
        replay_inverse(&grid, &path)?
    } else {
        replay(&grid, &path)?
    };
    let mut body = alphabet.decode(result.cells());
    body.push('\n');
    fs::write(&a.out, body).map_err(|e| Error::io(&a.out, e))?;
    let _ = writeln!(out, "grid\t{}x{}", grid.rows(), grid.cols());
    let _ = writeln!(out, "levels\t{}", path.keys().len());
    Ok(())
}

pub fn cmd_score(a: &ScoreArgs, out: &mut String) -> Result<()> {
    let mut config = vec![
        ("sequence", a.sequence.sequence.clone().unwrap_or_else(|| "none".into())),
        ("input", shown_opt(&a.sequence.input)),
        ("alphabet", shown(&a.alphabet.alphabet)),
        ("reference", shown_opt(&a.reference)),
        ("seed", a.seed.to_string()),
    ];
    config.extend(model_echo(&a.models));
    config.extend(path_echo(&a.path));
    echo(out, "score", &config);

    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let seq = read_sequence(&a.sequence, &alphabet)?;
    if seq.len() < 4 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 4 });
    }
    let loaded = load_models(&a.models, &alphabet)?;
    let reference = match &a.reference {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(QuadSet::from_seq(&alphabet.encode_lossy(&text), alphabet.len()))
        }
        None => None,
    };
    let cfg = CascadeConfig {
        path: path_config(&a.path, a.seed),
        ..CascadeConfig::default()
    };
    let cascade = Cascade::new(&loaded.models, &loaded.ngram, &loaded.lexicon, reference.as_ref(), cfg)?;
    let scores = cascade.score_all(&seq);
    let qpt = loaded.ngram.qpt_features(&seq);
    let word = loaded.lexicon.word_features(&seq);
    let path = path_features(&seq, &loaded.lexicon, &cascade.cfg.path);
    let _ = writeln!(out, "sequence\t{}", alphabet.decode(&seq));
    let _ = writeln!(out, "length\t{}", seq.len());
    let _ = writeln!(out, "qptscore\t{:.8e}", scores.qptscore);
    let _ = writeln!(out, "qic\t{}", scores.qic);
    let _ = writeln!(out, "wordscore\t{:.8e}", scores.wordscore);
    let _ = writeln!(out, "pathscore\t{:.8e}", scores.pathscore);
    for (names, values) in [
        (&crate::ngram::QptFeatures::NAMES[..], &qpt.to_vector()[..]),
        (&crate::lexicon::WordFeatures::NAMES[..], &word.to_vector()[..]),
        (&crate::pathfinder::PathFeatures::NAMES[..], &path.to_vector()[..]),
    ] {
        for (n, v) in names.iter().zip(values) {
            let _ = writeln!(out, "feature.{n}\t{v}");
        }
    }
    Ok(())
}

pub fn cmd_controls(a: &ControlsArgs, out: &mut String) -> Result<()> {
    let mut config = vec![
        ("alphabet", shown(&a.alphabet.alphabet)),
        ("count", a.count.to_string()),
        ("len", a.len.to_string()),
        ("seed", a.seed.to_string()),
        ("distribution_corpus", shown_opt(&a.distribution_corpus)),
        ("uniform", a.uniform.to_string()),
    ];
    config.extend(model_echo(&a.models));
    config.extend(threshold_echo(&a.thresholds));
    config.extend(path_echo(&a.path));
    echo(out, "controls", &config);

    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let loaded = load_models(&a.models, &alphabet)?;
    let dist = if a.uniform {
        UnigramDist::uniform(alphabet.len())?
    } else if let Some(p) = &a.distribution_corpus {
        UnigramDist::from_counts(&load_corpus(p, &alphabet)?.unigram_counts(alphabet.len()))?
    } else {
        UnigramDist::from_counts(loaded.ngram.unigram_counts())?
    };
    let t = &a.thresholds;
    let cfg = CascadeConfig {
        qpt_threshold: t.qpt_threshold,
        qic_max: t.qic_max,
        word_threshold: t.word_threshold,
        path_threshold: t.path_threshold,
        level: 1,
        path: path_config(&a.path, a.seed),
    };
    let cascade = Cascade::new(&loaded.models, &loaded.ngram, &loaded.lexicon, None, cfg)?;
    let report = calibrate_controls(&cascade, &dist, a.count, a.len, a.seed);
    let _ = writeln!(out, "{report}");
    if let Some(r) = report.rate(Stage::Qpt) {
        let _ = writeln!(out, "qpt_pass_rate_reference\t1/50000 = 2.0e-5 (measured {:.3e})", r.value());
    }
    Ok(())
}

pub fn cmd_id(a: &IdArgs, out: &mut String) -> Result<()> {
    echo(
        out,
        "id",
        &[
            ("sequence", a.sequence.sequence.clone().unwrap_or_else(|| "none".into())),
            ("input", shown_opt(&a.sequence.input)),
            ("alphabet", shown(&a.alphabet.alphabet)),
            ("formula", a.formula.to_string()),
        ],
    );
    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let seq = read_sequence(&a.sequence, &alphabet)?;
    let _ = writeln!(out, "{}", sequence_id_with(&seq, &alphabet, a.formula)?);
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, out: &mut String) -> Result<()> {
    echo(
        out,
        "bench",
        &[
            ("alphabet", shown(&a.alphabet.alphabet)),
            ("ngram", shown(&a.ngram)),
            ("models", shown(&a.models)),
            ("count", a.count.to_string()),
            ("len", a.len.to_string()),
            ("seed", a.seed.to_string()),
        ],
    );
    let alphabet = Alphabet::load(&a.alphabet.alphabet)?;
    let ngram = NgramModel::load(&a.ngram, &alphabet)?;
    let models = FilterModels::load(&a.models)?;
    let dist = UnigramDist::from_counts(ngram.unigram_counts())?;
    let b = benchmark_qpt(&ngram, &models.qpt, 0.5, &dist, a.len, a.count, a.seed);
    let _ = writeln!(out, "sequences\t{}", b.sequences);
    let _ = writeln!(out, "seconds\t{:.6}", b.seconds);
    let _ = writeln!(out, "qpt_per_second_per_core\t{:.0}", b.per_second());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parse_failure_is_a_usage_error() {
        let (code, _, err) = run_args(&["gridsieve", "train", "--corpus", "c"]);
        assert_eq!(code, 1);
        assert!(err.contains("--lexicon"), "{err}");
        assert_eq!(run_args(&["gridsieve", "frobnicate"]).0, 1);
        assert_eq!(run_args(&["gridsieve", "--help"]).0, 0);
    }

    #[test]
    fn missing_file_is_a_runtime_error() {
        let (code, out, err) = run_args(&["gridsieve", "id", "--sequence", "AB", "--alphabet", "/nonexistent/alpha"]);
        assert_eq!(code, 3, "{err}");
        assert!(out.starts_with("# gridsieve id\n"));
    }

    #[test]
    fn bad_id_formula_is_rejected_by_the_parser() {
        let (code, _, _) = run_args(&["gridsieve", "id", "--sequence", "AB", "--alphabet", "a", "--formula", "cube"]);
        assert_eq!(code, 1);
    }
}
