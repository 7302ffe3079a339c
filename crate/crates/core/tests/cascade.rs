use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;

use gridsieve::engine::{calibrate_controls, run_search, Cascade, CascadeConfig, SearchPlan, ShardPlan, Stage, StageCounters};
use gridsieve::lexicon::{Lexicon, DEFAULT_MIN_WORD_LEN};
use gridsieve::ngram::{NgramModel, QuadSet, DEFAULT_PRUNE_THRESHOLD};
use gridsieve::pathfinder::{sample_windows, PathConfig, Prng, UnigramDist};
use gridsieve::permuter::{apply_path, KeyPath, KeySpace};
use gridsieve::regressor::{train_filter_models, FilterModels, TrainingConfig};
use gridsieve::textcore::{load_corpus, reshape, Alphabet, Corpus, Grid};

struct Fixture {
    alphabet: Alphabet,
    tail: Corpus,
    ngram: NgramModel,
    lexicon: Lexicon,
    dist: UnigramDist,
    models: FilterModels,
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let alphabet = Alphabet::load(data("english-consonants.alphabet")).unwrap();
        let corpus = load_corpus(data("moby-dick.txt"), &alphabet).unwrap();
        let (head, tail) = corpus.split_at(340_000).unwrap();
        let ngram = NgramModel::build(&head, alphabet.len(), DEFAULT_PRUNE_THRESHOLD).unwrap();
        let lexicon = Lexicon::load(data("moby-dick.words"), &alphabet, DEFAULT_MIN_WORD_LEN).unwrap().0;
        let dist = UnigramDist::from_counts(&head.unigram_counts(alphabet.len())).unwrap();
        let cfg = TrainingConfig {
            seed: 3,
            path: PathConfig {
                trials: 200,
                ..PathConfig::default()
            },
            ..TrainingConfig::default()
        };
        let models = train_filter_models(&head, &ngram, &lexicon, &dist, &cfg).unwrap();
        Fixture {
            alphabet,
            tail,
            ngram,
            lexicon,
            dist,
            models,
        }
    })
}

fn cfg(level: u32) -> CascadeConfig {
    CascadeConfig {
        level,
        path: PathConfig {
            trials: 200,
            ..PathConfig::default()
        },
        ..CascadeConfig::default()
    }
}

fn grid(fx: &Fixture) -> Grid {
    reshape(&fx.tail.codes[1000..1085], 5).unwrap()
}

#[test]
fn held_out_windows_pass_qpt_and_word() {
    let fx = fixture();
    let cascade = Cascade::new(&fx.models, &fx.ngram, &fx.lexicon, None, cfg(1)).unwrap();
    let windows = sample_windows(&fx.tail, 500, 85, &mut Prng::seeded(1)).unwrap();
    let mut counters = StageCounters::default();
    for w in &windows {
        cascade.evaluate(w, &mut counters);
    }
    let through_word = counters.passed(Stage::Word) as f64 / windows.len() as f64;
    assert!(through_word > 0.9, "{counters}");
    assert_eq!(counters.rejected_at(Stage::Qic), 0);
}

#[test]
fn mismatched_controls_pass_less_often() {
    let fx = fixture();
    let cascade = Cascade::new(&fx.models, &fx.ngram, &fx.lexicon, None, cfg(1)).unwrap();
    let matched = calibrate_controls(&cascade, &fx.dist, 20_000, 85, 4);
    let uniform = calibrate_controls(&cascade, &UnigramDist::uniform(fx.alphabet.len()).unwrap(), 20_000, 85, 4);
    let (m, u) = (matched.rate(Stage::Qpt).unwrap(), uniform.rate(Stage::Qpt).unwrap());
    assert!(u.successes < m.successes, "uniform {u} vs matched {m}");
    assert!(m.lower <= m.value() && m.value() <= m.upper);
    assert!(matched.counters.is_conserved() && uniform.counters.is_conserved());
}

#[test]
fn full_level_one_space_and_hit_replay() {
    let fx = fixture();
    let grid = grid(fx);
    let reference = QuadSet::from_seq(grid.cells(), fx.alphabet.len());
    let cascade = Cascade::new(&fx.models, &fx.ngram, &fx.lexicon, Some(&reference), cfg(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let plan = SearchPlan::new(ShardPlan::new(0, 122_880, 4096).unwrap(), 4, dir.path().join("hits.tsv"));
    let summary = run_search(&grid, &fx.alphabet, &cascade, &plan).unwrap();
    assert_eq!(summary.counters.evaluated, 122_880);
    assert!(summary.counters.is_conserved());

    let text = fs::read_to_string(dir.path().join("hits.tsv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len() as u64, summary.counters.hits);
    let space = KeySpace::new(5, 17).unwrap();
    for row in rows {
        let f: Vec<&str> = row.split('\t').collect();
        let path = KeyPath::parse(&f[2].replace(';', "\n"), 5, "hit").unwrap();
        assert_eq!(space.ordinal_of(&path.keys()[0]), Some(f[0].parse().unwrap()));
        assert_eq!(fx.alphabet.decode(apply_path(&grid, &path).unwrap().cells()), f[8]);
        assert!(f[4].parse::<usize>().unwrap() <= 5);
        for score in &f[5..8] {
            assert!(score.parse::<f64>().unwrap() > 0.5);
        }
    }
}

#[test]
fn raising_qpt_threshold_shrinks_level_two_hits() {
    let fx = fixture();
    let grid = grid(fx);
    let reference = QuadSet::from_seq(grid.cells(), fx.alphabet.len());
    let hit_keys = |threshold: f64| {
        let c = CascadeConfig {
            qpt_threshold: threshold,
            ..cfg(2)
        };
        let cascade = Cascade::new(&fx.models, &fx.ngram, &fx.lexicon, Some(&reference), c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let plan = SearchPlan::new(ShardPlan::new(7, 9, 1).unwrap(), 2, dir.path().join("hits.tsv"));
        let summary = run_search(&grid, &fx.alphabet, &cascade, &plan).unwrap();
        assert_eq!(summary.counters.evaluated, 2 * 122_880);
        let text = fs::read_to_string(dir.path().join("hits.tsv")).unwrap();
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split('\t').take(2).collect::<Vec<_>>().join(":"))
            .collect::<Vec<_>>()
    };
    let loose = hit_keys(0.5);
    let strict = hit_keys(0.8);
    assert!(strict.iter().all(|k| loose.contains(k)));
    assert!(strict.len() <= loose.len());
}
