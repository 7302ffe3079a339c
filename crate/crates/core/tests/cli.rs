use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gridsieve::ngram::NgramModel;
use gridsieve::textcore::{ingest_corpus, sequence_id, Alphabet};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn alphabet_path() -> String {
    data("english-consonants.alphabet").display().to_string()
}

fn gridsieve(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gridsieve")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = gridsieve(args);
    assert_eq!(code, 0, "{args:?}\n{out}\n{err}");
    out
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// The first `chars` characters of the fixture text.
fn corpus_head(dir: &Path, chars: usize) -> PathBuf {
    let text: String = fs::read_to_string(data("moby-dick.txt")).unwrap().chars().take(chars).collect();
    let path = dir.join("corpus.txt");
    fs::write(&path, text).unwrap();
    path
}

/// Builds and trains small models under `dir`.
fn prepared(dir: &Path) -> PathBuf {
    let corpus = corpus_head(dir, 400_000);
    let models = dir.join("models");
    ok(&["build", "--corpus", &s(&corpus), "--alphabet", &alphabet_path(), "--out", &s(&models)]);
    ok(&[
        "train",
        "--corpus",
        &s(&corpus),
        "--alphabet",
        &alphabet_path(),
        "--lexicon",
        &s(&data("moby-dick.words")),
        "--ngram",
        &s(&models.join("ngram.model")),
        "--out",
        &s(&models),
        "--seed",
        "4",
        "--positives",
        "800",
        "--negatives",
        "800",
        "--path-trials",
        "100",
    ]);
    models
}

fn model_flags(models: &Path) -> Vec<String> {
    vec![
        "--alphabet".into(),
        alphabet_path(),
        "--ngram".into(),
        s(&models.join("ngram.model")),
        "--lexicon".into(),
        s(&data("moby-dick.words")),
        "--models".into(),
        s(models),
    ]
}

fn with<'a>(head: &[&'a str], tail: &'a [String]) -> Vec<&'a str> {
    head.iter().copied().chain(tail.iter().map(String::as_str)).collect()
}

#[test]
fn build_round_trips_and_prunes_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_head(dir.path(), 100_000);
    let out = ok(&["build", "--corpus", &s(&corpus), "--alphabet", &alphabet_path(), "--out", &s(&dir.path().join("p5"))]);
    assert!(out.starts_with("# gridsieve build\n") && out.contains("# prune=5\n"));
    ok(&["build", "--corpus", &s(&corpus), "--alphabet", &alphabet_path(), "--out", &s(&dir.path().join("p0")), "--prune", "0"]);

    let alphabet = Alphabet::load(data("english-consonants.alphabet")).unwrap();
    let loaded = NgramModel::load(dir.path().join("p5/ngram.model"), &alphabet).unwrap();
    let text = fs::read_to_string(&corpus).unwrap();
    let fresh = NgramModel::build(&ingest_corpus(&text, &alphabet, "c").unwrap(), alphabet.len(), 5).unwrap();
    assert_eq!(loaded, fresh);
    let unpruned = NgramModel::load(dir.path().join("p0/ngram.model"), &alphabet).unwrap();
    for n in [2, 3, 4] {
        assert!(unpruned.entries(n) >= loaded.entries(n));
    }
    assert!(dir.path().join("p5/unigram.tsv").exists());
}

#[test]
fn build_rejects_a_tiny_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("tiny.txt");
    fs::write(&corpus, "CALL ME ISHMAEL").unwrap();
    let (code, _, err) = gridsieve(&["build", "--corpus", &s(&corpus), "--alphabet", &alphabet_path(), "--out", &s(dir.path())]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn train_is_reproducible_and_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let models = prepared(dir.path());
    let again = dir.path().join("again");
    let corpus = dir.path().join("corpus.txt");
    let out = ok(&[
        "train",
        "--corpus",
        &s(&corpus),
        "--alphabet",
        &alphabet_path(),
        "--lexicon",
        &s(&data("moby-dick.words")),
        "--ngram",
        &s(&models.join("ngram.model")),
        "--out",
        &s(&again),
        "--seed",
        "4",
        "--positives",
        "800",
        "--negatives",
        "800",
        "--path-trials",
        "100",
    ]);
    for name in ["qpt", "word", "path"] {
        assert!(out.contains(&format!("{name}: R^2=")), "{out}");
        let file = format!("{name}.model");
        assert_eq!(fs::read(models.join(&file)).unwrap(), fs::read(again.join(&file)).unwrap());
    }
    assert!(out.contains("# seed=4\n"));

    let (code, _, err) = gridsieve(&["train", "--corpus", &s(&corpus), "--alphabet", &alphabet_path(), "--ngram", "x", "--out", "y"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn search_level_one_full_space_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let models = prepared(dir.path());
    let flags = model_flags(&models);
    let hits = dir.path().join("hits.tsv");
    let source = s(&dir.path().join("corpus.txt"));
    let hits_arg = s(&hits);
    let head = [
        "search", "--source", &source, "--offset", "5000", "--level", "1", "--shards", "0:122880", "--workers", "4", "--out", &hits_arg,
        "--path-trials", "100",
    ];
    let out = ok(&with(&head, &flags));
    assert!(out.contains("evaluated=122880"), "{out}");
    assert!(out.contains("# seed=0\n") && out.contains("# workers=4\n"));
    let first = fs::read_to_string(&hits).unwrap();
    assert!(first.starts_with("# gridsieve hits\n"));

    fs::remove_file(&hits).unwrap();
    fs::remove_file(dir.path().join("hits.tsv.checkpoint")).unwrap();
    fs::remove_dir_all(dir.path().join("hits.tsv.parts")).unwrap();
    let mut rerun = head.to_vec();
    rerun[10] = "1";
    ok(&with(&rerun, &flags));
    assert_eq!(fs::read_to_string(&hits).unwrap(), first);
}

#[test]
fn search_stops_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let models = prepared(dir.path());
    let flags = model_flags(&models);
    let source = s(&dir.path().join("corpus.txt"));
    let run = |name: &str, extra: &[&str]| {
        let out = s(&dir.path().join(name));
        let mut args = vec!["search", "--source", &source, "--level", "2", "--shards", "0:4", "--out", &out, "--path-trials", "100"];
        args.extend_from_slice(extra);
        let report = ok(&with(&args, &flags));
        (report, fs::read_to_string(dir.path().join(name)).ok())
    };
    let (_, whole) = run("whole.tsv", &["--workers", "2"]);
    let (partial, missing) = run("split.tsv", &["--stop-after", "1"]);
    assert!(partial.contains("complete=false") && missing.is_none(), "{partial}");
    let (resumed, merged) = run("split.tsv", &["--workers", "3"]);
    assert!(resumed.contains("resumed=1"), "{resumed}");
    assert_eq!(merged, whole);
}

#[test]
fn replay_identity_and_inverse() {
    let dir = tempfile::tempdir().unwrap();
    let alphabet = Alphabet::load(data("english-consonants.alphabet")).unwrap();
    let text = fs::read_to_string(data("moby-dick.txt")).unwrap();
    let codes = alphabet.encode_lossy(&text);
    let input = dir.path().join("in.txt");
    let consonants = alphabet.decode(&codes[..5 * 997]);
    fs::write(&input, &consonants).unwrap();

    let identity = dir.path().join("identity.keys");
    fs::write(&identity, "0,0,1\n").unwrap();
    let out = dir.path().join("out.txt");
    let run = |from: &Path, keys: &Path, to: &Path, inverse: bool| {
        let (from, keys, to, alpha) = (s(from), s(keys), s(to), alphabet_path());
        let mut args = vec!["replay", "--input", &from, "--alphabet", &alpha, "--keys", &keys, "--out", &to];
        if inverse {
            args.push("--inverse");
        }
        ok(&args);
    };
    run(&input, &identity, &out, false);
    assert_eq!(fs::read_to_string(&out).unwrap().trim_end(), consonants);

    let keys = dir.path().join("two.keys");
    fs::write(&keys, "17,5,2\n119,31,42\n").unwrap();
    run(&input, &keys, &out, false);
    assert_ne!(fs::read_to_string(&out).unwrap().trim_end(), consonants);
    let back = dir.path().join("back.txt");
    run(&out, &keys, &back, true);
    assert_eq!(fs::read_to_string(&back).unwrap().trim_end(), consonants);
}

#[test]
fn score_controls_and_id() {
    let dir = tempfile::tempdir().unwrap();
    let models = prepared(dir.path());
    let flags = model_flags(&models);
    let alphabet = Alphabet::load(data("english-consonants.alphabet")).unwrap();
    let text = fs::read_to_string(data("moby-dick.txt")).unwrap();
    let codes = alphabet.encode_lossy(&text);
    // a window from beyond the training text
    let window = alphabet.decode(&codes[400_000..400_085]);

    let out = ok(&with(&["score", "--sequence", &window, "--path-trials", "100"], &flags));
    let qpt: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("qptscore\t"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(qpt > 0.5, "{out}");
    for key in ["qic\t0", "wordscore\t", "pathscore\t", "feature.iterations_to_85\t"] {
        assert!(out.contains(key), "{key}: {out}");
    }

    let out = ok(&with(&["controls", "--count", "2000", "--path-trials", "50"], &flags));
    assert!(out.contains("pass_through_qpt: ") && out.contains("controls: 2000"), "{out}");
    let out = ok(&with(&["controls", "--count", "0"], &flags));
    assert!(out.contains("controls: 0") && !out.contains("pass_through"), "{out}");

    let out = ok(&["id", "--sequence", &window, "--alphabet", &alphabet_path()]);
    let id: u64 = out.lines().last().unwrap().parse().unwrap();
    assert_eq!(id, sequence_id(&codes[400_000..400_085], &alphabet).unwrap());
    assert!(out.contains("# formula=sum-of-squares\n"));

    let out = ok(&["bench", "--alphabet", &alphabet_path(), "--ngram", &s(&models.join("ngram.model")), "--models", &s(&models), "--count", "100000"]);
    assert!(out.contains("qpt_per_second_per_core\t"), "{out}");
}
