use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gridsieve::lexicon::Lexicon;
use gridsieve::ngram::NgramModel;
use gridsieve::regressor::{train_filter_models, FilterModels, TrainingConfig};
use gridsieve::pathfinder::{PathConfig, UnigramDist};
use gridsieve::textcore::{load_corpus, Alphabet};
use gridsieve_ffi::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        gs_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn scoring_through_the_c_abi_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let alphabet = Alphabet::load(data("english-consonants.alphabet")).unwrap();
    let corpus = load_corpus(data("moby-dick.txt"), &alphabet).unwrap();
    let (head, _) = corpus.split_at(200_000).unwrap();
    let ngram = NgramModel::build(&head, alphabet.len(), 5).unwrap();
    let lexicon = Lexicon::load(data("moby-dick.words"), &alphabet, 2).unwrap().0;
    let dist = UnigramDist::from_counts(ngram.unigram_counts()).unwrap();
    let cfg = TrainingConfig {
        positives: 300,
        negatives: 300,
        path: PathConfig { trials: 50, ..PathConfig::default() },
        ..TrainingConfig::default()
    };
    let models = train_filter_models(&head, &ngram, &lexicon, &dist, &cfg).unwrap();
    models.save(dir.path()).unwrap();
    let ngram_path = dir.path().join("ngram.model");
    ngram.save(&ngram_path, &alphabet).unwrap();

    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(gs_alphabet_load(c_path(&data("english-consonants.alphabet")).as_ptr(), &mut a), GsStatus::Ok);
        let mut ng = ptr::null_mut();
        assert_eq!(gs_ngram_load(c_path(&ngram_path).as_ptr(), a, &mut ng), GsStatus::Ok);
        let mut lex = ptr::null_mut();
        assert_eq!(gs_lexicon_load(c_path(&data("moby-dick.words")).as_ptr(), a, 2, &mut lex), GsStatus::Ok);
        assert_eq!(gs_lexicon_len(lex), lexicon.len());
        let mut m = ptr::null_mut();
        assert_eq!(gs_models_load(c_path(dir.path()).as_ptr(), &mut m), GsStatus::Ok);

        let window = &head.codes[1234..1234 + 85];
        let mut qpt = [0.0; 6];
        assert_eq!(gs_ngram_qpt_features(ng, window.as_ptr(), window.len(), qpt.as_mut_ptr()), GsStatus::Ok);
        assert_eq!(qpt, ngram.qpt_features(window).to_vector());
        let mut word = [0.0; 5];
        assert_eq!(gs_lexicon_word_features(lex, window.as_ptr(), window.len(), word.as_mut_ptr()), GsStatus::Ok);
        assert_eq!(word, lexicon.word_features(window).to_vector());

        let mut score = 0.0;
        assert_eq!(gs_models_score(m, GsModelKind::Qpt, qpt.as_ptr(), 6, &mut score), GsStatus::Ok);
        assert_eq!(score.to_bits(), models.qpt.score(&qpt).unwrap().to_bits());
        assert_eq!(gs_models_score(m, GsModelKind::Word, qpt.as_ptr(), 6, &mut score), GsStatus::Validation);
        assert!(last_error().contains("arity"), "{}", last_error());
        let loaded = FilterModels::load(dir.path()).unwrap();
        assert_eq!(loaded, models);

        let bad = [200u8; 4];
        assert_eq!(gs_ngram_qpt_features(ng, bad.as_ptr(), 4, qpt.as_mut_ptr()), GsStatus::Validation);

        let mut missing = ptr::null_mut();
        assert_eq!(gs_models_load(c_path(&dir.path().join("nope")).as_ptr(), &mut missing), GsStatus::Io);
        assert!(missing.is_null());

        gs_models_free(m);
        gs_lexicon_free(lex);
        gs_ngram_free(ng);
        gs_alphabet_free(a);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<this test> -> target/<profile>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libgridsieve_ffi.a");
    assert!(lib.exists(), "{} was not built", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
