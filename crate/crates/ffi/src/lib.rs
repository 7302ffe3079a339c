//! C ABI over the gridsieve core.
//!
//! Objects are opaque handles created by `*_load`/`*_new` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`GsStatus`]; on failure the message is kept per thread and can be read
//! with [`gs_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use gridsieve::engine::Stage;
use gridsieve::lexicon::Lexicon;
use gridsieve::ngram::NgramModel;
use gridsieve::pathfinder::Prng;
use gridsieve::permuter::{invert_key, KeySpace, KeyTable};
use gridsieve::regressor::FilterModels;
use gridsieve::textcore::{sequence_id_with, Alphabet, Code, Grid, IdFormula};
use gridsieve::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Usage = 3,
    Validation = 4,
    Io = 5,
    Runtime = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Which score equation [`gs_models_score`] evaluates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsModelKind {
    Qpt = 0,
    Word = 1,
    Path = 2,
}

/// How [`gs_sequence_id`] combines adjacent byte values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsIdFormula {
    SumOfSquares = 0,
    SquareOfSum = 1,
}

pub struct GsAlphabet(Alphabet);
pub struct GsKeySpace {
    space: KeySpace,
    table: KeyTable,
}
pub struct GsNgram(NgramModel);
pub struct GsLexicon(Lexicon);
pub struct GsModels(FilterModels);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> GsStatus {
    match err {
        Error::Usage(_) => GsStatus::Usage,
        Error::Io { .. } => GsStatus::Io,
        Error::Singular { .. } | Error::Checkpoint(_) => GsStatus::Runtime,
        _ => GsStatus::Validation,
    }
}

struct Failure(GsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: GsStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside gridsieve");
            GsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(GsStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(GsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(GsStatus::NullArgument, format!("{name} is null")), Ok)
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(GsStatus::NullArgument, format!("{name} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(GsStatus::NullArgument, format!("{name} is null"));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(GsStatus::NullArgument, "output handle pointer is null");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `cap` bytes. Returns the full message
/// length excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gs_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_alphabet_load(path: *const c_char, out: *mut *mut GsAlphabet) -> GsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        store(out, GsAlphabet(Alphabet::load(path)?))
    })
}

/// Parses alphabet text: one `symbol<TAB>byte` per line.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_alphabet_parse(text: *const c_char, out: *mut *mut GsAlphabet) -> GsStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        store(out, GsAlphabet(Alphabet::parse(text, "alphabet")?))
    })
}

/// Number of symbols, or 0 for a null handle.
///
/// # Safety
/// `alphabet` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_alphabet_len(alphabet: *const GsAlphabet) -> usize {
    alphabet.as_ref().map_or(0, |a| a.0.len())
}

/// Encodes `text`, dropping characters outside the alphabet. Writes up to
/// `cap` codes to `codes` and the full encoded length to `out_len`; returns
/// `BUFFER_TOO_SMALL` when `cap` is short.
///
/// # Safety
/// `alphabet` must be a live handle, `text` NUL-terminated, `codes` valid for
/// `cap` writes and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_alphabet_encode(
    alphabet: *const GsAlphabet,
    text: *const c_char,
    codes: *mut u8,
    cap: usize,
    out_len: *mut usize,
) -> GsStatus {
    guard(|| {
        let alphabet = ref_arg(alphabet, "alphabet")?;
        let text = str_arg(text, "text")?;
        let seq = alphabet.0.encode_lossy(text);
        if out_len.is_null() {
            return fail(GsStatus::NullArgument, "out_len is null");
        }
        *out_len = seq.len();
        if seq.len() > cap {
            return fail(GsStatus::BufferTooSmall, format!("{} codes do not fit in {cap}", seq.len()));
        }
        out_slice(codes, seq.len(), "codes")?.copy_from_slice(&seq);
        Ok(())
    })
}

/// # Safety
/// `alphabet` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_alphabet_free(alphabet: *mut GsAlphabet) {
    free(alphabet)
}

/// # Safety
/// `alphabet` must be a live handle, `codes` valid for `len` reads and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gs_sequence_id(
    alphabet: *const GsAlphabet,
    codes: *const u8,
    len: usize,
    formula: GsIdFormula,
    out: *mut u64,
) -> GsStatus {
    guard(|| {
        let alphabet = ref_arg(alphabet, "alphabet")?;
        let codes = slice_arg(codes, len, "codes")?;
        let formula = match formula {
            GsIdFormula::SumOfSquares => IdFormula::SumOfSquares,
            GsIdFormula::SquareOfSum => IdFormula::SquareOfSum,
        };
        let id = sequence_id_with(codes, &alphabet.0, formula)?;
        *out_slice(out, 1, "out")?.first_mut().expect("one slot") = id;
        Ok(())
    })
}

/// Key space of a `rows`×`cols` grid with precomputed permutation tables.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_keyspace_new(rows: usize, cols: usize, out: *mut *mut GsKeySpace) -> GsStatus {
    guard(|| {
        let space = KeySpace::new(rows, cols)?;
        let table = KeyTable::new(&space)?;
        store(out, GsKeySpace { space, table })
    })
}

/// Keys per level, or 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_keyspace_size(space: *const GsKeySpace) -> u64 {
    space.as_ref().map_or(0, |s| s.space.size())
}

unsafe fn keyspace_io<'a>(
    space: *const GsKeySpace,
    ordinal: u64,
    input: *const u8,
    output: *mut u8,
    len: usize,
) -> Result<(&'a GsKeySpace, &'a [Code], &'a mut [Code]), Failure> {
    let space = ref_arg(space, "space")?;
    let cells = space.space.rows() * space.space.cols();
    if len != cells {
        return fail(GsStatus::Validation, format!("grid holds {cells} cells, got {len}"));
    }
    if ordinal >= space.space.size() {
        return fail(GsStatus::Validation, format!("ordinal {ordinal} is outside the key space"));
    }
    Ok((space, slice_arg(input, len, "input")?, out_slice(output, len, "output")?))
}

/// Writes the output of key `ordinal` applied to the row-major grid `input`.
///
/// # Safety
/// `space` must be a live handle; `input` and `output` must each be valid for
/// `len` elements and must not overlap.
#[no_mangle]
pub unsafe extern "C" fn gs_keyspace_apply(
    space: *const GsKeySpace,
    ordinal: u64,
    input: *const u8,
    output: *mut u8,
    len: usize,
) -> GsStatus {
    guard(|| {
        let (space, input, output) = keyspace_io(space, ordinal, input, output, len)?;
        space.table.apply_into(ordinal as usize, input, output);
        Ok(())
    })
}

/// Undoes [`gs_keyspace_apply`] for the same `ordinal`.
///
/// # Safety
/// As for [`gs_keyspace_apply`].
#[no_mangle]
pub unsafe extern "C" fn gs_keyspace_invert(
    space: *const GsKeySpace,
    ordinal: u64,
    input: *const u8,
    output: *mut u8,
    len: usize,
) -> GsStatus {
    guard(|| {
        let (space, input, output) = keyspace_io(space, ordinal, input, output, len)?;
        let key = space.space.key_at(ordinal).expect("ordinal checked");
        let grid = Grid::new(space.space.rows(), space.space.cols(), input.to_vec())?;
        let back = invert_key(&key, len)?.apply(&grid)?;
        output.copy_from_slice(back.cells());
        Ok(())
    })
}

/// # Safety
/// `space` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_keyspace_free(space: *mut GsKeySpace) {
    free(space)
}

/// # Safety
/// `path` must be NUL-terminated, `alphabet` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_ngram_load(
    path: *const c_char,
    alphabet: *const GsAlphabet,
    out: *mut *mut GsNgram,
) -> GsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let alphabet = ref_arg(alphabet, "alphabet")?;
        store(out, GsNgram(NgramModel::load(path, &alphabet.0)?))
    })
}

/// Writes the six QPT features in the order quadnum, quadscore, tripnum,
/// tripscore, pairnum, pairscore.
///
/// # Safety
/// `ngram` must be a live handle, `codes` valid for `len` reads and
/// `features` for 6 writes.
#[no_mangle]
pub unsafe extern "C" fn gs_ngram_qpt_features(
    ngram: *const GsNgram,
    codes: *const u8,
    len: usize,
    features: *mut f64,
) -> GsStatus {
    guard(|| {
        let ngram = ref_arg(ngram, "ngram")?;
        let codes = slice_arg(codes, len, "codes")?;
        check_codes(codes, ngram.0.alphabet_len())?;
        out_slice(features, 6, "features")?.copy_from_slice(&ngram.0.qpt_features(codes).to_vector());
        Ok(())
    })
}

fn check_codes(codes: &[Code], alphabet_len: usize) -> Result<(), Failure> {
    match codes.iter().find(|&&c| c as usize >= alphabet_len) {
        Some(c) => fail(GsStatus::Validation, format!("code {c} is outside an alphabet of {alphabet_len}")),
        None => Ok(()),
    }
}

/// # Safety
/// `ngram` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_ngram_free(ngram: *mut GsNgram) {
    free(ngram)
}

/// Loads a word list, keeping words of `min_len` to 11 symbols.
///
/// # Safety
/// `path` must be NUL-terminated, `alphabet` a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_lexicon_load(
    path: *const c_char,
    alphabet: *const GsAlphabet,
    min_len: usize,
    out: *mut *mut GsLexicon,
) -> GsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let alphabet = ref_arg(alphabet, "alphabet")?;
        store(out, GsLexicon(Lexicon::load(Path::new(path), &alphabet.0, min_len)?.0))
    })
}

/// Number of words, or 0 for a null handle.
///
/// # Safety
/// `lexicon` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_lexicon_len(lexicon: *const GsLexicon) -> usize {
    lexicon.as_ref().map_or(0, |l| l.0.len())
}

/// Writes the five word features in the order maxspan, minspan, totspan,
/// unspan, wordnum.
///
/// # Safety
/// `lexicon` must be a live handle, `codes` valid for `len` reads and
/// `features` for 5 writes.
#[no_mangle]
pub unsafe extern "C" fn gs_lexicon_word_features(
    lexicon: *const GsLexicon,
    codes: *const u8,
    len: usize,
    features: *mut f64,
) -> GsStatus {
    guard(|| {
        let lexicon = ref_arg(lexicon, "lexicon")?;
        let codes = slice_arg(codes, len, "codes")?;
        out_slice(features, 5, "features")?.copy_from_slice(&lexicon.0.word_features(codes).to_vector());
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_lexicon_free(lexicon: *mut GsLexicon) {
    free(lexicon)
}

/// Loads `qpt.model`, `word.model` and `path.model` from `dir`.
///
/// # Safety
/// `dir` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_models_load(dir: *const c_char, out: *mut *mut GsModels) -> GsStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        store(out, GsModels(FilterModels::load(dir)?))
    })
}

/// Evaluates one score equation on `count` features.
///
/// # Safety
/// `models` must be a live handle, `features` valid for `count` reads and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gs_models_score(
    models: *const GsModels,
    kind: GsModelKind,
    features: *const f64,
    count: usize,
    out: *mut f64,
) -> GsStatus {
    guard(|| {
        let models = ref_arg(models, "models")?;
        let features = slice_arg(features, count, "features")?;
        let (model, stage) = match kind {
            GsModelKind::Qpt => (&models.0.qpt, Stage::Qpt),
            GsModelKind::Word => (&models.0.word, Stage::Word),
            GsModelKind::Path => (&models.0.path, Stage::Path),
        };
        let score = model
            .score(features)
            .map_err(|e| Failure(GsStatus::Validation, format!("{} model: {e}", stage.name())))?;
        *out_slice(out, 1, "out")?.first_mut().expect("one slot") = score;
        Ok(())
    })
}

/// # Safety
/// `models` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_models_free(models: *mut GsModels) {
    free(models)
}

/// Advances the Lehmer generator held in `*state` (1 ≤ state < 2³¹−1) and
/// writes the new value to `*value`.
///
/// # Safety
/// `state` and `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_prng_next(state: *mut u32, value: *mut u32) -> GsStatus {
    guard(|| {
        let slot = out_slice(state, 1, "state")?;
        let mut prng = Prng::from_state(slot[0])?;
        let v = prng.next_value();
        slot[0] = prng.state();
        *out_slice(value, 1, "value")?.first_mut().expect("one slot") = v;
        Ok(())
    })
}
