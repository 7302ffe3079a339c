//! The row-interchange / row-reversal / skip-traversal key family.
//!
//! A key is applied in a fixed order: rows are permuted (new row `i` is old
//! row `row_perm[i]`), rows whose bit is set in `flip_mask` are reversed, the
//! grid is flattened row-major into `s`, and the output is read as
//! `t[j] = s[(j * skip) mod N]`, then laid back out with the same shape.
//!
//! Keys of one level are enumerated in a canonical order: row permutation by
//! lexicographic rank, then flip mask ascending, then skip ascending. The
//! position of a key in that order is its ordinal.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textcore::{Code, Grid};

/// Largest row count the key space supports.
pub const MAX_ROWS: usize = 12;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Multiplicative inverse of `a` modulo `n`, if it exists.
pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % n as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(n as i128) as u64)
}

/// Skips coprime to `n` up to `⌊(n−1)/2⌋`, ascending. Larger skips are
/// redundant with row reversal.
pub fn skip_set(n: usize) -> Vec<u64> {
    let n = n as u64;
    (1..=n.saturating_sub(1) / 2).filter(|&k| gcd(k, n) == 1).collect()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Lexicographic rank of a permutation of `0..len`.
pub fn perm_rank(perm: &[u8]) -> u64 {
    let n = perm.len();
    let mut rank = 0u64;
    for i in 0..n {
        let smaller_after = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count() as u64;
        rank += smaller_after * factorial(n - 1 - i);
    }
    rank
}

/// Inverse of [`perm_rank`].
pub fn perm_unrank(len: usize, mut rank: u64) -> Option<Vec<u8>> {
    if rank >= factorial(len) {
        return None;
    }
    let mut pool: Vec<u8> = (0..len as u8).collect();
    let mut perm = Vec::with_capacity(len);
    for i in (0..len).rev() {
        let f = factorial(i);
        let idx = (rank / f) as usize;
        rank %= f;
        perm.push(pool.remove(idx));
    }
    Some(perm)
}

/// One recursion step: row permutation, row flips, skip.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationKey {
    row_perm: Vec<u8>,
    flip_mask: u32,
    skip: u64,
}

impl PermutationKey {
    pub fn new(row_perm: Vec<u8>, flip_mask: u32, skip: u64) -> Result<Self> {
        let rows = row_perm.len();
        if rows == 0 || rows > MAX_ROWS {
            return Err(Error::InvalidKey(format!("row count {rows} outside 1..={MAX_ROWS}")));
        }
        let mut seen = vec![false; rows];
        for &r in &row_perm {
            if r as usize >= rows || std::mem::replace(&mut seen[r as usize], true) {
                return Err(Error::InvalidKey(format!("{row_perm:?} is not a permutation of 0..{rows}")));
            }
        }
        if flip_mask >> rows != 0 {
            return Err(Error::InvalidKey(format!("flip mask {flip_mask} has bits beyond {rows} rows")));
        }
        if skip == 0 {
            return Err(Error::InvalidKey("skip must be positive".into()));
        }
        Ok(PermutationKey {
            row_perm,
            flip_mask,
            skip,
        })
    }

    pub fn identity(rows: usize) -> Self {
        PermutationKey {
            row_perm: (0..rows as u8).collect(),
            flip_mask: 0,
            skip: 1,
        }
    }

    pub fn from_rank(rows: usize, rank: u64, flip_mask: u32, skip: u64) -> Result<Self> {
        let perm = perm_unrank(rows, rank)
            .ok_or_else(|| Error::InvalidKey(format!("permutation rank {rank} out of range for {rows} rows")))?;
        PermutationKey::new(perm, flip_mask, skip)
    }

    pub fn rows(&self) -> usize {
        self.row_perm.len()
    }

    pub fn row_perm(&self) -> &[u8] {
        &self.row_perm
    }

    pub fn flip_mask(&self) -> u32 {
        self.flip_mask
    }

    pub fn skip(&self) -> u64 {
        self.skip
    }

    pub fn perm_rank(&self) -> u64 {
        perm_rank(&self.row_perm)
    }

    fn flipped(&self, row: usize) -> bool {
        self.flip_mask >> row & 1 == 1
    }

    /// Checks that the key can be applied to a `rows × cols` grid.
    pub fn validate_for(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows() != rows {
            return Err(Error::Shape(format!("key for {} rows applied to {rows} rows", self.rows())));
        }
        let n = (rows * cols) as u64;
        if gcd(self.skip % n, n) != 1 {
            return Err(Error::InvalidKey(format!("skip {} is not coprime to {n}", self.skip)));
        }
        Ok(())
    }

    /// Gather map: `out[j] = in[src[j]]` for a `rows × cols` grid.
    pub fn source_indices(&self, cols: usize) -> Vec<usize> {
        let laid_out = self.laid_out_indices(cols);
        let n = laid_out.len();
        let skip = (self.skip % n as u64) as usize;
        let mut pos = 0usize;
        (0..n)
            .map(|_| {
                let src = laid_out[pos];
                pos += skip;
                if pos >= n {
                    pos -= n;
                }
                src
            })
            .collect()
    }

    /// Source index of each cell after the permute and flip steps.
    fn laid_out_indices(&self, cols: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.rows() * cols);
        for (i, &src_row) in self.row_perm.iter().enumerate() {
            let base = src_row as usize * cols;
            if self.flipped(i) {
                out.extend((0..cols).rev().map(|c| base + c));
            } else {
                out.extend((0..cols).map(|c| base + c));
            }
        }
        out
    }
}

impl fmt::Display for PermutationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.perm_rank(), self.flip_mask, self.skip)
    }
}

pub fn apply_key(grid: &Grid, key: &PermutationKey) -> Result<Grid> {
    key.validate_for(grid.rows(), grid.cols())?;
    let cells = grid.cells();
    let out = key.source_indices(grid.cols()).into_iter().map(|i| cells[i]).collect();
    Grid::new(grid.rows(), grid.cols(), out)
}

/// Undoes one [`PermutationKey`], step by step in reverse order.
#[derive(Debug, Clone)]
pub struct InverseKey {
    key: PermutationKey,
    inverse_skip: u64,
    len: u64,
}

impl InverseKey {
    pub fn inverse_skip(&self) -> u64 {
        self.inverse_skip
    }

    pub fn apply(&self, grid: &Grid) -> Result<Grid> {
        let (rows, cols) = (grid.rows(), grid.cols());
        if (rows * cols) as u64 != self.len {
            return Err(Error::Shape(format!("inverse built for {} cells, grid has {}", self.len, rows * cols)));
        }
        self.key.validate_for(rows, cols)?;
        let t = grid.cells();
        let n = t.len();
        // t[j] = s[j·skip]  ⇒  s[m] = t[m·skip⁻¹]
        let s: Vec<Code> = (0..n as u64).map(|m| t[((m * self.inverse_skip) % self.len) as usize]).collect();
        let mut old = vec![0; n];
        for (i, &src_row) in self.key.row_perm.iter().enumerate() {
            let row = &s[i * cols..(i + 1) * cols];
            let dst = &mut old[src_row as usize * cols..(src_row as usize + 1) * cols];
            dst.copy_from_slice(row);
            if self.key.flipped(i) {
                dst.reverse();
            }
        }
        Grid::new(rows, cols, old)
    }
}

pub fn invert_key(key: &PermutationKey, len: usize) -> Result<InverseKey> {
    let n = len as u64;
    let inverse_skip = mod_inverse(key.skip % n, n)
        .ok_or_else(|| Error::InvalidKey(format!("skip {} has no inverse modulo {n}", key.skip)))?;
    Ok(InverseKey {
        key: key.clone(),
        inverse_skip,
        len: n,
    })
}

/// One key per recursion level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyPath {
    keys: Vec<PermutationKey>,
}

impl KeyPath {
    pub fn new(keys: Vec<PermutationKey>) -> Result<Self> {
        let Some(first) = keys.first() else {
            return Err(Error::InvalidKey("key path is empty".into()));
        };
        if keys.iter().any(|k| k.rows() != first.rows()) {
            return Err(Error::InvalidKey("key path mixes row counts".into()));
        }
        Ok(KeyPath { keys })
    }

    pub fn keys(&self) -> &[PermutationKey] {
        &self.keys
    }

    pub fn rows(&self) -> usize {
        self.keys[0].rows()
    }

    /// Parses one `perm_rank,flip_mask,skip` line per level.
    pub fn parse(text: &str, rows: usize, context: &str) -> Result<Self> {
        let mut keys = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [rank, mask, skip] = fields[..] else {
                return Err(Error::parse(context, idx + 1, "expected `perm_rank,flip_mask,skip`"));
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| Error::parse(context, idx + 1, format!("{s:?}: {e}")))
            };
            let mask = u32::try_from(num(mask)?)
                .map_err(|_| Error::parse(context, idx + 1, "flip mask too large"))?;
            let key = PermutationKey::from_rank(rows, num(rank)?, mask, num(skip)?)
                .map_err(|e| Error::parse(context, idx + 1, e.to_string()))?;
            keys.push(key);
        }
        KeyPath::new(keys)
    }

    pub fn load(path: impl AsRef<Path>, rows: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeyPath::parse(&text, rows, &path.display().to_string())
    }

    /// The file form: one line per level.
    pub fn to_lines(&self) -> String {
        self.keys.iter().map(|k| format!("{k}\n")).collect()
    }
}

/// Compact single-line form, levels separated by `;`.
impl fmt::Display for KeyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.keys.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

pub fn apply_path(grid: &Grid, path: &KeyPath) -> Result<Grid> {
    path.keys.iter().try_fold(grid.clone(), |g, k| apply_key(&g, k))
}

/// Inverts a whole path by undoing levels last to first.
pub fn invert_path(grid: &Grid, path: &KeyPath) -> Result<Grid> {
    path.keys
        .iter()
        .rev()
        .try_fold(grid.clone(), |g, k| invert_key(k, g.len())?.apply(&g))
}

/// Applies a recorded path to a grid with the same row count and any column
/// count. Skips are taken modulo the new length and must stay coprime to it.
pub fn replay(grid: &Grid, path: &KeyPath) -> Result<Grid> {
    replay_keys(grid, path)?
        .iter()
        .try_fold(grid.clone(), |g, k| apply_key(&g, k))
}

/// Inverse of [`replay`] on the same grid shape.
pub fn replay_inverse(grid: &Grid, path: &KeyPath) -> Result<Grid> {
    let keys = replay_keys(grid, path)?;
    invert_path(grid, &KeyPath::new(keys)?)
}

fn replay_keys(grid: &Grid, path: &KeyPath) -> Result<Vec<PermutationKey>> {
    if path.rows() != grid.rows() {
        return Err(Error::Shape(format!(
            "key path has {} rows, grid has {}",
            path.rows(),
            grid.rows()
        )));
    }
    let n = grid.len() as u64;
    path.keys
        .iter()
        .enumerate()
        .map(|(level, k)| {
            let skip = k.skip % n;
            if gcd(skip, n) != 1 {
                return Err(Error::ReplayIncompatible {
                    level: level + 1,
                    skip: k.skip,
                    len: grid.len(),
                });
            }
            Ok(PermutationKey {
                skip: skip.max(1),
                ..k.clone()
            })
        })
        .collect()
}

/// The canonical enumeration of one level of keys for a grid shape.
#[derive(Debug, Clone)]
pub struct KeySpace {
    rows: usize,
    cols: usize,
    skips: Vec<u64>,
    perms: u64,
    masks: u64,
}

impl KeySpace {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || rows > MAX_ROWS || cols == 0 {
            return Err(Error::Shape(format!("no key space for a {rows}x{cols} grid")));
        }
        let skips = skip_set(rows * cols);
        if skips.is_empty() {
            return Err(Error::Shape(format!("a {rows}x{cols} grid has no usable skips")));
        }
        Ok(KeySpace {
            rows,
            cols,
            skips,
            perms: factorial(rows),
            masks: 1 << rows,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn skips(&self) -> &[u64] {
        &self.skips
    }

    /// Keys per level: `R! · 2^R · |skips|`.
    pub fn size(&self) -> u64 {
        self.perms * self.masks * self.skips.len() as u64
    }

    /// Number of distinct paths of `levels` keys.
    pub fn paths(&self, levels: u32) -> Option<u64> {
        self.size().checked_pow(levels)
    }

    pub fn key_at(&self, ordinal: u64) -> Option<PermutationKey> {
        if ordinal >= self.size() {
            return None;
        }
        let nskips = self.skips.len() as u64;
        let skip = self.skips[(ordinal % nskips) as usize];
        let rest = ordinal / nskips;
        let mask = (rest % self.masks) as u32;
        let rank = rest / self.masks;
        Some(PermutationKey {
            row_perm: perm_unrank(self.rows, rank)?,
            flip_mask: mask,
            skip,
        })
    }

    pub fn ordinal_of(&self, key: &PermutationKey) -> Option<u64> {
        if key.rows() != self.rows {
            return None;
        }
        let skip_idx = self.skips.binary_search(&key.skip).ok()? as u64;
        Some((key.perm_rank() * self.masks + key.flip_mask as u64) * self.skips.len() as u64 + skip_idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = PermutationKey> + '_ {
        (0..self.size()).map(|o| self.key_at(o).expect("ordinal in range"))
    }
}

pub fn enumerate_keys(rows: usize, cols: usize) -> Result<impl Iterator<Item = PermutationKey>> {
    let space = KeySpace::new(rows, cols)?;
    Ok((0..space.size()).map(move |o| space.key_at(o).expect("ordinal in range")))
}

/// Precomputed gather maps for every key of one level, for the search loop.
pub struct KeyTable {
    cells: usize,
    keys: usize,
    indices: Vec<u16>,
}

impl KeyTable {
    pub fn new(space: &KeySpace) -> Result<Self> {
        let len = space.rows * space.cols;
        if len > u16::MAX as usize + 1 {
            return Err(Error::Shape(format!("grid of {len} cells is too large for a key table")));
        }
        let size = space.size() as usize;
        let mut indices = Vec::with_capacity(size * len);
        let nskips = space.skips.len();
        for block in 0..size / nskips {
            let key = space.key_at((block * nskips) as u64).expect("ordinal in range");
            let laid_out = key.laid_out_indices(space.cols);
            for &skip in &space.skips {
                let skip = skip as usize;
                indices.extend((0..len).map(|j| laid_out[(j * skip) % len] as u16));
            }
        }
        Ok(KeyTable {
            cells: len,
            keys: size,
            indices,
        })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.keys
    }

    /// Writes the output of key `ordinal` on `src` into `dst`.
    #[inline]
    pub fn apply_into(&self, ordinal: usize, src: &[Code], dst: &mut [Code]) {
        let map = &self.indices[ordinal * self.cells..(ordinal + 1) * self.cells];
        for (d, &i) in dst.iter_mut().zip(map) {
            *d = src[i as usize];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textcore::reshape;

    #[test]
    fn skip_set_sizes() {
        let s = skip_set(85);
        assert_eq!(s.len(), 32);
        for k in [1, 2, 3, 4, 6, 7, 8, 9, 42] {
            assert!(s.contains(&k), "{k}");
        }
        for k in [5, 10, 17, 34, 43, 84] {
            assert!(!s.contains(&k), "{k}");
        }
        assert_eq!(skip_set(6), vec![1]);
        assert_eq!(skip_set(5), vec![1, 2]);
    }

    #[test]
    fn skip_set_nine_by_gcd_enumeration() {
        let expected: Vec<u64> = (1..=4u64).filter(|&k| (2..=k).all(|d| !(k % d == 0 && 9 % d == 0))).collect();
        assert_eq!(expected, vec![1, 2, 4]);
        assert_eq!(skip_set(9), expected);
    }

    #[test]
    fn key_space_counts() {
        let ks = KeySpace::new(5, 17).unwrap();
        assert_eq!(ks.size(), 120 * 32 * 32);
        assert_eq!(ks.paths(2), Some(15_099_494_400));
        assert_eq!(ks.key_at(0).unwrap(), PermutationKey::identity(5));
        assert_eq!(enumerate_keys(1, 5).unwrap().count(), 4);
        assert!(KeySpace::new(1, 2).is_err());
    }

    #[test]
    fn ordinal_round_trip() {
        let ks = KeySpace::new(3, 3).unwrap();
        for (o, key) in ks.iter().enumerate() {
            assert_eq!(ks.ordinal_of(&key), Some(o as u64));
        }
        let ks = KeySpace::new(5, 17).unwrap();
        for o in [0, 1, 31, 32, 1023, 1024, 77_777, 122_879] {
            assert_eq!(ks.ordinal_of(&ks.key_at(o).unwrap()), Some(o));
        }
        assert!(ks.key_at(122_880).is_none());
    }

    #[test]
    fn perm_rank_is_lexicographic() {
        let perms: Vec<Vec<u8>> = (0..24).map(|r| perm_unrank(4, r).unwrap()).collect();
        let mut sorted = perms.clone();
        sorted.sort();
        assert_eq!(perms, sorted);
        for (r, p) in perms.iter().enumerate() {
            assert_eq!(perm_rank(p), r as u64);
        }
        assert!(perm_unrank(4, 24).is_none());
    }

    #[test]
    fn row_swap_example() {
        let g = reshape(&[0, 1, 2, 3, 4, 5], 2).unwrap();
        let key = PermutationKey::new(vec![1, 0], 0, 1).unwrap();
        assert_eq!(apply_key(&g, &key).unwrap().cells(), &[3, 4, 5, 0, 1, 2]);
    }

    #[test]
    fn flip_and_skip_by_hand() {
        // rows [0,1,2],[3,4,5]; flip row 0 → s = 2,1,0,3,4,5; skip 5 → s[0],s[5],s[4],s[3],s[2],s[1]
        let g = reshape(&[0, 1, 2, 3, 4, 5], 2).unwrap();
        let key = PermutationKey::new(vec![0, 1], 0b01, 5).unwrap();
        assert_eq!(apply_key(&g, &key).unwrap().cells(), &[2, 5, 4, 3, 0, 1]);
    }

    #[test]
    fn identity_key_is_identity() {
        let g = reshape(&(0..85).map(|i| (i % 22) as u8).collect::<Vec<_>>(), 5).unwrap();
        let id = PermutationKey::identity(5);
        assert_eq!(apply_key(&g, &id).unwrap(), g);
        let inv = invert_key(&id, 85).unwrap();
        assert_eq!(inv.apply(&apply_key(&g, &id).unwrap()).unwrap(), g);
    }

    #[test]
    fn inverse_skip_from_extended_gcd() {
        // 2·43 = 86 ≡ 1 (mod 85)
        assert_eq!(mod_inverse(2, 85), Some(43));
        let key = PermutationKey::new(vec![0, 1, 2, 3, 4], 0, 2).unwrap();
        assert_eq!(invert_key(&key, 85).unwrap().inverse_skip(), 43);
        assert_eq!(mod_inverse(5, 85), None);
    }

    #[test]
    fn invalid_keys() {
        assert!(PermutationKey::new(vec![0, 0], 0, 1).is_err());
        assert!(PermutationKey::new(vec![0, 2], 0, 1).is_err());
        assert!(PermutationKey::new(vec![0, 1], 4, 1).is_err());
        assert!(PermutationKey::new(vec![0, 1], 0, 0).is_err());
        let g = reshape(&[0; 85], 5).unwrap();
        let bad = PermutationKey::new(vec![0, 1, 2, 3, 4], 0, 5).unwrap();
        assert!(matches!(apply_key(&g, &bad), Err(Error::InvalidKey(_))));
        let wrong_rows = PermutationKey::identity(4);
        assert!(matches!(apply_key(&g, &wrong_rows), Err(Error::Shape(_))));
    }

    #[test]
    fn path_is_left_fold() {
        let ks = KeySpace::new(5, 17).unwrap();
        let g = reshape(&(0..85).map(|i| (i * 7 % 22) as u8).collect::<Vec<_>>(), 5).unwrap();
        let (k1, k2) = (ks.key_at(4321).unwrap(), ks.key_at(98_765).unwrap());
        let path = KeyPath::new(vec![k1.clone(), k2.clone()]).unwrap();
        let direct = apply_key(&apply_key(&g, &k1).unwrap(), &k2).unwrap();
        assert_eq!(apply_path(&g, &path).unwrap(), direct);
        assert_eq!(invert_path(&direct, &path).unwrap(), g);
        let ids = KeyPath::new(vec![PermutationKey::identity(5); 2]).unwrap();
        assert_eq!(apply_path(&g, &ids).unwrap(), g);
    }

    #[test]
    fn key_path_text_round_trip() {
        let ks = KeySpace::new(5, 17).unwrap();
        let path = KeyPath::new(vec![ks.key_at(12).unwrap(), ks.key_at(122_879).unwrap()]).unwrap();
        let text = path.to_lines();
        assert_eq!(text, "0,0,16\n119,31,42\n");
        assert_eq!(KeyPath::parse(&text, 5, "t").unwrap(), path);
        assert_eq!(path.to_string(), "0,0,16;119,31,42");
        assert!(matches!(KeyPath::parse("0,0\n", 5, "t"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KeyPath::parse("999,0,1\n", 5, "t"), Err(Error::Parse { .. })));
        assert!(KeyPath::parse("# nothing\n", 5, "t").is_err());
    }

    #[test]
    fn replay_rules() {
        let ks = KeySpace::new(5, 17).unwrap();
        let g = reshape(&(0..85).map(|i| (i % 13) as u8).collect::<Vec<_>>(), 5).unwrap();
        let path = KeyPath::new(vec![ks.key_at(500).unwrap(), ks.key_at(60_001).unwrap()]).unwrap();
        assert_eq!(replay(&g, &path).unwrap(), apply_path(&g, &path).unwrap());

        let skip2 = KeyPath::new(vec![PermutationKey::new(vec![0, 1, 2, 3, 4], 0, 2).unwrap()]).unwrap();
        let g40 = reshape(&[0; 40], 5).unwrap();
        assert!(matches!(
            replay(&g40, &skip2),
            Err(Error::ReplayIncompatible { level: 1, skip: 2, len: 40 })
        ));

        let tall = reshape(&(0..305).map(|i| (i % 21) as u8).collect::<Vec<_>>(), 5).unwrap();
        let id = KeyPath::new(vec![PermutationKey::identity(5)]).unwrap();
        assert_eq!(replay(&tall, &id).unwrap(), tall);
    }

    #[test]
    fn key_table_matches_apply_key() {
        let ks = KeySpace::new(3, 3).unwrap();
        let table = KeyTable::new(&ks).unwrap();
        let g = reshape(&[0, 1, 2, 3, 4, 0, 1, 2, 3], 3).unwrap();
        let mut out = vec![0; 9];
        for (o, key) in ks.iter().enumerate() {
            table.apply_into(o, g.cells(), &mut out);
            assert_eq!(out, apply_key(&g, &key).unwrap().cells());
        }
    }

    /// All level-one outputs of `grid` over every perm and mask, with skips
    /// drawn from `skips`.
    fn outputs(grid: &Grid, skips: &[u64]) -> std::collections::BTreeSet<Vec<Code>> {
        let rows = grid.rows();
        let mut out = std::collections::BTreeSet::new();
        for rank in 0..factorial(rows) {
            for mask in 0..1u32 << rows {
                for &skip in skips {
                    let key = PermutationKey::from_rank(rows, rank, mask, skip).unwrap();
                    out.insert(apply_key(grid, &key).unwrap().into_cells());
                }
            }
        }
        out
    }

    #[test]
    fn upper_skips_mirror_lower_skips() {
        for (rows, cols) in [(1, 5), (1, 7), (2, 3), (2, 5), (3, 3), (3, 4)] {
            let n = rows * cols;
            let grid = Grid::new(rows, cols, (0..n as Code).collect()).unwrap();
            let full: Vec<u64> = (1..n as u64).filter(|&k| gcd(k, n as u64) == 1).collect();
            let half = skip_set(n);
            for rank in 0..factorial(rows) {
                for mask in 0..1u32 << rows {
                    for &s in &half {
                        let low = apply_key(&grid, &PermutationKey::from_rank(rows, rank, mask, s).unwrap()).unwrap();
                        let high = apply_key(&grid, &PermutationKey::from_rank(rows, rank, mask, n as u64 - s).unwrap()).unwrap();
                        let mirrored: Vec<Code> = (0..n).map(|j| low.cells()[(n - j) % n]).collect();
                        assert_eq!(high.cells(), &mirrored[..]);
                    }
                }
            }
            // with distinct symbols the upper half adds outputs the lower half lacks
            let (lower, all) = (outputs(&grid, &half), outputs(&grid, &full));
            assert!(lower.is_subset(&all));
            assert!(lower.len() < all.len(), "{rows}x{cols}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn apply_then_invert_is_identity(rows in 1usize..7, cols in 1usize..25, ord in any::<u64>(), cells in proptest::collection::vec(0u8..22, 200)) {
                prop_assume!(rows * cols >= 3);
                let ks = KeySpace::new(rows, cols).unwrap();
                let key = ks.key_at(ord % ks.size()).unwrap();
                let g = Grid::new(rows, cols, cells[..rows * cols].to_vec()).unwrap();
                let out = apply_key(&g, &key).unwrap();
                let mut a = g.cells().to_vec();
                let mut b = out.cells().to_vec();
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
                let back = invert_key(&key, g.len()).unwrap().apply(&out).unwrap();
                prop_assert_eq!(back, g);
            }
        }
    }
}
