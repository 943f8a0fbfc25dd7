//! Dense linear algebra over GF(2).
//!
//! Vectors are row vectors and multiply matrices from the left (`v · M`).
//! Bits are packed 64 per word, least significant bit first inside a word.
//! Index 0 of a [`BitVector`] is the leftmost character of its string form.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not invertible (rank {rank} < {size})")]
    NotInvertible { rank: usize, size: usize },
    #[error("invalid bit string {0:?}")]
    Parse(String),
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

fn tail_mask(bits: usize) -> u64 {
    match bits % WORD {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Writes the low `width` bits of `value`, most significant first.
    ///
    /// Bits of `value` above `width` are discarded.
    pub fn from_uint(value: u64, width: usize) -> Self {
        let mut v = Self::zeros(width);
        for i in 0..width {
            let shift = width - 1 - i;
            if shift < 64 && (value >> shift) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Reads the vector as an unsigned integer, most significant bit first.
    pub fn to_uint(&self) -> Option<u64> {
        let mut out = 0u64;
        for i in 0..self.len {
            if self.get(i) {
                let shift = self.len - 1 - i;
                if shift >= 64 {
                    return None;
                }
                out |= 1 << shift;
            }
        }
        Some(out)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let b = self.get(i);
        self.set(i, !b);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::Dimension(format!(
                "xor of vectors of length {} and {}",
                self.len, other.len
            )));
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitVector {
            len: self.len,
            words,
        })
    }

    /// Copies bits `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        assert!(start <= end && end <= self.len);
        let mut out = BitVector::zeros(end - start);
        for i in start..end {
            if self.get(i) {
                out.set(i - start, true);
            }
        }
        out
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BitVector>) -> BitVector {
        let parts: Vec<&BitVector> = parts.into_iter().collect();
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = BitVector::zeros(len);
        let mut at = 0;
        for p in parts {
            for i in 0..p.len {
                if p.get(i) {
                    out.set(at + i, true);
                }
            }
            at += p.len;
        }
        out
    }

    fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Gf2Error;

    /// Parses `0`/`1` characters; spaces and underscores are ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                ' ' | '_' => {}
                _ => return Err(Gf2Error::Parse(s.to_string())),
            }
        }
        Ok(BitVector::from_bits(&bits))
    }
}

/// A dense `rows × cols` matrix over GF(2), one packed bit row per matrix row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from equal-length row strings such as `["110", "011"]`.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, Gf2Error> {
        let parsed = rows
            .iter()
            .map(|r| r.as_ref().parse::<BitVector>())
            .collect::<Result<Vec<_>, _>>()?;
        let cols = parsed.first().map_or(0, BitVector::len);
        if parsed.iter().any(|r| r.len() != cols) {
            return Err(Gf2Error::Dimension("rows of unequal length".into()));
        }
        let mut m = Self::zeros(parsed.len(), cols);
        for (i, r) in parsed.iter().enumerate() {
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        Ok(m)
    }

    pub fn from_columns(columns: &[BitVector]) -> Result<Self, Gf2Error> {
        let rows = columns.first().map_or(0, BitVector::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Gf2Error::Dimension("columns of unequal length".into()));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            for i in 0..rows {
                if c.get(i) {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(
            r < self.rows && c < self.cols,
            "entry ({r},{c}) out of range"
        );
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(
            r < self.rows && c < self.cols,
            "entry ({r},{c}) out of range"
        );
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn column(&self, c: usize) -> BitVector {
        let mut v = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// `rows[dst] ^= rows[src]`
    fn xor_row_into(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s] as &[u64], &mut lo[dst * s..(dst + 1) * s])
        };
        for (d, w) in b.iter_mut().zip(a) {
            *d ^= w;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.data.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    /// The top-left `rows × cols` block.
    pub fn submatrix(&self, rows: usize, cols: usize) -> Result<BitMatrix, Gf2Error> {
        if rows > self.rows || cols > self.cols {
            return Err(Gf2Error::Dimension(format!(
                "{rows}x{cols} block of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut out = BitMatrix::zeros(rows, cols);
        let mask = tail_mask(cols);
        for r in 0..rows {
            let stride = out.stride;
            let dst = out.row_words_mut(r);
            dst.copy_from_slice(&self.row_words(r)[..stride]);
            if let Some(last) = dst.last_mut() {
                *last &= mask;
            }
        }
        Ok(out)
    }

    /// Horizontal concatenation `(A | B | ...)`; all blocks need the same row count.
    pub fn hconcat(blocks: &[BitMatrix]) -> Result<BitMatrix, Gf2Error> {
        let rows = blocks.first().map_or(0, BitMatrix::rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Gf2Error::Dimension(
                "hconcat of blocks with differing row counts".into(),
            ));
        }
        let cols = blocks.iter().map(BitMatrix::cols).sum();
        let mut out = BitMatrix::zeros(rows, cols);
        let mut at = 0;
        for b in blocks {
            for r in 0..rows {
                for c in 0..b.cols {
                    if b.get(r, c) {
                        out.set(r, at + c, true);
                    }
                }
            }
            at += b.cols;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let acc = vec_mat_mul(&self.row(r), other)?;
            out.row_words_mut(r).copy_from_slice(acc.words());
        }
        Ok(out)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            if r > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", self.row(r))?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        write!(f, "{self}")
    }
}

/// Row vector times matrix: `result[j] = XOR_i v[i] & m[i][j]`.
pub fn vec_mat_mul(v: &BitVector, m: &BitMatrix) -> Result<BitVector, Gf2Error> {
    if v.len() != m.rows {
        return Err(Gf2Error::Dimension(format!(
            "vector of length {} times {}x{} matrix",
            v.len(),
            m.rows,
            m.cols
        )));
    }
    let mut acc = BitVector::zeros(m.cols);
    for i in 0..m.rows {
        if v.get(i) {
            for (a, w) in acc.words.iter_mut().zip(m.row_words(i)) {
                *a ^= w;
            }
        }
    }
    Ok(acc)
}

/// Row-reduces `m` in place and returns its rank.
fn eliminate(m: &mut BitMatrix, mut companion: Option<&mut BitMatrix>) -> usize {
    let mut rank = 0;
    for col in 0..m.cols {
        if rank == m.rows {
            break;
        }
        let Some(pivot) = (rank..m.rows).find(|&r| m.get(r, col)) else {
            continue;
        };
        m.swap_rows(rank, pivot);
        if let Some(c) = companion.as_deref_mut() {
            c.swap_rows(rank, pivot);
        }
        for r in 0..m.rows {
            if r != rank && m.get(r, col) {
                m.xor_row_into(rank, r);
                if let Some(c) = companion.as_deref_mut() {
                    c.xor_row_into(rank, r);
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn rank(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    eliminate(&mut work, None)
}

/// Gauss-Jordan inversion. Fails with [`Gf2Error::NotInvertible`] on singular input.
pub fn invert(m: &BitMatrix) -> Result<BitMatrix, Gf2Error> {
    if !m.is_square() {
        return Err(Gf2Error::Dimension(format!(
            "cannot invert a non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut work = m.clone();
    let mut inv = BitMatrix::identity(n);
    let r = eliminate(&mut work, Some(&mut inv));
    if r < n {
        return Err(Gf2Error::NotInvertible { rank: r, size: n });
    }
    Ok(inv)
}

/// Uniform random matrix drawn from `rng`.
pub fn random_matrix_from<R: RngCore + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> BitMatrix {
    let mut m = BitMatrix::zeros(rows, cols);
    let mask = tail_mask(cols);
    for r in 0..rows {
        let row = m.row_words_mut(r);
        for w in row.iter_mut() {
            *w = rng.next_u64();
        }
        if let Some(last) = row.last_mut() {
            *last &= mask;
        }
    }
    m
}

/// Uniform random matrix, reproducible for a fixed `seed`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> BitMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_matrix_from(rows, cols, &mut rng)
}

pub fn random_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitVector {
    let mut v = BitVector::zeros(len);
    for i in 0..len {
        v.set(i, rng.random());
    }
    v
}

/// Independent generator for `stream` under `seed`; trials keyed this way give
/// the same draws regardless of scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
