//! Dense linear algebra over GF(2).
//!
//! Vectors and matrices are stored as packed `u64` words. All arithmetic is
//! exact; floating point only appears in [`Gf2Matrix::lift_to_real`], which
//! reinterprets the 0/1 entries as reals.

use std::fmt;
use std::ops::BitXor;

use nalgebra::DMatrix;
use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("entry {0} is not a binary digit")]
    InvalidEntry(u8),
    #[error("rows are linearly dependent: rank {rank} < {rows}")]
    RankDeficient { rank: usize, rows: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A binary row vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Vector {
    len: usize,
    words: Vec<u64>,
}

impl Gf2Vector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// The single-bit pattern with a one at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self, Gf2Error> {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(i, true),
                other => return Err(Gf2Error::InvalidEntry(other)),
            }
        }
        Ok(v)
    }

    /// Builds a vector with ones at the listed positions.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = Self::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "index {index} out of range {}", self.len);
        (self.words[index / WORD] >> (index % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "index {index} out of range {}", self.len);
        let mask = 1u64 << (index % WORD);
        if value {
            self.words[index / WORD] |= mask;
        } else {
            self.words[index / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        assert!(index < self.len);
        self.words[index / WORD] ^= 1u64 << (index % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place XOR. Panics on length mismatch.
    pub fn xor_assign(&mut self, other: &Gf2Vector) {
        assert_eq!(self.len, other.len, "vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Inner product over GF(2).
    pub fn dot(&self, other: &Gf2Vector) -> bool {
        assert_eq!(self.len, other.len, "vector length mismatch");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones % 2 == 1
    }

    /// Positions holding a one, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Packs the vector into an integer with entry `i` at bit `i`.
    /// Only valid for vectors of at most 64 entries.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "vector too long to pack into u64");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn from_u64(len: usize, value: u64) -> Self {
        assert!(len <= WORD);
        let mut v = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD {
                u64::MAX
            } else {
                (1u64 << len) - 1
            };
            v.words[0] = value & mask;
        }
        v
    }

    pub fn hamming_distance(&self, other: &Gf2Vector) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

impl BitXor for &Gf2Vector {
    type Output = Gf2Vector;

    fn bitxor(self, rhs: &Gf2Vector) -> Gf2Vector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

impl fmt::Debug for Gf2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, "]")
    }
}

/// Dense binary matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    cols: usize,
    rows: Vec<Gf2Vector>,
}

/// Column permutation returned by [`Gf2Matrix::systematic_form`].
///
/// Column `j` of the permuted matrix is column `perm[j]` of the original.
pub type ColumnPermutation = Vec<usize>;

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        if rows == 0 || cols == 0 {
            return Err(Gf2Error::Empty);
        }
        Ok(Self {
            cols,
            rows: vec![Gf2Vector::zeros(cols); rows],
        })
    }

    pub fn identity(n: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, true);
        }
        Ok(m)
    }

    /// Builds a matrix from rows of 0/1 digits.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let first = rows.first().ok_or(Gf2Error::Empty)?;
        let cols = first.as_ref().len();
        if cols == 0 {
            return Err(Gf2Error::Empty);
        }
        let rows = rows
            .iter()
            .map(|r| {
                let r = r.as_ref();
                if r.len() != cols {
                    return Err(Gf2Error::Shape(format!(
                        "ragged rows: expected {cols} columns, got {}",
                        r.len()
                    )));
                }
                Gf2Vector::from_bits(r)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { cols, rows })
    }

    pub fn from_vectors(rows: Vec<Gf2Vector>) -> Result<Self, Gf2Error> {
        let cols = rows.first().ok_or(Gf2Error::Empty)?.len();
        if cols == 0 {
            return Err(Gf2Error::Empty);
        }
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Gf2Error::Shape("ragged rows".into()));
        }
        Ok(Self { cols, rows })
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(columns: &[Gf2Vector]) -> Result<Self, Gf2Error> {
        let rows = columns.first().ok_or(Gf2Error::Empty)?.len();
        let mut m = Self::zeros(rows, columns.len())?;
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Gf2Error::Shape("ragged columns".into()));
            }
            for i in c.support() {
                m.set(i, j, true);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.rows[i].set(j, value)
    }

    pub fn row(&self, i: usize) -> &Gf2Vector {
        &self.rows[i]
    }

    pub fn row_vectors(&self) -> &[Gf2Vector] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Gf2Vector {
        assert!(j < self.cols);
        let mut c = Gf2Vector::zeros(self.rows());
        for (i, r) in self.rows.iter().enumerate() {
            if r.get(j) {
                c.set(i, true);
            }
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows()).expect("non-empty by invariant");
        for (i, r) in self.rows.iter().enumerate() {
            for j in r.support() {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Gf2Vector::is_zero)
    }

    /// Matrix product over GF(2).
    pub fn matmul(&self, other: &Gf2Matrix) -> Result<Gf2Matrix, Gf2Error> {
        if self.cols != other.rows() {
            return Err(Gf2Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols,
                other.rows(),
                other.cols
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = Gf2Vector::zeros(other.cols);
                for t in r.support() {
                    acc.xor_assign(&other.rows[t]);
                }
                acc
            })
            .collect();
        Ok(Gf2Matrix {
            cols: other.cols,
            rows,
        })
    }

    /// Row vector times matrix, `x * self`.
    pub fn left_mul(&self, x: &Gf2Vector) -> Result<Gf2Vector, Gf2Error> {
        if x.len() != self.rows() {
            return Err(Gf2Error::Shape(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows()
            )));
        }
        let mut acc = Gf2Vector::zeros(self.cols);
        for t in x.support() {
            acc.xor_assign(&self.rows[t]);
        }
        Ok(acc)
    }

    /// `x * self^T`, i.e. the syndrome of `x` when `self` is a parity-check matrix.
    pub fn mul_transpose(&self, x: &Gf2Vector) -> Result<Gf2Vector, Gf2Error> {
        if x.len() != self.cols {
            return Err(Gf2Error::Shape(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut s = Gf2Vector::zeros(self.rows());
        for (i, r) in self.rows.iter().enumerate() {
            if r.dot(x) {
                s.set(i, true);
            }
        }
        Ok(s)
    }

    /// Reduced row echelon form. Pivots are taken column by column, choosing
    /// the lowest-index row with a one. Returns the reduced matrix (zero rows
    /// kept at the bottom) and the pivot columns.
    pub fn rref(&self) -> (Gf2Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..m.cols {
            if next == m.rows() {
                break;
            }
            let Some(p) = (next..m.rows()).find(|&r| m.rows[r].get(col)) else {
                continue;
            };
            m.rows.swap(next, p);
            let pivot_row = m.rows[next].clone();
            for r in 0..m.rows() {
                if r != next && m.rows[r].get(col) {
                    m.rows[r].xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Reorders columns: column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Gf2Matrix, Gf2Error> {
        if perm.len() != self.cols {
            return Err(Gf2Error::Shape("permutation length".into()));
        }
        let cols: Vec<_> = perm.iter().map(|&j| self.column(j)).collect();
        Gf2Matrix::from_columns(&cols)
    }

    /// Brings a full-row-rank generator into the form `[I_k | P]`.
    ///
    /// Row operations are applied freely; columns are only moved when the
    /// pivot columns are not already the leading `k`. The returned
    /// permutation says where each output column came from.
    pub fn systematic_form(&self) -> Result<(Gf2Matrix, ColumnPermutation), Gf2Error> {
        let (reduced, pivots) = self.rref();
        if pivots.len() < self.rows() {
            return Err(Gf2Error::RankDeficient {
                rank: pivots.len(),
                rows: self.rows(),
            });
        }
        let mut perm = pivots.clone();
        perm.extend((0..self.cols).filter(|j| !pivots.contains(j)));
        let out = if perm.iter().enumerate().all(|(i, &j)| i == j) {
            reduced
        } else {
            reduced.permute_columns(&perm)?
        };
        Ok((out, perm))
    }

    /// Basis of `{x : self * x^T = 0}`, one vector per row of the result.
    ///
    /// Returns `None` when the null space is trivial.
    pub fn null_space(&self) -> Option<Gf2Matrix> {
        let (reduced, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|j| !pivots.contains(j)).collect();
        if free.is_empty() {
            return None;
        }
        let basis = free
            .iter()
            .map(|&f| {
                let mut v = Gf2Vector::unit(self.cols, f);
                for (r, &p) in pivots.iter().enumerate() {
                    if reduced.get(r, f) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect();
        Some(Gf2Matrix {
            cols: self.cols,
            rows: basis,
        })
    }

    /// Same shape, entries reinterpreted as the reals 0.0 and 1.0.
    pub fn lift_to_real(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.cols, |i, j| {
            if self.get(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Plain-text form: one row per line, entries separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let line: Vec<String> = r.to_bits().iter().map(u8::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the format written by [`Gf2Matrix::to_text`]. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Gf2Matrix, Gf2Error> {
        let mut rows = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| match tok {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Gf2Error::Parse {
                        line: no + 1,
                        msg: format!("unexpected token {other:?}"),
                    }),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            rows.push(row);
        }
        Gf2Matrix::from_rows(&rows)
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r:?}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Rank of a 0/1 matrix taken over the rationals.
///
/// Uses fraction-free (Bareiss) elimination on integers, so the result is
/// exact. This is the independent route for checking that GF(2)
/// independence survives the lift to the reals.
pub fn rational_rank(m: &Gf2Matrix) -> usize {
    let rows = m.rows();
    let cols = m.cols();
    let mut a: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..cols).map(|j| m.get(i, j) as i128).collect())
        .collect();
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
            }
            a[r][col] = 0;
        }
        prev = a[rank][col];
        rank += 1;
    }
    rank
}
