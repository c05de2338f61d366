//! Binary linear block codes: construction, search, and syndrome decoding.
//!
//! A code is stored together with its generator `G` (k x n) and parity-check
//! matrix `H` ((n-k) x n). The rows of `H` later become the arms of the
//! measurement beams, so the column order of `H` is significant and is never
//! changed behind the caller's back.

use itertools::Itertools;
use thiserror::Error;

use crate::gf2::{Gf2Error, Gf2Matrix, Gf2Vector};

/// Largest code length the exhaustive machinery is sized for.
pub const MAX_CODE_LENGTH: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("minimum distance must be at least 1")]
    InvalidDistance,
    #[error("unsupported code length {0} (expected 1..={MAX_CODE_LENGTH})")]
    InvalidLength(usize),
    #[error("Hamming codes need at least 2 parity bits, got {0}")]
    InvalidParityBits(usize),
    #[error("no binary code of length {n} corrects {e} errors")]
    Infeasible { n: usize, e: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parity-check matrix does not define a code: {0}")]
    NotACode(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
}

/// Number of correctable errors for minimum distance `d`.
pub fn error_capability(d: usize) -> Result<usize, CodeError> {
    match d {
        0 => Err(CodeError::InvalidDistance),
        d if d % 2 == 1 => Ok((d - 1) / 2),
        d => Ok((d - 2) / 2),
    }
}

/// An `(n, k, d)` binary linear block code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearBlockCode {
    n: usize,
    k: usize,
    d: usize,
    generator: Gf2Matrix,
    parity_check: Gf2Matrix,
}

impl LinearBlockCode {
    /// Builds the code whose parity-check matrix is `h`.
    ///
    /// `h` must have full row rank and fewer rows than columns. The generator
    /// is the null space of `h` and the minimum distance is found by
    /// enumerating every codeword.
    pub fn from_parity_check(h: Gf2Matrix) -> Result<Self, CodeError> {
        let n = h.cols();
        if n > MAX_CODE_LENGTH {
            return Err(CodeError::InvalidLength(n));
        }
        let rank = h.rank();
        if rank != h.rows() {
            return Err(CodeError::NotACode(format!(
                "rank {rank} is below the {} rows",
                h.rows()
            )));
        }
        let generator = h
            .null_space()
            .ok_or_else(|| CodeError::NotACode("code has dimension 0".into()))?;
        let k = generator.rows();
        let d = brute_force_min_distance(&generator);
        Ok(Self {
            n,
            k,
            d,
            generator,
            parity_check: h,
        })
    }

    /// Reads a parity-check matrix in the plain-text matrix format.
    pub fn from_text(text: &str) -> Result<Self, CodeError> {
        Self::from_parity_check(Gf2Matrix::from_text(text)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of parity bits, which is also the number of measurements.
    pub fn redundancy(&self) -> usize {
        self.n - self.k
    }

    pub fn error_capability(&self) -> usize {
        error_capability(self.d).expect("d >= 1 for every constructed code")
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.generator
    }

    pub fn parity_check(&self) -> &Gf2Matrix {
        &self.parity_check
    }

    /// All `2^k` codewords, indexed by information word (bit `i` of the index
    /// selects generator row `i`).
    pub fn codewords(&self) -> Vec<Gf2Vector> {
        (0u64..1 << self.k)
            .map(|x| {
                self.generator
                    .left_mul(&Gf2Vector::from_u64(self.k, x))
                    .expect("k matches generator rows")
            })
            .collect()
    }

    pub fn syndrome(&self, r: &Gf2Vector) -> Result<Gf2Vector, CodeError> {
        if r.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                got: r.len(),
            });
        }
        Ok(self.parity_check.mul_transpose(r)?)
    }

    /// `(n,k,d)` label.
    pub fn label(&self) -> String {
        format!("({},{},{})", self.n, self.k, self.d)
    }
}

fn brute_force_min_distance(generator: &Gf2Matrix) -> usize {
    let k = generator.rows();
    let rows: Vec<u64> = generator
        .row_vectors()
        .iter()
        .map(Gf2Vector::to_u64)
        .collect();
    // Gray-code walk: consecutive information words differ in one bit.
    let mut word = 0u64;
    let mut best = usize::MAX;
    for i in 1u64..1 << k {
        let flip = i.trailing_zeros() as usize;
        word ^= rows[flip];
        best = best.min(word.count_ones() as usize);
    }
    best
}

/// Parity-check matrix of the (15,11,3) Hamming code in the column order
/// used for the 15-antenna beam tables.
pub fn hamming_15_parity_check() -> Gf2Matrix {
    Gf2Matrix::from_rows(&[
        [1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1],
        [0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0],
        [0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 0],
        [0, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1],
    ])
    .expect("static matrix")
}

/// Parity-check matrix of the shipped (8,2,5) code.
///
/// This is the first matrix found by [`search_code`] for `n = 8, e = 2`;
/// any (8,2,5) code gives the same measurement counts.
pub fn code_8_2_5_parity_check() -> Gf2Matrix {
    Gf2Matrix::from_rows(&[
        [1, 1, 1, 0, 0, 0, 0, 0],
        [1, 1, 0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 1, 0, 0, 0],
        [1, 0, 0, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0, 0, 1, 0],
        [0, 1, 0, 0, 0, 0, 0, 1],
    ])
    .expect("static matrix")
}

/// The `(2^r - 1, 2^r - 1 - r, 3)` Hamming code.
///
/// For `r = 4` the parity-check matrix is [`hamming_15_parity_check`].
/// Otherwise the columns are every nonzero `r`-bit pattern that is not a unit
/// vector, in increasing value with row 0 as the least significant bit,
/// followed by `I_r`.
pub fn hamming_code(r: usize) -> Result<LinearBlockCode, CodeError> {
    if r < 2 {
        return Err(CodeError::InvalidParityBits(r));
    }
    let n = (1usize << r) - 1;
    if n > MAX_CODE_LENGTH {
        return Err(CodeError::InvalidLength(n));
    }
    if r == 4 {
        return LinearBlockCode::from_parity_check(hamming_15_parity_check());
    }
    let mut columns: Vec<Gf2Vector> = (1u64..=n as u64)
        .filter(|v| v.count_ones() > 1)
        .map(|v| Gf2Vector::from_u64(r, v))
        .collect();
    columns.extend((0..r).map(|i| Gf2Vector::unit(r, i)));
    LinearBlockCode::from_parity_check(Gf2Matrix::from_columns(&columns)?)
}

/// Limits for [`search_code_with`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Backtracking nodes allowed per redundancy level before moving on to
    /// the next one.
    pub node_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            node_budget: 250_000,
        }
    }
}

/// Finds a length-`n` code that corrects `e_required` errors with as many
/// information bits as the search can reach.
pub fn search_code(n: usize, e_required: usize) -> Result<LinearBlockCode, CodeError> {
    search_code_with(n, e_required, SearchOptions::default())
}

/// Parity-check search.
///
/// Minimum distance `>= 2e+1` holds exactly when every `2e` columns of `H`
/// are independent. Without loss of generality `H = [P^T | I_m]`, so the
/// search starts from the `m` unit columns and adds `k = n - m` further
/// columns in increasing value, rejecting any column that is a sum of at
/// most `2e - 1` columns already chosen. Redundancy `m` starts at the
/// sphere-packing bound and grows until a code is found; `m = n - 1` (the
/// repetition code) always succeeds when `n >= 2e + 1`.
pub fn search_code_with(
    n: usize,
    e_required: usize,
    opts: SearchOptions,
) -> Result<LinearBlockCode, CodeError> {
    if n == 0 || n > MAX_CODE_LENGTH {
        return Err(CodeError::InvalidLength(n));
    }
    if e_required == 0 || n < 2 * e_required + 1 {
        return Err(CodeError::Infeasible { n, e: e_required });
    }
    let ball: u128 = (0..=e_required).map(|i| binomial(n, i) as u128).sum();
    let mut m = 1;
    while (1u128 << m) < ball {
        m += 1;
    }
    while m < n {
        let mut search = ColumnSearch::new(m, n - m, 2 * e_required - 1, opts.node_budget);
        if let Some(extra) = search.run() {
            let mut columns: Vec<Gf2Vector> =
                extra.iter().map(|&v| Gf2Vector::from_u64(m, v)).collect();
            columns.extend((0..m).map(|i| Gf2Vector::unit(m, i)));
            let code = LinearBlockCode::from_parity_check(Gf2Matrix::from_columns(&columns)?)?;
            debug_assert!(code.d > 2 * e_required);
            return Ok(code);
        }
        m += 1;
    }
    Err(CodeError::Infeasible { n, e: e_required })
}

/// The code a measurement plan uses for `n` antennas and `l` clusters:
/// Hamming codes when they match, the shipped (8,2,5) matrix for
/// `n = 8, l = 2`, and [`search_code`] otherwise.
pub fn matched_code(n: usize, l: usize) -> Result<LinearBlockCode, CodeError> {
    if l == 1 && n >= 3 && (n + 1).is_power_of_two() {
        return hamming_code((n + 1).trailing_zeros() as usize);
    }
    if n == 8 && l == 2 {
        return LinearBlockCode::from_parity_check(code_8_2_5_parity_check());
    }
    search_code(n, l)
}

struct ColumnSearch {
    m: usize,
    want: usize,
    max_sum: u8,
    budget: u64,
    nodes: u64,
    chosen: Vec<u64>,
}

impl ColumnSearch {
    fn new(m: usize, want: usize, max_sum: usize, budget: u64) -> Self {
        Self {
            m,
            want,
            max_sum: max_sum.min(u8::MAX as usize - 1) as u8,
            budget,
            nodes: 0,
            chosen: Vec::new(),
        }
    }

    fn run(&mut self) -> Option<Vec<u64>> {
        // reach[v]: fewest distinct chosen columns summing to v (unit columns included).
        let reach: Vec<u8> = (0u64..1 << self.m)
            .map(|v| v.count_ones().min(u8::MAX as u32) as u8)
            .collect();
        if self.descend(&reach, 1) {
            Some(self.chosen.clone())
        } else {
            None
        }
    }

    fn descend(&mut self, reach: &[u8], start: u64) -> bool {
        if self.chosen.len() == self.want {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let remaining = (self.want - self.chosen.len()) as u64;
        let top = 1u64 << self.m;
        let mut c = start;
        while c + remaining <= top {
            if c.count_ones() > 1 && reach[c as usize] > self.max_sum {
                let next: Vec<u8> = (0..top)
                    .map(|v| reach[v as usize].min(reach[(v ^ c) as usize].saturating_add(1)))
                    .collect();
                self.chosen.push(c);
                if self.descend(&next, c + 1) {
                    return true;
                }
                self.chosen.pop();
                if self.nodes > self.budget {
                    return false;
                }
            }
            c += 1;
        }
        false
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `c = x G`.
pub fn encode(x: &Gf2Vector, code: &LinearBlockCode) -> Result<Gf2Vector, CodeError> {
    if x.len() != code.k {
        return Err(CodeError::LengthMismatch {
            expected: code.k,
            got: x.len(),
        });
    }
    Ok(code.generator.left_mul(x)?)
}

/// Syndrome-to-coset-leader lookup.
///
/// Leaders are chosen by minimum weight, ties broken by the
/// lexicographically smallest support.
#[derive(Debug, Clone)]
pub struct StandardArray {
    redundancy: usize,
    leaders: Vec<Gf2Vector>,
}

impl StandardArray {
    pub fn new(code: &LinearBlockCode) -> Self {
        let m = code.redundancy();
        let n = code.n();
        let size = 1usize << m;
        let mut leaders: Vec<Option<Gf2Vector>> = vec![None; size];
        let mut filled = 0;
        'weights: for w in 0..=n {
            for support in (0..n).combinations(w) {
                let e = Gf2Vector::from_support(n, &support);
                let s = code.parity_check.mul_transpose(&e).expect("length n");
                let slot = &mut leaders[s.to_u64() as usize];
                if slot.is_none() {
                    *slot = Some(e);
                    filled += 1;
                    if filled == size {
                        break 'weights;
                    }
                }
            }
        }
        Self {
            redundancy: m,
            leaders: leaders
                .into_iter()
                .map(|l| l.expect("H has full row rank so every syndrome occurs"))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.leaders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaders.is_empty()
    }

    pub fn leader(&self, syndrome: &Gf2Vector) -> &Gf2Vector {
        assert_eq!(syndrome.len(), self.redundancy);
        &self.leaders[syndrome.to_u64() as usize]
    }

    /// `(syndrome, leader)` pairs in syndrome order.
    pub fn iter(&self) -> impl Iterator<Item = (Gf2Vector, &Gf2Vector)> {
        let m = self.redundancy;
        self.leaders
            .iter()
            .enumerate()
            .map(move |(s, e)| (Gf2Vector::from_u64(m, s as u64), e))
    }
}

/// Hard-decision decoding by table lookup: returns `(c_hat, e_hat)`.
pub fn syndrome_decode(
    r: &Gf2Vector,
    code: &LinearBlockCode,
    table: &StandardArray,
) -> Result<(Gf2Vector, Gf2Vector), CodeError> {
    let s = code.syndrome(r)?;
    let e_hat = table.leader(&s).clone();
    let c_hat = r ^ &e_hat;
    Ok((c_hat, e_hat))
}
