//! Syndrome lookup tables and the two-stage beam discovery procedure.
//!
//! A table enumerates every measurable sparse channel (at most `L` nonzero
//! bins, gains from a finite alphabet) together with its ideal syndrome
//! `H q`. Decoding a received syndrome picks the entry at the smallest
//! Euclidean distance.

use std::sync::Arc;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beams::MeasurementPlan;
use crate::channel::ChannelMatrix;
use crate::codes::{binomial, LinearBlockCode};
use crate::gf2::Gf2Matrix;
use crate::json::ComplexJson;
use crate::measure::{measure_syndrome, AdcConfig, MeasureError, NoiseConfig, Pilot};

/// Default cap on the number of table entries.
pub const DEFAULT_TABLE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("gain alphabet must be nonempty")]
    EmptyAlphabet,
    #[error("gain alphabet contains zero")]
    ZeroGain,
    #[error("gain alphabet contains {0} more than once")]
    DuplicateGain(Complex64),
    #[error("gain alphabet contains a non-finite value")]
    NonFiniteGain,
    #[error("table would hold {entries} entries, above the budget of {budget}")]
    Capacity { entries: u128, budget: u64 },
    #[error("syndrome has length {got}, table expects {expected}")]
    SyndromeLength { expected: usize, got: usize },
    #[error("table scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("table has {got} antennas but the {side} array has {expected}")]
    TableMismatch {
        side: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("a transmit table is required for more than one TX antenna")]
    MissingTxTable,
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Finite set of nonzero complex gains a table may assign to a bin.
#[derive(Debug, Clone, PartialEq)]
pub struct GainAlphabet {
    values: Vec<Complex64>,
}

impl GainAlphabet {
    pub fn new(values: Vec<Complex64>) -> Result<Self, DiscoveryError> {
        if values.is_empty() {
            return Err(DiscoveryError::EmptyAlphabet);
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(DiscoveryError::NonFiniteGain);
            }
            if v.norm() == 0.0 {
                return Err(DiscoveryError::ZeroGain);
            }
            if values[..i].contains(v) {
                return Err(DiscoveryError::DuplicateGain(*v));
            }
        }
        Ok(Self { values })
    }

    /// The alphabet `{1}`.
    pub fn unit() -> Self {
        Self {
            values: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Nonzero points `a + jb` of the integer lattice with `|a|, |b| <= max_level`,
    /// `a` ascending then `b` ascending.
    pub fn lattice(max_level: i64) -> Self {
        let values = (-max_level..=max_level)
            .cartesian_product(-max_level..=max_level)
            .filter(|&(a, b)| (a, b) != (0, 0))
            .map(|(a, b)| Complex64::new(a as f64, b as f64))
            .collect();
        Self { values }
    }

    /// Lattice of ADC output values in units of one quantization step.
    pub fn adc_lattice(adc: &AdcConfig) -> Self {
        Self::lattice(adc.max_level())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `sum_{t <= l} C(n, t) * alphabet^t`.
pub fn table_size(n: usize, l: usize, alphabet: usize) -> u128 {
    (0..=l.min(n))
        .map(|t| binomial(n, t) as u128 * (alphabet as u128).saturating_pow(t as u32))
        .fold(0u128, u128::saturating_add)
}

/// One measurable channel: nonzero bins and their gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseChannel {
    pub support: Vec<usize>,
    #[serde(with = "crate::json::complex_vec")]
    pub gains: Vec<Complex64>,
}

impl SparseChannel {
    pub fn to_dense(&self, n: usize, scale: f64) -> DVector<Complex64> {
        let mut q = DVector::zeros(n);
        for (&p, &g) in self.support.iter().zip(&self.gains) {
            q[p] = g * scale;
        }
        q
    }
}

#[derive(Debug)]
struct TableData {
    n: usize,
    m: usize,
    l: usize,
    parity_check: Gf2Matrix,
    alphabet: GainAlphabet,
    /// Row-major `entries x m`, at unit scale.
    syndromes: Vec<Complex64>,
    channels: Vec<SparseChannel>,
}

/// Immutable syndrome table. Cloning shares the entries.
///
/// Entries are stored at unit scale; `scale` multiplies both syndromes and
/// gains, so one enumeration serves every ADC step size.
#[derive(Debug, Clone)]
pub struct SyndromeTable {
    data: Arc<TableData>,
    scale: f64,
}

/// Enumerates supports of size `0..=l` (smaller first, lexicographic), then
/// gain tuples in alphabet order.
pub fn build_table(
    code: &LinearBlockCode,
    l: usize,
    alphabet: &GainAlphabet,
) -> Result<SyndromeTable, DiscoveryError> {
    build_table_with_budget(code, l, alphabet, DEFAULT_TABLE_BUDGET)
}

pub fn build_table_with_budget(
    code: &LinearBlockCode,
    l: usize,
    alphabet: &GainAlphabet,
    budget: u64,
) -> Result<SyndromeTable, DiscoveryError> {
    let h = code.parity_check();
    let (n, m) = (h.cols(), h.rows());
    let entries = table_size(n, l, alphabet.len());
    if entries > budget as u128 {
        return Err(DiscoveryError::Capacity { entries, budget });
    }
    let hr = h.lift_to_real();
    let mut syndromes = Vec::with_capacity(entries as usize * m);
    let mut channels = Vec::with_capacity(entries as usize);
    for t in 0..=l.min(n) {
        for support in (0..n).combinations(t) {
            for gains in (0..t)
                .map(|_| alphabet.values().iter().copied())
                .multi_cartesian_product()
            {
                for i in 0..m {
                    let y: Complex64 = support
                        .iter()
                        .zip(&gains)
                        .map(|(&p, &g)| g * hr[(i, p)])
                        .sum();
                    syndromes.push(y);
                }
                channels.push(SparseChannel {
                    support: support.clone(),
                    gains,
                });
            }
        }
    }
    // multi_cartesian_product yields nothing for zero factors.
    if channels.first().is_none_or(|c| !c.support.is_empty()) {
        syndromes.splice(0..0, std::iter::repeat_n(Complex64::new(0.0, 0.0), m));
        channels.insert(
            0,
            SparseChannel {
                support: Vec::new(),
                gains: Vec::new(),
            },
        );
    }
    Ok(SyndromeTable {
        data: Arc::new(TableData {
            n,
            m,
            l,
            parity_check: h.clone(),
            alphabet: alphabet.clone(),
            syndromes,
            channels,
        }),
        scale: 1.0,
    })
}

impl SyndromeTable {
    /// Same entries with syndromes and gains multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Result<Self, DiscoveryError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DiscoveryError::InvalidScale(scale));
        }
        Ok(Self {
            data: Arc::clone(&self.data),
            scale,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Code length, the number of angular bins.
    pub fn n(&self) -> usize {
        self.data.n
    }

    /// Syndrome length.
    pub fn m(&self) -> usize {
        self.data.m
    }

    pub fn max_paths(&self) -> usize {
        self.data.l
    }

    pub fn parity_check(&self) -> &Gf2Matrix {
        &self.data.parity_check
    }

    pub fn alphabet(&self) -> &GainAlphabet {
        &self.data.alphabet
    }

    pub fn len(&self) -> usize {
        self.data.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.channels.is_empty()
    }

    /// Syndrome of entry `index` at this table's scale.
    pub fn syndrome(&self, index: usize) -> DVector<Complex64> {
        let m = self.data.m;
        DVector::from_iterator(
            m,
            self.data.syndromes[index * m..(index + 1) * m]
                .iter()
                .map(|&z| z * self.scale),
        )
    }

    /// Channel of entry `index` at unit scale.
    pub fn channel(&self, index: usize) -> &SparseChannel {
        &self.data.channels[index]
    }

    /// Dense channel of entry `index` at this table's scale.
    pub fn channel_vector(&self, index: usize) -> DVector<Complex64> {
        self.data.channels[index].to_dense(self.data.n, self.scale)
    }

    /// Index of the entry closest to `y`; ties go to the lower index.
    pub fn nearest_index(&self, y: &DVector<Complex64>) -> Result<usize, DiscoveryError> {
        let m = self.data.m;
        if y.len() != m {
            return Err(DiscoveryError::SyndromeLength {
                expected: m,
                got: y.len(),
            });
        }
        let target: Vec<Complex64> = y.iter().map(|&z| z / self.scale).collect();
        let mut best = (0usize, f64::INFINITY);
        for (idx, row) in self.data.syndromes.chunks_exact(m.max(1)).enumerate() {
            let mut d = 0.0;
            for (a, b) in row.iter().zip(&target) {
                d += (a - b).norm_sqr();
                if d >= best.1 {
                    break;
                }
            }
            if d < best.1 {
                best = (idx, d);
            }
        }
        Ok(best.0)
    }

    /// `xi(y)`: the dense channel of the nearest entry.
    pub fn nearest(&self, y: &DVector<Complex64>) -> Result<DVector<Complex64>, DiscoveryError> {
        Ok(self.channel_vector(self.nearest_index(y)?))
    }

    pub fn to_json(&self) -> TableJson {
        let d = &self.data;
        TableJson {
            n: d.n,
            m: d.m,
            l: d.l,
            scale: self.scale,
            parity_check: d.parity_check.to_text(),
            alphabet: d.alphabet.values().iter().map(|&z| z.into()).collect(),
            entries: (0..self.len())
                .map(|i| {
                    let row = &d.syndromes[i * d.m..(i + 1) * d.m];
                    TableEntryJson {
                        syndrome_re: row.iter().map(|z| z.re).collect(),
                        syndrome_im: row.iter().map(|z| z.im).collect(),
                        channel: d.channels[i].clone(),
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(json: TableJson) -> Result<Self, DiscoveryError> {
        let bad = |msg: String| DiscoveryError::Malformed(msg);
        let h = Gf2Matrix::from_text(&json.parity_check).map_err(|e| bad(e.to_string()))?;
        if h.rows() != json.m || h.cols() != json.n {
            return Err(bad(format!(
                "parity check is {}x{}, header says {}x{}",
                h.rows(),
                h.cols(),
                json.m,
                json.n
            )));
        }
        let alphabet = GainAlphabet::new(json.alphabet.into_iter().map(Into::into).collect())?;
        let mut syndromes = Vec::with_capacity(json.entries.len() * json.m);
        let mut channels = Vec::with_capacity(json.entries.len());
        for (i, e) in json.entries.into_iter().enumerate() {
            if e.syndrome_re.len() != json.m || e.syndrome_im.len() != json.m {
                return Err(bad(format!("entry {i} has a syndrome of the wrong length")));
            }
            let c = &e.channel;
            if c.support.len() != c.gains.len()
                || c.support.len() > json.l
                || c.support.iter().any(|&p| p >= json.n)
            {
                return Err(bad(format!("entry {i} has an invalid channel")));
            }
            syndromes.extend(
                e.syndrome_re
                    .iter()
                    .zip(&e.syndrome_im)
                    .map(|(&re, &im)| Complex64::new(re, im)),
            );
            channels.push(e.channel);
        }
        if channels.is_empty() {
            return Err(bad("table has no entries".into()));
        }
        let table = SyndromeTable {
            data: Arc::new(TableData {
                n: json.n,
                m: json.m,
                l: json.l,
                parity_check: h,
                alphabet,
                syndromes,
                channels,
            }),
            scale: 1.0,
        };
        table.scaled(json.scale)
    }

    /// True when this table was enumerated from `code`, `l` and `alphabet`.
    pub fn matches(&self, code: &LinearBlockCode, l: usize, alphabet: &GainAlphabet) -> bool {
        self.data.parity_check == *code.parity_check()
            && self.data.l == l
            && self.data.alphabet == *alphabet
    }
}

/// Serialized table, syndromes at unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableJson {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub scale: f64,
    pub parity_check: String,
    pub alphabet: Vec<ComplexJson>,
    pub entries: Vec<TableEntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntryJson {
    pub syndrome_re: Vec<f64>,
    pub syndrome_im: Vec<f64>,
    pub channel: SparseChannel,
}

/// Decoding tables for both ends of the link.
#[derive(Debug, Clone)]
pub struct DiscoveryTables {
    pub rx: SyndromeTable,
    /// Unused when the transmitter has a single antenna.
    pub tx: Option<SyndromeTable>,
}

impl DiscoveryTables {
    pub fn scaled(&self, scale: f64) -> Result<Self, DiscoveryError> {
        Ok(Self {
            rx: self.rx.scaled(scale)?,
            tx: self.tx.as_ref().map(|t| t.scaled(scale)).transpose()?,
        })
    }

    pub fn to_json(&self) -> TablesJson {
        TablesJson {
            rx: self.rx.to_json(),
            tx: self.tx.as_ref().map(SyndromeTable::to_json),
        }
    }

    pub fn from_json(json: TablesJson) -> Result<Self, DiscoveryError> {
        Ok(Self {
            rx: SyndromeTable::from_json(json.rx)?,
            tx: json.tx.map(SyndromeTable::from_json).transpose()?,
        })
    }
}

/// Table cache file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesJson {
    pub rx: TableJson,
    pub tx: Option<TableJson>,
}

/// Output of one discovery run with the intermediate quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    /// Estimated angular channel, `n_r x n_t`.
    pub qa_hat: DMatrix<Complex64>,
    /// Received syndrome for each precoder.
    pub rx_syndromes: Vec<DVector<Complex64>>,
    /// `q^a(j)`, the RX-side estimate for each precoder (including `s`).
    pub rx_estimates: Vec<DVector<Complex64>>,
    /// Nonzero TX syndromes, keyed by RX bin.
    pub tx_syndromes: Vec<(usize, DVector<Complex64>)>,
}

impl DiscoveryResult {
    /// Number of times the TX table was consulted.
    pub fn tx_lookups(&self) -> usize {
        self.tx_syndromes.len()
    }
}

/// Two-stage discovery.
///
/// For each precoder the `m_1` combiner outputs are decoded with the RX
/// table. Entry `p` of those estimates across precoders forms the TX
/// syndrome of RX bin `p`, which is decoded with the TX table when nonzero.
/// The result is divided by the pilot symbol.
#[allow(clippy::too_many_arguments)]
pub fn discover<R: Rng + ?Sized>(
    q: &ChannelMatrix,
    plan: &MeasurementPlan,
    tables: &DiscoveryTables,
    pilot: &Pilot,
    noise: &NoiseConfig,
    adc: Option<&AdcConfig>,
    rng: &mut R,
) -> Result<DiscoveryResult, DiscoveryError> {
    let g = &plan.geometry;
    if tables.rx.n() != g.n_r {
        return Err(DiscoveryError::TableMismatch {
            side: "RX",
            expected: g.n_r,
            got: tables.rx.n(),
        });
    }
    let tx_table = if plan.precoders.is_empty() {
        None
    } else {
        let t = tables.tx.as_ref().ok_or(DiscoveryError::MissingTxTable)?;
        if t.n() != g.n_t {
            return Err(DiscoveryError::TableMismatch {
                side: "TX",
                expected: g.n_t,
                got: t.n(),
            });
        }
        Some(t)
    };

    let mut rx_syndromes = Vec::with_capacity(plan.precoder_rounds());
    let mut rx_estimates = Vec::with_capacity(plan.precoder_rounds());
    for j in 0..plan.precoder_rounds() {
        let y = measure_syndrome(q, plan, j, pilot, noise, adc, rng)?;
        rx_estimates.push(tables.rx.nearest(&y)?);
        rx_syndromes.push(y);
    }

    let s = pilot.symbol();
    let mut qa_hat = DMatrix::zeros(g.n_r, g.n_t);
    let mut tx_syndromes = Vec::new();
    match tx_table {
        None => {
            qa_hat.set_column(0, &(&rx_estimates[0] / Complex64::new(s, 0.0)));
        }
        Some(t) => {
            for p in 0..g.n_r {
                let y_tx =
                    DVector::from_iterator(rx_estimates.len(), rx_estimates.iter().map(|q| q[p]));
                if y_tx.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let row = t.nearest(&y_tx)?;
                for k in 0..g.n_t {
                    qa_hat[(p, k)] = row[k] / s;
                }
                tx_syndromes.push((p, y_tx));
            }
        }
    }
    Ok(DiscoveryResult {
        qa_hat,
        rx_syndromes,
        rx_estimates,
        tx_syndromes,
    })
}

/// Outcome of the pairwise-distinctness check on a table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyReport {
    pub entries: usize,
    /// Smallest distance between two entry syndromes; `None` for a single entry.
    pub min_delta: Option<f64>,
    /// Entry indices of a closest pair.
    pub closest_pair: Option<(usize, usize)>,
    pub passed: bool,
    /// Two distinct channels sharing a syndrome, when the check fails.
    pub collision: Option<(SparseChannel, SparseChannel)>,
}

/// Relative distance below which two syndromes count as equal.
const COLLISION_TOLERANCE: f64 = 1e-9;

/// Builds the table and checks that its syndromes are pairwise distinct.
pub fn sufficiency_check(
    code: &LinearBlockCode,
    l: usize,
    alphabet: &GainAlphabet,
) -> Result<SufficiencyReport, DiscoveryError> {
    Ok(table_sufficiency(&build_table(code, l, alphabet)?))
}

/// Dominant principal axis of the syndromes viewed as real `2m`-vectors,
/// by power iteration on the covariance matrix.
fn principal_direction(syndromes: &[Complex64], m: usize) -> Vec<f64> {
    let dims = 2 * m;
    let count = syndromes.len() / m.max(1);
    let rows = || {
        syndromes
            .chunks_exact(m.max(1))
            .map(|r| r.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>())
    };
    let mut mean = vec![0.0; dims];
    for r in rows() {
        for (a, x) in mean.iter_mut().zip(&r) {
            *a += x / count.max(1) as f64;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(dims, dims);
    for r in rows() {
        let c = DVector::from_iterator(dims, r.iter().zip(&mean).map(|(x, u)| x - u));
        cov += &c * c.transpose();
    }
    // Irrational start keeps ties between symmetric axes from cancelling.
    let mut v = DVector::from_fn(dims, |i, _| {
        1.0 + 0.618_033_988_749_895 * (i as f64 + 1.0).sqrt()
    });
    for _ in 0..100 {
        let next = &cov * &v;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        v = next / norm;
    }
    let norm = v.norm();
    v.iter().map(|x| x / norm).collect()
}

/// Minimum pairwise syndrome distance of a table.
///
/// Entries are sorted by their projection on a fixed direction; a pair can
/// only be closer than the current best if their projections are.
pub fn table_sufficiency(table: &SyndromeTable) -> SufficiencyReport {
    let d = &table.data;
    let (m, count) = (d.m, d.channels.len());
    let dims = 2 * m;
    let real = |i: usize| {
        d.syndromes[i * m..(i + 1) * m]
            .iter()
            .flat_map(|z| [z.re, z.im])
    };
    let direction = principal_direction(&d.syndromes, m);
    let mut keyed: Vec<(f64, usize)> = (0..count)
        .map(|i| (real(i).zip(&direction).map(|(x, w)| x * w).sum(), i))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Syndromes in sorted order, contiguous, so the sweep reads memory linearly.
    let points: Vec<f64> = keyed.iter().flat_map(|&(_, i)| real(i)).collect();

    let mut best = f64::INFINITY;
    let mut pair = None;
    for a in 0..count {
        let pa = keyed[a].0;
        let ya = &points[a * dims..(a + 1) * dims];
        for b in a + 1..count {
            let gap = keyed[b].0 - pa;
            if gap * gap > best {
                break;
            }
            let yb = &points[b * dims..(b + 1) * dims];
            let mut dist = 0.0;
            for (u, v) in ya.iter().zip(yb) {
                dist += (u - v) * (u - v);
                if dist > best {
                    break;
                }
            }
            if dist < best || (dist == best && pair.is_none()) {
                best = dist;
                let (ia, ib) = (keyed[a].1, keyed[b].1);
                pair = Some((ia.min(ib), ia.max(ib)));
            }
        }
    }
    let min_delta = pair.map(|_| best.sqrt() * table.scale);
    let passed = min_delta.is_none_or(|dm| dm > COLLISION_TOLERANCE * table.scale);
    let collision = match (passed, pair) {
        (false, Some((i, j))) => Some((d.channels[i].clone(), d.channels[j].clone())),
        _ => None,
    };
    SufficiencyReport {
        entries: count,
        min_delta,
        closest_pair: pair,
        passed,
        collision,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beams::build_plan;
    use crate::channel::{build_channel, ArrayGeometry, Path};
    use crate::codes::{hamming_15_parity_check, hamming_code, matched_code};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn h15() -> LinearBlockCode {
        LinearBlockCode::from_parity_check(hamming_15_parity_check()).unwrap()
    }

    #[test]
    fn alphabet_validation() {
        assert_eq!(
            GainAlphabet::new(vec![]),
            Err(DiscoveryError::EmptyAlphabet)
        );
        assert_eq!(
            GainAlphabet::new(vec![c(1.0, 0.0), c(0.0, 0.0)]),
            Err(DiscoveryError::ZeroGain)
        );
        assert_eq!(
            GainAlphabet::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(DiscoveryError::DuplicateGain(c(1.0, 0.0)))
        );
        let lat = GainAlphabet::lattice(4);
        assert_eq!(lat.len(), 80);
        assert_eq!(lat.values()[0], c(-4.0, -4.0));
        assert_eq!(lat.values()[1], c(-4.0, -3.0));
        assert_eq!(lat.values()[79], c(4.0, 4.0));
        assert!(!lat.values().contains(&c(0.0, 0.0)));
        assert_eq!(GainAlphabet::lattice(1).len(), 8);
    }

    #[test]
    fn table_sizes() {
        assert_eq!(table_size(15, 1, 80), 1201);
        assert_eq!(table_size(8, 2, 80), 1 + 8 * 80 + 28 * 6400);
        assert_eq!(table_size(15, 0, 80), 1);
    }

    #[test]
    fn empty_support_table() {
        let t = build_table(&h15(), 0, &GainAlphabet::unit()).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.syndrome(0).iter().all(|z| z.norm() == 0.0));
        assert!(t.channel(0).support.is_empty());
    }

    #[test]
    fn unit_table_lists_columns() {
        let code = h15();
        let t = build_table(&code, 1, &GainAlphabet::unit()).unwrap();
        assert_eq!(t.len(), 16);
        for bin in 0..15 {
            let col = code.parity_check().column(bin);
            let s = t.syndrome(bin + 1);
            for i in 0..4 {
                assert_eq!(s[i], c(if col.get(i) { 1.0 } else { 0.0 }, 0.0));
            }
            assert_eq!(t.channel(bin + 1).support, vec![bin]);
        }
    }

    #[test]
    fn nearest_with_noise() {
        let t = build_table(&h15(), 1, &GainAlphabet::unit()).unwrap();
        let y = DVector::from_vec(vec![c(1.1, 0.0), c(0.9, 0.0), c(0.05, 0.0), c(-0.02, 0.0)]);
        let q = t.nearest(&y).unwrap();
        for p in 0..15 {
            assert_eq!(q[p], c(if p == 4 { 1.0 } else { 0.0 }, 0.0));
        }
        let zero = DVector::zeros(4);
        assert!(t.nearest(&zero).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(matches!(
            t.nearest(&DVector::zeros(3)),
            Err(DiscoveryError::SyndromeLength { .. })
        ));
    }

    #[test]
    fn nearest_tie_goes_to_lower_index() {
        let t = build_table(&h15(), 1, &GainAlphabet::unit()).unwrap();
        // Equidistant from entry 0 (zero) and entry 1 (bin 0).
        let y = DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(t.nearest_index(&y).unwrap(), 0);
    }

    #[test]
    fn hamming7_bin5() {
        let code = hamming_code(3).unwrap();
        let t = build_table(&code, 1, &GainAlphabet::unit()).unwrap();
        assert_eq!(t.len(), 8);
        let y = t.syndrome(6);
        let col = code.parity_check().column(5);
        for i in 0..3 {
            assert_eq!(y[i].re, if col.get(i) { 1.0 } else { 0.0 });
        }
        assert_eq!(t.channel(6).support, vec![5]);
    }

    #[test]
    fn scaled_table_shares_entries() {
        let t = build_table(&h15(), 1, &GainAlphabet::lattice(1)).unwrap();
        let s = t.scaled(0.25).unwrap();
        assert_eq!(s.len(), t.len());
        assert_eq!(s.syndrome(3), t.syndrome(3) * c(0.25, 0.0));
        let y = s.syndrome(17);
        assert_eq!(s.nearest_index(&y).unwrap(), 17);
        assert_eq!(s.nearest(&y).unwrap(), t.channel_vector(17) * c(0.25, 0.0));
        assert!(t.scaled(0.0).is_err());
    }

    #[test]
    fn capacity_error() {
        let err = build_table_with_budget(&h15(), 2, &GainAlphabet::lattice(4), 1000).unwrap_err();
        assert!(matches!(err, DiscoveryError::Capacity { budget: 1000, .. }));
    }

    #[test]
    fn json_round_trip() {
        let code = hamming_code(3).unwrap();
        let t = build_table(&code, 1, &GainAlphabet::lattice(1))
            .unwrap()
            .scaled(0.5)
            .unwrap();
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let back = SyndromeTable::from_json(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.len(), t.len());
        assert_eq!(back.scale(), 0.5);
        assert!(back.matches(&code, 1, &GainAlphabet::lattice(1)));
        for i in 0..t.len() {
            assert_eq!(back.syndrome(i), t.syndrome(i));
            assert_eq!(back.channel(i), t.channel(i));
        }
        let mut broken = t.to_json();
        broken.entries[2].syndrome_re.pop();
        assert!(matches!(
            SyndromeTable::from_json(broken),
            Err(DiscoveryError::Malformed(_))
        ));
    }

    #[test]
    fn sufficiency_of_hamming15() {
        let r = sufficiency_check(&h15(), 1, &GainAlphabet::unit()).unwrap();
        assert!(r.passed);
        assert_eq!(r.entries, 16);
        assert!((r.min_delta.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sufficiency_single_entry() {
        let r = sufficiency_check(&h15(), 0, &GainAlphabet::unit()).unwrap();
        assert!(r.passed);
        assert_eq!(r.min_delta, None);
    }

    #[test]
    fn beyond_capability_collides() {
        let code = hamming_code(3).unwrap();
        let r = sufficiency_check(&code, 2, &GainAlphabet::unit()).unwrap();
        assert!(!r.passed);
        let (a, b) = r.collision.unwrap();
        assert_ne!(a, b);
        let h = code.parity_check().lift_to_real();
        let syn = |ch: &SparseChannel| -> Vec<f64> {
            (0..3)
                .map(|i| ch.support.iter().map(|&p| h[(i, p)]).sum())
                .collect()
        };
        assert_eq!(syn(&a), syn(&b));
    }

    #[test]
    fn discover_zero_channel() {
        let g = ArrayGeometry::new(8, 8).unwrap();
        let plan = build_plan(&g, 2).unwrap();
        let code = matched_code(8, 2).unwrap();
        let table = build_table(&code, 2, &GainAlphabet::unit()).unwrap();
        let tables = DiscoveryTables {
            rx: table.clone(),
            tx: Some(table),
        };
        let ch = build_channel(&[], &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = discover(
            &ch,
            &plan,
            &tables,
            &Pilot::new(1.0).unwrap(),
            &NoiseConfig::noiseless(),
            None,
            &mut rng,
        )
        .unwrap();
        assert!(r.qa_hat.iter().all(|z| z.norm() == 0.0));
        assert_eq!(r.tx_lookups(), 0);
        assert_eq!(r.rx_syndromes.len(), 6);
    }

    #[test]
    fn discover_two_paths_with_pilot_power() {
        let g = ArrayGeometry::new(8, 8).unwrap();
        let plan = build_plan(&g, 2).unwrap();
        let code = matched_code(8, 2).unwrap();
        let alphabet = GainAlphabet::new(vec![c(1.0, 0.0), c(0.0, -2.0)]).unwrap();
        let pilot = Pilot::new(4.0).unwrap();
        // Measurements carry s = 2, so the tables work at scale 2.
        let table = build_table(&code, 2, &alphabet)
            .unwrap()
            .scaled(2.0)
            .unwrap();
        let tables = DiscoveryTables {
            rx: table.clone(),
            tx: Some(table),
        };
        let paths = [
            Path {
                rx_bin: 1,
                tx_bin: 6,
                gain: c(1.0, 0.0),
            },
            Path {
                rx_bin: 7,
                tx_bin: 2,
                gain: c(0.0, -2.0),
            },
        ];
        let ch = build_channel(&paths, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = discover(
            &ch,
            &plan,
            &tables,
            &pilot,
            &NoiseConfig::noiseless(),
            None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.tx_lookups(), 2);
        for i in 0..8 {
            for k in 0..8 {
                let want = paths
                    .iter()
                    .find(|p| (p.rx_bin, p.tx_bin) == (i, k))
                    .map_or(c(0.0, 0.0), |p| p.gain);
                assert!((r.qa_hat[(i, k)] - want).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn discover_requires_tx_table() {
        let g = ArrayGeometry::new(7, 7).unwrap();
        let plan = build_plan(&g, 1).unwrap();
        let rx = build_table(&hamming_code(3).unwrap(), 1, &GainAlphabet::unit()).unwrap();
        let tables = DiscoveryTables { rx, tx: None };
        let ch = build_channel(&[], &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            discover(
                &ch,
                &plan,
                &tables,
                &Pilot::new(1.0).unwrap(),
                &NoiseConfig::noiseless(),
                None,
                &mut rng
            )
            .unwrap_err(),
            DiscoveryError::MissingTxTable
        );
    }
}
