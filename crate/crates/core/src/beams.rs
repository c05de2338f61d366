//! Multi-armed measurement beams built from parity-check rows.
//!
//! Row `i` of a parity-check matrix selects the grid directions that beam
//! `i` listens to (or transmits towards). The beam is the plain sum of the
//! selected grid signatures; it is not normalized, so that a noiseless
//! measurement of an on-grid channel reproduces `H qa` exactly.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{spatial_signature, ArrayGeometry};
use crate::codes::{matched_code, CodeError, LinearBlockCode};
use crate::gf2::Gf2Matrix;
use crate::json::ComplexJson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("row {row} out of range for a matrix with {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error(
        "parity-check matrix has {cols} columns but the {side:?} array has {antennas} antennas"
    )]
    AntennaMismatch {
        side: Side,
        cols: usize,
        antennas: usize,
    },
    #[error("cluster budget must be at least 1")]
    ZeroClusters,
    #[error("no code for {side:?} side with n = {n}, L = {l}: {source}")]
    Code {
        side: Side,
        n: usize,
        l: usize,
        #[source]
        source: CodeError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Rx,
    Tx,
}

impl Side {
    fn antennas(self, geom: &ArrayGeometry) -> (usize, f64) {
        match self {
            Side::Rx => (geom.n_r, geom.delta_r),
            Side::Tx => (geom.n_t, geom.delta_t),
        }
    }
}

/// `sum_j 1(h_ij = 1) e(j / L)` for one side of the link.
pub fn combiner_from_row(
    h: &Gf2Matrix,
    row: usize,
    geom: &ArrayGeometry,
    side: Side,
) -> Result<DVector<Complex64>, BeamError> {
    let (n, delta) = side.antennas(geom);
    if row >= h.rows() {
        return Err(BeamError::RowOutOfRange {
            row,
            rows: h.rows(),
        });
    }
    if h.cols() != n {
        return Err(BeamError::AntennaMismatch {
            side,
            cols: h.cols(),
            antennas: n,
        });
    }
    let length = n as f64 * delta;
    let mut w = DVector::zeros(n);
    for j in h.row(row).support() {
        w += spatial_signature(j as f64 / length, n, delta);
    }
    Ok(w)
}

/// Codes and beams for one beam-discovery run.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    pub geometry: ArrayGeometry,
    pub code_rx: LinearBlockCode,
    /// `None` for a single TX antenna, where no precoding is needed.
    pub code_tx: Option<LinearBlockCode>,
    pub combiners: Vec<DVector<Complex64>>,
    pub precoders: Vec<DVector<Complex64>>,
}

impl MeasurementPlan {
    pub fn from_codes(
        geometry: ArrayGeometry,
        code_rx: LinearBlockCode,
        code_tx: Option<LinearBlockCode>,
    ) -> Result<Self, BeamError> {
        let combiners = (0..code_rx.redundancy())
            .map(|i| combiner_from_row(code_rx.parity_check(), i, &geometry, Side::Rx))
            .collect::<Result<Vec<_>, _>>()?;
        let precoders = match &code_tx {
            Some(c) => (0..c.redundancy())
                .map(|j| combiner_from_row(c.parity_check(), j, &geometry, Side::Tx))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        Ok(Self {
            geometry,
            code_rx,
            code_tx,
            combiners,
            precoders,
        })
    }

    /// `m_1`.
    pub fn rx_measurements(&self) -> usize {
        self.combiners.len()
    }

    /// `m_2`; zero when the transmitter has a single antenna.
    pub fn tx_measurements(&self) -> usize {
        self.precoders.len()
    }

    /// Number of pilot transmissions, `max(m_2, 1)`.
    pub fn precoder_rounds(&self) -> usize {
        self.precoders.len().max(1)
    }

    pub fn total_measurements(&self) -> usize {
        self.rx_measurements() * self.precoder_rounds()
    }

    pub fn to_json(&self) -> PlanJson {
        let beam = |side, index, v: &DVector<Complex64>| BeamJson {
            side,
            index,
            weights: v.iter().map(|&z| z.into()).collect(),
            magnitude: v.iter().map(|z| z.norm()).collect(),
            phase_rad: v.iter().map(|z| z.arg()).collect(),
        };
        PlanJson {
            geometry: self.geometry,
            code_rx: self.code_rx.label(),
            code_tx: self.code_tx.as_ref().map(LinearBlockCode::label),
            m1: self.rx_measurements(),
            m2: self.tx_measurements(),
            combiners: self
                .combiners
                .iter()
                .enumerate()
                .map(|(i, w)| beam(Side::Rx, i, w))
                .collect(),
            precoders: self
                .precoders
                .iter()
                .enumerate()
                .map(|(j, f)| beam(Side::Tx, j, f))
                .collect(),
        }
    }
}

/// Serialized plan: per-antenna complex weights plus the magnitude/phase
/// settings for the amplifier and phase shifter behind each antenna.
#[derive(Debug, Clone, Serialize)]
pub struct PlanJson {
    pub geometry: ArrayGeometry,
    pub code_rx: String,
    pub code_tx: Option<String>,
    pub m1: usize,
    pub m2: usize,
    pub combiners: Vec<BeamJson>,
    pub precoders: Vec<BeamJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeamJson {
    pub side: Side,
    pub index: usize,
    pub weights: Vec<ComplexJson>,
    pub magnitude: Vec<f64>,
    pub phase_rad: Vec<f64>,
}

/// Picks codes with `n = antennas` and `e_n >= l` on each side and
/// materializes every beam.
pub fn build_plan(geom: &ArrayGeometry, l: usize) -> Result<MeasurementPlan, BeamError> {
    if l == 0 {
        return Err(BeamError::ZeroClusters);
    }
    let code_for = |side: Side, n: usize| {
        matched_code(n, l).map_err(|source| BeamError::Code { side, n, l, source })
    };
    let code_rx = code_for(Side::Rx, geom.n_r)?;
    let code_tx = if geom.n_t > 1 {
        Some(code_for(Side::Tx, geom.n_t)?)
    } else {
        None
    };
    MeasurementPlan::from_codes(*geom, code_rx, code_tx)
}

/// `|w^H e(omega)| * sqrt(n)` at one angular cosine.
pub fn gain_at_cosine(w: &DVector<Complex64>, delta: f64, omega: f64) -> f64 {
    let n = w.len();
    w.dotc(&spatial_signature(omega, n, delta)).norm() * (n as f64).sqrt()
}

/// Pattern of `w` sampled uniformly over `phi` in `[0, pi]`.
pub fn beam_pattern(
    w: &DVector<Complex64>,
    geom: &ArrayGeometry,
    side: Side,
    phi_samples: usize,
) -> Vec<(f64, f64)> {
    let (_, delta) = side.antennas(geom);
    let samples = phi_samples.max(2);
    (0..samples)
        .map(|s| {
            let phi = PI * s as f64 / (samples - 1) as f64;
            (phi, gain_at_cosine(w, delta, phi.cos()))
        })
        .collect()
}

/// CSV with header `phi_rad,gain`.
pub fn pattern_csv(pattern: &[(f64, f64)]) -> String {
    let mut s = String::from("phi_rad,gain\n");
    for (phi, g) in pattern {
        s.push_str(&format!("{phi},{g}\n"));
    }
    s
}
