//! Unit measurements `w^H Q f s + w^H n` and mid-tread I/Q quantization.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beams::MeasurementPlan;
use crate::channel::ChannelMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("ADC resolution must be between 1 and 16 bits, got {0}")]
    InvalidBits(u32),
    #[error("ADC full scale must be positive and finite, got {0}")]
    InvalidFullScale(f64),
    #[error("noise power must be non-negative and finite, got {0}")]
    InvalidNoise(f64),
    #[error("pilot power must be positive and finite, got {0}")]
    InvalidPilot(f64),
    #[error("precoder index {index} out of range for {count} precoders")]
    PrecoderOutOfRange { index: usize, count: usize },
    #[error("channel is {rows}x{cols} but the plan expects {n_r}x{n_t}")]
    GeometryMismatch {
        rows: usize,
        cols: usize,
        n_r: usize,
        n_t: usize,
    },
}

/// Mid-tread ADC pair with `2^b + 1` levels per rail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcConfig {
    pub bits: u32,
    pub full_scale: f64,
}

impl AdcConfig {
    pub fn new(bits: u32, full_scale: f64) -> Result<Self, MeasureError> {
        if !(1..=16).contains(&bits) {
            return Err(MeasureError::InvalidBits(bits));
        }
        if !(full_scale > 0.0 && full_scale.is_finite()) {
            return Err(MeasureError::InvalidFullScale(full_scale));
        }
        Ok(Self { bits, full_scale })
    }

    /// Full scale set to the largest noiseless measurement, `L * sqrt(P) * A_max`,
    /// where `A_max` is the path amplitude at `snr_max_db`.
    pub fn calibrated(
        bits: u32,
        l: usize,
        snr_max_db: f64,
        noise: &NoiseConfig,
        pilot: &Pilot,
    ) -> Result<Self, MeasureError> {
        let a_max = (noise.n0 / pilot.power * 10f64.powf(snr_max_db / 10.0)).sqrt();
        Self::new(bits, l.max(1) as f64 * pilot.symbol() * a_max)
    }

    /// Largest level magnitude, `2^(b-1)`.
    pub fn max_level(&self) -> i64 {
        1 << (self.bits - 1)
    }

    /// Spacing between adjacent output values.
    pub fn step(&self) -> f64 {
        self.full_scale / self.max_level() as f64
    }

    /// Integer level of one rail.
    pub fn level(&self, rail: f64) -> i64 {
        let top = self.max_level();
        let scaled = (rail / self.step()).round();
        if scaled.is_nan() {
            return 0;
        }
        (scaled.clamp(-(top as f64), top as f64)) as i64
    }

    pub fn quantize_rail(&self, rail: f64) -> f64 {
        self.level(rail) as f64 * self.step()
    }

    pub fn quantize(&self, x: Complex64) -> Complex64 {
        Complex64::new(self.quantize_rail(x.re), self.quantize_rail(x.im))
    }

    /// Smallest noiseless amplitude that reaches level 1 on a rail.
    pub fn detection_threshold(&self) -> f64 {
        self.full_scale / (1u64 << self.bits) as f64
    }
}

/// Free function form of [`AdcConfig::quantize`].
pub fn quantize(x: Complex64, adc: &AdcConfig) -> Complex64 {
    adc.quantize(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub n0: f64,
}

impl NoiseConfig {
    pub fn new(n0: f64) -> Result<Self, MeasureError> {
        if !(n0 >= 0.0 && n0.is_finite()) {
            return Err(MeasureError::InvalidNoise(n0));
        }
        Ok(Self { n0 })
    }

    pub fn noiseless() -> Self {
        Self { n0: 0.0 }
    }

    pub fn from_dbm(dbm: f64) -> Result<Self, MeasureError> {
        Self::new(dbm_to_watts(dbm))
    }

    /// Draws `n ~ CN(0, n0 I)` of length `len`.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> DVector<Complex64> {
        if self.n0 == 0.0 {
            return DVector::zeros(len);
        }
        let rail = Normal::new(0.0, (self.n0 / 2.0).sqrt()).expect("finite variance");
        DVector::from_fn(len, |_, _| {
            Complex64::new(rail.sample(rng), rail.sample(rng))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pilot {
    pub power: f64,
}

impl Pilot {
    pub fn new(power: f64) -> Result<Self, MeasureError> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(MeasureError::InvalidPilot(power));
        }
        Ok(Self { power })
    }

    pub fn from_dbm(dbm: f64) -> Result<Self, MeasureError> {
        Self::new(dbm_to_watts(dbm))
    }

    /// `s = sqrt(P)`, real and positive.
    pub fn symbol(&self) -> f64 {
        self.power.sqrt()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// `w^H Q f s + w^H n` with a fresh noise vector.
pub fn raw_measure<R: Rng + ?Sized>(
    q: &ChannelMatrix,
    f: &DVector<Complex64>,
    w: &DVector<Complex64>,
    pilot: &Pilot,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Complex64 {
    let signal = w.dotc(&(&q.q * f)) * pilot.symbol();
    let n = noise.sample(w.len(), rng);
    signal + w.dotc(&n)
}

/// True when a path of gain `alpha` crosses the first quantization level
/// in a noiseless solo measurement, on either rail.
pub fn is_detectable(alpha: Complex64, pilot: &Pilot, adc: &AdcConfig) -> bool {
    let y = alpha * pilot.symbol();
    y.re.abs().max(y.im.abs()) >= adc.detection_threshold()
}

/// The `m_1` quantized measurements taken while transmitting on precoder `j`.
///
/// With a single TX antenna the plan has no precoders and `j` must be 0.
/// Passing `adc = None` bypasses quantization.
#[allow(clippy::too_many_arguments)]
pub fn measure_syndrome<R: Rng + ?Sized>(
    q: &ChannelMatrix,
    plan: &MeasurementPlan,
    j: usize,
    pilot: &Pilot,
    noise: &NoiseConfig,
    adc: Option<&AdcConfig>,
    rng: &mut R,
) -> Result<DVector<Complex64>, MeasureError> {
    let g = &plan.geometry;
    if q.q.nrows() != g.n_r || q.q.ncols() != g.n_t {
        return Err(MeasureError::GeometryMismatch {
            rows: q.q.nrows(),
            cols: q.q.ncols(),
            n_r: g.n_r,
            n_t: g.n_t,
        });
    }
    let unit = DVector::from_element(1, Complex64::new(1.0, 0.0));
    let f = if plan.precoders.is_empty() {
        if j != 0 {
            return Err(MeasureError::PrecoderOutOfRange { index: j, count: 1 });
        }
        &unit
    } else {
        plan.precoders
            .get(j)
            .ok_or(MeasureError::PrecoderOutOfRange {
                index: j,
                count: plan.precoders.len(),
            })?
    };
    let y = DVector::from_iterator(
        plan.combiners.len(),
        plan.combiners.iter().map(|w| {
            let y = raw_measure(q, f, w, pilot, noise, rng);
            adc.map_or(y, |a| a.quantize(y))
        }),
    );
    Ok(y)
}
