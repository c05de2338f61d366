//! Sparse on-grid channels for uniform linear arrays.
//!
//! Paths sit exactly on the DFT grid, so the angular channel
//! `Qa = Ur^H Q Ut` has one nonzero entry per path.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("path bin ({rx_bin}, {tx_bin}) outside a {n_r}x{n_t} grid")]
    BinOutOfRange {
        rx_bin: usize,
        tx_bin: usize,
        n_r: usize,
        n_t: usize,
    },
    #[error("cannot place {paths} paths on distinct bins of a {n_r}x{n_t} grid")]
    TooManyPaths {
        paths: usize,
        n_r: usize,
        n_t: usize,
    },
    #[error("path gain must be nonzero and finite")]
    InvalidGain,
}

/// Antenna counts and spacings (in wavelengths) at both ends of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_t: usize,
    pub n_r: usize,
    pub delta_t: f64,
    pub delta_r: f64,
}

impl ArrayGeometry {
    /// Half-wavelength arrays.
    pub fn new(n_t: usize, n_r: usize) -> Result<Self, ChannelError> {
        Self::with_spacing(n_t, n_r, 0.5, 0.5)
    }

    pub fn with_spacing(
        n_t: usize,
        n_r: usize,
        delta_t: f64,
        delta_r: f64,
    ) -> Result<Self, ChannelError> {
        let g = Self {
            n_t,
            n_r,
            delta_t,
            delta_r,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_t == 0 || self.n_r == 0 {
            return Err(ChannelError::InvalidGeometry(
                "antenna counts must be at least 1".into(),
            ));
        }
        if !(self.delta_t > 0.0 && self.delta_r > 0.0)
            || !self.delta_t.is_finite()
            || !self.delta_r.is_finite()
        {
            return Err(ChannelError::InvalidGeometry(
                "antenna spacing must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Normalized TX array length `n_t * delta_t`.
    pub fn l_t(&self) -> f64 {
        self.n_t as f64 * self.delta_t
    }

    /// Normalized RX array length `n_r * delta_r`.
    pub fn l_r(&self) -> f64 {
        self.n_r as f64 * self.delta_r
    }

    pub fn rx_signature(&self, bin: usize) -> DVector<Complex64> {
        spatial_signature(bin as f64 / self.l_r(), self.n_r, self.delta_r)
    }

    pub fn tx_signature(&self, bin: usize) -> DVector<Complex64> {
        spatial_signature(bin as f64 / self.l_t(), self.n_t, self.delta_t)
    }
}

/// One propagation path on the angular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub rx_bin: usize,
    pub tx_bin: usize,
    #[serde(with = "crate::json::complex")]
    pub gain: Complex64,
}

/// Physical channel matrix `Q` (n_r x n_t).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub geometry: ArrayGeometry,
    pub q: DMatrix<Complex64>,
}

/// Channel in the DFT beam basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularChannel {
    pub qa: DMatrix<Complex64>,
}

/// `e(omega)` with entries `exp(-j 2 pi m delta omega) / sqrt(n)`.
pub fn spatial_signature(omega: f64, n: usize, delta: f64) -> DVector<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |m, _| {
        Complex64::from_polar(norm, -2.0 * PI * m as f64 * delta * omega)
    })
}

/// Unitary DFT matrix whose column `j` is the signature at `j / (n delta)`.
pub fn dft_matrix(n: usize, delta: f64) -> DMatrix<Complex64> {
    let length = n as f64 * delta;
    let mut u = DMatrix::zeros(n, n);
    for j in 0..n {
        u.set_column(j, &spatial_signature(j as f64 / length, n, delta));
    }
    u
}

fn check_path(p: &Path, geom: &ArrayGeometry) -> Result<(), ChannelError> {
    if p.rx_bin >= geom.n_r || p.tx_bin >= geom.n_t {
        return Err(ChannelError::BinOutOfRange {
            rx_bin: p.rx_bin,
            tx_bin: p.tx_bin,
            n_r: geom.n_r,
            n_t: geom.n_t,
        });
    }
    Ok(())
}

/// `Q = sum_l gain_l e_r(rx_l) e_t(tx_l)^H`.
pub fn build_channel(paths: &[Path], geom: &ArrayGeometry) -> Result<ChannelMatrix, ChannelError> {
    geom.validate()?;
    let mut q = DMatrix::zeros(geom.n_r, geom.n_t);
    for p in paths {
        check_path(p, geom)?;
        let er = geom.rx_signature(p.rx_bin);
        let et = geom.tx_signature(p.tx_bin);
        q += (er * et.adjoint()) * p.gain;
    }
    Ok(ChannelMatrix { geometry: *geom, q })
}

/// `Qa = Ur^H Q Ut`.
pub fn to_angular(ch: &ChannelMatrix) -> AngularChannel {
    let g = &ch.geometry;
    let ur = dft_matrix(g.n_r, g.delta_r);
    let ut = dft_matrix(g.n_t, g.delta_t);
    AngularChannel {
        qa: ur.adjoint() * &ch.q * ut,
    }
}

impl AngularChannel {
    /// The angular channel of on-grid paths, written down directly.
    pub fn from_paths(paths: &[Path], geom: &ArrayGeometry) -> Result<Self, ChannelError> {
        let mut qa = DMatrix::zeros(geom.n_r, geom.n_t);
        for p in paths {
            check_path(p, geom)?;
            qa[(p.rx_bin, p.tx_bin)] += p.gain;
        }
        Ok(Self { qa })
    }

    /// Inverse change of basis, `Q = Ur Qa Ut^H`.
    pub fn to_physical(&self, geom: &ArrayGeometry) -> ChannelMatrix {
        let ur = dft_matrix(geom.n_r, geom.delta_r);
        let ut = dft_matrix(geom.n_t, geom.delta_t);
        ChannelMatrix {
            geometry: *geom,
            q: ur * &self.qa * ut.adjoint(),
        }
    }
}

/// Per-path SNR, `P |gain|^2 / N0`, in dB.
pub fn path_snr_db(gain: Complex64, noise_power: f64, pilot_power: f64) -> f64 {
    10.0 * (pilot_power * gain.norm_sqr() / noise_power).log10()
}

/// Gain magnitude giving `snr_db` on a path.
pub fn gain_for_snr(snr_db: f64, noise_power: f64, pilot_power: f64) -> f64 {
    (noise_power / pilot_power * 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Draws `l` paths on distinct RX bins and distinct TX bins.
///
/// Each path's SNR is uniform (in dB) over `[snr_min_db, snr_min_db +
/// spread_db]` and its phase uniform over `[0, 2 pi)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_paths<R: Rng + ?Sized>(
    l: usize,
    snr_min_db: f64,
    spread_db: f64,
    geom: &ArrayGeometry,
    noise_power: f64,
    pilot_power: f64,
    rng: &mut R,
) -> Result<Vec<Path>, ChannelError> {
    if l > geom.n_r.min(geom.n_t) {
        return Err(ChannelError::TooManyPaths {
            paths: l,
            n_r: geom.n_r,
            n_t: geom.n_t,
        });
    }
    if l == 0 {
        return Ok(Vec::new());
    }
    let rx = sample(rng, geom.n_r, l).into_vec();
    let tx = sample(rng, geom.n_t, l).into_vec();
    let paths = rx
        .into_iter()
        .zip(tx)
        .map(|(rx_bin, tx_bin)| {
            let snr = snr_min_db + spread_db * rng.random::<f64>();
            let phase = 2.0 * PI * rng.random::<f64>();
            Path {
                rx_bin,
                tx_bin,
                gain: Complex64::from_polar(gain_for_snr(snr, noise_power, pilot_power), phase),
            }
        })
        .collect();
    Ok(paths)
}

/// JSON fixture for replaying a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFixture {
    pub geometry: ArrayGeometry,
    pub paths: Vec<Path>,
}

impl ChannelFixture {
    pub fn channel(&self) -> Result<ChannelMatrix, ChannelError> {
        for p in &self.paths {
            if p.gain.norm() == 0.0 || !p.gain.is_finite() {
                return Err(ChannelError::InvalidGain);
            }
        }
        build_channel(&self.paths, &self.geometry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn zero_cosine_signature() {
        let e = spatial_signature(0.0, 4, 0.5);
        for m in 0..4 {
            assert!(close(e[m], Complex64::new(0.5, 0.0), TOL));
        }
    }

    #[test]
    fn direct_substitution_signature() {
        let g = ArrayGeometry::new(1, 7).unwrap();
        let e = spatial_signature(1.0 / g.l_r(), 7, 0.5);
        for m in 0..7 {
            let want = Complex64::from_polar(1.0 / 7f64.sqrt(), -2.0 * PI * m as f64 / 7.0);
            assert!(close(e[m], want, TOL));
        }
    }

    #[test]
    fn grid_signatures_orthonormal() {
        // Closed-form geometric sum: sum_m exp(-j 2 pi m (i - j) / n) / n.
        for n in [4usize, 7, 8, 15] {
            let length = n as f64 * 0.5;
            for i in 0..n {
                for j in 0..n {
                    let ip = spatial_signature(i as f64 / length, n, 0.5).dotc(&spatial_signature(
                        j as f64 / length,
                        n,
                        0.5,
                    ));
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        close(ip, Complex64::new(want, 0.0), TOL),
                        "n={n} i={i} j={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn dft_unitary() {
        assert_eq!(
            dft_matrix(1, 0.5),
            DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))
        );
        for n in [7usize, 8, 15] {
            let u = dft_matrix(n, 0.5);
            let gram = u.adjoint() * &u;
            let err = (gram - DMatrix::<Complex64>::identity(n, n)).norm();
            assert!(err < TOL, "n={n} err={err}");
        }
    }

    #[test]
    fn empty_channel_is_zero() {
        let g = ArrayGeometry::new(4, 5).unwrap();
        let ch = build_channel(&[], &g).unwrap();
        assert!(ch.q.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(to_angular(&ch).qa.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_path_rank_one() {
        let g = ArrayGeometry::new(8, 8).unwrap();
        let alpha = Complex64::from_polar(2.5, 0.7);
        let ch = build_channel(
            &[Path {
                rx_bin: 3,
                tx_bin: 5,
                gain: alpha,
            }],
            &g,
        )
        .unwrap();
        assert!((ch.q.norm() - alpha.norm()).abs() < TOL);
        let sv = ch.q.clone().singular_values();
        assert!(sv.iter().filter(|&&s| s > 1e-9).count() == 1);

        let qa = to_angular(&ch).qa;
        for i in 0..8 {
            for j in 0..8 {
                let want = if (i, j) == (3, 5) {
                    alpha
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!(close(qa[(i, j)], want, 1e-9));
            }
        }
    }

    #[test]
    fn opposite_gains_cancel() {
        let g = ArrayGeometry::new(8, 8).unwrap();
        let a = Complex64::from_polar(1.0, 0.3);
        let ch = build_channel(
            &[
                Path {
                    rx_bin: 2,
                    tx_bin: 2,
                    gain: a,
                },
                Path {
                    rx_bin: 2,
                    tx_bin: 2,
                    gain: -a,
                },
            ],
            &g,
        )
        .unwrap();
        assert!(ch.q.norm() < TOL);
    }

    #[test]
    fn angular_round_trip() {
        let g = ArrayGeometry::new(7, 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = DMatrix::from_fn(15, 7, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let ch = ChannelMatrix {
            geometry: g,
            q: q.clone(),
        };
        let back = to_angular(&ch).to_physical(&g);
        assert!((back.q - q).norm() < TOL);
    }

    #[test]
    fn bins_out_of_range() {
        let g = ArrayGeometry::new(4, 4).unwrap();
        let p = Path {
            rx_bin: 4,
            tx_bin: 0,
            gain: Complex64::new(1.0, 0.0),
        };
        assert!(matches!(
            build_channel(&[p], &g),
            Err(ChannelError::BinOutOfRange { .. })
        ));
    }

    #[test]
    fn sampling_respects_snr_and_bins() {
        let g = ArrayGeometry::new(8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n0, p) = (1e-12, 2.0);
        assert!(sample_paths(0, 0.0, 20.0, &g, n0, p, &mut rng)
            .unwrap()
            .is_empty());
        for _ in 0..200 {
            let paths = sample_paths(2, 5.0, 20.0, &g, n0, p, &mut rng).unwrap();
            assert_eq!(paths.len(), 2);
            assert_ne!(paths[0].rx_bin, paths[1].rx_bin);
            assert_ne!(paths[0].tx_bin, paths[1].tx_bin);
            for path in &paths {
                let snr = path_snr_db(path.gain, n0, p);
                assert!((5.0 - 1e-9..=25.0 + 1e-9).contains(&snr));
                let want = n0 / p * 10f64.powf(snr / 10.0);
                assert!((path.gain.norm_sqr() - want).abs() <= 1e-9 * want);
            }
        }
        assert!(matches!(
            sample_paths(9, 0.0, 20.0, &g, n0, p, &mut rng),
            Err(ChannelError::TooManyPaths { .. })
        ));
    }

    #[test]
    fn fixture_json_round_trip() {
        let fx = ChannelFixture {
            geometry: ArrayGeometry::new(8, 8).unwrap(),
            paths: vec![Path {
                rx_bin: 1,
                tx_bin: 6,
                gain: Complex64::new(0.25, -1.5),
            }],
        };
        let s = serde_json::to_string(&fx).unwrap();
        assert!(s.contains("\"re\":0.25"));
        let back: ChannelFixture = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fx);
        assert!(back.channel().is_ok());
    }
}
