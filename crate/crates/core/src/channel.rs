//! Propagation and transceiver models.
//!
//! The radio channel is split the usual way for TDD reciprocity: a
//! reciprocal propagation matrix `B` (K×M, downlink orientation) and four
//! diagonal transceiver responses. Uplink and downlink channels are
//!
//! ```text
//! G = R_B · Bᵀ · T_U   (M×K)
//! H = R_U · B  · T_B   (K×M)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrixkit::CMat;
use crate::special::bessel_j0;

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One circularly-symmetric CN(0, 1) sample.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Invertible diagonal transfer stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTransfer {
    entries: Vec<C64>,
}

impl DiagonalTransfer {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|z| z.norm() == 0.0) {
            return Err(Error::SingularDiagonal {
                index,
                magnitude: 0.0,
            });
        }
        Ok(DiagonalTransfer { entries })
    }

    pub fn identity(n: usize) -> Self {
        DiagonalTransfer {
            entries: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Unit-modulus random phase with log-normal magnitude (`sigma_db`
    /// standard deviation of `20·log10|h|`).
    pub fn random(n: usize, sigma_db: f64, rng: &mut impl Rng) -> Self {
        let mag_db = Normal::new(0.0, sigma_db).expect("finite sigma");
        let entries = (0..n)
            .map(|_| {
                let phase = rng.random::<f64>() * 2.0 * PI;
                let mag = 10f64.powf(mag_db.sample(rng) / 20.0);
                C64::from_polar(mag, phase)
            })
            .collect();
        DiagonalTransfer { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn scaled(&self, s: C64) -> Result<Self> {
        DiagonalTransfer::new(self.entries.iter().map(|&z| z * s).collect())
    }
}

/// Reciprocal propagation matrix for one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationChannel {
    /// K×M; the uplink sees its transpose.
    pub b: CMat,
    pub subcarrier_index: usize,
}

impl PropagationChannel {
    pub fn new(b: CMat, subcarrier_index: usize) -> Self {
        PropagationChannel { b, subcarrier_index }
    }

    pub fn users(&self) -> usize {
        self.b.rows()
    }

    pub fn antennas(&self) -> usize {
        self.b.cols()
    }
}

/// Transceiver responses at both link ends.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareFront {
    pub r_bs: DiagonalTransfer,
    pub t_bs: DiagonalTransfer,
    pub r_ue: DiagonalTransfer,
    pub t_ue: DiagonalTransfer,
}

impl HardwareFront {
    pub fn ideal(m: usize, k: usize) -> Self {
        HardwareFront {
            r_bs: DiagonalTransfer::identity(m),
            t_bs: DiagonalTransfer::identity(m),
            r_ue: DiagonalTransfer::identity(k),
            t_ue: DiagonalTransfer::identity(k),
        }
    }

    /// Random phases and ±1 dB (one sigma) log-normal magnitudes.
    pub fn random(m: usize, k: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        HardwareFront {
            r_bs: DiagonalTransfer::random(m, 1.0, &mut rng),
            t_bs: DiagonalTransfer::random(m, 1.0, &mut rng),
            r_ue: DiagonalTransfer::random(k, 1.0, &mut rng),
            t_ue: DiagonalTransfer::random(k, 1.0, &mut rng),
        }
    }

    pub fn antennas(&self) -> usize {
        self.r_bs.len()
    }

    pub fn users(&self) -> usize {
        self.r_ue.len()
    }

    fn check(&self, prop: &PropagationChannel) -> Result<()> {
        let (k, m) = prop.b.shape();
        if self.r_bs.len() != m || self.t_bs.len() != m || self.r_ue.len() != k || self.t_ue.len() != k
        {
            return Err(Error::dims(
                format!("hardware for M={m}, K={k}"),
                format!(
                    "r_bs {}, t_bs {}, r_ue {}, t_ue {}",
                    self.r_bs.len(),
                    self.t_bs.len(),
                    self.r_ue.len(),
                    self.t_ue.len()
                ),
            ));
        }
        Ok(())
    }
}

/// i.i.d. CN(0, 1) matrix.
pub fn draw_rayleigh(m: usize, k: usize, seed: u64) -> CMat {
    let mut rng = rng_from_seed(seed);
    CMat::from_fn(m, k, |_, _| complex_normal(&mut rng))
}

/// Uplink channel `G = R_B Bᵀ T_U`.
pub fn compose_ul(prop: &PropagationChannel, hw: &HardwareFront) -> Result<CMat> {
    hw.check(prop)?;
    let (k, m) = prop.b.shape();
    let r = hw.r_bs.entries();
    let t = hw.t_ue.entries();
    Ok(CMat::from_fn(m, k, |mi, ki| r[mi] * prop.b[(ki, mi)] * t[ki]))
}

/// Downlink channel `H = R_U B T_B`.
pub fn compose_dl(prop: &PropagationChannel, hw: &HardwareFront) -> Result<CMat> {
    hw.check(prop)?;
    let (k, m) = prop.b.shape();
    let r = hw.r_ue.entries();
    let t = hw.t_bs.entries();
    Ok(CMat::from_fn(k, m, |ki, mi| r[ki] * prop.b[(ki, mi)] * t[mi]))
}

/// Adds CN(0, `noise_power`) noise drawn from `rng` in place.
pub fn add_awgn<R: Rng + ?Sized>(signal: &mut [C64], noise_power: f64, rng: &mut R) {
    if noise_power == 0.0 {
        return;
    }
    let sigma = noise_power.sqrt();
    for z in signal.iter_mut() {
        *z += complex_normal(rng) * sigma;
    }
}

/// `signal + n` with `n` i.i.d. CN(0, `noise_power`).
pub fn awgn(signal: &[C64], noise_power: f64, seed: u64) -> Result<Vec<C64>> {
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise power {noise_power} must be >= 0"
        )));
    }
    let mut out = signal.to_vec();
    add_awgn(&mut out, noise_power, &mut rng_from_seed(seed));
    Ok(out)
}

/// Clarke/Jakes autocorrelation `J0(2π ν Δt)`.
pub fn jakes_correlation(doppler_hz: f64, dt_s: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler_hz * dt_s)
}

/// First-order Gauss-Markov step `ρ g + √(1−ρ²) w`.
pub fn evolve_channel(g_prev: &CMat, rho: f64, seed: u64) -> Result<CMat> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!("correlation {rho} outside [-1, 1]")));
    }
    if rho == 1.0 {
        return Ok(g_prev.clone());
    }
    let innovation = (1.0 - rho * rho).sqrt();
    let mut rng = rng_from_seed(seed);
    Ok(CMat::from_fn(g_prev.rows(), g_prev.cols(), |r, c| {
        g_prev[(r, c)] * rho + complex_normal(&mut rng) * innovation
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(k: usize, m: usize, seed: u64) -> PropagationChannel {
        PropagationChannel::new(draw_rayleigh(k, m, seed), 0)
    }

    #[test]
    fn rayleigh_is_seeded() {
        assert_eq!(draw_rayleigh(4, 2, 7), draw_rayleigh(4, 2, 7));
        assert_ne!(draw_rayleigh(4, 2, 7), draw_rayleigh(4, 2, 8));
    }

    #[test]
    fn rayleigh_unit_power() {
        let g = draw_rayleigh(1000, 1000, 1);
        let p = g.frobenius_norm_sqr() / 1e6;
        assert!((p - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn distinct_seeds_distinct_draws() {
        for s in 0..64u64 {
            assert_ne!(draw_rayleigh(3, 2, 2 * s), draw_rayleigh(3, 2, 2 * s + 1));
            assert_ne!(awgn(&[C64::new(0.0, 0.0)], 1.0, s), awgn(&[C64::new(0.0, 0.0)], 1.0, s + 1000));
        }
    }

    #[test]
    fn identity_hardware_is_reciprocal() {
        let p = prop(3, 8, 4);
        let hw = HardwareFront::ideal(8, 3);
        let g = compose_ul(&p, &hw).unwrap();
        let h = compose_dl(&p, &hw).unwrap();
        assert_eq!(g, p.b.transpose());
        assert_eq!(h, p.b);
        assert_eq!(h, g.transpose());
    }

    #[test]
    fn bs_receive_gain_scales_rows() {
        let p = prop(3, 8, 4);
        let ideal = HardwareFront::ideal(8, 3);
        let mut doubled = ideal.clone();
        doubled.r_bs = DiagonalTransfer::new(vec![C64::new(2.0, 0.0); 8]).unwrap();
        let g1 = compose_ul(&p, &ideal).unwrap();
        let g2 = compose_ul(&p, &doubled).unwrap();
        assert_eq!(g2, g1.scale_real(2.0));
    }

    #[test]
    fn compose_matches_scalar_loops() {
        let p = prop(3, 8, 10);
        let hw = HardwareFront::random(8, 3, 11);
        let g = compose_ul(&p, &hw).unwrap();
        let h = compose_dl(&p, &hw).unwrap();
        for m in 0..8 {
            for k in 0..3 {
                let ul = hw.r_bs.entries()[m] * p.b[(k, m)] * hw.t_ue.entries()[k];
                let dl = hw.r_ue.entries()[k] * p.b[(k, m)] * hw.t_bs.entries()[m];
                assert!((g[(m, k)] - ul).norm() < 1e-15);
                assert!((h[(k, m)] - dl).norm() < 1e-15);
            }
        }
        // non-reciprocal hardware breaks H = Gᵀ
        assert!(h.sub(&g.transpose()).unwrap().frobenius_norm() > 1e-3);
    }

    #[test]
    fn compose_rejects_mismatched_hardware() {
        let p = prop(3, 8, 1);
        assert!(matches!(
            compose_ul(&p, &HardwareFront::ideal(7, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(compose_dl(&p, &HardwareFront::ideal(8, 2)).is_err());
    }

    #[test]
    fn awgn_zero_power_is_identity() {
        let x = vec![C64::new(1.0, -2.0), C64::new(0.5, 0.25)];
        assert_eq!(awgn(&x, 0.0, 5).unwrap(), x);
        assert_eq!(awgn(&x, 1.0, 5).unwrap(), awgn(&x, 1.0, 5).unwrap());
        assert!(awgn(&x, -1.0, 5).is_err());
    }

    #[test]
    fn awgn_variance() {
        let n = awgn(&vec![C64::new(0.0, 0.0); 1_000_000], 2.0, 3).unwrap();
        let var = n.iter().map(|z| z.norm_sqr()).sum::<f64>() / n.len() as f64;
        assert!((var - 2.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn jakes_reference_points() {
        assert_eq!(jakes_correlation(123.0, 0.0), 1.0);
        assert!((jakes_correlation(240.0, 430e-6) - 0.9).abs() < 0.01);
        for i in 0..500 {
            let r = jakes_correlation(i as f64 * 3.0, 1e-3);
            assert!((-0.5..=1.0).contains(&r));
        }
    }

    #[test]
    fn evolve_extremes() {
        let g = draw_rayleigh(300, 300, 1);
        assert_eq!(evolve_channel(&g, 1.0, 2).unwrap(), g);
        assert!(evolve_channel(&g, 1.5, 2).is_err());

        let fresh = evolve_channel(&g, 0.0, 2).unwrap();
        let corr: C64 = g
            .as_slice()
            .iter()
            .zip(fresh.as_slice())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            / (g.frobenius_norm() * fresh.frobenius_norm());
        assert!(corr.norm() < 0.01, "{}", corr.norm());
    }

    #[test]
    fn evolve_autocorrelation_decays_geometrically() {
        let rho = 0.8;
        let start = draw_rayleigh(200, 100, 5);
        let mut cur = start.clone();
        for step in 1..=4 {
            cur = evolve_channel(&cur, rho, 100 + step).unwrap();
            let corr: f64 = start
                .as_slice()
                .iter()
                .zip(cur.as_slice())
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
                / 20_000.0;
            let expected = rho.powi(step as i32);
            // 4 sigma on 2e4 unit-variance products
            assert!((corr - expected).abs() < 4.0 / (20_000f64).sqrt(), "step {step}: {corr}");
        }
    }
}
