//! OFDM numerology, modulation, comb pilots and the pilot-spacing mobility
//! limit.

mod frame;

pub use frame::{default_frame, FrameSchedule, SymbolType, TurnaroundWindow};

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::special::{bessel_j0, J0_FIRST_ZERO};
use crate::SPEED_OF_LIGHT;

/// OFDM numerology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    pub fft_size: usize,
    pub used_subcarriers: usize,
    pub cp_len: usize,
    pub sample_rate_hz: f64,
    pub symbol_duration_s: f64,
}

impl OfdmParams {
    pub fn new(fft_size: usize, used_subcarriers: usize, cp_len: usize, sample_rate_hz: f64) -> Result<Self> {
        if fft_size == 0 || used_subcarriers >= fft_size || cp_len >= fft_size {
            return Err(Error::InvalidParameter(format!(
                "need used ({used_subcarriers}) and cp ({cp_len}) below fft size ({fft_size})"
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample rate {sample_rate_hz}")));
        }
        Ok(OfdmParams {
            fft_size,
            used_subcarriers,
            cp_len,
            sample_rate_hz,
            symbol_duration_s: (fft_size + cp_len) as f64 / sample_rate_hz,
        })
    }

    /// 20 MHz LTE-like numerology: 2048-point FFT, 1200 used subcarriers,
    /// 144-sample CP at 30.72 MS/s.
    pub fn lte20() -> Self {
        OfdmParams::new(2048, 1200, 144, 30.72e6).expect("valid numerology")
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_size as f64
    }

    /// FFT bin of used subcarrier `index`: the lower half sits on negative
    /// frequencies, the upper half starts right above the null DC bin.
    pub fn bin_of(&self, index: usize) -> usize {
        let lower = self.used_subcarriers / 2;
        if index < lower {
            self.fft_size - lower + index
        } else {
            index - lower + 1
        }
    }
}

/// OFDM modulator/demodulator with cached FFT plans.
#[derive(Clone)]
pub struct OfdmModem {
    params: OfdmParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OfdmModem").field("params", &self.params).finish()
    }
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Self {
        let mut planner = FftPlanner::new();
        OfdmModem {
            params,
            forward: planner.plan_fft_forward(params.fft_size),
            inverse: planner.plan_fft_inverse(params.fft_size),
        }
    }

    pub fn params(&self) -> &OfdmParams {
        &self.params
    }

    /// Maps used subcarriers around DC, unitary IFFT, prepends the CP.
    pub fn modulate(&self, freq_symbols: &[C64]) -> Result<Vec<C64>> {
        let p = &self.params;
        if freq_symbols.len() != p.used_subcarriers {
            return Err(Error::LengthMismatch {
                expected: p.used_subcarriers,
                actual: freq_symbols.len(),
            });
        }
        let mut bins = vec![C64::new(0.0, 0.0); p.fft_size];
        for (i, &x) in freq_symbols.iter().enumerate() {
            bins[p.bin_of(i)] = x;
        }
        self.inverse.process(&mut bins);
        let scale = 1.0 / (p.fft_size as f64).sqrt();
        bins.iter_mut().for_each(|z| *z *= scale);

        let mut out = Vec::with_capacity(p.samples_per_symbol());
        out.extend_from_slice(&bins[p.fft_size - p.cp_len..]);
        out.extend_from_slice(&bins);
        Ok(out)
    }

    /// Strips the CP, unitary FFT, extracts the used bins.
    pub fn demodulate(&self, time_samples: &[C64]) -> Result<Vec<C64>> {
        let p = &self.params;
        if time_samples.len() != p.samples_per_symbol() {
            return Err(Error::LengthMismatch {
                expected: p.samples_per_symbol(),
                actual: time_samples.len(),
            });
        }
        let mut bins = time_samples[p.cp_len..].to_vec();
        self.forward.process(&mut bins);
        let scale = 1.0 / (p.fft_size as f64).sqrt();
        Ok((0..p.used_subcarriers).map(|i| bins[p.bin_of(i)] * scale).collect())
    }
}

pub fn ofdm_modulate(freq_symbols: &[C64], p: &OfdmParams) -> Result<Vec<C64>> {
    OfdmModem::new(*p).modulate(freq_symbols)
}

pub fn ofdm_demodulate(time_samples: &[C64], p: &OfdmParams) -> Result<Vec<C64>> {
    OfdmModem::new(*p).demodulate(time_samples)
}

/// Comb pilot assignment: user `k` transmits on subcarriers
/// `offset[k], offset[k] + K, …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PilotAllocation {
    offsets: Vec<usize>,
    owner_of_offset: Vec<usize>,
}

impl PilotAllocation {
    pub fn new(offsets: Vec<usize>) -> Result<Self> {
        let k = offsets.len();
        let mut owner = vec![usize::MAX; k];
        for (user, &off) in offsets.iter().enumerate() {
            if off >= k || owner[off] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "pilot offsets {offsets:?} are not a permutation of 0..{k}"
                )));
            }
            owner[off] = user;
        }
        Ok(PilotAllocation {
            offsets,
            owner_of_offset: owner,
        })
    }

    /// User `k` starts at subcarrier `k`.
    pub fn sequential(num_users: usize) -> Self {
        PilotAllocation::new((0..num_users).collect()).expect("identity permutation")
    }

    pub fn num_users(&self) -> usize {
        self.offsets.len()
    }

    pub fn offset(&self, user: usize) -> usize {
        self.offsets[user]
    }

    /// User whose comb contains subcarrier `s`.
    pub fn owner(&self, s: usize) -> usize {
        self.owner_of_offset[s % self.offsets.len()]
    }
}

/// Per-user pilot subcarrier lists.
pub fn pilot_grid(alloc: &PilotAllocation, used: usize) -> Vec<Vec<usize>> {
    let k = alloc.num_users();
    (0..k)
        .map(|user| (alloc.offset(user)..used).step_by(k).collect())
        .collect()
}

/// Largest Doppler (and UE speed) for which the channel correlation across
/// one pilot spacing `tp_s` stays at `corr_threshold`.
///
/// Returns `(ν_max [Hz], v_max [m/s])`.
pub fn mobility_limit(tp_s: f64, corr_threshold: f64, fc_hz: f64) -> Result<(f64, f64)> {
    if !(tp_s > 0.0 && tp_s.is_finite()) || !(fc_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "pilot spacing {tp_s} s and carrier {fc_hz} Hz must be positive"
        )));
    }
    if !(corr_threshold > 0.0 && corr_threshold < 1.0) {
        return Err(Error::NoRoot(format!(
            "correlation {corr_threshold} outside the first J0 branch (0, 1)"
        )));
    }
    // J0 falls monotonically from 1 to 0 on (0, first zero)
    let (mut lo, mut hi) = (0.0, J0_FIRST_ZERO);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > corr_threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let nu = x / (2.0 * PI * tp_s);
    Ok((nu, SPEED_OF_LIGHT * nu / fc_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qam_symbols(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels = [-3.0, -1.0, 1.0, 3.0];
        (0..n)
            .map(|_| {
                C64::new(levels[rng.random_range(0..4)], levels[rng.random_range(0..4)])
                    / 10f64.sqrt()
            })
            .collect()
    }

    #[test]
    fn lte_numerology() {
        let p = OfdmParams::lte20();
        assert_eq!(p.samples_per_symbol(), 2192);
        assert!((p.symbol_duration_s - 2192.0 / 30.72e6).abs() < 1e-18);
        assert!((p.subcarrier_spacing_hz() - 15e3).abs() < 1e-9);
        assert!(OfdmParams::new(64, 64, 4, 1e6).is_err());
        assert!(OfdmParams::new(64, 32, 64, 1e6).is_err());
    }

    #[test]
    fn bin_map_is_symmetric_with_null_dc() {
        let p = OfdmParams::lte20();
        let bins: Vec<usize> = (0..1200).map(|i| p.bin_of(i)).collect();
        assert_eq!(bins[0], 2048 - 600);
        assert_eq!(bins[599], 2047);
        assert_eq!(bins[600], 1);
        assert_eq!(bins[1199], 600);
        assert!(!bins.contains(&0));
    }

    #[test]
    fn zero_in_zero_out() {
        let p = OfdmParams::lte20();
        let modem = OfdmModem::new(p);
        let t = modem.modulate(&vec![C64::new(0.0, 0.0); 1200]).unwrap();
        assert_eq!(t.len(), 2192);
        assert!(t.iter().all(|z| z.norm() == 0.0));
        let f = modem.demodulate(&vec![C64::new(0.0, 0.0); 2192]).unwrap();
        assert!(f.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn round_trip_and_energy() {
        let p = OfdmParams::lte20();
        let modem = OfdmModem::new(p);
        for trial in 0..20 {
            let x = qam_symbols(1200, trial);
            let t = modem.modulate(&x).unwrap();
            let body: f64 = t[144..].iter().map(|z| z.norm_sqr()).sum();
            let freq: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert!((body - freq).abs() < 1e-10 * freq);
            let y = modem.demodulate(&t).unwrap();
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn cyclic_prefix_copies_tail() {
        let p = OfdmParams::new(64, 48, 16, 1e6).unwrap();
        let t = ofdm_modulate(&qam_symbols(48, 3), &p).unwrap();
        assert_eq!(&t[..16], &t[64..80]);
    }

    #[test]
    fn single_tone_is_constant_modulus_ramp() {
        let p = OfdmParams::lte20();
        let amp = C64::new(0.6, -0.8);
        let mut x = vec![C64::new(0.0, 0.0); 1200];
        let index = 700;
        x[index] = amp;
        let t = ofdm_modulate(&x, &p).unwrap();
        let bin = p.bin_of(index) as f64;
        for (n, z) in t[144..].iter().enumerate() {
            let expected = amp * C64::from_polar(1.0 / 2048f64.sqrt(), 2.0 * PI * bin * n as f64 / 2048.0);
            assert!((z - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn timing_shift_rotates_phase() {
        // Reading the window d samples early (still inside the CP) rotates
        // bin b by e^{-j2πbd/N}.
        let p = OfdmParams::new(256, 200, 32, 3.84e6).unwrap();
        let x = qam_symbols(200, 8);
        let t = ofdm_modulate(&x, &p).unwrap();
        for d in [1usize, 5, 32] {
            let mut shifted = vec![C64::new(0.0, 0.0); d];
            shifted.extend_from_slice(&t[..t.len() - d]);
            let y = ofdm_demodulate(&shifted, &p).unwrap();
            for (i, (&xi, &yi)) in x.iter().zip(&y).enumerate() {
                let bin = p.bin_of(i) as f64;
                let rot = C64::from_polar(1.0, -2.0 * PI * bin * d as f64 / 256.0);
                assert!((yi - xi * rot).norm() < 1e-10, "d={d} i={i}");
            }
        }
    }

    #[test]
    fn modem_rejects_wrong_lengths() {
        let p = OfdmParams::lte20();
        assert!(matches!(
            ofdm_modulate(&[C64::new(0.0, 0.0); 10], &p),
            Err(Error::LengthMismatch { expected: 1200, actual: 10 })
        ));
        assert!(ofdm_demodulate(&[C64::new(0.0, 0.0); 2048], &p).is_err());
    }

    #[test]
    fn pilot_grid_lte() {
        let grid = pilot_grid(&PilotAllocation::sequential(12), 1200);
        assert!(grid.iter().all(|g| g.len() == 100));
        assert_eq!(&grid[1][..3], &[1, 13, 25]);
        let single = pilot_grid(&PilotAllocation::sequential(1), 50);
        assert_eq!(single[0], (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn pilot_grid_is_partition() {
        for k in 1..=16 {
            let alloc = PilotAllocation::new((0..k).rev().collect()).unwrap();
            for used in [k * 7, k * 7 + 3] {
                let grid = pilot_grid(&alloc, used);
                let mut seen = vec![0u8; used];
                for (user, list) in grid.iter().enumerate() {
                    for &s in list {
                        seen[s] += 1;
                        assert_eq!(alloc.owner(s), user);
                    }
                }
                assert!(seen.iter().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn pilot_allocation_requires_permutation() {
        assert!(PilotAllocation::new(vec![0, 0]).is_err());
        assert!(PilotAllocation::new(vec![0, 2]).is_err());
        assert!(PilotAllocation::new(vec![1, 0]).is_ok());
    }

    #[test]
    fn mobility_reference_design() {
        let (nu, v) = mobility_limit(430e-6, 0.9, 3.7e9).unwrap();
        assert!((nu - 240.0).abs() / 240.0 < 0.02, "{nu}");
        let kmh = v * 3.6;
        assert!((kmh - 70.0).abs() / 70.0 < 0.02, "{kmh}");
        assert!((bessel_j0(2.0 * PI * nu * 430e-6) - 0.9).abs() < 1e-9);
    }

    #[test]
    fn mobility_scaling_and_limits() {
        let (nu1, _) = mobility_limit(430e-6, 0.9, 3.7e9).unwrap();
        let (nu2, _) = mobility_limit(860e-6, 0.9, 3.7e9).unwrap();
        assert_eq!(nu2, nu1 / 2.0);
        let (tiny, _) = mobility_limit(430e-6, 1.0 - 1e-9, 3.7e9).unwrap();
        assert!(tiny < 0.1);
        assert!(matches!(mobility_limit(430e-6, 1.0, 3.7e9), Err(Error::NoRoot(_))));
        assert!(matches!(mobility_limit(430e-6, -0.2, 3.7e9), Err(Error::NoRoot(_))));
    }
}
