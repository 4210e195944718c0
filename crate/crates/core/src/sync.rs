//! Zadoff-Chu primary synchronization signal and two-step time/frequency
//! acquisition: a coarse scan of the whole frame through a bank of
//! frequency-shifted replicas, then full-rate tracking in a narrow window.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::channel::{add_awgn, rng_from_seed};
use crate::error::{Error, Result};

/// LTE subcarrier spacing the PSS is laid out on.
pub const PSS_SUBCARRIER_SPACING_HZ: f64 = 15e3;
/// Sample rate of the coarse stage; the replica there spans 128 samples.
pub const COARSE_RATE_HZ: f64 = 1.92e6;
pub const DEFAULT_TRACKING_HALF_WINDOW: usize = 32;
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct PssConfig {
    pub root: usize,
    pub length: usize,
    pub occupied_bw_hz: f64,
    pub cfo_grid_hz: Vec<f64>,
    /// Half width, in full-rate samples, of the tracking window.
    pub tracking_half_window: usize,
    pub threshold: f64,
}

impl Default for PssConfig {
    fn default() -> Self {
        PssConfig {
            root: 25,
            length: 63,
            occupied_bw_hz: 1.2e6,
            cfo_grid_hz: uniform_cfo_grid(7500.0, 19),
            tracking_half_window: DEFAULT_TRACKING_HALF_WINDOW,
            threshold: DEFAULT_DETECTION_THRESHOLD,
        }
    }
}

impl PssConfig {
    pub fn validate(&self) -> Result<()> {
        check_root(self.root, self.length)?;
        let needed = (self.length - 1) as f64 * PSS_SUBCARRIER_SPACING_HZ;
        if needed > self.occupied_bw_hz * (1.0 + 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "{} PSS tones need {needed} Hz but only {} Hz are occupied",
                self.length - 1,
                self.occupied_bw_hz
            )));
        }
        if self.cfo_grid_hz.is_empty() || self.cfo_grid_hz.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidParameter("CFO grid must be non-empty and finite".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!("threshold {}", self.threshold)));
        }
        Ok(())
    }
}

/// `steps` equally spaced frequencies covering `[-span, span]`.
pub fn uniform_cfo_grid(span_hz: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![0.0];
    }
    let step = 2.0 * span_hz / (steps - 1) as f64;
    (0..steps).map(|i| -span_hz + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    pub timing_offset: usize,
    pub cfo_hz: f64,
    /// Squared normalized correlation, in [0, 1].
    pub peak_metric: f64,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn check_root(root: usize, length: usize) -> Result<()> {
    if length == 0 || length.is_multiple_of(2) || root == 0 || root >= length || gcd(root, length) != 1 {
        return Err(Error::InvalidRoot { root, length });
    }
    Ok(())
}

/// `x[n] = exp(-jπ u n(n+1) / L)`, odd `L`.
pub fn zadoff_chu(root: usize, length: usize) -> Result<Vec<C64>> {
    check_root(root, length)?;
    Ok((0..length)
        .map(|n| {
            // reduce the phase integer first to keep the argument small
            let k = ((root as u128 * n as u128 * (n as u128 + 1)) % (2 * length as u128)) as f64;
            C64::from_polar(1.0, -PI * k / length as f64)
        })
        .collect())
}

/// Time-domain PSS at `sample_rate_hz` with unit average power: the ZC
/// sequence with its centre element punctured, mapped around DC on the
/// 15 kHz grid.
pub fn pss_replica(cfg: &PssConfig, sample_rate_hz: f64) -> Result<Vec<C64>> {
    cfg.validate()?;
    let n_f = sample_rate_hz / PSS_SUBCARRIER_SPACING_HZ;
    let n = n_f.round() as usize;
    if (n_f - n as f64).abs() > 1e-9 * n_f || n < cfg.length {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate_hz} Hz is not a usable multiple of 15 kHz"
        )));
    }
    let zc = zadoff_chu(cfg.root, cfg.length)?;
    let half = cfg.length / 2;
    let mut bins = vec![C64::new(0.0, 0.0); n];
    for (i, &z) in zc.iter().enumerate() {
        match i.cmp(&half) {
            Ordering::Less => bins[n - half + i] = z,
            Ordering::Equal => {}
            Ordering::Greater => bins[i - half] = z,
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut bins);
    let power = bins.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
    let s = 1.0 / power.sqrt();
    Ok(bins.into_iter().map(|z| z * s).collect())
}

/// Stream of `total_len` samples carrying one PSS at `offset` with carrier
/// offset `cfo_hz`, plus unit-power noise scaled for `snr_db` when given.
pub fn synthesize_pss_stream(
    cfg: &PssConfig,
    sample_rate_hz: f64,
    total_len: usize,
    offset: usize,
    cfo_hz: f64,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<Vec<C64>> {
    let replica = pss_replica(cfg, sample_rate_hz)?;
    if offset + replica.len() > total_len {
        return Err(Error::LengthMismatch {
            expected: offset + replica.len(),
            actual: total_len,
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); total_len];
    for (n, &c) in replica.iter().enumerate() {
        let t = (offset + n) as f64 / sample_rate_hz;
        out[offset + n] = c * C64::from_polar(1.0, 2.0 * PI * cfo_hz * t);
    }
    if let Some(db) = snr_db {
        let noise = 10f64.powf(-db / 10.0);
        add_awgn(&mut out, noise, &mut rng_from_seed(seed));
    }
    Ok(out)
}

fn rotate(replica: &[C64], cfo_hz: f64, sample_rate_hz: f64) -> Vec<C64> {
    replica
        .iter()
        .enumerate()
        .map(|(n, &c)| c * C64::from_polar(1.0, 2.0 * PI * cfo_hz * n as f64 / sample_rate_hz))
        .collect()
}

fn boxcar_decimate(x: &[C64], d: usize) -> Vec<C64> {
    x.chunks_exact(d)
        .map(|c| c.iter().sum::<C64>() / d as f64)
        .collect()
}

fn prefix_energy(x: &[C64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(x.len() + 1);
    acc.push(0.0);
    let mut s = 0.0;
    for z in x {
        s += z.norm_sqr();
        acc.push(s);
    }
    acc
}

fn metric(corr: C64, window_energy: f64, replica_energy: f64) -> f64 {
    if window_energy <= 0.0 {
        return 0.0;
    }
    (corr.norm_sqr() / (window_energy * replica_energy)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    metric: f64,
    cfo_hz: f64,
    offset: usize,
}

/// Higher metric wins; ties go to lower |cfo|, then lower offset.
fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.metric.total_cmp(&b.metric) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match a.cfo_hz.abs().total_cmp(&b.cfo_hz.abs()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.offset < b.offset,
        },
    }
}

fn best_of(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |acc, c| match acc {
        Some(b) if !better(&c, &b) => Some(b),
        _ => Some(c),
    })
}

#[cfg(feature = "parallel")]
fn per_branch<F>(grid: &[f64], f: F) -> Vec<Candidate>
where
    F: Fn(f64) -> Candidate + Sync + Send,
{
    use rayon::prelude::*;
    grid.par_iter().map(|&cfo| f(cfo)).collect()
}

#[cfg(not(feature = "parallel"))]
fn per_branch<F>(grid: &[f64], f: F) -> Vec<Candidate>
where
    F: Fn(f64) -> Candidate,
{
    grid.iter().map(|&cfo| f(cfo)).collect()
}

/// Coarse scan of every offset of `signal` (already decimated) against
/// one CFO branch, via FFT cross-correlation.
fn coarse_branch(
    spectrum: &[C64],
    energy: &[f64],
    replica: &[C64],
    fft_len: usize,
    valid: usize,
    cfo_hz: f64,
) -> Candidate {
    let mut planner = FftPlanner::new();
    let mut c = vec![C64::new(0.0, 0.0); fft_len];
    c[..replica.len()].copy_from_slice(replica);
    planner.plan_fft_forward(fft_len).process(&mut c);
    let mut prod: Vec<C64> = spectrum.iter().zip(&c).map(|(r, c)| r * c.conj()).collect();
    planner.plan_fft_inverse(fft_len).process(&mut prod);
    let replica_energy: f64 = replica.iter().map(|z| z.norm_sqr()).sum();
    let scale = 1.0 / fft_len as f64;
    let n = replica.len();
    best_of((0..valid).map(|o| Candidate {
        metric: metric(prod[o] * scale, energy[o + n] - energy[o], replica_energy),
        cfo_hz,
        offset: o,
    }))
    .expect("at least one offset")
}

/// Finds the PSS in `signal`.
pub fn acquire(signal: &[C64], cfg: &PssConfig, sample_rate_hz: f64) -> Result<SyncResult> {
    let replica = pss_replica(cfg, sample_rate_hz)?;
    let n = replica.len();
    if signal.len() < n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: signal.len(),
        });
    }

    // coarse: low-rate replica bank over the whole input
    let ratio = sample_rate_hz / COARSE_RATE_HZ;
    let d = if ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        1
    };
    let coarse_sig = boxcar_decimate(signal, d);
    let coarse_n = n / d;
    let valid = coarse_sig.len() - coarse_n + 1;
    let fft_len = coarse_sig.len().next_power_of_two();
    let mut spectrum = coarse_sig.clone();
    spectrum.resize(fft_len, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut spectrum);
    let energy = prefix_energy(&coarse_sig);
    let coarse = best_of(per_branch(&cfg.cfo_grid_hz, |cfo| {
        let rep = boxcar_decimate(&rotate(&replica, cfo, sample_rate_hz), d);
        coarse_branch(&spectrum, &energy, &rep, fft_len, valid, cfo)
    }))
    .expect("non-empty grid");

    // tracking: full rate, narrow window, all branches
    let centre = coarse.offset * d;
    let last = signal.len() - n;
    let lo = centre.saturating_sub(cfg.tracking_half_window);
    let hi = (centre + cfg.tracking_half_window).min(last);
    let full_energy = prefix_energy(signal);
    let replica_energy: f64 = replica.iter().map(|z| z.norm_sqr()).sum();
    let fine = best_of(per_branch(&cfg.cfo_grid_hz, |cfo| {
        let rep = rotate(&replica, cfo, sample_rate_hz);
        best_of((lo..=hi).map(|o| {
            let corr: C64 = signal[o..o + n].iter().zip(&rep).map(|(r, c)| r * c.conj()).sum();
            Candidate {
                metric: metric(corr, full_energy[o + n] - full_energy[o], replica_energy),
                cfo_hz: cfo,
                offset: o,
            }
        }))
        .expect("non-empty window")
    }))
    .expect("non-empty grid");

    if fine.metric < cfg.threshold {
        return Err(Error::NoPeak {
            best_metric: fine.metric,
        });
    }
    Ok(SyncResult {
        timing_offset: fine.offset,
        cfo_hz: fine.cfo_hz,
        peak_metric: fine.metric,
    })
}
