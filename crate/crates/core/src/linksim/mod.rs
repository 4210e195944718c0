//! End-to-end TDD frame simulation, Monte-Carlo BER sweeps, the
//! consecutive-estimate SNR estimator and CSI snapshots.
//!
//! The simulator works per subcarrier in the frequency domain: OFDM with a
//! cyclic prefix longer than the channel turns every used subcarrier into a
//! flat MIMO channel, so running the FFTs would only add rounding noise.
//!
//! "Gain" on the sweep axis is the per-user transmit energy per symbol in dB
//! against unit receiver noise, i.e. Es/N0 for a unit-gain channel.
//!
//! Randomness is keyed through [`derive_seed`] so any symbol can be
//! reproduced in isolation. With `p` the gain point index, `f` the frame and
//! `i` the symbol index:
//!
//! * hardware responses: `[TAG_HARDWARE]`
//! * propagation block `c`: `[TAG_CHANNEL, p, f, c]`, a K×M Rayleigh draw
//! * transmitted labels: `[TAG_BITS, p, f, i]`, subcarrier-major then user
//! * receiver noise: `[TAG_NOISE, p, f, i]`, subcarrier-major then antenna
//!   (UL) or user (DL)
//! * channel evolution after symbol `i`: `[TAG_EVOLVE, p, f, i, c]`

mod constellation;
mod snapshot;

pub use constellation::Modulation;
pub use snapshot::{
    csi_snapshot, read_trace, snapshot_bytes, snapshot_count, write_trace, CsiRecorder, CsiTrace, TRACE_MAGIC,
    TRACE_VERSION,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::channel::{
    awgn, compose_dl, compose_ul, draw_rayleigh, evolve_channel, jakes_correlation, rng_from_seed,
    DiagonalTransfer, HardwareFront, PropagationChannel,
};
use crate::error::{Error, Result};
use crate::matrixkit::{gram, inverse, CMat, InverseEngine};
use crate::mimoproc::{
    calibration_matrix, detect_matrix, ls_estimate, precode_matrix, ue_equalize_dl, CsiEstimate, Detector,
    Precoder, PrecodingScheme,
};
use crate::ofdm::{FrameSchedule, OfdmParams, PilotAllocation, SymbolType};
use crate::stats::{wilson_interval, Z95};

pub const TAG_HARDWARE: u64 = 1;
pub const TAG_CHANNEL: u64 = 2;
pub const TAG_BITS: u64 = 3;
pub const TAG_NOISE: u64 = 4;
pub const TAG_EVOLVE: u64 = 5;

/// Symbol every user sends on its pilot comb, UL and DL alike.
pub const PILOT: C64 = C64::new(1.0, 0.0);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a position in the simulation, independent of evaluation order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Ul,
    Dl,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Ul => "UL",
            Direction::Dl => "DL",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ul" | "uplink" => Ok(Direction::Ul),
            "dl" | "downlink" => Ok(Direction::Dl),
            _ => Err(Error::InvalidParameter(format!("unknown direction {s:?}"))),
        }
    }
}

/// How propagation matrices vary over the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Independent Rayleigh draw on every subcarrier.
    IidPerSubcarrier,
    /// One Rayleigh draw per pilot block of K subcarriers.
    FlatBlock,
    /// Every entry of the propagation matrix is 1 (single user only).
    Awgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// LS estimates from the UL pilots of the frame.
    Estimated,
    /// The true current channel, per subcarrier.
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardwareMode {
    Ideal,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// `C = R_B T_B⁻¹` from the true hardware.
    Exact,
    /// No calibration.
    Identity,
}

/// Downlink precoder choice; the calibration diagonal comes from the
/// simulated hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecoderSpec {
    pub scheme: PrecodingScheme,
    pub beta: f64,
    pub engine: InverseEngine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub k: usize,
    pub detector: Detector,
    pub precoder: PrecoderSpec,
    pub modulation: Modulation,
    pub gain_grid_db: Vec<f64>,
    /// Bits per user to count at each gain point.
    pub bits_per_point: u64,
    pub seed: u64,
    pub channel_mode: ChannelMode,
    /// Per-user transmit power offsets (diagonal UL power matrix), dB.
    pub ul_power_db: Vec<f64>,
    pub direction: Direction,
    /// Used subcarriers; a multiple of K.
    pub subcarriers: usize,
    pub csi: CsiMode,
    pub hardware: HardwareMode,
    pub calibration: CalibrationMode,
    /// UL pilot gain; `None` means it follows the swept gain in UL sweeps and
    /// `fixed_gain_db` in DL sweeps.
    pub ul_pilot_gain_db: Option<f64>,
    /// Gain of the side that is not swept.
    pub fixed_gain_db: f64,
    pub noise_power: f64,
    pub doppler_hz: f64,
    pub symbol_duration_s: f64,
}

impl SweepConfig {
    /// ZF/ZF QPSK on block-flat Rayleigh with LS estimates, ideal hardware.
    pub fn new(m: usize, k: usize) -> Self {
        SweepConfig {
            m,
            k,
            detector: Detector::zf(InverseEngine::Qr),
            precoder: PrecoderSpec {
                scheme: PrecodingScheme::Zf,
                beta: 0.0,
                engine: InverseEngine::Qr,
            },
            modulation: Modulation::Qpsk,
            gain_grid_db: vec![0.0],
            bits_per_point: 100_000,
            seed: 0,
            channel_mode: ChannelMode::FlatBlock,
            ul_power_db: vec![0.0; k],
            direction: Direction::Ul,
            subcarriers: 1200,
            csi: CsiMode::Estimated,
            hardware: HardwareMode::Ideal,
            calibration: CalibrationMode::Exact,
            ul_pilot_gain_db: None,
            fixed_gain_db: 20.0,
            noise_power: 1.0,
            doppler_hz: 0.0,
            symbol_duration_s: OfdmParams::lte20().symbol_duration_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k == 0 || self.m < self.k {
            return bad(format!("need M >= K >= 1, got M={} K={}", self.m, self.k));
        }
        if self.subcarriers == 0 || !self.subcarriers.is_multiple_of(self.k) {
            return bad(format!("{} subcarriers is not a multiple of K={}", self.subcarriers, self.k));
        }
        if self.ul_power_db.len() != self.k || self.ul_power_db.iter().any(|p| !p.is_finite()) {
            return bad(format!("need {} finite UL power offsets", self.k));
        }
        if self.channel_mode == ChannelMode::Awgn && self.k != 1 {
            return bad("the AWGN channel mode is single-user".into());
        }
        if self.gain_grid_db.iter().any(|g| g.is_nan() || *g == f64::INFINITY) {
            return bad("gain grid entries must be finite or -inf".into());
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return bad(format!("noise power {}", self.noise_power));
        }
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return bad(format!("doppler {}", self.doppler_hz));
        }
        if !(self.symbol_duration_s > 0.0) {
            return bad(format!("symbol duration {}", self.symbol_duration_s));
        }
        if self.bits_per_point == 0 {
            return bad("bits_per_point must be positive".into());
        }
        Ok(())
    }

    fn channel_blocks(&self) -> usize {
        match self.channel_mode {
            ChannelMode::IidPerSubcarrier => self.subcarriers,
            ChannelMode::FlatBlock => self.subcarriers / self.k,
            ChannelMode::Awgn => 1,
        }
    }

    fn channel_block_of(&self, s: usize) -> usize {
        match self.channel_mode {
            ChannelMode::IidPerSubcarrier => s,
            ChannelMode::FlatBlock => s / self.k,
            ChannelMode::Awgn => 0,
        }
    }

    /// Index of the detector/precoder a subcarrier uses.
    fn csi_block_of(&self, s: usize) -> usize {
        match self.csi {
            CsiMode::Estimated => s / self.k,
            CsiMode::Perfect => self.channel_block_of(s),
        }
    }
}

/// Transmit gains in effect for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameGains {
    pub ue_pilot_db: f64,
    pub ue_data_db: f64,
    pub bs_db: f64,
}

impl FrameGains {
    pub fn for_point(cfg: &SweepConfig, gain_db: f64) -> Self {
        match cfg.direction {
            Direction::Ul => FrameGains {
                ue_pilot_db: cfg.ul_pilot_gain_db.unwrap_or(gain_db),
                ue_data_db: gain_db,
                bs_db: cfg.fixed_gain_db,
            },
            Direction::Dl => FrameGains {
                ue_pilot_db: cfg.ul_pilot_gain_db.unwrap_or(cfg.fixed_gain_db),
                ue_data_db: cfg.fixed_gain_db,
                bs_db: gain_db,
            },
        }
    }
}

fn amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

fn checked_div(z: C64, d: C64) -> C64 {
    if d.norm() > 0.0 && d.is_finite() {
        z / d
    } else {
        z
    }
}

/// Channel and receiver state carried through one frame.
#[derive(Debug, Clone)]
pub struct FrameState {
    point: u64,
    frame: u64,
    hw: HardwareFront,
    calibration: DiagonalTransfer,
    channel: Vec<PropagationChannel>,
    g: Vec<CMat>,
    h: Vec<CMat>,
    ul_est: Option<CsiEstimate>,
    /// DL effective gains, `[pilot block][user]`.
    dl_est: Option<Vec<Vec<C64>>>,
    detectors: Option<Vec<(CMat, Vec<C64>)>>,
    precoders: Option<Vec<CMat>>,
}

/// Hardware responses of a sweep.
pub fn sweep_hardware(cfg: &SweepConfig) -> HardwareFront {
    match cfg.hardware {
        HardwareMode::Ideal => HardwareFront::ideal(cfg.m, cfg.k),
        HardwareMode::Random => HardwareFront::random(cfg.m, cfg.k, derive_seed(cfg.seed, &[TAG_HARDWARE])),
    }
}

/// Propagation matrix of channel block `c` at the start of a frame.
pub fn initial_propagation(cfg: &SweepConfig, point: u64, frame: u64, c: usize) -> CMat {
    match cfg.channel_mode {
        ChannelMode::Awgn => CMat::from_fn(cfg.k, cfg.m, |_, _| C64::new(1.0, 0.0)),
        _ => draw_rayleigh(cfg.k, cfg.m, derive_seed(cfg.seed, &[TAG_CHANNEL, point, frame, c as u64])),
    }
}

impl FrameState {
    pub fn new(cfg: &SweepConfig, point: u64, frame: u64) -> Result<Self> {
        cfg.validate()?;
        let hw = sweep_hardware(cfg);
        let calibration = match cfg.calibration {
            CalibrationMode::Exact => calibration_matrix(&hw)?,
            CalibrationMode::Identity => DiagonalTransfer::identity(cfg.m),
        };
        let channel = (0..cfg.channel_blocks())
            .map(|c| PropagationChannel::new(initial_propagation(cfg, point, frame, c), c))
            .collect();
        let mut state = FrameState {
            point,
            frame,
            hw,
            calibration,
            channel,
            g: Vec::new(),
            h: Vec::new(),
            ul_est: None,
            dl_est: None,
            detectors: None,
            precoders: None,
        };
        state.compose()?;
        Ok(state)
    }

    fn compose(&mut self) -> Result<()> {
        self.g = self.channel.iter().map(|p| compose_ul(p, &self.hw)).collect::<Result<_>>()?;
        self.h = self.channel.iter().map(|p| compose_dl(p, &self.hw)).collect::<Result<_>>()?;
        Ok(())
    }

    /// Current uplink channel of channel block `c`.
    pub fn uplink(&self, c: usize) -> &CMat {
        &self.g[c]
    }

    /// Current downlink channel of channel block `c`.
    pub fn downlink(&self, c: usize) -> &CMat {
        &self.h[c]
    }

    pub fn ul_estimate(&self) -> Option<&CsiEstimate> {
        self.ul_est.as_ref()
    }

    fn seed(&self, cfg: &SweepConfig, tag: u64, symbol: usize) -> u64 {
        derive_seed(cfg.seed, &[tag, self.point, self.frame, symbol as u64])
    }

    /// Channel estimate the BS works with for CSI block `b`, with the common
    /// pilot gain removed but per-user power offsets left in.
    fn ghat(&self, cfg: &SweepConfig, b: usize) -> Result<CMat> {
        match cfg.csi {
            CsiMode::Estimated => self
                .ul_est
                .as_ref()
                .map(|e| e.blocks[b].clone())
                .ok_or_else(|| Error::InvalidSchedule("UL data or DL before any UL pilot".into())),
            CsiMode::Perfect => {
                let p: Vec<C64> = cfg.ul_power_db.iter().map(|&d| C64::new(amplitude(d), 0.0)).collect();
                self.g[b].scale_cols(&p)
            }
        }
    }

    fn csi_blocks(&self, cfg: &SweepConfig) -> usize {
        match cfg.csi {
            CsiMode::Estimated => cfg.subcarriers / cfg.k,
            CsiMode::Perfect => self.channel.len(),
        }
    }

    fn detectors(&mut self, cfg: &SweepConfig) -> Result<&[(CMat, Vec<C64>)]> {
        if self.detectors.is_none() {
            let mut out = Vec::new();
            for b in 0..self.csi_blocks(cfg) {
                let gh = self.ghat(cfg, b)?;
                let w = detect_matrix(&gh, &cfg.detector)?;
                let d = w.matmul(&gh)?.diag();
                out.push((w, d));
            }
            self.detectors = Some(out);
        }
        Ok(self.detectors.as_deref().unwrap())
    }

    fn precoders(&mut self, cfg: &SweepConfig) -> Result<&[CMat]> {
        if self.precoders.is_none() {
            let spec = Precoder::new(
                cfg.precoder.scheme,
                cfg.precoder.beta,
                cfg.precoder.engine,
                self.calibration.clone(),
            );
            let out = (0..self.csi_blocks(cfg))
                .map(|b| precode_matrix(&self.ghat(cfg, b)?, &spec))
                .collect::<Result<Vec<_>>>()?;
            self.precoders = Some(out);
        }
        Ok(self.precoders.as_deref().unwrap())
    }

    fn evolve(&mut self, cfg: &SweepConfig, symbol: usize) -> Result<()> {
        if cfg.doppler_hz == 0.0 || cfg.channel_mode == ChannelMode::Awgn {
            return Ok(());
        }
        let rho = jakes_correlation(cfg.doppler_hz, cfg.symbol_duration_s);
        for (c, p) in self.channel.iter_mut().enumerate() {
            let seed = derive_seed(
                cfg.seed,
                &[TAG_EVOLVE, self.point, self.frame, symbol as u64, c as u64],
            );
            p.b = evolve_channel(&p.b, rho, seed)?;
        }
        self.compose()?;
        if cfg.csi == CsiMode::Perfect {
            self.detectors = None;
            self.precoders = None;
        }
        Ok(())
    }
}

/// What happened on one symbol of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolOutcome {
    pub index: usize,
    pub kind: SymbolType,
    /// Bit errors per user (data symbols only, zero otherwise).
    pub errors: Vec<u64>,
    pub bits: Vec<u64>,
    /// Equalized data symbols, subcarrier-major then user.
    pub equalized: Vec<C64>,
}

fn draw_labels(cfg: &SweepConfig, seed: u64) -> Vec<u32> {
    let mut rng = rng_from_seed(seed);
    let order = cfg.modulation.order();
    (0..cfg.subcarriers * cfg.k).map(|_| rng.random_range(0..order)).collect()
}

fn noise(len: usize, power: f64, seed: u64) -> Result<Vec<C64>> {
    awgn(&vec![C64::new(0.0, 0.0); len], power, seed)
}

/// Runs every symbol of `schedule` through transmit, channel and receive.
pub fn run_tdd_frame(
    state: &mut FrameState,
    schedule: &FrameSchedule,
    cfg: &SweepConfig,
    gains: FrameGains,
) -> Result<Vec<SymbolOutcome>> {
    run_frame(state, schedule, cfg, gains, None)
}

/// With `only` set, data and DL pilot symbols that cannot affect that
/// direction's bit counts are skipped. Seeds are positional, so the counted
/// symbols come out identical either way.
fn run_frame(
    state: &mut FrameState,
    schedule: &FrameSchedule,
    cfg: &SweepConfig,
    gains: FrameGains,
    only: Option<Direction>,
) -> Result<Vec<SymbolOutcome>> {
    let (m, k, used) = (cfg.m, cfg.k, cfg.subcarriers);
    let alloc = PilotAllocation::sequential(k);
    let power: Vec<f64> = cfg.ul_power_db.iter().map(|&d| amplitude(d)).collect();
    let a_pilot = amplitude(gains.ue_pilot_db);
    let a_data = amplitude(gains.ue_data_db);
    let a_bs = amplitude(gains.bs_db);
    let modu = cfg.modulation;
    let bps = modu.bits_per_symbol() as u64;

    let mut out = Vec::with_capacity(schedule.len());
    for (i, &kind) in schedule.symbols().iter().enumerate() {
        let mut outcome = SymbolOutcome {
            index: i,
            kind,
            errors: vec![0; k],
            bits: vec![0; k],
            equalized: Vec::new(),
        };
        let skip = match only {
            Some(Direction::Ul) => kind.is_downlink(),
            Some(Direction::Dl) => kind == SymbolType::UlData,
            None => false,
        };
        if skip {
            state.evolve(cfg, i)?;
            out.push(outcome);
            continue;
        }
        match kind {
            SymbolType::UlPilot => {
                let n = noise(used * m, cfg.noise_power, state.seed(cfg, TAG_NOISE, i))?;
                let rx = CMat::from_fn(m, used, |a, s| {
                    let u = alloc.owner(s);
                    let g = &state.g[cfg.channel_block_of(s)];
                    checked_div(g[(a, u)] * power[u] * a_pilot * PILOT + n[s * m + a], C64::new(a_pilot, 0.0))
                });
                state.ul_est = Some(ls_estimate(&rx, &vec![PILOT; k], &alloc)?);
                if cfg.csi == CsiMode::Estimated {
                    state.detectors = None;
                    state.precoders = None;
                }
            }
            SymbolType::UlData => {
                let labels = draw_labels(cfg, state.seed(cfg, TAG_BITS, i));
                let n = noise(used * m, cfg.noise_power, state.seed(cfg, TAG_NOISE, i))?;
                state.detectors(cfg)?;
                let dets = state.detectors.as_ref().unwrap();
                outcome.equalized.reserve(used * k);
                for s in 0..used {
                    let g = &state.g[cfg.channel_block_of(s)];
                    let x: Vec<C64> = (0..k).map(|u| modu.map(labels[s * k + u]) * power[u] * a_data).collect();
                    let mut y = g.mul_vec(&x)?;
                    for (a, y) in y.iter_mut().enumerate() {
                        *y += n[s * m + a];
                    }
                    let (w, d) = &dets[cfg.csi_block_of(s)];
                    let z = w.mul_vec(&y)?;
                    for u in 0..k {
                        let zh = checked_div(z[u], d[u] * a_data);
                        let err = (modu.demap(zh) ^ labels[s * k + u]).count_ones() as u64;
                        outcome.errors[u] += err;
                        outcome.bits[u] += bps;
                        outcome.equalized.push(zh);
                    }
                }
            }
            SymbolType::DlPilot => {
                let n = noise(used * k, cfg.noise_power, state.seed(cfg, TAG_NOISE, i))?;
                state.precoders(cfg)?;
                let precs = state.precoders.as_ref().unwrap();
                let mut est = vec![vec![C64::new(0.0, 0.0); k]; used / k];
                for s in 0..used {
                    let u = alloc.owner(s);
                    let h = &state.h[cfg.channel_block_of(s)];
                    let p = &precs[cfg.csi_block_of(s)];
                    let eff: C64 = (0..m).map(|a| h[(u, a)] * p[(a, u)]).sum();
                    let y = eff * a_bs * PILOT + n[s * k + u];
                    est[s / k][u] = y / PILOT;
                }
                state.dl_est = Some(est);
            }
            SymbolType::DlData => {
                let labels = draw_labels(cfg, state.seed(cfg, TAG_BITS, i));
                let n = noise(used * k, cfg.noise_power, state.seed(cfg, TAG_NOISE, i))?;
                if state.dl_est.is_none() {
                    return Err(Error::InvalidSchedule(format!("DL data at symbol {i} before any DL pilot")));
                }
                state.precoders(cfg)?;
                let precs = state.precoders.as_ref().unwrap();
                let dl_est = state.dl_est.as_ref().unwrap();
                outcome.equalized.reserve(used * k);
                for s in 0..used {
                    let h = &state.h[cfg.channel_block_of(s)];
                    let p = &precs[cfg.csi_block_of(s)];
                    let sym: Vec<C64> = (0..k).map(|u| modu.map(labels[s * k + u]) * a_bs).collect();
                    let x = p.mul_vec(&sym)?;
                    let mut y = h.mul_vec(&x)?;
                    for (u, y) in y.iter_mut().enumerate() {
                        *y += n[s * k + u];
                    }
                    let zh = ue_equalize_dl(&y, &dl_est[s / k])
                        .unwrap_or_else(|_| y.iter().zip(&dl_est[s / k]).map(|(&y, &h)| checked_div(y, h)).collect());
                    for u in 0..k {
                        let err = (modu.demap(zh[u]) ^ labels[s * k + u]).count_ones() as u64;
                        outcome.errors[u] += err;
                        outcome.bits[u] += bps;
                    }
                    outcome.equalized.extend(zh);
                }
            }
            SymbolType::Guard => {}
        }
        state.evolve(cfg, i)?;
        out.push(outcome);
    }
    Ok(out)
}

/// Uncoded BER at one gain point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub direction: Direction,
    pub gain_db: f64,
    pub per_user_ber: Vec<f64>,
    pub per_user_errors: Vec<u64>,
    /// Bits counted per user.
    pub bits_counted: u64,
}

impl BerRecord {
    /// BER pooled over all users.
    pub fn mean_ber(&self) -> f64 {
        self.per_user_errors.iter().sum::<u64>() as f64 / (self.bits_counted * self.per_user_errors.len() as u64) as f64
    }

    pub fn total_errors(&self) -> u64 {
        self.per_user_errors.iter().sum()
    }

    /// 95% Wilson interval of the pooled BER.
    pub fn pooled_interval(&self) -> (f64, f64) {
        wilson_interval(
            self.total_errors(),
            self.bits_counted * self.per_user_errors.len() as u64,
            Z95,
        )
    }

    /// 95% Wilson interval of one user's BER.
    pub fn user_interval(&self, user: usize) -> (f64, f64) {
        wilson_interval(self.per_user_errors[user], self.bits_counted, Z95)
    }
}

fn sweep_point(cfg: &SweepConfig, schedule: &FrameSchedule, point: usize, gain_db: f64) -> Result<BerRecord> {
    let data_kind = match cfg.direction {
        Direction::Ul => SymbolType::UlData,
        Direction::Dl => SymbolType::DlData,
    };
    let gains = FrameGains::for_point(cfg, gain_db);
    let mut errors = vec![0u64; cfg.k];
    let mut bits = vec![0u64; cfg.k];
    let mut frame = 0u64;
    while bits.iter().copied().min().unwrap_or(0) < cfg.bits_per_point {
        let mut state = FrameState::new(cfg, point as u64, frame)?;
        for o in run_frame(&mut state, schedule, cfg, gains, Some(cfg.direction))? {
            if o.kind == data_kind {
                for u in 0..cfg.k {
                    errors[u] += o.errors[u];
                    bits[u] += o.bits[u];
                }
            }
        }
        frame += 1;
    }
    let n = bits[0];
    Ok(BerRecord {
        direction: cfg.direction,
        gain_db,
        per_user_ber: errors.iter().map(|&e| e as f64 / n as f64).collect(),
        per_user_errors: errors,
        bits_counted: n,
    })
}

/// Measures BER at every point of the gain grid, one fresh channel per
/// frame, until each user has `bits_per_point` bits.
pub fn ber_sweep(cfg: &SweepConfig, schedule: &FrameSchedule) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    schedule.check()?;
    if cfg.gain_grid_db.is_empty() {
        return Err(Error::InvalidParameter("empty gain grid".into()));
    }
    let data_kind = match cfg.direction {
        Direction::Ul => SymbolType::UlData,
        Direction::Dl => SymbolType::DlData,
    };
    if schedule.count(data_kind) == 0 {
        return Err(Error::InvalidSchedule(format!("no {} data symbols in the schedule", cfg.direction)));
    }
    let points: Vec<(usize, f64)> = cfg.gain_grid_db.iter().copied().enumerate().collect();
    #[cfg(feature = "parallel")]
    let records = {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|&(p, g)| sweep_point(cfg, schedule, p, g))
            .collect::<Result<Vec<_>>>()
    };
    #[cfg(not(feature = "parallel"))]
    let records = points
        .iter()
        .map(|&(p, g)| sweep_point(cfg, schedule, p, g))
        .collect::<Result<Vec<_>>>();
    records
}

/// Per-stream post-ZF SNR `1 / [(GᴴG)⁻¹]_kk` for unit transmit power and
/// unit noise.
pub fn zf_post_snr(g: &CMat) -> Result<Vec<f64>> {
    let inv = inverse(&gram(g))?;
    Ok(inv.diag().iter().map(|d| 1.0 / d.re).collect())
}

/// Outcome of the consecutive-estimate SNR estimator for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrEstimate {
    /// Linear SNR.
    Finite(f64),
    /// The two estimates are identical.
    Infinite,
    /// Signal level too low to separate from the noise.
    NonPositive,
}

impl SnrEstimate {
    pub fn db(self) -> Option<f64> {
        match self {
            SnrEstimate::Finite(x) => Some(10.0 * x.log10()),
            SnrEstimate::Infinite => Some(f64::INFINITY),
            SnrEstimate::NonPositive => None,
        }
    }
}

/// SNR per user column from two estimates of a static channel: the
/// difference carries only noise, the sum signal plus noise.
///
/// `noise = ‖h1 − h2‖²/2`, `signal+noise = ‖h1 + h2‖²/4`. The sum averages
/// two noise draws, so the result reads about half a linear unit low.
pub fn snr_from_consecutive_estimates(h1: &CMat, h2: &CMat) -> Result<Vec<SnrEstimate>> {
    if h1.shape() != h2.shape() {
        return Err(Error::dims(
            format!("{}x{}", h1.rows(), h1.cols()),
            format!("{}x{}", h2.rows(), h2.cols()),
        ));
    }
    Ok((0..h1.cols())
        .map(|c| {
            let (mut diff, mut sum) = (0.0, 0.0);
            for r in 0..h1.rows() {
                diff += (h1[(r, c)] - h2[(r, c)]).norm_sqr();
                sum += (h1[(r, c)] + h2[(r, c)]).norm_sqr();
            }
            let noise = diff / 2.0;
            let sig_noise = sum / 4.0;
            if noise == 0.0 {
                if sig_noise > 0.0 {
                    SnrEstimate::Infinite
                } else {
                    SnrEstimate::NonPositive
                }
            } else {
                let snr = (sig_noise - noise) / noise;
                if snr > 0.0 {
                    SnrEstimate::Finite(snr)
                } else {
                    SnrEstimate::NonPositive
                }
            }
        })
        .collect())
}
