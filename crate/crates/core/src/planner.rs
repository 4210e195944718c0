//! Dimensioning of a distributed massive-MIMO base station: processing load,
//! data-shuffling rates, subsystem and co-processor sizing, link budgets and
//! the TDD turnaround latency budget.
//!
//! Rates follow the byte convention of the hardware data sheets: a sample
//! stream of `F` transfers/s with `w`-byte words costs `w·F` bytes/s.
//! Constraint checks report rates in MB/s (10⁶ bytes/s).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ofdm::{FrameSchedule, OfdmParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub m: usize,
    pub k: usize,
    pub ofdm: OfdmParams,
    /// Antennas per SDR.
    pub n_ant: usize,
    /// Bytes per subcarrier-domain sample.
    pub word_bytes: usize,
    /// Bytes per antenna-domain sample.
    pub word_bytes_ant: usize,
    pub fc_hz: f64,
    /// Replaces the derived subcarrier rate, e.g. with a rounded figure
    /// from a data sheet.
    pub f_sub_override: Option<f64>,
}

impl SystemParams {
    pub fn new(m: usize, k: usize, ofdm: OfdmParams) -> Self {
        SystemParams {
            m,
            k,
            ofdm,
            n_ant: 2,
            word_bytes: 3,
            word_bytes_ant: 3,
            fc_hz: 3.7e9,
            f_sub_override: None,
        }
    }

    /// The 100-antenna, 12-user LTE-like testbed, with the subcarrier rate
    /// rounded to 16.8 M/s as in its published budget tables.
    pub fn lumami() -> Self {
        SystemParams {
            f_sub_override: Some(16.8e6),
            ..SystemParams::new(100, 12, OfdmParams::lte20())
        }
    }

    /// Subcarrier-domain sample rate `F_s·N_used/(N_FFT+N_cp)` unless
    /// overridden.
    pub fn f_sub(&self) -> f64 {
        self.f_sub_override.unwrap_or_else(|| self.f_sub_exact())
    }

    pub fn f_sub_exact(&self) -> f64 {
        self.ofdm.sample_rate_hz * self.ofdm.used_subcarriers as f64
            / (self.ofdm.fft_size + self.ofdm.cp_len) as f64
    }

    pub fn t_ofdm(&self) -> f64 {
        self.ofdm.symbol_duration_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.n_ant == 0 || self.word_bytes == 0 {
            return Err(Error::InvalidParameter(
                "m, k, n_ant and word_bytes must be at least 1".into(),
            ));
        }
        if let Some(f) = self.f_sub_override {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidParameter(format!("f_sub override {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareProfile {
    pub sdr_max_rate_bps: f64,
    pub sdr_max_links: usize,
    pub co_max_rate_bps: f64,
    pub co_max_links: usize,
    pub rf_tx_delay_s: f64,
    pub rf_rx_delay_s: f64,
    /// One 2048-point FFT or IFFT.
    pub fft_delay_s: f64,
}

impl HardwareProfile {
    /// USRP RIO SDRs and FlexRIO co-processors as used in the testbed.
    pub fn lumami() -> Self {
        HardwareProfile {
            sdr_max_rate_bps: 830e6,
            sdr_max_links: 15,
            co_max_rate_bps: 2.4e9,
            co_max_links: 32,
            rf_tx_delay_s: 2.25e-6,
            rf_rx_delay_s: 2.25e-6,
            fft_delay_s: 35e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sdr_max_rate_bps > 0.0
            && self.co_max_rate_bps > 0.0
            && self.sdr_max_links > 0
            && self.co_max_links > 0
            && self.rf_tx_delay_s >= 0.0
            && self.rf_rx_delay_s >= 0.0
            && self.fft_delay_s >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("hardware profile {self:?}")))
        }
    }
}

/// Operations per second of each baseband function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessingRequirements {
    pub fft: f64,
    pub detection: f64,
    pub precoding: f64,
    pub reciprocity_calibration: f64,
    /// Must finish within two OFDM symbols.
    pub pseudo_inverse: f64,
}

impl ProcessingRequirements {
    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("FFT/IFFT", self.fft),
            ("Detection", self.detection),
            ("Precoding", self.precoding),
            ("Recip. calibration", self.reciprocity_calibration),
            ("Pseudo-inverse", self.pseudo_inverse),
        ]
    }
}

pub fn processing_requirements(p: &SystemParams) -> ProcessingRequirements {
    let m = p.m as f64;
    let k = p.k as f64;
    let n = p.ofdm.fft_size as f64;
    let used = p.ofdm.used_subcarriers as f64;
    let t = p.t_ofdm();
    if p.m == 0 {
        // no antennas, nothing to transform or invert
        return ProcessingRequirements {
            fft: 0.0,
            detection: 0.0,
            precoding: 0.0,
            reciprocity_calibration: 0.0,
            pseudo_inverse: 0.0,
        };
    }
    let per_sc = 4.0 * m * k * used / t;
    ProcessingRequirements {
        fft: 4.0 * m * n.log2() * n / t,
        detection: per_sc,
        precoding: per_sc,
        reciprocity_calibration: per_sc,
        pseudo_inverse: 4.0 * used * (2.0 * m * k * k + k * k * k) / (2.0 * t),
    }
}

/// Printed pseudo-inverse load of the published requirements table, which
/// its own formula does not reproduce.
pub const PUBLISHED_PSEUDO_INVERSE_OPS: f64 = 1080e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShufflingRequirements {
    /// Point-to-point links to central processing, one per direction per
    /// antenna.
    pub links: usize,
    pub antenna_rate_bps: f64,
    pub subcarrier_rate_bps: f64,
    pub information_rate_bps: f64,
    /// Subcarrier-domain transfers/s.
    pub f_sub: f64,
}

pub fn shuffling_requirements(p: &SystemParams) -> ShufflingRequirements {
    let f_sub = p.f_sub();
    ShufflingRequirements {
        links: 2 * p.m,
        antenna_rate_bps: (p.word_bytes_ant * p.m) as f64 * p.ofdm.sample_rate_hz,
        subcarrier_rate_bps: (p.word_bytes * p.m) as f64 * f_sub,
        information_rate_bps: p.k as f64 * f_sub,
        f_sub,
    }
}

/// Aggregate rate one subsystem of `n_sub` SDRs pushes over its link.
pub fn sdr_link_rate(p: &SystemParams, n_sub: usize) -> f64 {
    (p.n_ant * n_sub * p.word_bytes) as f64 * p.f_sub()
}

/// Rate one of `n_co` co-processors must sink, without host traffic.
pub fn coprocessor_rate(p: &SystemParams, n_co: usize) -> f64 {
    (p.m * p.word_bytes + p.k) as f64 * p.f_sub() / n_co as f64
}

/// Largest subsystem size meeting the SDR rate limit and, when `n_co` is
/// given, the SDR link-count limit.
pub fn max_subsystem_size(p: &SystemParams, hw: &HardwareProfile, n_co: Option<usize>) -> Result<usize> {
    let per_sdr = (p.n_ant * p.word_bytes) as f64 * p.f_sub();
    if per_sdr <= 0.0 {
        return Err(Error::Infeasible("SDR stream rate is zero".into()));
    }
    // largest n with n·per_sdr < R, strictly
    let mut n = (hw.sdr_max_rate_bps / per_sdr).ceil() as usize;
    while n > 0 && sdr_link_rate(p, n) >= hw.sdr_max_rate_bps {
        n -= 1;
    }
    if let Some(co) = n_co {
        while n > 0 && co + n >= hw.sdr_max_links {
            n -= 1;
        }
    }
    if n == 0 {
        return Err(Error::Infeasible(format!(
            "one SDR needs {:.1} MB/s against a {:.1} MB/s limit",
            per_sdr / 1e6,
            hw.sdr_max_rate_bps / 1e6
        )));
    }
    Ok(n)
}

/// Smallest co-processor count whose per-unit rate is below the limit.
pub fn min_coprocessors(p: &SystemParams, hw: &HardwareProfile) -> usize {
    let total = (p.m * p.word_bytes + p.k) as f64 * p.f_sub();
    if total <= 0.0 {
        return 1;
    }
    let mut n = ((total / hw.co_max_rate_bps).floor() as usize).max(1);
    while total / n as f64 >= hw.co_max_rate_bps {
        n += 1;
    }
    n
}

/// Number of subsystems needed to connect all antennas.
pub fn subsystem_count(p: &SystemParams, n_sub: usize) -> usize {
    p.m.div_ceil(n_sub * p.n_ant)
}

/// Co-processor link count: two per subsystem plus a host pair.
pub fn coprocessor_links(p: &SystemParams, n_sub: usize) -> usize {
    2 * subsystem_count(p, n_sub) + 2
}

/// The co-processor link count as literally printed, `2·⌈M/n_sub⌉ + 2`,
/// which counts SDRs rather than subsystems.
pub fn coprocessor_links_literal(p: &SystemParams, n_sub: usize) -> usize {
    2 * p.m.div_ceil(n_sub) + 2
}

/// Host visualization traffic of one co-processor: per subcarrier a 2-byte
/// quantity and two 4-byte quantities every frame.
pub fn host_visualization_rate(subcarriers_per_co: usize, frame_s: f64) -> f64 {
    (subcarriers_per_co * 2 + 2 * subcarriers_per_co * 4) as f64 / frame_s
}

/// Detection matrices per second with one matrix per K subcarriers.
pub fn detection_matrix_rate(p: &SystemParams) -> f64 {
    p.f_sub() / p.k as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl ConstraintCheck {
    fn less(name: &'static str, lhs: f64, rhs: f64) -> Self {
        ConstraintCheck {
            name,
            lhs,
            rhs,
            pass: lhs < rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBudget {
    pub window_symbols: usize,
    pub window_s: f64,
    pub rf_s: f64,
    /// FFT on receive plus IFFT on transmit.
    pub ofdm_s: f64,
    /// Left for CSI estimation, precoder computation and routing.
    pub remaining_s: f64,
    pub feasible: bool,
}

/// Budget of the tightest UL-pilot to DL turnaround in `schedule`.
pub fn latency_budget(schedule: &FrameSchedule, p: &SystemParams, hw: &HardwareProfile) -> Result<LatencyBudget> {
    let window = schedule
        .turnaround_windows()
        .into_iter()
        .map(|w| w.symbols)
        .min()
        .ok_or(Error::NoTurnaround)?;
    let window_s = window as f64 * p.t_ofdm();
    let rf_s = hw.rf_tx_delay_s + hw.rf_rx_delay_s;
    let ofdm_s = 2.0 * hw.fft_delay_s;
    let remaining_s = window_s - rf_s - ofdm_s;
    Ok(LatencyBudget {
        window_symbols: window,
        window_s,
        rf_s,
        ofdm_s,
        remaining_s,
        feasible: remaining_s >= 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub params: SystemParams,
    pub processing: ProcessingRequirements,
    pub shuffling: ShufflingRequirements,
    pub n_sub: usize,
    pub n_co: usize,
    pub extras_bps: f64,
    pub coprocessor_links_literal: usize,
    pub checks: Vec<ConstraintCheck>,
    pub latency: Option<LatencyBudget>,
    pub notes: Vec<String>,
}

impl PlanReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.latency.is_none_or(|l| l.feasible)
    }

    pub fn check(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `check_name,lhs,rhs,pass` rows with a header.
    pub fn checks_csv(&self) -> String {
        let mut s = String::from("check_name,lhs,rhs,pass\n");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                c.name,
                fmt_num(c.lhs),
                fmt_num(c.rhs),
                if c.pass { "pass" } else { "fail" }
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "System: M={} K={} n_ant={} w={} w_ant={}", p.m, p.k, p.n_ant, p.word_bytes, p.word_bytes_ant);
        let _ = writeln!(
            s,
            "F_sub = {} M/s (derived {} M/s), t_OFDM = {} us",
            fmt_num(self.shuffling.f_sub / 1e6),
            fmt_num(p.f_sub_exact() / 1e6),
            fmt_num(p.t_ofdm() * 1e6)
        );
        let _ = writeln!(s, "\nProcessing (Gops/s)");
        for (name, v) in self.processing.rows() {
            let _ = writeln!(s, "  {name:<20} {:>10.1}", v / 1e9);
        }
        let sh = &self.shuffling;
        let _ = writeln!(s, "\nData shuffling");
        let _ = writeln!(s, "  {:<20} {:>10}", "links", sh.links);
        let _ = writeln!(s, "  {:<20} {:>10.1} MB/s", "antenna rate", sh.antenna_rate_bps / 1e6);
        let _ = writeln!(s, "  {:<20} {:>10.1} MB/s", "subcarrier rate", sh.subcarrier_rate_bps / 1e6);
        let _ = writeln!(s, "  {:<20} {:>10.1} MB/s", "information rate", sh.information_rate_bps / 1e6);
        let _ = writeln!(s, "\nPartitioning: n_sub={} n_co={} host extras {:.1} MB/s", self.n_sub, self.n_co, self.extras_bps / 1e6);
        let _ = writeln!(s, "  {:<10} {:>12} {:>12}  result", "check", "lhs", "rhs");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {:<10} {:>12} {:>12}  {}",
                c.name,
                fmt_num(c.lhs),
                fmt_num(c.rhs),
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        if let Some(l) = &self.latency {
            let _ = writeln!(s, "\nTurnaround latency ({} symbol window)", l.window_symbols);
            let _ = writeln!(s, "  {:<20} {:>10.2} us", "window", l.window_s * 1e6);
            let _ = writeln!(s, "  {:<20} {:>10.2} us", "RF tx+rx", l.rf_s * 1e6);
            let _ = writeln!(s, "  {:<20} {:>10.2} us", "FFT+IFFT", l.ofdm_s * 1e6);
            let _ = writeln!(
                s,
                "  {:<20} {:>10.2} us{}",
                "remaining",
                l.remaining_s * 1e6,
                if l.feasible { "" } else { "  INFEASIBLE" }
            );
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\nNotes");
            for n in &self.notes {
                let _ = writeln!(s, "  - {n}");
            }
        }
        s
    }
}

/// Formats with at most six decimals and no trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() || x.is_infinite() {
        return x.to_string();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Evaluates the four partitioning inequalities for a chosen `n_sub` and
/// `n_co`. `extras_bps` is host traffic added to each co-processor.
pub fn validate(
    p: &SystemParams,
    n_sub: usize,
    n_co: usize,
    hw: &HardwareProfile,
    extras_bps: Option<f64>,
) -> Result<PlanReport> {
    p.validate()?;
    hw.validate()?;
    if n_sub == 0 || n_co == 0 {
        return Err(Error::InvalidParameter("n_sub and n_co must be at least 1".into()));
    }
    let extras = extras_bps.unwrap_or(0.0);
    let processing = processing_requirements(p);
    let shuffling = shuffling_requirements(p);
    let links = coprocessor_links(p, n_sub);
    let literal = coprocessor_links_literal(p, n_sub);
    let checks = vec![
        ConstraintCheck::less("R_SDR", sdr_link_rate(p, n_sub) / 1e6, hw.sdr_max_rate_bps / 1e6),
        ConstraintCheck::less("P2P_SDR", (n_co + n_sub) as f64, hw.sdr_max_links as f64),
        ConstraintCheck::less(
            "R_CO",
            (coprocessor_rate(p, n_co) + extras) / 1e6,
            hw.co_max_rate_bps / 1e6,
        ),
        ConstraintCheck::less("P2P_CO", links as f64, hw.co_max_links as f64),
    ];
    let mut notes = Vec::new();
    let pinv = processing.pseudo_inverse;
    if p.m == 100 && p.k == 12 && p.ofdm == OfdmParams::lte20() {
        notes.push(format!(
            "pseudo-inverse formula gives {:.1} Gops/s; the published table prints {:.0} ({:+.1}%)",
            pinv / 1e9,
            PUBLISHED_PSEUDO_INVERSE_OPS / 1e9,
            (PUBLISHED_PSEUDO_INVERSE_OPS / pinv - 1.0) * 100.0
        ));
    }
    if literal != links {
        notes.push(format!(
            "P2P_CO counted per subsystem ({} subsystems): {links}; counting per SDR, 2*ceil(M/n_sub)+2 = {literal}",
            subsystem_count(p, n_sub)
        ));
    }
    if extras > 0.0 {
        notes.push(format!(
            "R_CO includes {:.1} MB/s host traffic on top of {:.1} MB/s",
            extras / 1e6,
            coprocessor_rate(p, n_co) / 1e6
        ));
    }
    Ok(PlanReport {
        params: *p,
        processing,
        shuffling,
        n_sub,
        n_co,
        extras_bps: extras,
        coprocessor_links_literal: literal,
        checks,
        latency: None,
        notes,
    })
}
