use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mami_core::linksim::{
    ber_sweep, csi_snapshot, run_tdd_frame, write_trace, CalibrationMode, ChannelMode, CsiMode, CsiRecorder,
    Direction, FrameGains, FrameState, HardwareMode, Modulation, PrecoderSpec, SweepConfig,
};
use mami_core::matrixkit::InverseEngine;
use mami_core::mimoproc::{DetectionScheme, Detector, PrecodingScheme};
use mami_core::ofdm::{default_frame, FrameSchedule, OfdmParams};
use mami_core::planner::{self, fmt_num, HardwareProfile, SystemParams};
use mami_core::sync::{acquire, synthesize_pss_stream, uniform_cfo_grid, PssConfig};
use mami_core::{Error, C64};

use crate::config::{ConfigError, KvConfig};

/// Why a command did not succeed; each maps to a fixed exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Constraint(String),
    NoPeak(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io(_) => 1,
            Failure::Constraint(_) => 2,
            Failure::NoPeak(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Constraint(m) | Failure::NoPeak(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoPeak { .. } => Failure::NoPeak(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

/// Shared command inputs after argument parsing.
pub struct Invocation<'a> {
    pub config: KvConfig,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub schedule: Option<String>,
}

impl Invocation<'_> {
    /// `--schedule` wins over a `schedule` key in the file.
    fn schedule(&mut self) -> Result<Option<FrameSchedule>, Failure> {
        let from_file = self.config.take_str("schedule");
        match self.schedule.clone().or(from_file) {
            None => Ok(None),
            Some(s) => Ok(Some(s.parse()?)),
        }
    }
}

fn write_bytes(path: &Path, body: &[u8]) -> CmdResult {
    std::fs::write(path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, body: &str) -> CmdResult {
    write_bytes(path, body.as_bytes())
}

fn engine(cfg: &mut KvConfig, key: &str) -> Result<InverseEngine, Failure> {
    let name = cfg.take_or(key, "qr".to_string())?;
    let terms_key = format!("{key}_terms");
    let terms = cfg.take::<usize>(&terms_key)?;
    match name.to_ascii_lowercase().as_str() {
        "qr" => Ok(InverseEngine::Qr),
        "direct" | "lu" => Ok(InverseEngine::Direct),
        "neumann" => Ok(InverseEngine::Neumann { terms: terms.unwrap_or(3) }),
        _ => Err(Failure::Config(format!("{key} = {name:?}: expected qr, direct or neumann"))),
    }
}

fn scheme_beta(cfg: &mut KvConfig, key: &str, regularized: bool) -> Result<f64, Failure> {
    let beta_key = format!("{key}_beta");
    match (cfg.take::<f64>(&beta_key)?, regularized) {
        (Some(b), true) if b >= 0.0 && b.is_finite() => Ok(b),
        (Some(b), true) => Err(Failure::Config(format!("{beta_key} = {b} must be finite and >= 0"))),
        (None, true) => Err(Failure::Config(format!("regularized {key} needs {beta_key}"))),
        (Some(_), false) => Err(Failure::Config(format!("{beta_key} only applies to a regularized {key}"))),
        (None, false) => Ok(0.0),
    }
}

fn pick<T: Copy>(cfg: &mut KvConfig, key: &str, default: T, options: &[(&str, T)]) -> Result<T, Failure> {
    let Some(v) = cfg.take_str(key) else {
        return Ok(default);
    };
    let lower = v.to_ascii_lowercase();
    options.iter().find(|(name, _)| *name == lower).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        Failure::Config(format!("{key} = {v:?}: expected one of {}", names.join(", ")))
    })
}

/// Reads the link-simulation keys shared by `sweep` and `simulate`.
fn sweep_config(inv: &mut Invocation<'_>) -> Result<SweepConfig, Failure> {
    let c = &mut inv.config;
    let m: usize = c.require("m")?;
    let k: usize = c.require("k")?;
    let mut s = SweepConfig::new(m, k);

    let det = pick(
        c,
        "detector",
        DetectionScheme::Zf,
        &[("mrc", DetectionScheme::Mrc), ("zf", DetectionScheme::Zf), ("rzf", DetectionScheme::Rzf)],
    )?;
    let beta = scheme_beta(c, "detector", det == DetectionScheme::Rzf)?;
    s.detector = Detector::new(det, beta, engine(c, "detector_engine")?);

    let pre = pick(
        c,
        "precoder",
        PrecodingScheme::Zf,
        &[("mrt", PrecodingScheme::Mrt), ("zf", PrecodingScheme::Zf), ("rzf", PrecodingScheme::Rzf)],
    )?;
    s.precoder = PrecoderSpec {
        scheme: pre,
        beta: scheme_beta(c, "precoder", pre == PrecodingScheme::Rzf)?,
        engine: engine(c, "precoder_engine")?,
    };

    s.modulation = c.take_or::<Modulation>("modulation", s.modulation)?;
    s.direction = c.take_or::<Direction>("direction", s.direction)?;
    s.channel_mode = pick(
        c,
        "channel",
        s.channel_mode,
        &[
            ("flat", ChannelMode::FlatBlock),
            ("iid", ChannelMode::IidPerSubcarrier),
            ("awgn", ChannelMode::Awgn),
        ],
    )?;
    s.csi = pick(c, "csi", s.csi, &[("estimated", CsiMode::Estimated), ("perfect", CsiMode::Perfect)])?;
    s.hardware = pick(c, "hardware", s.hardware, &[("ideal", HardwareMode::Ideal), ("random", HardwareMode::Random)])?;
    s.calibration = pick(
        c,
        "calibration",
        s.calibration,
        &[("exact", CalibrationMode::Exact), ("identity", CalibrationMode::Identity)],
    )?;
    if let Some(g) = c.take_list("gain_db")? {
        s.gain_grid_db = g;
    }
    s.bits_per_point = c.take_or("bits_per_point", s.bits_per_point)?;
    s.seed = c.take_or("seed", s.seed)?;
    if let Some(p) = c.take_list("ul_power_db")? {
        s.ul_power_db = if p.len() == 1 { vec![p[0]; k] } else { p };
    }
    s.subcarriers = c.take_or("subcarriers", s.subcarriers)?;
    s.ul_pilot_gain_db = c.take("ul_pilot_gain_db")?;
    s.fixed_gain_db = c.take_or("fixed_gain_db", s.fixed_gain_db)?;
    s.noise_power = c.take_or("noise_power", s.noise_power)?;
    s.doppler_hz = c.take_or("doppler_hz", s.doppler_hz)?;
    s.symbol_duration_s = c.take_or("symbol_duration_s", s.symbol_duration_s)?;
    if let Some(seed) = inv.seed {
        s.seed = seed;
    }
    Ok(s)
}

pub fn cmd_plan(mut inv: Invocation<'_>, stdout: &mut dyn Write) -> CmdResult {
    if inv.config.is_empty() {
        return Err(Failure::Config("empty config".into()));
    }
    let schedule = inv.schedule()?.unwrap_or_else(default_frame);
    let c = &mut inv.config;
    let m: usize = c.require("m")?;
    let k: usize = c.require("k")?;
    let lte = OfdmParams::lte20();
    let ofdm = OfdmParams::new(
        c.take_or("fft_size", lte.fft_size)?,
        c.take_or("used_subcarriers", lte.used_subcarriers)?,
        c.take_or("cp_len", lte.cp_len)?,
        c.take_or("sample_rate_hz", lte.sample_rate_hz)?,
    )?;
    let mut p = SystemParams::new(m, k, ofdm);
    p.n_ant = c.take_or("n_ant", p.n_ant)?;
    p.word_bytes = c.take_or("word_bytes", p.word_bytes)?;
    p.word_bytes_ant = c.take_or("word_bytes_ant", p.word_bytes_ant)?;
    p.fc_hz = c.take_or("fc_hz", p.fc_hz)?;
    p.f_sub_override = c.take("f_sub_hz")?;

    let base = HardwareProfile::lumami();
    let hw = HardwareProfile {
        sdr_max_rate_bps: c.take_or("sdr_max_rate_MBps", base.sdr_max_rate_bps / 1e6)? * 1e6,
        sdr_max_links: c.take_or("sdr_max_links", base.sdr_max_links)?,
        co_max_rate_bps: c.take_or("co_max_rate_MBps", base.co_max_rate_bps / 1e6)? * 1e6,
        co_max_links: c.take_or("co_max_links", base.co_max_links)?,
        rf_tx_delay_s: c.take_or("rf_tx_delay_us", base.rf_tx_delay_s * 1e6)? * 1e-6,
        rf_rx_delay_s: c.take_or("rf_rx_delay_us", base.rf_rx_delay_s * 1e6)? * 1e-6,
        fft_delay_s: c.take_or("fft_delay_us", base.fft_delay_s * 1e6)? * 1e-6,
    };
    let extras = c.take_or("host_extras_MBps", 0.0f64)? * 1e6;
    let n_co_key: Option<usize> = c.take("n_co")?;
    let n_sub_key: Option<usize> = c.take("n_sub")?;
    inv.config.finish()?;
    p.validate()?;
    hw.validate()?;

    let n_co = match n_co_key {
        Some(n) => n,
        None => planner::min_coprocessors(&p, &hw),
    };
    let n_sub = match n_sub_key {
        Some(n) => n,
        None => planner::max_subsystem_size(&p, &hw, Some(n_co))?,
    };
    let mut report = planner::validate(&p, n_sub, n_co, &hw, Some(extras))?;
    report.latency = Some(planner::latency_budget(&schedule, &p, &hw)?);

    let mut csv = report.checks_csv();
    if let Some(l) = &report.latency {
        let _ = writeln!(
            csv,
            "TURNAROUND_us,{},{},{}",
            fmt_num((l.rf_s + l.ofdm_s) * 1e6),
            fmt_num(l.window_s * 1e6),
            if l.feasible { "pass" } else { "fail" }
        );
    }
    write_out(inv.out, &csv)?;
    let _ = stdout.write_all(report.to_text().as_bytes());
    if report.all_pass() {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(Failure::Constraint(format!("constraint check failed: {}", failed.join(", "))))
    }
}

pub fn cmd_sweep(mut inv: Invocation<'_>, stdout: &mut dyn Write) -> CmdResult {
    let schedule = inv.schedule()?.unwrap_or_else(default_frame);
    let cfg = sweep_config(&mut inv)?;
    inv.config.finish()?;
    let records = ber_sweep(&cfg, &schedule)?;

    let mut csv = String::from("direction,gain_db,user,ber,bits\n");
    for r in &records {
        for (u, ber) in r.per_user_ber.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{},{},{}", r.direction, r.gain_db, u, ber, r.bits_counted);
        }
    }
    write_out(inv.out, &csv)?;
    for r in &records {
        let (lo, hi) = r.pooled_interval();
        let _ = writeln!(
            stdout,
            "{} gain {:>6} dB  mean BER {:.3e}  [{:.2e}, {:.2e}]  errors {}",
            r.direction,
            r.gain_db,
            r.mean_ber(),
            lo,
            hi,
            r.total_errors()
        );
    }
    Ok(())
}

/// Frame period used to place CSI snapshots on frame boundaries.
const FRAME_S: f64 = 0.01;

pub fn cmd_simulate(mut inv: Invocation<'_>, stdout: &mut dyn Write) -> CmdResult {
    let schedule = inv.schedule()?.unwrap_or_else(default_frame);
    let cfg = sweep_config(&mut inv)?;
    let frame: u64 = inv.config.take_or("frame", 0)?;
    let trace_out = inv.config.take_path("trace_out");
    let trace_interval_ms: f64 = inv.config.take_or("trace_interval_ms", 10.0)?;
    let trace_duration_s: f64 = inv.config.take_or("trace_duration_s", 1.0)?;
    inv.config.finish()?;
    if cfg.gain_grid_db.len() != 1 {
        return Err(Failure::Config("simulate runs a single gain_db value".into()));
    }
    let gain = cfg.gain_grid_db[0];
    cfg.validate()?;
    let gains = FrameGains::for_point(&cfg, gain);
    let mut state = FrameState::new(&cfg, 0, frame)?;
    let outcomes = run_tdd_frame(&mut state, &schedule, &cfg, gains)?;

    let mut csv = String::from("symbol,kind,user,errors,bits\n");
    let mut total = (0u64, 0u64);
    for o in &outcomes {
        for (u, (e, b)) in o.errors.iter().zip(&o.bits).enumerate() {
            let _ = writeln!(csv, "{},{},{},{},{}", o.index, o.kind.letter(), u, e, b);
            total.0 += e;
            total.1 += b;
        }
    }
    write_out(inv.out, &csv)?;
    let _ = writeln!(stdout, "frame {frame} schedule {schedule}: {} bit errors in {} bits", total.0, total.1);

    if let Some(path) = trace_out {
        let rec = CsiRecorder::coprocessor(cfg.m, cfg.k, cfg.subcarriers);
        let trace = csi_snapshot(&rec, trace_interval_ms, trace_duration_s, |t| {
            let f = (t / FRAME_S).round() as u64;
            let mut st = FrameState::new(&cfg, 0, f)?;
            run_tdd_frame(&mut st, &schedule, &cfg, gains)?;
            st.ul_estimate()
                .map(|e| e.blocks.clone())
                .ok_or_else(|| Error::InvalidParameter("CSI traces need estimated CSI and a UL pilot".into()))
        })?;
        let file = File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        write_trace(&trace, BufWriter::new(file)).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let _ = writeln!(stdout, "wrote {} CSI snapshots to {}", trace.len(), path.display());
    }
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<C64>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    if bytes.len() % 16 != 0 {
        return Err(Failure::Config(format!(
            "{}: {} bytes is not a whole number of complex f64 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

/// Interleaved little-endian f64 re/im, the format `sync` reads.
fn encode_samples(samples: &[C64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
        .collect()
}

pub fn cmd_sync(mut inv: Invocation<'_>, stdout: &mut dyn Write) -> CmdResult {
    let c = &mut inv.config;
    let fs: f64 = c.take_or("sample_rate_hz", 30.72e6)?;
    let base = PssConfig::default();
    let span: f64 = c.take_or("cfo_span_hz", 7500.0)?;
    let steps: usize = c.take_or("cfo_steps", base.cfo_grid_hz.len())?;
    let pss = PssConfig {
        root: c.take_or("root", base.root)?,
        length: c.take_or("length", base.length)?,
        occupied_bw_hz: c.take_or("occupied_bw_hz", base.occupied_bw_hz)?,
        cfo_grid_hz: uniform_cfo_grid(span, steps),
        tracking_half_window: c.take_or("tracking_half_window", base.tracking_half_window)?,
        threshold: c.take_or("threshold", base.threshold)?,
    };
    let input = c.take_path("input");
    let gen_keys = ["samples", "offset", "cfo_hz", "snr_db", "seed", "save_stream"];
    let samples = match input {
        Some(path) => {
            if let Some(k) = gen_keys.iter().find(|k| c.take_str(k).is_some()) {
                return Err(Failure::Config(format!("{k} cannot be combined with input")));
            }
            c.clone().finish()?;
            pss.validate()?;
            read_samples(&path)?
        }
        None => {
            let total: usize = c.take_or("samples", 307_200)?;
            let offset: usize = c.take_or("offset", 0)?;
            let cfo: f64 = c.take_or("cfo_hz", 0.0)?;
            let snr: Option<f64> = c.take("snr_db")?;
            let seed: u64 = c.take_or("seed", 0)?;
            let save = c.take_path("save_stream");
            c.clone().finish()?;
            let s = synthesize_pss_stream(&pss, fs, total, offset, cfo, snr, inv.seed.unwrap_or(seed))?;
            if let Some(path) = save {
                write_bytes(&path, &encode_samples(&s))?;
            }
            s
        }
    };
    let r = acquire(&samples, &pss, fs)?;
    let csv = format!(
        "timing_offset_samples,cfo_hz,peak_metric\n{},{},{}\n",
        r.timing_offset,
        fmt_num(r.cfo_hz),
        fmt_num(r.peak_metric)
    );
    write_out(inv.out, &csv)?;
    let _ = writeln!(
        stdout,
        "PSS at sample {} ({:.3} us), CFO {} Hz, metric {:.4}",
        r.timing_offset,
        r.timing_offset as f64 / fs * 1e6,
        fmt_num(r.cfo_hz),
        r.peak_metric
    );
    Ok(())
}
