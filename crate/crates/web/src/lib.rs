//! Browser bindings: partitioning check, BER curve and mobility limit.
//!
//! Everything here is plain Rust with thin `wasm_bindgen` wrappers, so the
//! same functions are tested natively.

use mami_core::linksim::{ber_sweep, ChannelMode, CsiMode, SweepConfig};
use mami_core::matrixkit::InverseEngine;
use mami_core::mimoproc::Detector;
use mami_core::ofdm::{default_frame, mobility_limit, FrameSchedule, OfdmParams};
use mami_core::planner::{self, HardwareProfile, SystemParams};
use mami_core::special::bessel_j0;
use mami_core::{Error, SPEED_OF_LIGHT};
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct PlanSummary {
    text: String,
    csv: String,
    all_pass: bool,
}

#[wasm_bindgen]
impl PlanSummary {
    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.text.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn csv(&self) -> String {
        self.csv.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn all_pass(&self) -> bool {
        self.all_pass
    }
}

/// LuMaMi hardware limits with the given array and partitioning.
/// `n_sub` or `n_co` of 0 means "search for it".
pub fn plan_summary(m: usize, k: usize, n_sub: usize, n_co: usize, extras_mbps: f64, schedule: &str) -> Result<PlanSummary, Error> {
    let mut p = SystemParams::new(m, k, OfdmParams::lte20());
    p.f_sub_override = SystemParams::lumami().f_sub_override;
    let hw = HardwareProfile::lumami();
    p.validate()?;
    let n_co = if n_co == 0 { planner::min_coprocessors(&p, &hw) } else { n_co };
    let n_sub = if n_sub == 0 { planner::max_subsystem_size(&p, &hw, Some(n_co))? } else { n_sub };
    let mut report = planner::validate(&p, n_sub, n_co, &hw, Some(extras_mbps * 1e6))?;
    let schedule: FrameSchedule = if schedule.trim().is_empty() { default_frame() } else { schedule.trim().parse()? };
    report.latency = Some(planner::latency_budget(&schedule, &p, &hw)?);
    Ok(PlanSummary {
        text: report.to_text(),
        csv: report.checks_csv(),
        all_pass: report.all_pass(),
    })
}

#[wasm_bindgen]
pub fn plan(m: usize, k: usize, n_sub: usize, n_co: usize, extras_mbps: f64, schedule: &str) -> Result<PlanSummary, JsError> {
    plan_summary(m, k, n_sub, n_co, extras_mbps, schedule).map_err(js_err)
}

/// Mean uplink BER over users for each gain, Rayleigh block fading and LS
/// estimates with a one-data-symbol frame so the page stays responsive.
pub fn ber_points(
    m: usize,
    k: usize,
    detector: &str,
    gains_db: &[f64],
    bits_per_point: u64,
    seed: u64,
) -> Result<Vec<f64>, Error> {
    let mut cfg = SweepConfig::new(m, k);
    cfg.detector = match detector {
        "mrc" => Detector::mrc(),
        "zf" => Detector::zf(InverseEngine::Qr),
        "neumann" => Detector::zf(InverseEngine::Neumann { terms: 3 }),
        other => return Err(Error::InvalidParameter(format!("unknown detector {other:?}"))),
    };
    cfg.channel_mode = ChannelMode::FlatBlock;
    cfg.csi = CsiMode::Estimated;
    cfg.gain_grid_db = gains_db.to_vec();
    cfg.bits_per_point = bits_per_point;
    cfg.seed = seed;
    cfg.subcarriers = 120 - 120 % k.max(1);
    let schedule: FrameSchedule = "PU".parse()?;
    Ok(ber_sweep(&cfg, &schedule)?.iter().map(|r| r.mean_ber()).collect())
}

#[wasm_bindgen]
pub fn ber_curve(m: usize, k: usize, detector: &str, gains_db: &[f64], bits_per_point: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    ber_points(m, k, detector, gains_db, bits_per_point as u64, seed as u64).map_err(js_err)
}

/// Channel correlation across one pilot spacing at each speed (km/h),
/// followed by the speed limit (km/h) for `threshold` as the last element.
pub fn mobility_points(pilot_spacing_us: f64, fc_hz: f64, threshold: f64, speeds_kmh: &[f64]) -> Result<Vec<f64>, Error> {
    let tp = pilot_spacing_us * 1e-6;
    let (_, v_max) = mobility_limit(tp, threshold, fc_hz)?;
    let mut out: Vec<f64> = speeds_kmh
        .iter()
        .map(|v| {
            let nu = v / 3.6 * fc_hz / SPEED_OF_LIGHT;
            bessel_j0(2.0 * std::f64::consts::PI * nu * tp)
        })
        .collect();
    out.push(v_max * 3.6);
    Ok(out)
}

#[wasm_bindgen]
pub fn mobility_curve(pilot_spacing_us: f64, fc_hz: f64, threshold: f64, speeds_kmh: &[f64]) -> Result<Vec<f64>, JsError> {
    mobility_points(pilot_spacing_us, fc_hz, threshold, speeds_kmh).map_err(js_err)
}
