//! Linear detection and precoding, LS channel estimation with zeroth-order
//! hold, and BS reciprocity calibration.

use num_complex::Complex64 as C64;

use crate::channel::{DiagonalTransfer, HardwareFront};
use crate::error::{Error, Result};
use crate::matrixkit::{regularized_pinv, CMat, InverseEngine};
use crate::ofdm::PilotAllocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionScheme {
    Mrc,
    Zf,
    Rzf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecodingScheme {
    Mrt,
    Zf,
    Rzf,
}

/// Uplink combiner configuration. `beta` only matters for RZF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub scheme: DetectionScheme,
    pub beta: f64,
    pub engine: InverseEngine,
}

impl Detector {
    pub fn new(scheme: DetectionScheme, beta: f64, engine: InverseEngine) -> Self {
        Detector { scheme, beta, engine }
    }

    pub fn mrc() -> Self {
        Detector::new(DetectionScheme::Mrc, 0.0, InverseEngine::Qr)
    }

    pub fn zf(engine: InverseEngine) -> Self {
        Detector::new(DetectionScheme::Zf, 0.0, engine)
    }
}

/// Downlink precoder configuration, including the calibration diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub scheme: PrecodingScheme,
    pub beta: f64,
    pub engine: InverseEngine,
    pub calibration: DiagonalTransfer,
}

impl Precoder {
    pub fn new(scheme: PrecodingScheme, beta: f64, engine: InverseEngine, calibration: DiagonalTransfer) -> Self {
        Precoder {
            scheme,
            beta,
            engine,
            calibration,
        }
    }
}

/// Regularization `K / SNR` when an SNR hint is given, otherwise 0.
pub fn default_beta(num_users: usize, snr_hint_db: Option<f64>) -> f64 {
    match snr_hint_db {
        Some(db) => num_users as f64 / 10f64.powf(db / 10.0),
        None => 0.0,
    }
}

/// K×M combining matrix for `g` (M×K).
pub fn detect_matrix(g: &CMat, d: &Detector) -> Result<CMat> {
    check_tall(g)?;
    match d.scheme {
        DetectionScheme::Mrc => Ok(g.hermitian()),
        DetectionScheme::Zf => regularized_pinv(g, 0.0, d.engine),
        DetectionScheme::Rzf => regularized_pinv(g, d.beta, d.engine),
    }
}

/// M×K precoding matrix built from the uplink estimate `g`, scaled to
/// `‖P‖_F² = K`.
///
/// With `H ≈ Gᵀ` the zero-forcing precoder is `conj(G)(GᴴG)^{-T}`, which is
/// the transpose of the ZF combiner, so every scheme reuses
/// [`detect_matrix`] and transposes.
pub fn precode_matrix(g: &CMat, p: &Precoder) -> Result<CMat> {
    let (m, k) = g.shape();
    if p.calibration.len() != m {
        return Err(Error::dims(
            format!("calibration of length {m}"),
            format!("{}", p.calibration.len()),
        ));
    }
    let scheme = match p.scheme {
        PrecodingScheme::Mrt => DetectionScheme::Mrc,
        PrecodingScheme::Zf => DetectionScheme::Zf,
        PrecodingScheme::Rzf => DetectionScheme::Rzf,
    };
    let w = detect_matrix(g, &Detector::new(scheme, p.beta, p.engine))?;
    let raw = w.transpose().scale_rows(p.calibration.entries())?;
    let norm = raw.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::RankDeficient { column: 0, pivot: 0.0 });
    }
    Ok(raw.scale_real((k as f64).sqrt() / norm))
}

/// `C = R_B T_B⁻¹`.
pub fn calibration_matrix(hw: &HardwareFront) -> Result<DiagonalTransfer> {
    let entries = hw
        .r_bs
        .entries()
        .iter()
        .zip(hw.t_bs.entries())
        .enumerate()
        .map(|(i, (&r, &t))| {
            if t.norm() < crate::matrixkit::DIAG_TOL {
                Err(Error::SingularDiagonal {
                    index: i,
                    magnitude: t.norm(),
                })
            } else {
                Ok(r / t)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DiagonalTransfer::new(entries)
}

/// Off-diagonal to diagonal power ratio of an effective K×K channel.
pub fn interference_leakage(effective: &CMat) -> f64 {
    let (mut diag, mut off) = (0.0, 0.0);
    for r in 0..effective.rows() {
        for c in 0..effective.cols() {
            if r == c {
                diag += effective[(r, c)].norm_sqr();
            } else {
                off += effective[(r, c)].norm_sqr();
            }
        }
    }
    off / diag
}

/// Block-held channel estimate: one M×K matrix per `hold_block` adjacent
/// subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEstimate {
    pub blocks: Vec<CMat>,
    pub hold_block: usize,
}

impl CsiEstimate {
    pub fn for_subcarrier(&self, s: usize) -> &CMat {
        &self.blocks[s / self.hold_block]
    }

    pub fn num_subcarriers(&self) -> usize {
        self.blocks.len() * self.hold_block
    }
}

/// Least-squares estimate from a comb pilot symbol.
///
/// `rx_pilot_subcarriers` is M×used; user `k` sounds every K-th subcarrier
/// starting at its comb offset with pilot `tx_pilots[k]`. The estimate for
/// each user is held over the K subcarriers of its block.
pub fn ls_estimate(rx_pilot_subcarriers: &CMat, tx_pilots: &[C64], alloc: &PilotAllocation) -> Result<CsiEstimate> {
    let k = alloc.num_users();
    let (m, used) = rx_pilot_subcarriers.shape();
    if tx_pilots.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: tx_pilots.len(),
        });
    }
    if used < k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: used,
        });
    }
    for (user, p) in tx_pilots.iter().enumerate() {
        if (p.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "pilot of user {user} has magnitude {}",
                p.norm()
            )));
        }
    }

    let n_blocks = used.div_ceil(k);
    let mut blocks: Vec<CMat> = Vec::with_capacity(n_blocks);
    for b in 0..n_blocks {
        let mut est = CMat::zeros(m, k);
        for user in 0..k {
            let s = b * k + alloc.offset(user);
            let col: Vec<C64> = if s < used {
                (0..m).map(|a| rx_pilot_subcarriers[(a, s)] / tx_pilots[user]).collect()
            } else {
                // trailing partial block: keep holding the previous estimate
                blocks[b - 1].column(user)
            };
            est.set_column(user, &col);
        }
        blocks.push(est);
    }
    Ok(CsiEstimate { blocks, hold_block: k })
}

/// `ẑ = w r`.
pub fn equalize(w: &CMat, r: &[C64]) -> Result<Vec<C64>> {
    if w.cols() != r.len() {
        return Err(Error::dims(
            format!("{} receive samples", w.cols()),
            format!("{}", r.len()),
        ));
    }
    w.mul_vec(r)
}

/// Per-user one-tap ZF equalizer against the DL pilot estimate.
pub fn ue_equalize_dl(rx: &[C64], dl_pilot_est: &[C64]) -> Result<Vec<C64>> {
    if rx.len() != dl_pilot_est.len() {
        return Err(Error::LengthMismatch {
            expected: dl_pilot_est.len(),
            actual: rx.len(),
        });
    }
    rx.iter()
        .zip(dl_pilot_est)
        .enumerate()
        .map(|(user, (&y, &h))| {
            if h.norm() < f64::MIN_POSITIVE {
                Err(Error::ZeroPilot { user })
            } else {
                Ok(y / h)
            }
        })
        .collect()
}

fn check_tall(g: &CMat) -> Result<()> {
    if g.rows() < g.cols() {
        return Err(Error::dims(
            format!("M >= K for {} users", g.cols()),
            format!("{} antennas", g.rows()),
        ));
    }
    Ok(())
}
