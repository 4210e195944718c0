//! Reference error-rate curves and the statistics used to compare Monte-Carlo
//! measurements against them.

use statrs::function::erf::erfc;

/// Gaussian tail probability Q(x).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-mapped QPSK bit error rate on AWGN at symbol SNR `es_n0` (linear).
pub fn qpsk_awgn_ber(es_n0: f64) -> f64 {
    q_function(es_n0.sqrt())
}

/// BPSK bit error rate with `branches`-fold maximum-ratio combining over
/// i.i.d. Rayleigh branches, each with mean bit SNR `gamma_b` (linear).
///
/// Gray QPSK splits into two independent BPSK rails, so the same expression
/// holds for QPSK with `gamma_b = Es/N0 / 2` per branch.
pub fn mrc_rayleigh_bpsk_ber(gamma_b: f64, branches: u32) -> f64 {
    let mu = (gamma_b / (1.0 + gamma_b)).sqrt();
    let lower = (1.0 - mu) / 2.0;
    let upper = (1.0 + mu) / 2.0;
    let l = branches as i32;
    let mut sum = 0.0;
    let mut binom = 1.0; // C(L-1+j, j)
    for j in 0..branches {
        if j > 0 {
            binom *= (branches - 1 + j) as f64 / j as f64;
        }
        sum += binom * upper.powi(j as i32);
    }
    lower.powi(l) * sum
}

/// Wilson score interval for `errors` out of `trials` at normal quantile `z`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// 95% two-sided normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// CDF of a Gamma distribution with integer shape and unit scale.
pub fn gamma_cdf_integer_shape(x: f64, shape: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // 1 - e^{-x} Σ_{j<shape} x^j / j!, summed in log space for large shapes
    let mut log_term = -x;
    let mut tail = 0.0;
    for j in 0..shape {
        if j > 0 {
            log_term += x.ln() - (j as f64).ln();
        }
        tail += log_term.exp();
    }
    (1.0 - tail).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of a KS statistic `d` for `n` samples (Stephens'
/// small-sample correction).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powi(j as i32 - 1) * (-2.0 * j * j * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Least-squares non-increasing fit (pool adjacent violators).
pub fn isotonic_non_increasing(values: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            if blocks[n - 2].0 >= blocks[n - 1].0 {
                break;
            }
            let (m2, w2) = blocks.pop().unwrap();
            let (m1, w1) = blocks.pop().unwrap();
            let w = w1 + w2;
            blocks.push(((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat_n(m, w))
        .collect()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
