use mami_core::channel::{draw_rayleigh, evolve_channel};
use mami_core::linksim::Modulation;
use mami_core::matrixkit::{gram, inverse, neumann_inverse, qr_mgs, regularized_pinv, CMat, InverseEngine};
use mami_core::ofdm::{OfdmModem, OfdmParams};
use mami_core::planner::{processing_requirements, shuffling_requirements, SystemParams};
use mami_core::stats::isotonic_non_increasing;
use mami_core::C64;
use proptest::prelude::*;

/// Spectral radius of I − D⁻¹A by power iteration.
fn iteration_radius(a: &CMat) -> f64 {
    let n = a.rows();
    let d: Vec<C64> = a.diag().iter().map(|z| 1.0 / z).collect();
    let f = CMat::identity(n).sub(&a.scale_rows(&d).unwrap()).unwrap();
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + i as f64 * 0.1, 0.3)).collect();
    let mut r = 0.0;
    for _ in 0..300 {
        let w = f.mul_vec(&v).unwrap();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        r = norm / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w.iter().map(|z| z / norm).collect();
    }
    r
}

fn residual(a: &CMat, terms: usize) -> CMat {
    a.matmul(&neumann_inverse(a, terms).unwrap()).unwrap().sub(&CMat::identity(a.rows())).unwrap()
}

/// ‖D^{-1/2} (A·Â − I) D^{1/2}‖_F. The residual is (E·D⁻¹)ⁿ with E = D − A;
/// this similarity turns it into a power of a Hermitian matrix.
fn scaled_residual(a: &CMat, terms: usize) -> f64 {
    let sq: Vec<C64> = a.diag().iter().map(|z| z.sqrt()).collect();
    let inv_sq: Vec<C64> = sq.iter().map(|z| 1.0 / z).collect();
    residual(a, terms).scale_rows(&inv_sq).unwrap().scale_cols(&sq).unwrap().frobenius_norm()
}

fn max_abs(a: &CMat) -> f64 {
    a.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_reconstructs_and_is_orthonormal(m in 4usize..40, k in 1usize..8, seed in any::<u64>()) {
        prop_assume!(m >= k);
        let g = draw_rayleigh(m, k, seed);
        let f = qr_mgs(&g).unwrap();
        prop_assert!(max_abs(&f.q.matmul(&f.r).unwrap().sub(&g).unwrap()) < 1e-10);
        prop_assert!(max_abs(&gram(&f.q).sub(&CMat::identity(k)).unwrap()) < 1e-10);
        for r in 0..k {
            for c in 0..r {
                prop_assert_eq!(f.r[(r, c)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn pinv_engines_agree(m in 8usize..48, k in 1usize..6, beta in 0.0f64..2.0, seed in any::<u64>()) {
        let g = draw_rayleigh(m, k, seed);
        let a = regularized_pinv(&g, beta, InverseEngine::Qr).unwrap();
        let b = regularized_pinv(&g, beta, InverseEngine::Direct).unwrap();
        prop_assert!(max_abs(&a.sub(&b).unwrap()) < 1e-9 * (1.0 + max_abs(&b)));
    }

    #[test]
    fn gram_is_hermitian(m in 1usize..20, k in 1usize..8, seed in any::<u64>()) {
        let a = gram(&draw_rayleigh(m, k, seed));
        prop_assert_eq!(a.hermitian(), a);
    }

    #[test]
    fn neumann_error_shrinks_with_terms(m in 64usize..200, seed in any::<u64>()) {
        let a = gram(&draw_rayleigh(m, 4, seed));
        let exact = inverse(&a).unwrap();
        let err = |t| neumann_inverse(&a, t).unwrap().sub(&exact).unwrap().frobenius_norm();
        let errs: Vec<f64> = (1..=6).map(err).collect();
        // strongly dominant diagonal: every extra term helps
        prop_assert!(errs.windows(2).all(|w| w[1] < w[0]), "{:?}", errs);
    }

    #[test]
    fn neumann_scaled_residual_non_increasing_below_unit_radius(m in 3usize..24, k in 2usize..5, seed in any::<u64>()) {
        prop_assume!(m >= k);
        let a = gram(&draw_rayleigh(m, k, seed));
        prop_assume!(iteration_radius(&a) < 0.98);
        let r: Vec<f64> = (1..=8).map(|t| scaled_residual(&a, t)).collect();
        prop_assert!(r.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{:?}", r);
    }

    #[test]
    fn evolve_with_unit_correlation_is_identity(seed in any::<u64>()) {
        let g = draw_rayleigh(5, 3, seed);
        prop_assert_eq!(evolve_channel(&g, 1.0, seed ^ 1).unwrap(), g);
    }

    #[test]
    fn ofdm_round_trip(seed in any::<u64>()) {
        let p = OfdmParams::new(128, 72, 9, 1.92e6).unwrap();
        let modem = OfdmModem::new(p);
        let x: Vec<C64> = draw_rayleigh(72, 1, seed).into_vec();
        let back = modem.demodulate(&modem.modulate(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constellation_labels_round_trip(label in 0u32..64, noise_re in -0.05f64..0.05, noise_im in -0.05f64..0.05) {
        for m in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let l = label % m.order();
            prop_assert_eq!(m.demap(m.map(l) + C64::new(noise_re, noise_im)), l);
        }
    }

    #[test]
    fn planner_monotone_in_m_and_k(m in 1usize..256, k in 1usize..32) {
        let base = SystemParams::new(m, k, OfdmParams::lte20());
        let more_m = SystemParams { m: m + 1, ..base };
        let more_k = SystemParams { k: k + 1, ..base };
        for other in [more_m, more_k] {
            let (a, b) = (processing_requirements(&base), processing_requirements(&other));
            for ((_, x), (_, y)) in a.rows().iter().zip(b.rows().iter()) {
                prop_assert!(y >= x);
            }
            let (a, b) = (shuffling_requirements(&base), shuffling_requirements(&other));
            prop_assert!(b.links >= a.links);
            prop_assert!(b.antenna_rate_bps >= a.antenna_rate_bps);
            prop_assert!(b.subcarrier_rate_bps >= a.subcarrier_rate_bps);
            prop_assert!(b.information_rate_bps >= a.information_rate_bps);
        }
    }

    #[test]
    fn isotonic_fit_is_non_increasing(values in proptest::collection::vec(0.0f64..1.0, 1..30)) {
        let fit = isotonic_non_increasing(&values);
        prop_assert_eq!(fit.len(), values.len());
        prop_assert!(fit.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let mean_in: f64 = values.iter().sum();
        let mean_out: f64 = fit.iter().sum();
        prop_assert!((mean_in - mean_out).abs() < 1e-9);
    }
}

#[test]
fn unscaled_neumann_residual_can_rise() {
    // the plain residual is a power of a non-normal matrix, so its norm is
    // not monotone even with the iteration radius below one
    let a = gram(&draw_rayleigh(5, 3, 1359899736583666576));
    assert!(iteration_radius(&a) < 0.98);
    let raw: Vec<f64> = (1..=4).map(|t| residual(&a, t).frobenius_norm()).collect();
    assert!(raw[2] > raw[1], "{raw:?}");
    let scaled: Vec<f64> = (1..=4).map(|t| scaled_residual(&a, t)).collect();
    assert!(scaled.windows(2).all(|w| w[1] <= w[0]), "{scaled:?}");
}
