use mami_core::channel::{awgn, compose_dl, compose_ul, draw_rayleigh, rng_from_seed, HardwareFront, PropagationChannel};
use mami_core::linksim::{
    ber_sweep, derive_seed, run_tdd_frame, snr_from_consecutive_estimates, ChannelMode, CsiMode, FrameGains,
    FrameState, HardwareMode, Modulation, SnrEstimate, SweepConfig, PILOT, TAG_BITS, TAG_CHANNEL, TAG_HARDWARE,
    TAG_NOISE,
};
use mami_core::matrixkit::{regularized_pinv, CMat, InverseEngine};
use mami_core::mimoproc::{calibration_matrix, Detector};
use mami_core::ofdm::{FrameSchedule, SymbolType};
use mami_core::stats::{isotonic_non_increasing, mrc_rayleigh_bpsk_ber, wilson_interval};
use mami_core::C64;
use rand::Rng;

fn amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Straight-line re-derivation of one "P U G p D G" frame with M=8, K=2.
#[test]
fn frame_matches_scripted_oracle() {
    let (m, k, used) = (8usize, 2usize, 24usize);
    let mut cfg = SweepConfig::new(m, k);
    cfg.subcarriers = used;
    cfg.hardware = HardwareMode::Random;
    cfg.ul_power_db = vec![0.0, -3.0];
    cfg.modulation = Modulation::Qam16;
    cfg.seed = 77;
    let gains = FrameGains {
        ue_pilot_db: 12.0,
        ue_data_db: 9.0,
        bs_db: 11.0,
    };
    let schedule: FrameSchedule = "PUGpDG".parse().unwrap();
    let (point, frame) = (3u64, 5u64);
    let mut state = FrameState::new(&cfg, point, frame).unwrap();
    let got = run_tdd_frame(&mut state, &schedule, &cfg, gains).unwrap();

    // by hand
    let seed = |tag, i: u64| derive_seed(cfg.seed, &[tag, point, frame, i]);
    let hw = HardwareFront::random(m, k, derive_seed(cfg.seed, &[TAG_HARDWARE]));
    let blocks = used / k;
    let props: Vec<PropagationChannel> = (0..blocks)
        .map(|c| PropagationChannel::new(draw_rayleigh(k, m, seed(TAG_CHANNEL, c as u64)), c))
        .collect();
    let g: Vec<CMat> = props.iter().map(|p| compose_ul(p, &hw).unwrap()).collect();
    let h: Vec<CMat> = props.iter().map(|p| compose_dl(p, &hw).unwrap()).collect();
    let p_ul = [amp(0.0), amp(-3.0)];
    let labels = |i: u64| -> Vec<u32> {
        let mut rng = rng_from_seed(seed(TAG_BITS, i));
        (0..used * k).map(|_| rng.random_range(0..16)).collect()
    };
    let zeros = |n| vec![C64::new(0.0, 0.0); n];

    // symbol 0: UL pilot, user u sounds subcarriers u, u+2, ...
    let n0 = awgn(&zeros(used * m), 1.0, seed(TAG_NOISE, 0)).unwrap();
    let a_p = amp(gains.ue_pilot_db);
    let mut ghat = vec![CMat::zeros(m, k); blocks];
    for s in 0..used {
        let u = s % k;
        for a in 0..m {
            let rx = g[s / k][(a, u)] * p_ul[u] * a_p * PILOT + n0[s * m + a];
            ghat[s / k][(a, u)] = rx / (a_p * PILOT);
        }
    }

    // symbol 1: UL data through ZF
    let q1 = labels(1);
    let n1 = awgn(&zeros(used * m), 1.0, seed(TAG_NOISE, 1)).unwrap();
    let a_d = amp(gains.ue_data_db);
    let mut eq1 = Vec::new();
    let mut err1 = [0u64; 2];
    for s in 0..used {
        let b = s / k;
        let w = regularized_pinv(&ghat[b], 0.0, InverseEngine::Direct).unwrap();
        let wg = w.matmul(&ghat[b]).unwrap();
        let mut y = zeros(m);
        for a in 0..m {
            y[a] = n1[s * m + a];
            for u in 0..k {
                y[a] += g[b][(a, u)] * Modulation::Qam16.map(q1[s * k + u]) * p_ul[u] * a_d;
            }
        }
        for u in 0..k {
            let z: C64 = (0..m).map(|a| w[(u, a)] * y[a]).sum();
            let zh = z / (wg[(u, u)] * a_d);
            err1[u] += (Modulation::Qam16.demap(zh) ^ q1[s * k + u]).count_ones() as u64;
            eq1.push(zh);
        }
    }

    // symbol 3: precoded DL pilot; ZF precoder is the transposed ZF
    // combiner with the calibration on its rows, scaled to ‖P‖² = K
    let cal = calibration_matrix(&hw).unwrap();
    let precoders: Vec<CMat> = (0..blocks)
        .map(|b| {
            let w = regularized_pinv(&ghat[b], 0.0, InverseEngine::Direct).unwrap();
            let raw = CMat::from_fn(m, k, |a, u| cal.entries()[a] * w[(u, a)]);
            raw.scale_real((k as f64).sqrt() / raw.frobenius_norm())
        })
        .collect();
    let n3 = awgn(&zeros(used * k), 1.0, seed(TAG_NOISE, 3)).unwrap();
    let a_bs = amp(gains.bs_db);
    let mut dl_est = vec![[C64::new(0.0, 0.0); 2]; blocks];
    for s in 0..used {
        let (b, u) = (s / k, s % k);
        let eff: C64 = (0..m).map(|a| h[b][(u, a)] * precoders[b][(a, u)]).sum();
        dl_est[b][u] = (eff * a_bs * PILOT + n3[s * k + u]) / PILOT;
    }

    // symbol 4: DL data
    let q4 = labels(4);
    let n4 = awgn(&zeros(used * k), 1.0, seed(TAG_NOISE, 4)).unwrap();
    let mut eq4 = Vec::new();
    let mut err4 = [0u64; 2];
    for s in 0..used {
        let b = s / k;
        for u in 0..k {
            let mut y = n4[s * k + u];
            for a in 0..m {
                for v in 0..k {
                    y += h[b][(u, a)] * precoders[b][(a, v)] * Modulation::Qam16.map(q4[s * k + v]) * a_bs;
                }
            }
            let zh = y / dl_est[b][u];
            err4[u] += (Modulation::Qam16.demap(zh) ^ q4[s * k + u]).count_ones() as u64;
            eq4.push(zh);
        }
    }

    assert_eq!(got.len(), 6);
    let kinds: Vec<SymbolType> = got.iter().map(|o| o.kind).collect();
    assert_eq!(kinds, schedule.symbols());
    let close = |a: &[C64], b: &[C64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9 * (1.0 + y.norm()));
    assert!(close(&got[1].equalized, &eq1));
    assert_eq!(got[1].errors, err1.to_vec());
    assert!(close(&got[4].equalized, &eq4));
    assert_eq!(got[4].errors, err4.to_vec());
    assert_eq!(got[1].bits, vec![used as u64 * 4; 2]);
    for i in [0, 2, 3, 5] {
        assert!(got[i].equalized.is_empty());
        assert_eq!(got[i].bits, vec![0, 0]);
    }
}

#[test]
fn k1_mrc_matches_diversity_two_closed_form() {
    let mut cfg = SweepConfig::new(2, 1);
    cfg.channel_mode = ChannelMode::IidPerSubcarrier;
    cfg.csi = CsiMode::Perfect;
    cfg.detector = Detector::mrc();
    cfg.gain_grid_db = vec![3.0];
    cfg.bits_per_point = 400_000;
    cfg.seed = 4;
    let r = &ber_sweep(&cfg, &"PU".parse().unwrap()).unwrap()[0];
    let theory = mrc_rayleigh_bpsk_ber(10f64.powf(0.3) / 2.0, 2);
    // 99.9% interval so a single deterministic run is not flaky
    let (lo, hi) = wilson_interval(r.per_user_errors[0], r.bits_counted, 3.29);
    assert!(lo <= theory && theory <= hi, "{} vs {theory}", r.per_user_ber[0]);
}

#[test]
fn zf_ber_is_monotone_on_static_channels() {
    let mut cfg = SweepConfig::new(16, 4);
    cfg.gain_grid_db = (0..=8).map(|g| g as f64 - 8.0).collect();
    cfg.bits_per_point = 20_000;
    cfg.ul_pilot_gain_db = Some(20.0);
    cfg.seed = 9;
    let recs = ber_sweep(&cfg, &mami_core::ofdm::default_frame()).unwrap();
    let ber: Vec<f64> = recs.iter().map(|r| r.mean_ber()).collect();
    let fit = isotonic_non_increasing(&ber);
    for (r, f) in recs.iter().zip(&fit) {
        let (lo, hi) = r.pooled_interval();
        assert!((r.mean_ber() - f).abs() < 2.0 * (hi - lo), "{ber:?}");
    }
    assert!(ber.first() > ber.last());
}

#[test]
fn snr_estimator_recovers_ten_db() {
    let (m, k) = (100, 1);
    let sigma2 = 0.1; // 10 dB per entry
    let mut ests = Vec::new();
    for t in 0..10_000u64 {
        let h = draw_rayleigh(m, k, derive_seed(1, &[t]));
        let noisy = |s| awgn(h.as_slice(), sigma2, derive_seed(2, &[t, s])).unwrap();
        let h1 = CMat::new(m, k, noisy(0)).unwrap();
        let h2 = CMat::new(m, k, noisy(1)).unwrap();
        match snr_from_consecutive_estimates(&h1, &h2).unwrap()[0] {
            SnrEstimate::Finite(x) => ests.push(x),
            other => panic!("{other:?}"),
        }
    }
    let mean_db = 10.0 * (ests.iter().sum::<f64>() / ests.len() as f64).log10();
    assert!((mean_db - 10.0).abs() < 0.5, "{mean_db}");
}

#[test]
fn snr_estimator_flags_pure_noise() {
    let (m, k) = (16, 1);
    let mut flagged = 0;
    for t in 0..1000u64 {
        let h1 = draw_rayleigh(m, k, derive_seed(3, &[t, 0]));
        let h2 = draw_rayleigh(m, k, derive_seed(3, &[t, 1]));
        if snr_from_consecutive_estimates(&h1, &h2).unwrap()[0] == SnrEstimate::NonPositive {
            flagged += 1;
        }
    }
    assert!(flagged > 500, "{flagged}");
}
