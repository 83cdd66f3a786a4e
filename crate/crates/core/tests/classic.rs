use std::f64::consts::PI;

use jcas::classic::*;
use jcas::numerics::{chi2_quantile, Complex64, ComplexMatrix, SeededRng};
use jcas::waveform::{steering_vector, Constellation};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Per-bit LLRs by direct summation of the likelihoods, without log-sum-exp.
fn brute_force_llr(z: Complex64, kappa: Complex64, noise_power: f64, c: &Constellation) -> Vec<f64> {
    let bps = c.bits_per_symbol();
    let mut num = vec![0.0; bps];
    let mut den = vec![0.0; bps];
    for (label, &x) in c.points().iter().enumerate() {
        let like = (-(z - kappa * x).norm_sqr() / noise_power).exp();
        for (i, bit) in c.label_bits(label).into_iter().enumerate() {
            if bit == 0 {
                num[i] += like;
            } else {
                den[i] += like;
            }
        }
    }
    num.iter().zip(&den).map(|(a, b)| (a / b).ln()).collect()
}

#[test]
fn exact_llrs_match_brute_force_sums() {
    let mut rng = SeededRng::new(12, 0);
    for order in [4, 16, 64] {
        let c = Constellation::qam(order).unwrap();
        for _ in 0..200 {
            let kappa = rng.complex_normal(1.0);
            let noise = 10f64.powf(rng.uniform_in(-1.0, 0.5));
            let x = c.point(rng.int_in(0, order - 1));
            let z = kappa * x + rng.complex_normal(noise);
            let fast = exact_llr_received(z, kappa, noise, &c).unwrap();
            let slow = brute_force_llr(z, kappa, noise, &c);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
            }
            let eq = mmse_equalize(z, kappa, noise);
            let via_eq = exact_llr(eq, kappa, noise, &c).unwrap();
            for (a, b) in via_eq.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
            }
        }
    }
}

#[test]
fn llr_signs_follow_the_transmitted_bits_without_noise() {
    let c = Constellation::qam(16).unwrap();
    for label in 0..16 {
        let z = c.point(label);
        let llr = exact_llr_received(z, Complex64::new(1.0, 0.0), 1e-3, &c).unwrap();
        for (l, b) in llr.iter().zip(c.label_bits(label)) {
            assert_eq!(*l > 0.0, b == 0);
        }
    }
}

#[test]
fn bmi_spans_zero_to_bits_per_symbol() {
    let bits: Vec<u8> = (0..4000).map(|i| ((i * 7) % 3 == 0) as u8).collect();
    let perfect: Vec<f64> = bits.iter().map(|&b| if b == 0 { 60.0 } else { -60.0 }).collect();
    let blind = vec![0.0; bits.len()];
    assert!((bmi_estimate(&perfect, &bits, 4).unwrap() - 4.0).abs() < 1e-9);
    assert!(bmi_estimate(&blind, &bits, 4).unwrap().abs() < 1e-12);
}

#[test]
fn bmi_of_exact_llrs_grows_with_snr() {
    let c = Constellation::qam(16).unwrap();
    let mut last = 0.0;
    for snr_db in [0.0, 10.0, 20.0] {
        let noise = 10f64.powf(-snr_db / 10.0);
        let mut rng = SeededRng::new(3, 1);
        let mut llrs = Vec::new();
        let mut bits = Vec::new();
        for _ in 0..5000 {
            let label = rng.int_in(0, 15);
            let z = c.point(label) + rng.complex_normal(noise);
            llrs.extend(exact_llr_received(z, Complex64::new(1.0, 0.0), noise, &c).unwrap());
            bits.extend(c.label_bits(label));
        }
        let bmi = bmi_estimate(&llrs, &bits, 4).unwrap();
        assert!(bmi > last && bmi <= 4.0);
        last = bmi;
    }
    assert!(last > 3.9);
}

#[test]
fn chi_squared_quantile_agrees_with_an_independent_library() {
    for dof in [2u32, 4, 32, 96, 480] {
        let oracle = ChiSquared::new(dof as f64).unwrap();
        for p in [0.01, 0.1, 0.5, 0.9, 0.99, 0.999] {
            let ours = chi2_quantile(dof, p).unwrap();
            let theirs = oracle.inverse_cdf(p);
            assert!((ours - theirs).abs() < 1e-8 * theirs.max(1.0), "dof {dof} p {p}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn np_detector_false_alarm_rate_under_noise() {
    let p_f = 0.05;
    let mut rng = SeededRng::new(8, 0);
    for (k, n_win) in [(4, 1), (8, 3)] {
        let trials = 20_000;
        let mut alarms = 0;
        for _ in 0..trials {
            let z = ComplexMatrix::from_fn(k, n_win, |_, _| rng.complex_normal(0.7));
            alarms += np_detect(&z, 0.7, p_f).unwrap().detected as usize;
        }
        let rate = alarms as f64 / trials as f64;
        let sd = (p_f * (1.0 - p_f) / trials as f64).sqrt();
        assert!((rate - p_f).abs() < 4.0 * sd, "K {k} N_win {n_win}: {rate}");
    }
}

#[test]
fn esprit_recovers_a_noise_free_source() {
    for k in [2, 4, 16] {
        for deg in [-60.0f64, -20.0, 0.0, 7.5, 45.0] {
            let a = steering_vector(deg.to_radians(), k);
            let corr = ComplexMatrix::outer(&a, &a);
            let est = esprit_aoa(&corr).unwrap();
            assert!((est.angle - deg.to_radians()).abs() < 1e-9, "K {k} at {deg}");
        }
    }
}

#[test]
fn crb_scales_as_documented() {
    let base = CrbInputs {
        angle: 0.3,
        noise_power: 0.5,
        reflection_power: 1.0,
        beam_gain: 4.0,
        antennas: 16,
        n_win: 3,
        form: CrbForm::Verbatim,
    };
    let b = crb(&base).unwrap();
    let doubled = crb(&CrbInputs { n_win: 6, ..base }).unwrap();
    assert!((doubled / b - 0.5).abs() < 1e-15);
    let broadside = crb(&CrbInputs { angle: 0.0, ..base }).unwrap();
    assert!((b / broadside - 1.0 / 0.3f64.cos().powi(2)).abs() < 1e-12);
    let k = 16.0;
    let by_hand = 1.0 / (PI * PI * 0.3f64.cos().powi(2)) * 0.5 / 6.0 * (0.5 + k * 4.0) / (k * 16.0)
        * 6.0
        / (0.5 * k * k * k - 0.5 * k);
    assert!((b - by_hand).abs() < 1e-15 * by_hand.max(1.0));
    assert!(crb(&CrbInputs { angle: PI / 2.0, ..base }).is_err());
}
