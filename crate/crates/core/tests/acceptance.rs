//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 5`.

mod common;

use std::time::{Duration, Instant};

use common::gradient_errors;
use jcas::channel::{acm, sense_channel, SenseLinkParams, SensingScene};
use jcas::classic::{crb, esprit_aoa, exact_llr, mmse_equalize, np_detect, CrbForm, CrbInputs};
use jcas::cli::run_cli;
use jcas::eval::{
    calibrate_system, eval_sensing, find_row, sensing_rng, system_pattern, train_system, BeamPattern,
    ExperimentConfig, MetricRow,
};
use jcas::numerics::{chi2_quantile, Complex64, ComplexMatrix, SeededRng};
use jcas::training::{
    detected, loss_angle_legacy, loss_angle_normalized, null_windows, sensing_outputs, AngleLossKind, JcasSystem,
};
use jcas::waveform::{assemble_block, beam_gain, AngleRegion, BeamWeights, Constellation};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn within_time(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn c1_gradient_fidelity() -> Outcome {
    let t = Instant::now();
    let errs = gradient_errors(false, 100, AngleLossKind::Normalized);
    let secs = t.elapsed();
    let pass = errs.iter().all(|&e| e < 1e-4) && within_time(secs, 60.0);
    Outcome::new(
        pass,
        format!(
            "worst rel err beamformer {:.1e} decoder {:.1e} angle {:.1e} detection {:.1e} (< 1e-4), 100 batches in {:.1}s (< 60s)",
            errs[0],
            errs[1],
            errs[2],
            errs[3],
            secs.as_secs_f64()
        ),
    )
}

fn c2_np_calibration() -> Outcome {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for n_win in [1usize, 5, 15] {
        let mut rng = SeededRng::new(2, n_win as u64);
        let trials = 100_000;
        let mut alarms = 0usize;
        for _ in 0..trials {
            let z = ComplexMatrix::from_fn(16, n_win, |_, _| rng.complex_normal(1.0));
            alarms += np_detect(&z, 1.0, 1e-2).unwrap().detected as usize;
        }
        let pf = alarms as f64 / trials as f64;
        pass &= (0.007..=0.013).contains(&pf);
        parts.push(format!("N_win={n_win}: {pf:.4}"));
    }
    let secs = t.elapsed();
    pass &= within_time(secs, 60.0);
    Outcome::new(pass, format!("P_f {} (in [0.007, 0.013]), {:.1}s (< 60s)", parts.join(", "), secs.as_secs_f64()))
}

/// Chi-squared CDF by composite Simpson quadrature of the density.
fn chi2_cdf_quadrature(dof: f64, t: f64) -> f64 {
    let half = dof / 2.0;
    let log_norm = ln_gamma(half) + half * 2f64.ln();
    let pdf = |x: f64| {
        if x <= 0.0 {
            if dof == 2.0 {
                0.5
            } else {
                0.0
            }
        } else {
            ((half - 1.0) * x.ln() - x / 2.0 - log_norm).exp()
        }
    };
    let panels = 40_000;
    let h = t / panels as f64;
    let mut sum = pdf(0.0) + pdf(t);
    for i in 1..panels {
        sum += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

fn chi2_quantile_oracle(dof: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, dof + 40.0 * (2.0 * dof).sqrt() + 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf_quadrature(dof, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn c3_chi2_quantile() -> Outcome {
    let ps = [0.5, 0.9, 0.99, 0.999];
    let mut worst_closed: f64 = 0.0;
    for p in ps {
        let exact = -2.0 * (1.0 - p as f64).ln();
        worst_closed = worst_closed.max((chi2_quantile(2, p).unwrap() - exact).abs());
    }
    let mut worst_oracle: f64 = 0.0;
    for dof in [32u32, 480] {
        for p in ps {
            let oracle = chi2_quantile_oracle(dof as f64, p);
            let ours = chi2_quantile(dof, p).unwrap();
            worst_oracle = worst_oracle.max((ours - oracle).abs() / oracle);
        }
    }
    Outcome::new(
        worst_closed <= 1e-10 && worst_oracle <= 1e-8,
        format!("dof 2 max abs err {worst_closed:.1e} (<= 1e-10); dof 32/480 max rel err {worst_oracle:.1e} (<= 1e-8)"),
    )
}

fn c4_esprit_vs_crb() -> Outcome {
    let t = Instant::now();
    let (k, n_win, trials) = (16, 15, 2000);
    let c = Constellation::qam(16).unwrap();
    let region = AngleRegion::from_degrees(-20.0, 20.0).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut pass = true;
    for (i, deg) in (-20..=20).step_by(5).enumerate() {
        let theta = (deg as f64).to_radians();
        let v = BeamWeights::matched(theta, k);
        let beta = beam_gain(&v, theta);
        // effective SNR β·σ_s²/σ_ns² = 20 dB
        let noise_power = beta / 100.0;
        let params = SenseLinkParams::new(1.0, noise_power, region, 1.0).unwrap();
        let mut rng = SeededRng::new(4, i as u64);
        let mut sq = 0.0;
        for _ in 0..trials {
            let x: Vec<Complex64> = (0..n_win).map(|_| c.point(rng.int_in(0, 15))).collect();
            let gains = (0..n_win).map(|_| rng.complex_normal(1.0)).collect();
            let scene = SensingScene { present: true, angle: theta, gains };
            let z = sense_channel(&assemble_block(&v, &x), &scene, &params, &mut rng).unwrap();
            let est = esprit_aoa(&acm(&z).unwrap()).unwrap().angle;
            sq += (est - theta).powi(2);
        }
        let rmse = (sq / trials as f64).sqrt();
        let bound = crb(&CrbInputs {
            angle: theta,
            noise_power,
            reflection_power: 1.0,
            beam_gain: beta,
            antennas: k,
            n_win,
            form: CrbForm::Verbatim,
        })
        .unwrap()
        .sqrt();
        worst_ratio = worst_ratio.max(rmse / bound);
        pass &= rmse <= 2.0 * bound;
    }
    let secs = t.elapsed();
    pass &= within_time(secs, 300.0);
    Outcome::new(
        pass,
        format!("worst RMSE/sqrt(CRB) {worst_ratio:.3} (<= 2) over 9 angles, {:.1}s (< 300s)", secs.as_secs_f64()),
    )
}

fn c5_crb_laws() -> Outcome {
    let base = CrbInputs {
        angle: 0.2,
        noise_power: 0.7,
        reflection_power: 1.3,
        beam_gain: 5.0,
        antennas: 16,
        n_win: 3,
        form: CrbForm::Verbatim,
    };
    let b = crb(&base).unwrap();
    let halving = (crb(&CrbInputs { n_win: 6, ..base }).unwrap() / b - 0.5).abs();
    let mut cos_err: f64 = 0.0;
    for angle in [-1.2, -0.5, 0.1, 0.3, 0.9, 1.4] {
        let ratio = crb(&CrbInputs { angle, ..base }).unwrap() / crb(&CrbInputs { angle: 0.0, ..base }).unwrap();
        cos_err = cos_err.max((ratio * angle.cos().powi(2) - 1.0).abs());
    }
    let decreasing = |f: &dyn Fn(f64) -> CrbInputs, grid: &[f64]| {
        grid.windows(2).all(|w| crb(&f(w[1])).unwrap() < crb(&f(w[0])).unwrap())
    };
    let in_k = decreasing(&|k| CrbInputs { antennas: k as usize, beam_gain: 1.0, ..base }, &[2.0, 3.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    let in_beta = decreasing(&|g| CrbInputs { beam_gain: g, ..base }, &[0.1, 0.5, 1.0, 2.0, 8.0, 16.0]);
    let in_sigma = decreasing(&|s| CrbInputs { reflection_power: s, ..base }, &[0.01, 0.1, 0.5, 1.0, 4.0, 100.0]);
    Outcome::new(
        halving <= 1e-15 && cos_err <= 1e-15 && in_k && in_beta && in_sigma,
        format!(
            "N_win doubling err {halving:.1e} (<= 1e-15), cos^2 law err {cos_err:.1e} (<= 1e-15), decreasing in K {in_k}, beta {in_beta}, sigma_s^2 {in_sigma}"
        ),
    )
}

fn gray_16qam_ber(noise_power: f64) -> f64 {
    let q = |x: f64| 0.5 * erfc(x / 2f64.sqrt());
    let d = (1.0 / (5.0 * noise_power)).sqrt();
    0.25 * (3.0 * q(d) + 2.0 * q(3.0 * d) - q(5.0 * d))
}

fn c6_comm_oracle() -> Outcome {
    let t = Instant::now();
    // SNR at which the closed form gives BER = 1e-2
    let (mut lo, mut hi) = (0.0f64, 30.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gray_16qam_ber(10f64.powf(-mid / 10.0)) > 1e-2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let snr_db = 0.5 * (lo + hi);
    let noise = 10f64.powf(-snr_db / 10.0);
    let expected = gray_16qam_ber(noise);
    let c = Constellation::qam(16).unwrap();
    let kappa = Complex64::new(1.0, 0.0);
    let mut rng = SeededRng::new(6, 0);
    let symbols = 1_000_000;
    let mut errors = 0usize;
    for _ in 0..symbols {
        let label = rng.int_in(0, 15);
        let z = kappa * c.point(label) + rng.complex_normal(noise);
        let llr = exact_llr(mmse_equalize(z, kappa, noise), kappa, noise, &c).unwrap();
        for (i, l) in llr.iter().enumerate() {
            errors += ((*l < 0.0) != (c.label_bit(label, i) == 1)) as usize;
        }
    }
    let ber = errors as f64 / (4 * symbols) as f64;
    let rel = (ber - expected).abs() / expected;
    let secs = t.elapsed();
    Outcome::new(
        rel < 0.05 && within_time(secs, 60.0),
        format!(
            "at {snr_db:.2} dB: simulated {ber:.5} vs closed form {expected:.5}, rel err {rel:.4} (< 0.05), {:.1}s (< 60s)",
            secs.as_secs_f64()
        ),
    )
}

fn c7_loss_normalization() -> Outcome {
    let scenes = 100_000;
    let c = 1e-3;
    let mut normalized = Vec::new();
    let mut legacy = Vec::new();
    for (i, &n_win) in [1usize, 4, 15].iter().enumerate() {
        for (j, &noise) in [0.1f64, 1.0, 10.0].iter().enumerate() {
            let mut rng = SeededRng::new(7, (3 * i + j) as u64);
            let sd = (c * noise / n_win as f64).sqrt();
            let truth: Vec<f64> = (0..scenes).map(|_| rng.uniform_in(-0.35, 0.35)).collect();
            let est: Vec<f64> = truth.iter().map(|t| t + sd * rng.normal()).collect();
            let present = vec![true; scenes];
            let windows = vec![n_win; scenes];
            let stds = vec![noise.sqrt(); scenes];
            normalized.push(loss_angle_normalized(&truth, &est, &windows, &stds, &present).unwrap().value);
            legacy.push(loss_angle_legacy(&truth, &est, &present).unwrap().value);
        }
    }
    let spread = |v: &[f64]| {
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    };
    let norm_var = spread(&normalized) - 1.0;
    let legacy_ratio = spread(&legacy);
    Outcome::new(
        norm_var < 0.05 && legacy_ratio > 10.0,
        format!("normalized loss varies {:.2}% (< 5%), legacy max/min {legacy_ratio:.0}x (> 10x)", 100.0 * norm_var),
    )
}

/// Desk-trained and calibrated systems of the trade-off sweep, keyed by `w_s`.
struct DeskSystems {
    config: ExperimentConfig,
    systems: Vec<(f64, JcasSystem)>,
    elapsed: Duration,
}

impl DeskSystems {
    fn train(weights: &[f64]) -> Self {
        let t = Instant::now();
        let config = ExperimentConfig::default();
        let mut systems = Vec::new();
        for &w_s in weights {
            let (mut system, _, _) = train_system(&config, w_s, None).expect("desk training");
            calibrate_system(&mut system, &config).expect("calibration");
            systems.push((w_s, system));
        }
        Self { config, systems, elapsed: t.elapsed() }
    }

    fn get(&self, w_s: f64) -> &JcasSystem {
        &self.systems.iter().find(|(w, _)| *w == w_s).expect("trained weight").1
    }
}

fn c8_desk_training(desk: &DeskSystems, per_system: Duration) -> (Outcome, Vec<MetricRow>) {
    let t = Instant::now();
    let system = desk.get(0.9);
    let p_f = system.scenario.p_f;
    let v = system.beam().unwrap();
    let table = system.calibration().unwrap();
    let mut a_pass = true;
    let mut a_parts = Vec::new();
    for n_win in [1usize, 5, 15] {
        let rng = SeededRng::new(desk.config.seed, 80).split(n_win as u64);
        let fresh = null_windows(system, n_win, 20_000, system.scenario.sense_snr_db, &rng).unwrap();
        let out = sensing_outputs(system, &fresh, v.as_slice()).unwrap();
        let offset = table.offset(n_win).unwrap();
        let pf = out.logits.iter().filter(|&&l| detected(l, offset)).count() as f64 / out.logits.len() as f64;
        a_pass &= (0.5 * p_f..=2.0 * p_f).contains(&pf);
        a_parts.push(format!("{n_win}:{pf:.4}"));
    }
    let rows = eval_sensing(system, &[-5.0], &[1, 2, 4], 10_000, &sensing_rng(desk.config.seed)).unwrap();
    let diff = find_row(&rows, "nn", "pd_minus_np", Some(-5.0), Some(1)).unwrap();
    let b_pass = diff.value >= 0.02;
    let mut c_pass = true;
    let mut c_parts = Vec::new();
    for n_win in [1usize, 2, 4] {
        let nn = find_row(&rows, "nn", "rmse", Some(-5.0), Some(n_win)).unwrap().value;
        let es = find_row(&rows, "esprit", "rmse", Some(-5.0), Some(n_win)).unwrap().value;
        c_pass &= nn < es;
        c_parts.push(format!("{n_win}:{nn:.4}<{es:.4}"));
    }
    let cpu = per_system + t.elapsed();
    let time_pass = within_time(cpu, 7200.0);
    let detail = format!(
        "(a) P_f {} in [0.005, 0.02] {}; (b) P_d - P_d(NP) at -5 dB, N_win=1: {:.4} +/- {:.4} (>= 0.02) {}; (c) RMSE nn<esprit at -5 dB {} {}; {:.0}s (<= 7200s)",
        a_parts.join(" "),
        ok(a_pass),
        diff.value,
        diff.stderr,
        ok(b_pass),
        c_parts.join(" "),
        ok(c_pass),
        cpu.as_secs_f64()
    );
    (Outcome::new(a_pass && b_pass && c_pass && time_pass, detail), rows)
}

fn c9_tradeoff(desk: &DeskSystems) -> Outcome {
    let patterns: Vec<(f64, BeamPattern)> = desk
        .systems
        .iter()
        .map(|(w, s)| (*w, system_pattern(s, desk.config.eval.pattern_grid).unwrap()))
        .collect();
    // fractions of a fixed beam are exact, so their standard error is 0
    let sensing_up = patterns.windows(2).all(|p| p[1].1.sensing_fraction >= p[0].1.sensing_fraction);
    let comm_down = patterns.windows(2).all(|p| p[1].1.comm_fraction <= p[0].1.comm_fraction);
    let mid = &patterns.iter().find(|(w, _)| *w == 0.5).unwrap().1;
    let ratio = mid.sensing_fraction.max(mid.comm_fraction) / mid.sensing_fraction.min(mid.comm_fraction);
    let listing: Vec<String> = patterns
        .iter()
        .map(|(w, p)| format!("{w}:{:.3}/{:.3}", p.sensing_fraction, p.comm_fraction))
        .collect();
    Outcome::new(
        sensing_up && comm_down && ratio <= 1.5,
        format!(
            "sensing/comm fractions {}; sensing nondecreasing {sensing_up}, comm nonincreasing {comm_down}; ratio at w_s=0.5 {ratio:.2} (<= 1.5)",
            listing.join(" ")
        ),
    )
}

fn c10_bias(desk: &DeskSystems) -> Outcome {
    let system = desk.get(0.9);
    let e = &desk.config.eval;
    let rows = eval_sensing(system, &e.sense_snr_db, &e.n_win, e.sense_scenes, &sensing_rng(desk.config.seed)).unwrap();
    let mut worst = (0.0f64, 0.0, 0);
    let mut failing = Vec::new();
    for &snr in &e.sense_snr_db {
        for &n_win in &e.n_win {
            let bias = find_row(&rows, "nn", "bias", Some(snr), Some(n_win)).unwrap().value;
            if bias.abs() >= 3e-2 {
                failing.push(format!("{snr}dB/N{n_win}:{bias:+.4}"));
            }
            if bias.abs() > worst.0.abs() {
                worst = (bias, snr, n_win);
            }
        }
    }
    Outcome::new(
        failing.is_empty(),
        format!(
            "worst mean(theta_hat - theta) {:+.4} rad at {} dB, N_win={} (|.| < 3e-2) over {} points; violations: [{}]",
            worst.0,
            worst.1,
            worst.2,
            e.sense_snr_db.len() * e.n_win.len(),
            failing.join(" ")
        ),
    )
}

const TINY: &str = r#"
seed = 11

[system]
antennas = 4
n_win = [1, 3]
p_f = 0.05

[training]
w_s = [0.4, 0.8]
calibration_samples = 2000
pretrain_symbols = 600
finetune_symbols = 600
batch_symbols = 200

[eval]
comm_snr_db = [0.0, 15.0]
comm_symbols = 3000
sense_snr_db = [-5.0, 5.0]
n_win = [1, 3]
sense_scenes = 500
pattern_grid = 181
"#;

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let cfg = cfg.to_str().unwrap().to_string();
    let run = |tag: &str, cmd: &str, ckpt: &str| -> Option<Vec<u8>> {
        let out = dir.path().join(tag);
        let out_s = out.to_str().unwrap();
        let ckpt = dir.path().join(ckpt);
        let args = ["jcas", cmd, "--config", &cfg, "--out", out_s, "--checkpoint", ckpt.to_str().unwrap()];
        (run_cli(args) == 0).then(|| std::fs::read(out.join("metrics.csv")).ok()).flatten()
    };
    let mut identical = Vec::new();
    // train has no metrics.csv; compare the checkpoints it writes instead
    let train_a = run_cli(["jcas", "train", "--config", &cfg, "--out", dir.path().join("ta").to_str().unwrap(), "--checkpoint", dir.path().join("a.ckpt").to_str().unwrap()]);
    let train_b = run_cli(["jcas", "train", "--config", &cfg, "--out", dir.path().join("tb").to_str().unwrap(), "--checkpoint", dir.path().join("b.ckpt").to_str().unwrap()]);
    let same_ckpt = train_a == 0
        && train_b == 0
        && std::fs::read(dir.path().join("a.ckpt")).unwrap() == std::fs::read(dir.path().join("b.ckpt")).unwrap();
    identical.push(("train", same_ckpt));
    let cal_a = run("ca", "calibrate", "a.ckpt");
    let cal_b = run("cb", "calibrate", "b.ckpt");
    identical.push(("calibrate", cal_a.is_some() && cal_a == cal_b));
    for cmd in ["eval-comm", "eval-sensing", "beampattern", "baseline"] {
        let a = run(&format!("{cmd}-a"), cmd, "a.ckpt");
        let b = run(&format!("{cmd}-b"), cmd, "b.ckpt");
        identical.push((cmd, a.is_some() && a == b));
    }
    let sweep = |tag: &str| {
        let out = dir.path().join(tag);
        (run_cli(["jcas", "sweep", "--config", &cfg, "--out", out.to_str().unwrap()]) == 0)
            .then(|| std::fs::read(out.join("metrics.csv")).ok())
            .flatten()
    };
    let (sa, sb) = (sweep("sa"), sweep("sb"));
    identical.push(("sweep", sa.is_some() && sa == sb));
    let pass = identical.iter().all(|(_, same)| *same);
    let listing: Vec<String> = identical.iter().map(|(c, same)| format!("{c}:{}", if *same { "same" } else { "DIFF" })).collect();
    Outcome::new(pass, format!("repeated invocations byte-identical: {}", listing.join(" ")))
}

fn ok(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}

fn report(id: u32, name: &str, outcome: Outcome, failures: &mut Vec<u32>) {
    println!("[{}] {id:>2} {name}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    if !outcome.pass {
        failures.push(id);
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);
    let mut failures = Vec::new();
    if wanted(1) {
        report(1, "gradient fidelity", c1_gradient_fidelity(), &mut failures);
    }
    if wanted(2) {
        report(2, "NP detector calibration", c2_np_calibration(), &mut failures);
    }
    if wanted(3) {
        report(3, "chi-squared quantile", c3_chi2_quantile(), &mut failures);
    }
    if wanted(4) {
        report(4, "ESPRIT vs CRB", c4_esprit_vs_crb(), &mut failures);
    }
    if wanted(5) {
        report(5, "CRB structural laws", c5_crb_laws(), &mut failures);
    }
    if wanted(6) {
        report(6, "comm oracle BER", c6_comm_oracle(), &mut failures);
    }
    if wanted(7) {
        report(7, "loss normalization", c7_loss_normalization(), &mut failures);
    }
    if wanted(8) || wanted(9) || wanted(10) {
        let weights: Vec<f64> = if wanted(9) { vec![0.1, 0.3, 0.5, 0.7, 0.9] } else { vec![0.9] };
        let desk = DeskSystems::train(&weights);
        let per_system = desk.elapsed / weights.len() as u32;
        if wanted(8) {
            report(8, "desk-scale training", c8_desk_training(&desk, per_system).0, &mut failures);
        }
        if wanted(9) {
            report(9, "trade-off monotonicity", c9_tradeoff(&desk), &mut failures);
        }
        if wanted(10) {
            report(10, "estimator bias", c10_bias(&desk), &mut failures);
        }
    }
    if wanted(11) {
        report(11, "determinism", c11_determinism(), &mut failures);
    }
    if !failures.is_empty() {
        println!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
