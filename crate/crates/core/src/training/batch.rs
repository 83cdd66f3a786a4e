//! Frozen channel realizations and the differentiable end-to-end loss.
//!
//! A [`Batch`] stores every random draw with unit-variance noise, so the same
//! realization can be replayed under different parameters. [`evaluate`] then
//! runs beamformer → channels → receivers → loss and, on request, the exact
//! reverse pass into all four components.

use std::f64::consts::FRAC_PI_2;

use ndarray::{Array2, ArrayView2, Axis};

use crate::channel::{acm, ReceiverMotion};
use crate::classic::softplus;
use crate::error::{Error, Result};
use crate::neural::{sigmoid, Head, MlpParams};
use crate::numerics::{dot_t, Complex64, ComplexMatrix, SeededRng};
use crate::waveform::{steering_vector, Constellation};

use super::calibrate::upper_order_statistic;
use super::loss::{angle_weight, LossBreakdown};
use super::schedule::{Scenario, TrainingOffset};
use super::system::{BeamGrad, Beamformer, JcasSystem, SystemGrads};

/// Ranges the per-symbol and per-window conditions are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawSpec {
    pub comm_snr_db: (f64, f64),
    pub sense_snr_db: (f64, f64),
    pub n_win: (usize, usize),
    pub target_prior: f64,
    pub motion: ReceiverMotion,
}

impl Scenario {
    pub fn draw_spec(&self) -> DrawSpec {
        DrawSpec {
            comm_snr_db: self.comm_snr_db,
            sense_snr_db: self.sense_snr_db,
            n_win: self.n_win,
            target_prior: self.target_prior,
            motion: ReceiverMotion::PerSymbol,
        }
    }
}

/// One sensing window of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDraw {
    /// Index of the first symbol of the window.
    pub start: usize,
    pub present: bool,
    pub angle: f64,
    /// Swerling-1 reflection gains, one per snapshot.
    pub gains: Vec<Complex64>,
    /// Unit-variance receiver noise, column-major `K × N_win`.
    pub noise: Vec<Complex64>,
    /// σ_ns²
    pub noise_power: f64,
}

impl SceneDraw {
    pub fn n_win(&self) -> usize {
        self.gains.len()
    }
}

/// A frozen set of channel realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub labels: Vec<usize>,
    /// Symbol-major bit labels.
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
    pub comm_angles: Vec<f64>,
    pub fading: Vec<Complex64>,
    /// Unit-variance communication noise.
    pub comm_noise: Vec<Complex64>,
    /// σ_n² per symbol.
    pub comm_noise_power: Vec<f64>,
    pub scenes: Vec<SceneDraw>,
}

impl Batch {
    /// Draws `n_symbols` symbols and cuts them into sensing windows.
    ///
    /// Communication and sensing draws use separate sub-streams of `rng`, so
    /// two batches from the same generator share their communication part
    /// whatever the window ranges are.
    pub fn draw(
        scenario: &Scenario,
        constellation: &Constellation,
        n_symbols: usize,
        spec: &DrawSpec,
        rng: &SeededRng,
    ) -> Result<Self> {
        if n_symbols == 0 {
            return Err(Error::Config("a batch needs at least one symbol".into()));
        }
        if spec.n_win.0 == 0 || spec.n_win.0 > spec.n_win.1 {
            return Err(Error::Config(format!("invalid window range {:?}", spec.n_win)));
        }
        let k = scenario.antennas;
        let mut sym_rng = rng.split(0);
        let mut comm_rng = rng.split(1);
        let mut sense_rng = rng.split(2);

        let order = constellation.order();
        let bps = constellation.bits_per_symbol();
        let labels: Vec<usize> = (0..n_symbols).map(|_| sym_rng.int_in(0, order - 1)).collect();
        let bits = labels.iter().flat_map(|&l| constellation.label_bits(l)).collect::<Vec<_>>();
        debug_assert_eq!(bits.len(), n_symbols * bps);
        let symbols = labels.iter().map(|&l| constellation.point(l)).collect();

        let region = scenario.comm_region;
        let mut comm_angles = Vec::with_capacity(n_symbols);
        let mut fading = Vec::with_capacity(n_symbols);
        let mut comm_noise = Vec::with_capacity(n_symbols);
        let mut comm_noise_power = Vec::with_capacity(n_symbols);
        for _ in 0..n_symbols {
            comm_angles.push(comm_rng.uniform_in(region.min(), region.max()));
            fading.push(comm_rng.complex_normal(scenario.fading_power));
            comm_noise.push(comm_rng.complex_normal(1.0));
            let snr = comm_rng.uniform_in(spec.comm_snr_db.0, spec.comm_snr_db.1);
            comm_noise_power.push(scenario.comm_noise_power(snr));
        }

        let mut scenes = Vec::new();
        let mut start = 0;
        while start < n_symbols {
            let n_win = sense_rng.int_in(spec.n_win.0, spec.n_win.1).min(n_symbols - start);
            let present = sense_rng.bernoulli(spec.target_prior);
            let angle = sense_rng.uniform_in(scenario.sense_region.min(), scenario.sense_region.max());
            let snr = sense_rng.uniform_in(spec.sense_snr_db.0, spec.sense_snr_db.1);
            let gains = (0..n_win)
                .map(|_| sense_rng.complex_normal(scenario.reflection_power))
                .collect();
            let noise = (0..k * n_win).map(|_| sense_rng.complex_normal(1.0)).collect();
            scenes.push(SceneDraw {
                start,
                present,
                angle,
                gains,
                noise,
                noise_power: scenario.sense_noise_power(snr),
            });
            start += n_win;
        }

        let mut batch = Self {
            labels,
            bits,
            symbols,
            comm_angles,
            fading,
            comm_noise,
            comm_noise_power,
            scenes,
        };
        if spec.motion == ReceiverMotion::PerWindow {
            for s in &batch.scenes {
                let phi = batch.comm_angles[s.start];
                batch.comm_angles[s.start..s.start + s.n_win()].fill(phi);
            }
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Receive block `Z_s = T·a(θ)·a(θ)ᵀ·v·xᵀ·diag(α_s) + σ_ns·W` of one window.
pub fn render_scene(scene: &SceneDraw, symbols: &[Complex64], v: &[Complex64]) -> ComplexMatrix {
    let k = v.len();
    let n_win = scene.n_win();
    let sigma = scene.noise_power.sqrt();
    let mut z = ComplexMatrix::zeros(k, n_win);
    let a = steering_vector(scene.angle, k);
    let gain = if scene.present { dot_t(&a, v) } else { Complex64::new(0.0, 0.0) };
    for j in 0..n_win {
        let echo = gain * scene.gains[j] * symbols[scene.start + j];
        for r in 0..k {
            z[(r, j)] = a[r] * echo + scene.noise[j * k + r] * sigma;
        }
    }
    z
}

/// Communication receiver front end for every symbol of a batch.
#[derive(Debug, Clone)]
pub struct CommFront {
    /// Decoder input rows `(Re ẑ, Im ẑ, √(σ_n²/(|κ|² + σ_n²)))`.
    pub inputs: Array2<f64>,
    pub kappa: Vec<Complex64>,
    pub received: Vec<Complex64>,
}

pub fn comm_front(batch: &Batch, v: &[Complex64]) -> CommFront {
    let n = batch.len();
    let k = v.len();
    let mut inputs = Array2::zeros((n, 3));
    let mut kappa = Vec::with_capacity(n);
    let mut received = Vec::with_capacity(n);
    for i in 0..n {
        let a = steering_vector(batch.comm_angles[i], k);
        let kap = dot_t(&a, v) * batch.fading[i];
        let s2 = batch.comm_noise_power[i];
        let z = kap * batch.symbols[i] + batch.comm_noise[i] * s2.sqrt();
        let d = kap.norm_sqr() + s2;
        let zhat = kap.conj() * z / d;
        inputs[(i, 0)] = zhat.re;
        inputs[(i, 1)] = zhat.im;
        inputs[(i, 2)] = (s2 / d).sqrt();
        kappa.push(kap);
        received.push(z);
    }
    CommFront {
        inputs,
        kappa,
        received,
    }
}

/// Sensing receiver front end: receive blocks and scaled correlation features.
#[derive(Debug, Clone)]
pub struct SenseFront {
    pub features: Array2<f64>,
    pub windows: Vec<ComplexMatrix>,
}

pub fn sense_front(system: &JcasSystem, batch: &Batch, v: &[Complex64]) -> Result<SenseFront> {
    let k = v.len();
    let width = 2 * k * k + 2;
    let mut features = Array2::zeros((batch.scenes.len(), width));
    let mut windows = Vec::with_capacity(batch.scenes.len());
    for (i, scene) in batch.scenes.iter().enumerate() {
        let z = render_scene(scene, &batch.symbols, v);
        let r = acm(&z)?;
        let mut row = features.row_mut(i);
        let out = row.as_slice_mut().expect("row-major features");
        system.scaling.write(&r, scene.n_win(), scene.noise_power, out);
        windows.push(z);
    }
    Ok(SenseFront { features, windows })
}

/// Phase-dependent weights of the three loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub comm: f64,
    pub detect: f64,
    pub angle: f64,
}

/// Stage of the training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// First pre-training step, detection loss switched off.
    PretrainAngle,
    /// Second pre-training step, angle loss switched off.
    PretrainDetect,
    Finetune,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::PretrainAngle => "pretrain-angle",
            Phase::PretrainDetect => "pretrain-detect",
            Phase::Finetune => "finetune",
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Phase::PretrainAngle => 1,
            Phase::PretrainDetect => 2,
            Phase::Finetune => 3,
        }
    }

    pub fn weights(self, w_s: f64) -> LossWeights {
        let (d, a) = match self {
            Phase::PretrainAngle => (0.0, w_s),
            Phase::PretrainDetect => (w_s, 0.0),
            Phase::Finetune => (w_s, w_s),
        };
        LossWeights {
            comm: 1.0 - w_s,
            detect: d,
            angle: a,
        }
    }
}

/// Which angle term enters the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleLossKind {
    /// Squared error scaled by `N_win/σ_ns²`.
    #[default]
    Normalized,
    /// Plain squared error.
    Legacy,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PassOptions {
    pub angle_loss: AngleLossKind,
    /// Fixed detection offset; `None` applies the scenario's training rule.
    pub offset: Option<f64>,
    pub gradients: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassOutput {
    /// Terms with zero weight are not evaluated and reported as 0.
    pub breakdown: LossBreakdown,
    /// Detection offset that was applied.
    pub offset: f64,
    pub grads: Option<SystemGrads>,
}

/// Loss of `system` on `batch` and, if requested, its gradient.
pub fn evaluate(system: &JcasSystem, batch: &Batch, weights: LossWeights, opts: PassOptions) -> Result<PassOutput> {
    let k = system.antennas();
    let raw = system.beam_raw()?;
    let unit = Head::BeamNormalized.apply(&raw, 0.0);
    let v: Vec<Complex64> = (0..k).map(|i| Complex64::new(unit[i], unit[k + i])).collect();
    let grads_on = opts.gradients;
    // ∂L/∂Re v + j·∂L/∂Im v
    let mut a_v = vec![Complex64::new(0.0, 0.0); k];

    let mut comm = 0.0;
    let mut decoder_grads = MlpParams::zeros_like(&system.decoder.spec);
    if weights.comm > 0.0 {
        let front = comm_front(batch, &v);
        let tape = system.decoder.forward_batch(front.inputs.view())?;
        let llr = &tape.raw;
        let count = llr.len() as f64;
        let mut grad_raw = Array2::zeros(llr.dim());
        for ((i, b), &l) in llr.indexed_iter() {
            let s = 1.0 - 2.0 * batch.bits[i * llr.ncols() + b] as f64;
            comm += softplus(-s * l);
            grad_raw[(i, b)] = -s * sigmoid(-s * l) * weights.comm / count;
        }
        comm /= count;
        if grads_on {
            let (g, dx) = system.decoder.backward_batch(&tape, &grad_raw);
            decoder_grads = g;
            for i in 0..batch.len() {
                let a_kappa = kappa_gradient(
                    front.kappa[i],
                    front.received[i],
                    batch.symbols[i],
                    batch.comm_noise_power[i],
                    [dx[(i, 0)], dx[(i, 1)], dx[(i, 2)]],
                );
                let scale = a_kappa * batch.fading[i].conj();
                for (acc, a) in a_v.iter_mut().zip(steering_vector(batch.comm_angles[i], k)) {
                    *acc += scale * a.conj();
                }
            }
        }
    }

    let mut detect = 0.0;
    let mut angle = 0.0;
    let mut offset = opts.offset.unwrap_or(0.0);
    let mut detection_grads = MlpParams::zeros_like(&system.detection.spec);
    let mut angle_grads = MlpParams::zeros_like(&system.angle.spec);
    if weights.detect > 0.0 || weights.angle > 0.0 {
        let front = sense_front(system, batch, &v)?;
        let n_scenes = batch.scenes.len();
        let mut d_features = grads_on.then(|| Array2::<f64>::zeros(front.features.dim()));

        if weights.detect > 0.0 {
            let tape = system.detection.forward_batch(front.features.view())?;
            let logits: Vec<f64> = tape.raw.column(0).to_vec();
            offset = match (opts.offset, system.scenario.offset) {
                (Some(o), _) => o,
                (None, TrainingOffset::Zero) => 0.0,
                (None, TrainingOffset::BatchQuantile) => {
                    let mut h0: Vec<f64> = logits
                        .iter()
                        .zip(&batch.scenes)
                        .filter(|(_, s)| !s.present)
                        .map(|(&l, _)| l)
                        .collect();
                    if h0.is_empty() {
                        0.0
                    } else {
                        -upper_order_statistic(&mut h0, 1.0 - system.scenario.p_f)
                    }
                }
            };
            let mut grad_raw = Array2::zeros((n_scenes, 1));
            for (i, scene) in batch.scenes.iter().enumerate() {
                let z = logits[i] + offset;
                let t = if scene.present { 1.0 } else { 0.0 };
                detect += if scene.present { softplus(-z) } else { softplus(z) };
                grad_raw[(i, 0)] = (sigmoid(z) - t) * weights.detect / n_scenes as f64;
            }
            detect /= n_scenes as f64;
            if let Some(df) = d_features.as_mut() {
                let (g, dx) = system.detection.backward_batch(&tape, &grad_raw);
                detection_grads = g;
                *df += &dx;
            }
        }

        if weights.angle > 0.0 {
            let present: Vec<usize> = (0..n_scenes).filter(|&i| batch.scenes[i].present).collect();
            if !present.is_empty() {
                let rows = front.features.select(Axis(0), &present);
                let tape = system.angle.forward_batch(rows.view())?;
                let p = present.len() as f64;
                let mut grad_raw = Array2::zeros((present.len(), 1));
                for (j, &i) in present.iter().enumerate() {
                    let scene = &batch.scenes[i];
                    let t = tape.raw[(j, 0)].tanh();
                    let err = FRAC_PI_2 * t - scene.angle;
                    let w = match opts.angle_loss {
                        AngleLossKind::Normalized => angle_weight(scene.n_win(), scene.noise_power),
                        AngleLossKind::Legacy => 1.0,
                    };
                    angle += w * err * err;
                    grad_raw[(j, 0)] = 2.0 * w * err / p * weights.angle * FRAC_PI_2 * (1.0 - t * t);
                }
                angle /= p;
                if let Some(df) = d_features.as_mut() {
                    let (g, dx) = system.angle.backward_batch(&tape, &grad_raw);
                    angle_grads = g;
                    for (j, &i) in present.iter().enumerate() {
                        let mut row = df.row_mut(i);
                        row += &dx.row(j);
                    }
                }
            }
        }

        if let Some(df) = d_features.as_ref() {
            for (i, scene) in batch.scenes.iter().enumerate() {
                if scene.present {
                    let gain = system.scaling.correlation_gain(scene.noise_power);
                    let q = sensing_beam_gradient(scene, &batch.symbols, &front.windows[i], df.row(i).as_slice().expect("row"), gain);
                    for (acc, a) in a_v.iter_mut().zip(steering_vector(scene.angle, k)) {
                        *acc += (q * a).conj();
                    }
                }
            }
        }
    }

    let total = weights.comm * comm + weights.detect * detect + weights.angle * angle;
    let breakdown = LossBreakdown {
        comm,
        detect,
        angle,
        total,
    };
    if !total.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss {breakdown:?}")));
    }

    let grads = if grads_on {
        let upstream: Vec<f64> = a_v.iter().map(|z| z.re).chain(a_v.iter().map(|z| z.im)).collect();
        let g_raw = Head::BeamNormalized.backward(&raw, &upstream, 0.0);
        let beamformer = match &system.beamformer {
            Beamformer::Network(net) => {
                let input = system.region_input();
                let x = ArrayView2::from_shape((1, 4), &input[..]).expect("four bounds");
                let tape = net.forward_batch(x)?;
                let g = Array2::from_shape_vec((1, g_raw.len()), g_raw).expect("row");
                BeamGrad::Network(net.backward_batch(&tape, &g).0)
            }
            Beamformer::Direct(_) => BeamGrad::Direct(g_raw),
        };
        Some(SystemGrads {
            beamformer,
            decoder: decoder_grads,
            angle: angle_grads,
            detection: detection_grads,
        })
    } else {
        None
    };

    Ok(PassOutput {
        breakdown,
        offset,
        grads,
    })
}

/// Gradient w.r.t. the channel tap κ of a loss reached through the decoder
/// input `(Re ẑ, Im ẑ, s)` with `ẑ = κ*·z/D`, `s = √(σ²/D)`, `D = |κ|² + σ²`
/// and `z = κ·x + n` (noise held fixed).
fn kappa_gradient(kappa: Complex64, z: Complex64, x: Complex64, noise_power: f64, g: [f64; 3]) -> Complex64 {
    let j = Complex64::i();
    let d = kappa.norm_sqr() + noise_power;
    let zhat = kappa.conj() * z / d;
    let s = (noise_power / d).sqrt();
    let dz_dr = (z + kappa.conj() * x) / d - zhat * (2.0 * kappa.re / d);
    let dz_di = (-j * z + kappa.conj() * j * x) / d - zhat * (2.0 * kappa.im / d);
    let dr = g[0] * dz_dr.re + g[1] * dz_dr.im - g[2] * s * kappa.re / d;
    let di = g[0] * dz_di.re + g[1] * dz_di.im - g[2] * s * kappa.im / d;
    Complex64::new(dr, di)
}

/// `q` such that the loss changes by `Re(q·d(a(θ)ᵀv))` through the correlation
/// features of one target-present window.
///
/// With `G` the feature gradient folded into a complex `K × K` matrix,
/// `∂L/∂Z = (G + Gᴴ)·Z/N_win` and `q = Σ_j α_j x_j · Z_jᴴ (G + Gᴴ) a / N_win`.
fn sensing_beam_gradient(
    scene: &SceneDraw,
    symbols: &[Complex64],
    z: &ComplexMatrix,
    d_features: &[f64],
    gain: f64,
) -> Complex64 {
    let k = z.rows();
    let kk = k * k;
    let a = steering_vector(scene.angle, k);
    let g = |r: usize, c: usize| Complex64::new(d_features[r * k + c], d_features[kk + r * k + c]) * gain;
    let h: Vec<Complex64> = (0..k)
        .map(|r| (0..k).map(|c| (g(r, c) + g(c, r).conj()) * a[c]).sum())
        .collect();
    let n_win = scene.n_win();
    let mut q = Complex64::new(0.0, 0.0);
    for j in 0..n_win {
        let zh: Complex64 = (0..k).map(|r| z[(r, j)].conj() * h[r]).sum();
        q += scene.gains[j] * symbols[scene.start + j] * zh;
    }
    q / n_win as f64
}

/// Receiver outputs for every window of a batch.
#[derive(Debug, Clone)]
pub struct SensingOutputs {
    /// Detection logits before the offset.
    pub logits: Vec<f64>,
    /// Angle estimates in radians.
    pub angles: Vec<f64>,
    pub windows: Vec<ComplexMatrix>,
}

/// Runs the sensing receiver on every window under beam `v`.
pub fn sensing_outputs(system: &JcasSystem, batch: &Batch, v: &[Complex64]) -> Result<SensingOutputs> {
    let front = sense_front(system, batch, v)?;
    let logits = system.detection.forward_batch(front.features.view())?.raw.column(0).to_vec();
    let angles = system
        .angle
        .forward_batch(front.features.view())?
        .raw
        .column(0)
        .iter()
        .map(|r| FRAC_PI_2 * r.tanh())
        .collect();
    Ok(SensingOutputs {
        logits,
        angles,
        windows: front.windows,
    })
}

/// Decoder LLRs (symbol-major) under beam `v`, with the receiver front end.
pub fn decoder_outputs(system: &JcasSystem, batch: &Batch, v: &[Complex64]) -> Result<(Vec<f64>, CommFront)> {
    let front = comm_front(batch, v);
    let llr = system.decoder.forward_batch(front.inputs.view())?.raw;
    Ok((llr.iter().copied().collect(), front))
}

/// The system's beam as a complex vector.
pub fn beam_vector(system: &JcasSystem) -> Result<Vec<Complex64>> {
    Ok(system.beam()?.as_slice().to_vec())
}
