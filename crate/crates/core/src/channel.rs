//! Propagation: single-tap Rayleigh communication link, Swerling-1 monostatic
//! reflection, receiver noise and the auto-correlation pre-processing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dot_t, ComplexMatrix, SeededRng};
use crate::waveform::{steering_vector, AngleRegion, BeamWeights};

/// How the communication receiver's azimuth evolves inside one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverMotion {
    /// A fresh angle for every symbol.
    #[default]
    PerSymbol,
    /// One angle for the whole block.
    PerWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommLinkParams {
    /// σ_c²
    pub fading_power: f64,
    /// σ_n²
    pub noise_power: f64,
    pub region: AngleRegion,
    pub motion: ReceiverMotion,
}

impl CommLinkParams {
    pub fn new(fading_power: f64, noise_power: f64, region: AngleRegion) -> Result<Self> {
        check_power("fading power", fading_power)?;
        check_power("noise power", noise_power)?;
        Ok(Self {
            fading_power,
            noise_power,
            region,
            motion: ReceiverMotion::PerSymbol,
        })
    }

    /// Raw link SNR `σ_c²/σ_n²`.
    pub fn snr(&self) -> f64 {
        self.fading_power / self.noise_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenseLinkParams {
    /// σ_s²
    pub reflection_power: f64,
    /// σ_ns²
    pub noise_power: f64,
    pub region: AngleRegion,
    /// Prior probability that a target is present.
    pub target_prior: f64,
}

impl SenseLinkParams {
    pub fn new(reflection_power: f64, noise_power: f64, region: AngleRegion, target_prior: f64) -> Result<Self> {
        check_power("reflection power", reflection_power)?;
        check_power("noise power", noise_power)?;
        if !(0.0..=1.0).contains(&target_prior) {
            return Err(Error::Config(format!("target prior {target_prior} outside [0, 1]")));
        }
        Ok(Self {
            reflection_power,
            noise_power,
            region,
            target_prior,
        })
    }

    /// Raw sensing SNR `σ_s²/σ_ns²`.
    pub fn snr(&self) -> f64 {
        self.reflection_power / self.noise_power
    }
}

fn check_power(what: &str, p: f64) -> Result<()> {
    if p >= 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {p} must be finite and non-negative")))
    }
}

/// One sensing window: target presence, its azimuth and per-snapshot reflection gains.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingScene {
    pub present: bool,
    pub angle: f64,
    pub gains: Vec<Complex64>,
}

impl SensingScene {
    pub fn n_win(&self) -> usize {
        self.gains.len()
    }
}

/// Channel state seen by the communication receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CommRealization {
    pub angles: Vec<f64>,
    pub fading: Vec<Complex64>,
    /// `κ_n = (a(φ_n)ᵀ v)·α_c,n`
    pub effective: Vec<Complex64>,
}

/// Passes the transmit block through the single-antenna Rayleigh link.
///
/// Column `n` of `y` reaches the receiver as `(a(φ_n)ᵀ y_n)·α_c,n + n_c,n`.
pub fn comm_channel(
    y: &ComplexMatrix,
    params: &CommLinkParams,
    v: &BeamWeights,
    rng: &mut SeededRng,
) -> Result<(Vec<Complex64>, CommRealization)> {
    let k = v.antennas();
    if y.rows() != k {
        return Err(Error::Precondition(format!(
            "block has {} rows for a {k}-antenna beam",
            y.rows()
        )));
    }
    let n_win = y.cols();
    let mut angles = Vec::with_capacity(n_win);
    let mut fading = Vec::with_capacity(n_win);
    let mut effective = Vec::with_capacity(n_win);
    let mut received = Vec::with_capacity(n_win);
    let window_angle = rng.uniform_in(params.region.min(), params.region.max());
    for n in 0..n_win {
        let phi = match params.motion {
            ReceiverMotion::PerSymbol => rng.uniform_in(params.region.min(), params.region.max()),
            ReceiverMotion::PerWindow => window_angle,
        };
        let a = steering_vector(phi, k);
        let alpha = draw(rng, params.fading_power);
        let noise = draw(rng, params.noise_power);
        let column = y.col(n);
        received.push(dot_t(&a, &column) * alpha + noise);
        effective.push(dot_t(&a, v.as_slice()) * alpha);
        angles.push(phi);
        fading.push(alpha);
    }
    Ok((
        received,
        CommRealization {
            angles,
            fading,
            effective,
        },
    ))
}

fn draw(rng: &mut SeededRng, variance: f64) -> Complex64 {
    if variance == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        rng.complex_normal(variance)
    }
}

/// Monostatic reflection `Z_s = T·a(θ)·a(θ)ᵀ·Y·diag(α_s) + N_s`.
pub fn sense_channel(
    y: &ComplexMatrix,
    scene: &SensingScene,
    params: &SenseLinkParams,
    rng: &mut SeededRng,
) -> Result<ComplexMatrix> {
    if scene.angle.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(Error::Precondition(format!("target angle {} outside [-pi/2, pi/2]", scene.angle)));
    }
    if scene.present && scene.gains.len() != y.cols() {
        return Err(Error::Precondition(format!(
            "{} reflection gains for a block of {} snapshots",
            scene.gains.len(),
            y.cols()
        )));
    }
    let k = y.rows();
    let a = steering_vector(scene.angle, k);
    let mut z = ComplexMatrix::zeros(k, y.cols());
    for n in 0..y.cols() {
        let echo = if scene.present {
            dot_t(&a, &y.col(n)) * scene.gains[n]
        } else {
            Complex64::new(0.0, 0.0)
        };
        for r in 0..k {
            z[(r, n)] = a[r] * echo + draw(rng, params.noise_power);
        }
    }
    Ok(z)
}

/// Sample auto-correlation `(1/N_win)·Z·Zᴴ` across the receive antennas.
pub fn acm(z: &ComplexMatrix) -> Result<ComplexMatrix> {
    if z.cols() == 0 {
        return Err(Error::Precondition("auto-correlation of an empty window".into()));
    }
    let k = z.rows();
    let scale = 1.0 / z.cols() as f64;
    let mut out = ComplexMatrix::zeros(k, k);
    for r in 0..k {
        let zr = z.row(r);
        for c in r..k {
            let zc = z.row(c);
            let s: Complex64 = zr.iter().zip(zc).map(|(a, b)| a * b.conj()).sum::<Complex64>() * scale;
            out[(r, c)] = s;
            out[(c, r)] = s.conj();
        }
        out[(r, r)].im = 0.0;
    }
    Ok(out)
}

/// Draws presence, azimuth and the fluctuating Swerling-1 gains of one window.
pub fn sample_scene(params: &SenseLinkParams, n_win: usize, rng: &mut SeededRng) -> Result<SensingScene> {
    if n_win == 0 {
        return Err(Error::Precondition("sensing window needs at least one snapshot".into()));
    }
    let present = rng.bernoulli(params.target_prior);
    let angle = rng.uniform_in(params.region.min(), params.region.max());
    let gains = (0..n_win).map(|_| draw(rng, params.reflection_power)).collect();
    Ok(SensingScene { present, angle, gains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::norm_sqr;
    use crate::waveform::{assemble_block, beam_gain, mean_region_gain, DEFAULT_PATTERN_GRID};

    fn comm_region() -> AngleRegion {
        AngleRegion::from_degrees(30.0, 50.0).unwrap()
    }

    fn sense_region() -> AngleRegion {
        AngleRegion::from_degrees(-20.0, 20.0).unwrap()
    }

    fn symbols(n: usize, rng: &mut SeededRng) -> Vec<Complex64> {
        (0..n).map(|_| rng.complex_normal(1.0)).collect()
    }

    #[test]
    fn noiseless_comm_is_kappa_times_x() {
        let mut rng = SeededRng::new(1, 1);
        let v = BeamWeights::matched(0.7, 8);
        let x = symbols(32, &mut rng);
        let y = assemble_block(&v, &x);
        let params = CommLinkParams::new(1.0, 0.0, comm_region()).unwrap();
        let (z, real) = comm_channel(&y, &params, &v, &mut rng).unwrap();
        for n in 0..32 {
            assert!((z[n] - real.effective[n] * x[n]).norm() < 1e-12);
            let kappa = dot_t(&steering_vector(real.angles[n], 8), v.as_slice()) * real.fading[n];
            assert_eq!(kappa, real.effective[n]);
            assert!(comm_region().contains(real.angles[n]));
        }
    }

    #[test]
    fn no_fading_leaves_pure_noise() {
        let mut rng = SeededRng::new(2, 1);
        let v = BeamWeights::uniform(4);
        let x = symbols(20_000, &mut rng);
        let y = assemble_block(&v, &x);
        let params = CommLinkParams::new(0.0, 0.5, comm_region()).unwrap();
        let (z, _) = comm_channel(&y, &params, &v, &mut rng).unwrap();
        let power = norm_sqr(&z) / z.len() as f64;
        assert!((power - 0.5).abs() < 0.02);
    }

    #[test]
    fn comm_power_budget() {
        let mut rng = SeededRng::new(3, 1);
        let k = 16;
        let v = BeamWeights::matched(comm_region().center(), k);
        let n = 100_000;
        let x = symbols(n, &mut rng);
        let y = assemble_block(&v, &x);
        let snr_c = 10f64.powf(0.5);
        let params = CommLinkParams::new(snr_c, 1.0, comm_region()).unwrap();
        let (z, _) = comm_channel(&y, &params, &v, &mut rng).unwrap();
        let measured = norm_sqr(&z) / n as f64;
        let beta_c = mean_region_gain(&v, comm_region(), DEFAULT_PATTERN_GRID * 4);
        let expected = beta_c * snr_c + 1.0;
        assert!((measured / expected - 1.0).abs() < 0.03, "{measured} vs {expected}");
    }

    #[test]
    fn comm_is_reproducible() {
        let v = BeamWeights::uniform(4);
        let x = vec![Complex64::new(1.0, 0.0); 8];
        let y = assemble_block(&v, &x);
        let params = CommLinkParams::new(1.0, 0.1, comm_region()).unwrap();
        let a = comm_channel(&y, &params, &v, &mut SeededRng::new(9, 9)).unwrap();
        let b = comm_channel(&y, &params, &v, &mut SeededRng::new(9, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_window_motion_keeps_one_angle() {
        let v = BeamWeights::uniform(4);
        let y = assemble_block(&v, &[Complex64::new(1.0, 0.0); 6]);
        let mut params = CommLinkParams::new(1.0, 0.1, comm_region()).unwrap();
        params.motion = ReceiverMotion::PerWindow;
        let (_, real) = comm_channel(&y, &params, &v, &mut SeededRng::new(1, 0)).unwrap();
        assert!(real.angles.iter().all(|&a| a == real.angles[0]));
    }

    #[test]
    fn absent_target_is_pure_noise() {
        let mut rng = SeededRng::new(4, 1);
        let v = BeamWeights::uniform(16);
        let x = symbols(6250, &mut rng);
        let y = assemble_block(&v, &x);
        let params = SenseLinkParams::new(1.0, 0.7, sense_region(), 0.0).unwrap();
        let scene = sample_scene(&params, 6250, &mut rng).unwrap();
        assert!(!scene.present);
        let z = sense_channel(&y, &scene, &params, &mut rng).unwrap();
        let power = z.norm_sqr() / (16.0 * 6250.0);
        assert!((power / 0.7 - 1.0).abs() < 0.02);
    }

    #[test]
    fn noiseless_echo_is_scaled_steering_vector() {
        let v = BeamWeights::uniform(16);
        let x = [Complex64::new(0.3, -0.8)];
        let y = assemble_block(&v, &x);
        let params = SenseLinkParams::new(1.0, 0.0, sense_region(), 1.0).unwrap();
        let theta = 0.2;
        let scene = SensingScene {
            present: true,
            angle: theta,
            gains: vec![Complex64::new(1.0, 0.5)],
        };
        let z = sense_channel(&y, &scene, &params, &mut SeededRng::new(0, 0)).unwrap();
        let a = steering_vector(theta, 16);
        let s = z[(0, 0)] / a[0];
        for r in 0..16 {
            assert!((z[(r, 0)] - a[r] * s).norm() < 1e-12);
        }
        let power = z.col(0).iter().map(|c| c.norm_sqr()).sum::<f64>();
        let expected = beam_gain(&v, theta) * x[0].norm_sqr() * scene.gains[0].norm_sqr() * 16.0;
        assert!((power - expected).abs() < 1e-10);
    }

    #[test]
    fn acm_properties() {
        let u = [Complex64::new(1.0, 2.0), Complex64::new(0.0, -1.0), Complex64::new(0.5, 0.5)];
        let r = acm(&ComplexMatrix::column(&u)).unwrap();
        assert!(r.sub(&ComplexMatrix::outer(&u, &u)).unwrap().max_abs() < 1e-15);
        assert_eq!(acm(&ComplexMatrix::zeros(3, 4)).unwrap(), ComplexMatrix::zeros(3, 3));

        let mut rng = SeededRng::new(5, 5);
        let z = ComplexMatrix::from_fn(6, 4, |_, _| rng.complex_normal(1.0));
        let r = acm(&z).unwrap();
        assert!(r.hermitian_defect() < 1e-12);
        assert!((r.trace().re - z.norm_sqr() / 4.0).abs() < 1e-12);
        let eig = crate::numerics::hermitian_eig(&r).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn scene_statistics() {
        let params = SenseLinkParams::new(1.5, 1.0, sense_region(), 1.0).unwrap();
        let mut rng = SeededRng::new(6, 6);
        let n = 100_000;
        let mut mean_angle = 0.0;
        let mut power = 0.0;
        for _ in 0..n {
            let s = sample_scene(&params, 1, &mut rng).unwrap();
            assert!(s.present);
            mean_angle += s.angle;
            power += s.gains[0].norm_sqr();
        }
        assert!((mean_angle / n as f64 - sense_region().center()).abs() < 0.5f64.to_radians());
        assert!((power / n as f64 / 1.5 - 1.0).abs() < 0.02);

        let never = SenseLinkParams::new(1.0, 1.0, sense_region(), 0.0).unwrap();
        assert!((0..1000).all(|_| !sample_scene(&never, 3, &mut rng).unwrap().present));
    }
}
