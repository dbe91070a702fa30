//! FMCW radar measurements and a surrogate type classifier.
//!
//! The radar reports range from the beat (IF) frequency, radial speed from
//! the chirp-to-chirp phase rotation and bearing from the inter-antenna phase
//! difference. Device types come from a classifier that is right with a fixed
//! probability.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, FadingParams, LinkBudget};
use crate::error::{Error, Result};
use crate::math::{self, PI, SPEED_OF_LIGHT};
use crate::rng::normal;
use crate::world::{DeviceState, DeviceType, UavState};

pub use crate::config::RadarSection as RadarConfig;

impl RadarConfig {
    /// Chirp slope S = B/T (Hz/s).
    pub fn slope(&self) -> f64 {
        self.sweep_bandwidth / self.sweep_time
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_freq
    }

    /// Range resolution c/(2B).
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.sweep_bandwidth)
    }

    pub fn noise_free(&self) -> Self {
        Self { freq_noise_sigma: 0.0, phase_noise_sigma: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionReport {
    pub device_id: usize,
    pub est_distance: f64,
    pub est_velocity: f64,
    pub est_angle: f64,
    pub est_type: DeviceType,
    /// Mean-gain device-to-UAV rate at the estimated distance (bit/s).
    pub link_rate_estimate: f64,
    /// False when the bearing estimate fell outside the arcsine domain.
    pub valid: bool,
}

/// Noise-free beat frequency 2Bd/(cT).
pub fn if_frequency_exact(true_distance: f64, rc: &RadarConfig) -> f64 {
    2.0 * rc.sweep_bandwidth * true_distance / (SPEED_OF_LIGHT * rc.sweep_time)
}

pub fn fmcw_if_frequency<R: Rng + ?Sized>(true_distance: f64, rc: &RadarConfig, rng: &mut R) -> f64 {
    debug_assert!(true_distance >= 0.0);
    let noise = normal(rng) * rc.freq_noise_sigma;
    if_frequency_exact(true_distance, rc) + noise
}

pub fn estimate_distance(f_if: f64, rc: &RadarConfig) -> f64 {
    SPEED_OF_LIGHT * rc.sweep_time * f_if / (2.0 * rc.sweep_bandwidth)
}

/// Speed from the phase rotation ω between consecutive chirps, λω/(4πT_s).
pub fn estimate_velocity(phase_rate: f64, rc: &RadarConfig) -> f64 {
    rc.wavelength() * phase_rate / (4.0 * PI * rc.chirp_interval)
}

/// Bearing `asin(λω / (2πd))`.
pub fn estimate_angle(omega: f64, d: f64, rc: &RadarConfig) -> Result<f64> {
    let arg = rc.wavelength() * omega / (2.0 * PI * d);
    if !arg.is_finite() || !(-1.0..=1.0).contains(&arg) {
        return Err(Error::InvalidMeasurement(arg));
    }
    Ok(math::asin(arg))
}

pub fn classify_device<R: Rng + ?Sized>(true_type: DeviceType, accuracy: f64, rng: &mut R) -> DeviceType {
    let hit: f64 = rng.random();
    let pick: usize = rng.random_range(0..2);
    if hit < accuracy {
        return true_type;
    }
    let others: Vec<DeviceType> = DeviceType::ALL.iter().copied().filter(|&t| t != true_type).collect();
    others[pick]
}

/// Radar-side view of one device: the ground truth the estimators invert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetTruth {
    pub distance: f64,
    pub speed: f64,
    /// Bearing relative to the array broadside.
    pub angle: f64,
}

pub fn target_truth(uav: &UavState, dev: &DeviceState) -> TargetTruth {
    let distance = uav.pos.distance(&dev.pos);
    let along = dev.pos.x - uav.pos.x;
    let angle = if distance > 0.0 { math::asin((along / distance).clamp(-1.0, 1.0)) } else { 0.0 };
    TargetTruth { distance, speed: dev.speed, angle }
}

/// Inputs for turning estimated range into a link-rate estimate.
#[derive(Debug, Clone, Copy)]
pub struct RateModel<'a> {
    pub fading: &'a FadingParams,
    pub budget: &'a LinkBudget,
}

impl RateModel<'_> {
    pub fn rate_at(&self, d: f64) -> f64 {
        let g = channel::mean_ag_gain(d.max(1.0), self.fading).unwrap_or(0.0);
        channel::rate_from_gain(self.budget, g)
    }
}

/// Measures one device. Always consumes the same number of random draws.
pub fn perceive_one<R: Rng + ?Sized>(
    uav: &UavState,
    dev: &DeviceState,
    rc: &RadarConfig,
    rates: &RateModel<'_>,
    rng: &mut R,
) -> PerceptionReport {
    let truth = target_truth(uav, dev);
    let f_if = fmcw_if_frequency(truth.distance, rc, rng);
    let est_distance = estimate_distance(f_if, rc).max(0.0);

    let lambda = rc.wavelength();
    let doppler_phase = 4.0 * PI * rc.chirp_interval * truth.speed / lambda + normal(rng) * rc.phase_noise_sigma;
    let est_velocity = estimate_velocity(doppler_phase, rc);

    let bearing_phase = 2.0 * PI * truth.distance * math::sin(truth.angle) / lambda + normal(rng) * rc.phase_noise_sigma;
    let angle = estimate_angle(bearing_phase, est_distance, rc);

    let est_type = classify_device(dev.device_type, rc.classifier_accuracy, rng);
    PerceptionReport {
        device_id: dev.id,
        est_distance,
        est_velocity,
        est_angle: angle.as_ref().copied().unwrap_or(0.0),
        est_type,
        link_rate_estimate: rates.rate_at(est_distance),
        valid: angle.is_ok(),
    }
}

/// One report per covered device, in the order given.
pub fn perceive<R: Rng + ?Sized>(
    uav: &UavState,
    covered: &[&DeviceState],
    rc: &RadarConfig,
    rates: &RateModel<'_>,
    rng: &mut R,
) -> Vec<PerceptionReport> {
    covered.iter().map(|d| perceive_one(uav, d, rc, rates, rng)).collect()
}

/// Complex baseband IF samples `s_T · conj(s_R)` for a target at `distance`.
///
/// Phases follow the transmitted chirp and its echo delayed by 2d/c; the
/// product keeps only the difference-frequency term that the mixer and
/// low-pass filter pass. Returns `(re, im)` pairs covering one sweep.
pub fn synthesize_if(distance: f64, rc: &RadarConfig) -> Vec<(f64, f64)> {
    let n = (rc.sample_rate * rc.sweep_time) as usize;
    let s = rc.slope();
    let tau0 = 2.0 * distance / SPEED_OF_LIGHT;
    let dt = 1.0 / rc.sample_rate;
    let amp = 0.5 * rc.tx_amplitude * rc.tx_amplitude;
    (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            // φ_T(t) − φ_R(t) with the large f0·t terms cancelled analytically.
            let phase = 2.0 * PI * (rc.center_freq * tau0 + s * tau0 * t - 0.5 * s * tau0 * tau0);
            (amp * math::cos(phase), amp * math::sin(phase))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Budgets;
    use crate::config::{ChannelSection, Config};
    use crate::rng::{stream, Stream};
    use crate::world::Position;

    fn rc() -> RadarConfig {
        RadarConfig::default()
    }

    #[test]
    fn if_frequency_examples() {
        let r = rc().noise_free();
        let mut rng = stream(1, Stream::Perception);
        assert_eq!(fmcw_if_frequency(0.0, &r, &mut rng), 0.0);
        let f = fmcw_if_frequency(100.0, &r, &mut rng);
        assert!((f - 6.6667e7).abs() / 6.6667e7 < 1e-4);
        let f2 = fmcw_if_frequency(200.0, &r, &mut rng);
        assert!((f2 - 2.0 * f).abs() < 1e-6);
    }

    #[test]
    fn distance_examples() {
        let r = rc();
        assert_eq!(estimate_distance(0.0, &r), 0.0);
        assert!((estimate_distance(6.6667e7, &r) - 100.0).abs() < 0.01);
        for d in [0.5, 10.0, 123.4, 499.0] {
            assert!((estimate_distance(if_frequency_exact(d, &r), &r) - d).abs() < r.range_resolution());
        }
    }

    #[test]
    fn velocity_examples() {
        let mut r = rc();
        assert_eq!(estimate_velocity(0.0, &r), 0.0);
        // λ = 0.0039 m exactly: pick f0 accordingly.
        r.center_freq = SPEED_OF_LIGHT / 0.0039;
        assert!((estimate_velocity(PI, &r) - 9.75).abs() < 1e-9);
        assert!(estimate_velocity(-1.0, &r) < 0.0);
    }

    #[test]
    fn angle_examples() {
        let r = rc();
        let lambda = r.wavelength();
        assert_eq!(estimate_angle(0.0, 50.0, &r).unwrap(), 0.0);
        let d = 50.0;
        let omega = 0.5 * 2.0 * PI * d / lambda;
        assert!((estimate_angle(omega, d, &r).unwrap() - PI / 6.0).abs() < 1e-9);
        let omega1 = 2.0 * PI * d / lambda;
        assert!((estimate_angle(omega1, d, &r).unwrap() - PI / 2.0).abs() < 1e-9);
        assert!(estimate_angle(omega1 * 1.01, d, &r).is_err());
    }

    #[test]
    fn classifier_rates() {
        let mut rng = stream(2, Stream::Perception);
        for _ in 0..100 {
            assert_eq!(classify_device(DeviceType::Cyclist, 1.0, &mut rng), DeviceType::Cyclist);
        }
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[classify_device(DeviceType::Pedestrian, 0.0, &mut rng).index()] += 1;
        }
        assert_eq!(counts[0], 0);
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((counts[1] as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
        let hits = (0..n).filter(|_| classify_device(DeviceType::Vehicle, 0.9, &mut rng) == DeviceType::Vehicle).count();
        assert!((hits as f64 / n as f64 - 0.9).abs() < 0.01);
    }

    fn scene() -> (UavState, Vec<DeviceState>) {
        let uav = UavState { id: 0, pos: Position::new(0.0, 0.0, 100.0), coverage_radius: 500.0, cpu_max: 3e8, cycles_per_bit: 1e3 };
        let devs = (0..4)
            .map(|k| DeviceState {
                id: 10 + k,
                pos: Position::new(50.0 * k as f64, 30.0, 0.0),
                speed: [1.5, 5.0, 15.0, 1.5][k],
                heading: 0.0,
                device_type: DeviceType::from_index(k % 3).unwrap(),
                arrival_rate: 0.0,
            })
            .collect();
        (uav, devs)
    }

    #[test]
    fn noise_free_perception_is_exact() {
        let (uav, devs) = scene();
        let mut r = rc().noise_free();
        r.classifier_accuracy = 1.0;
        let fp = FadingParams::from_config(&ChannelSection::default());
        let b = Budgets::from_config(&Config::default());
        let rm = RateModel { fading: &fp, budget: &b.device_uav };
        let refs: Vec<&DeviceState> = devs.iter().collect();
        let mut rng = stream(3, Stream::Perception);
        let reps = perceive(&uav, &refs, &r, &rm, &mut rng);
        assert_eq!(reps.len(), devs.len());
        for (rep, d) in reps.iter().zip(&devs) {
            assert_eq!(rep.device_id, d.id);
            assert!((rep.est_distance - uav.pos.distance(&d.pos)).abs() < r.range_resolution());
            assert!((rep.est_velocity - d.speed).abs() < 1e-9);
            assert_eq!(rep.est_type, d.device_type);
            assert!(rep.valid);
            assert!((rep.est_angle - target_truth(&uav, d).angle).abs() < 1e-6);
            assert!(rep.link_rate_estimate > 0.0);
        }
    }

    #[test]
    fn noisy_distance_is_unbiased() {
        let (uav, devs) = scene();
        let r = rc();
        let fp = FadingParams::from_config(&ChannelSection::default());
        let b = Budgets::from_config(&Config::default());
        let rm = RateModel { fading: &fp, budget: &b.device_uav };
        let mut rng = stream(4, Stream::Perception);
        let n = 10_000;
        let truth = uav.pos.distance(&devs[2].pos);
        let mean = (0..n).map(|_| perceive_one(&uav, &devs[2], &r, &rm, &mut rng).est_distance).sum::<f64>() / n as f64;
        let sigma_d = r.freq_noise_sigma * SPEED_OF_LIGHT * r.sweep_time / (2.0 * r.sweep_bandwidth);
        assert!((mean - truth).abs() < 3.0 * sigma_d / (n as f64).sqrt());
    }

    #[test]
    fn synthesized_if_has_expected_length_and_amplitude() {
        let r = rc();
        let s = synthesize_if(100.0, &r);
        assert_eq!(s.len(), 40_000);
        for (re, im) in s.iter().take(10) {
            assert!(((re * re + im * im).sqrt() - 0.5).abs() < 1e-12);
        }
    }
}
