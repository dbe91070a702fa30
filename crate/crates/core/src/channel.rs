//! Block-fading channels and Shannon rates.
//!
//! Air-ground links use Rayleigh small-scale fading over a power-law path
//! loss; air-satellite and device-satellite links are Rician.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ChannelSection, Config};
use crate::error::{Error, Result};
use crate::math::{self, PI, SPEED_OF_LIGHT};
use crate::rng::normal;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub bandwidth: f64,
    /// Transmit power (W).
    pub tx_power: f64,
    /// Linear antenna gain, 1 for terrestrial links.
    pub antenna_gain: f64,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
}

impl LinkBudget {
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    pub carrier_freq: f64,
    /// Shadow fading β (linear amplitude factor).
    pub shadow_fading: f64,
    pub pathloss_exp_ag: f64,
    /// Rician K-factor F.
    pub rician_k: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub wavelength_ka: f64,
}

impl FadingParams {
    pub fn from_config(c: &ChannelSection) -> Self {
        Self {
            carrier_freq: c.carrier_freq,
            shadow_fading: c.shadow_fading,
            pathloss_exp_ag: c.pathloss_exp_ag,
            rician_k: c.rician_k,
            pathloss_exp_los: c.pathloss_exp_los,
            pathloss_exp_nlos: c.pathloss_exp_nlos,
            wavelength_ka: c.wavelength_ka,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    AirGround,
    AirSatellite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// |h|² (linear).
    pub gain_power: f64,
    pub link_kind: LinkKind,
}

/// Large-scale attenuation: free space at the carrier times an excess
/// power-law term, `(4π d f_c / c)^2 · d^(α − 2)`.
pub fn path_loss(d: f64, fp: &FadingParams) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NonPositiveDistance(d));
    }
    let fs = 4.0 * PI * d * fp.carrier_freq / SPEED_OF_LIGHT;
    Ok(fs * fs * math::powf(d, fp.pathloss_exp_ag - 2.0))
}

/// Mean air-ground power gain β²/PL(d).
pub fn mean_ag_gain(d: f64, fp: &FadingParams) -> Result<f64> {
    Ok(fp.shadow_fading * fp.shadow_fading / path_loss(d, fp)?)
}

/// |ε|² for ε ~ CN(0, 1).
fn complex_normal_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re = normal(rng) * core::f64::consts::FRAC_1_SQRT_2;
    let im = normal(rng) * core::f64::consts::FRAC_1_SQRT_2;
    re * re + im * im
}

pub fn ag_channel_gain<R: Rng + ?Sized>(d: f64, fp: &FadingParams, rng: &mut R) -> Result<ChannelRealization> {
    let mean = mean_ag_gain(d, fp)?;
    let eps = complex_normal_power(rng);
    Ok(ChannelRealization { gain_power: eps * mean, link_kind: LinkKind::AirGround })
}

pub fn us_channel_gain<R: Rng + ?Sized>(d: f64, fp: &FadingParams, rng: &mut R) -> Result<ChannelRealization> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NonPositiveDistance(d));
    }
    let f = fp.rician_k;
    let los_amp = math::sqrt(f / (1.0 + f)) * math::sqrt(math::powf(d, -fp.pathloss_exp_los));
    let phase = -2.0 * PI * d / fp.wavelength_ka;
    let nlos_amp = math::sqrt(math::powf(d, -fp.pathloss_exp_nlos) / (1.0 + f));
    let nre = normal(rng) * core::f64::consts::FRAC_1_SQRT_2;
    let nim = normal(rng) * core::f64::consts::FRAC_1_SQRT_2;
    let re = los_amp * math::cos(phase) + nlos_amp * nre;
    let im = los_amp * math::sin(phase) + nlos_amp * nim;
    Ok(ChannelRealization { gain_power: re * re + im * im, link_kind: LinkKind::AirSatellite })
}

/// Mean Rician power gain `F d^{-α_LoS}/(1+F) + d^{-α_NLoS}/(1+F)`.
pub fn mean_us_gain(d: f64, fp: &FadingParams) -> f64 {
    let f = fp.rician_k;
    (f * math::powf(d, -fp.pathloss_exp_los) + math::powf(d, -fp.pathloss_exp_nlos)) / (1.0 + f)
}

/// Shannon rate `B log2(1 + P G |h|² / (N0 B))` in bit/s.
pub fn rate(lb: &LinkBudget, ch: &ChannelRealization) -> f64 {
    rate_from_gain(lb, ch.gain_power)
}

pub fn rate_from_gain(lb: &LinkBudget, gain_power: f64) -> f64 {
    let snr = lb.tx_power * lb.antenna_gain * gain_power / lb.noise_power();
    if !(snr > 0.0) {
        return 0.0;
    }
    lb.bandwidth * math::ln_1p(snr) / core::f64::consts::LN_2
}

/// The four link budgets of the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub uav_bs: LinkBudget,
    pub uav_sat: LinkBudget,
    pub device_sat: LinkBudget,
    pub device_uav: LinkBudget,
}

impl Budgets {
    pub fn from_config(cfg: &Config) -> Self {
        let d = cfg.derived();
        let c = &cfg.channel;
        let terrestrial = |p: f64| LinkBudget { bandwidth: c.bandwidth_c, tx_power: p, antenna_gain: 1.0, noise_psd: d.noise_psd_w_hz };
        let space = |p: f64| LinkBudget { bandwidth: c.bandwidth_ka, tx_power: p, antenna_gain: d.sat_gain, noise_psd: d.noise_psd_w_hz };
        Self {
            uav_bs: terrestrial(d.uav_bs_tx_w),
            uav_sat: space(d.uav_sat_tx_w),
            device_sat: space(d.device_sat_tx_w),
            device_uav: terrestrial(d.device_uav_tx_w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use std::vec::Vec;

    fn fp() -> FadingParams {
        FadingParams::from_config(&ChannelSection::default())
    }

    #[test]
    fn path_loss_examples() {
        let mut p = fp();
        let a = path_loss(100.0, &p).unwrap();
        let b = path_loss(200.0, &p).unwrap();
        assert!((b / a - 2f64.powf(2.7)).abs() < 1e-9);

        p.pathloss_exp_ag = 2.0;
        let d0 = SPEED_OF_LIGHT / (4.0 * PI * p.carrier_freq);
        assert!((path_loss(d0, &p).unwrap() - 1.0).abs() < 1e-12);

        // Hand FSPL at 1 km, 4 GHz: 20 log10(4π·1000·4e9/c) dB.
        let x = 4.0 * std::f64::consts::PI * 1000.0 * 4e9 / 3e8;
        let pl = path_loss(1000.0, &p).unwrap();
        assert!((pl / (x * x) - 1.0).abs() < 1e-12);
        assert!((pl - 2.808e10).abs() / 2.808e10 < 1e-3);
        assert!((10.0 * pl.log10() - 104.5).abs() < 0.05);

        assert!(matches!(path_loss(0.0, &p), Err(Error::NonPositiveDistance(_))));
    }

    #[test]
    fn zero_shadowing_gives_zero_gain() {
        let mut p = fp();
        p.shadow_fading = 0.0;
        let mut rng = stream(1, Stream::Channel);
        assert_eq!(ag_channel_gain(300.0, &p, &mut rng).unwrap().gain_power, 0.0);
    }

    #[test]
    fn rayleigh_power_is_exponential() {
        let p = fp();
        let d = 400.0;
        let mean = mean_ag_gain(d, &p).unwrap();
        let mut rng = stream(2, Stream::Channel);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| ag_channel_gain(d, &p, &mut rng).unwrap().gain_power / mean).collect();
        let emp_mean = xs.iter().sum::<f64>() / n as f64;
        assert!((emp_mean - 1.0).abs() < 0.02);
        // One-sample KS against Exp(1); 1.628/sqrt(n) is the p = 0.01 critical value.
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut dmax: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let cdf = 1.0 - (-x).exp();
            dmax = dmax.max((cdf - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - cdf).abs());
        }
        assert!(dmax < 1.628 / (n as f64).sqrt(), "KS D = {dmax}");
    }

    #[test]
    fn rician_moments() {
        let mut p = fp();
        let d = 2000.0;
        let mut rng = stream(3, Stream::Channel);
        let n = 100_000;

        let mean_of = |p: &FadingParams, rng: &mut crate::rng::SimRng| {
            (0..n).map(|_| us_channel_gain(d, p, rng).unwrap().gain_power).sum::<f64>() / n as f64
        };

        let m7 = mean_of(&p, &mut rng);
        let oracle = 7.0 * d.powf(-2.0) / 8.0 + d.powf(-3.0) / 8.0;
        assert!((m7 / oracle - 1.0).abs() < 0.02);
        assert!((mean_us_gain(d, &p) / oracle - 1.0).abs() < 1e-12);

        p.rician_k = 0.0;
        let m0 = mean_of(&p, &mut rng);
        assert!((m0 / d.powf(-3.0) - 1.0).abs() < 0.02);

        p.rician_k = 1e12;
        let g = us_channel_gain(d, &p, &mut rng).unwrap().gain_power;
        assert!((g / d.powf(-2.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn rate_examples() {
        let lb = LinkBudget { bandwidth: 4e8, tx_power: 1.0, antenna_gain: 1.0, noise_psd: 1.0 / 4e8 };
        assert_eq!(rate_from_gain(&lb, 0.0), 0.0);
        assert!((rate_from_gain(&lb, 1.0) - 4e8).abs() < 1e-3);
        assert!((rate_from_gain(&lb, 3.0) - 8e8).abs() < 1e-3);
    }

    #[test]
    fn gains_finite_over_distance_range() {
        let p = fp();
        let b = Budgets::from_config(&Config::default());
        let mut rng = stream(4, Stream::Channel);
        for i in 0..=60 {
            let d = 10f64.powf(i as f64 / 10.0);
            let g = ag_channel_gain(d, &p, &mut rng).unwrap();
            let s = us_channel_gain(d, &p, &mut rng).unwrap();
            for (x, lb) in [(g, b.uav_bs), (s, b.uav_sat)] {
                assert!(x.gain_power.is_finite() && x.gain_power >= 0.0);
                let r = rate(&lb, &x);
                assert!(r.is_finite() && r >= 0.0);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn rate_monotone(p1 in 0.0f64..10.0, dp in 0.0f64..10.0, g1 in 0.0f64..1e-9, dg in 0.0f64..1e-9) {
            let mk = |p| LinkBudget { bandwidth: 4e8, tx_power: p, antenna_gain: 1.0, noise_psd: 4e-21 };
            let r0 = rate_from_gain(&mk(p1), g1);
            proptest::prop_assert!(rate_from_gain(&mk(p1 + dp), g1) >= r0);
            proptest::prop_assert!(rate_from_gain(&mk(p1), g1 + dg) >= r0);
        }
    }
}
