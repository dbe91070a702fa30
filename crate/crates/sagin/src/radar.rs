//! Waveform-level check of the beat-frequency range model: synthesize the
//! mixed chirp, take its FFT and pick the spectral peak.

use std::io::Write;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use sagin_core::perception::{estimate_distance, if_frequency_exact, synthesize_if, RadarConfig};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RadarCase {
    pub distance: f64,
    pub f_closed: f64,
    pub f_peak: f64,
    pub bin_width: f64,
    pub d_est: f64,
    pub freq_ok: bool,
    pub range_ok: bool,
}

/// Magnitude spectrum of the IF samples with frequency resolution `fs/N`.
pub fn spectrum(samples: &[(f64, f64)]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&(re, im)| Complex::new(re, im)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Frequency of the strongest non-negative bin.
pub fn peak_frequency(mag: &[f64], sample_rate: f64) -> f64 {
    let half = mag.len() / 2;
    let k = (0..half.max(1)).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap_or(0);
    k as f64 * sample_rate / mag.len() as f64
}

pub fn check_distance(distance: f64, rc: &RadarConfig) -> RadarCase {
    let samples = synthesize_if(distance, rc);
    let n = samples.len();
    let bin_width = rc.sample_rate / n as f64;
    let f_peak = peak_frequency(&spectrum(&samples), rc.sample_rate);
    let f_closed = if_frequency_exact(distance, rc);
    let d_est = estimate_distance(f_peak, rc);
    RadarCase {
        distance,
        f_closed,
        f_peak,
        bin_width,
        d_est,
        freq_ok: (f_peak - f_closed).abs() <= bin_width,
        range_ok: (d_est - distance).abs() <= rc.range_resolution(),
    }
}

/// Checks `count` distances drawn uniformly from `[lo, hi]`.
pub fn run_oracle<R: Rng + ?Sized>(rc: &RadarConfig, count: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<RadarCase> {
    (0..count).map(|_| check_distance(rng.random_range(lo..=hi), rc)).collect()
}

/// Writes the non-negative half of one spectrum as `freq_hz,magnitude`.
pub fn dump_spectrum(distance: f64, rc: &RadarConfig, out: &mut impl Write) -> std::io::Result<()> {
    let mag = spectrum(&synthesize_if(distance, rc));
    let df = rc.sample_rate / mag.len() as f64;
    writeln!(out, "freq_hz,magnitude")?;
    for (k, m) in mag.iter().take(mag.len() / 2).enumerate() {
        writeln!(out, "{},{}", k as f64 * df, m)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let fs = 1000.0;
        let n = 200;
        let f = 35.0;
        let s: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let p = 2.0 * std::f64::consts::PI * f * i as f64 / fs;
                (p.cos(), p.sin())
            })
            .collect();
        assert_eq!(peak_frequency(&spectrum(&s), fs), 35.0);
    }

    #[test]
    fn hundred_metres() {
        let c = check_distance(100.0, &RadarConfig::default());
        assert!(c.freq_ok && c.range_ok, "{c:?}");
        assert!((c.f_closed - 6.6667e7).abs() < 1e3);
    }
}
