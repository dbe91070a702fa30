//! Float helpers backed by `libm` so results are bit-identical across targets.

pub use core::f64::consts::{PI, TAU};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = libm::fmod(a, TAU);
    let w = if r < 0.0 { r + TAU } else { r };
    if w >= TAU {
        0.0
    } else {
        w
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    powf(10.0, db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    powf(10.0, (dbm - 30.0) / 10.0)
}

/// Converts a non-negative real amount of bits to whole bits, rounding down.
#[inline]
pub fn bits_floor(x: f64) -> u64 {
    if x.is_finite() && x > 0.0 {
        floor(x) as u64
    } else if x == f64::INFINITY {
        u64::MAX
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(1.6) - 1.445e-3).abs() < 1e-6);
        assert!((dbm_to_watts(5.0) - 3.162e-3).abs() < 1e-6);
        assert!((db_to_linear(43.3) - 21379.6).abs() < 1.0);
    }

    #[test]
    fn wrap_angle_range() {
        for a in [-7.0, -0.1, 0.0, 1.0, 6.5, 100.0] {
            let w = wrap_angle(a);
            assert!((0.0..TAU).contains(&w), "{a} -> {w}");
        }
    }

    #[test]
    fn bits_floor_edges() {
        assert_eq!(bits_floor(-3.0), 0);
        assert_eq!(bits_floor(f64::NAN), 0);
        assert_eq!(bits_floor(2.9), 2);
        assert_eq!(bits_floor(f64::INFINITY), u64::MAX);
    }
}
