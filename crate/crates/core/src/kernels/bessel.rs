//! Modified Bessel function of the first kind, order zero.

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 15.0;
// ln(f64::MAX) ~ 709.78
const OVERFLOW_ARG: f64 = 713.0;

/// I0(z) for z >= 0. Power series up to 15, asymptotic expansion beyond.
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::InvalidInput(format!("bessel_i0 needs z >= 0, got {z}")));
    }
    if z <= SERIES_LIMIT {
        return Ok(series(z));
    }
    if z > OVERFLOW_ARG {
        return Err(Error::Overflow(format!("I0({z}) exceeds f64 range")));
    }
    // split e^z so that the product stays representable near the limit
    let v = asymptotic_scaled(z) * (0.5 * z).exp();
    let out = v * (0.5 * z).exp();
    if !out.is_finite() {
        return Err(Error::Overflow(format!("I0({z}) exceeds f64 range")));
    }
    Ok(out)
}

/// e^{-z} I0(z), finite for every z >= 0.
pub fn bessel_i0e(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z <= SERIES_LIMIT {
        series(z) * (-z).exp()
    } else {
        asymptotic_scaled(z)
    }
}

fn series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn asymptotic_scaled(z: f64) -> f64 {
    // sum_k ((2k-1)!!)^2 / (k! 8^k z^k), truncated at the smallest term
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let f = (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * z);
        if f >= 1.0 {
            break;
        }
        term *= f;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert!((bessel_i0(2.0).unwrap() - 2.279_585_302_336_067).abs() < 1e-14);
        assert!((bessel_i0(1.0).unwrap() - 1.266_065_877_752_008_4).abs() < 1e-14);
    }

    #[test]
    fn asymptotic_matches_series_past_switch() {
        for &z in &[15.0001, 16.0, 20.0, 30.0, 45.0] {
            let s = series(z);
            let a = asymptotic_scaled(z) * z.exp();
            assert!(((s - a) / s).abs() < 1e-12, "z = {z}: {s} vs {a}");
        }
    }

    #[test]
    fn scaled_is_consistent() {
        for &z in &[0.0, 0.5, 3.0, 14.9, 15.1, 100.0] {
            let e = bessel_i0e(z);
            let direct = bessel_i0(z).unwrap() * (-z).exp();
            assert!(((e - direct) / e).abs() < 1e-13);
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(bessel_i0(800.0), Err(Error::Overflow(_))));
        assert!(bessel_i0(700.0).unwrap().is_finite());
        assert!(bessel_i0(-1.0).is_err());
    }
}
