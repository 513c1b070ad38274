//! Undiscounted Black-Scholes call price and its inverse.

use crate::error::{Error, Result};

fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check(strike: f64, maturity: f64, s0: f64) -> Result<()> {
    if !(strike > 0.0) {
        return Err(Error::invalid("strike", strike, "must be > 0"));
    }
    if !(maturity > 0.0) {
        return Err(Error::invalid("T", maturity, "must be > 0"));
    }
    if !(s0 > 0.0) {
        return Err(Error::invalid("s0", s0, "must be > 0"));
    }
    Ok(())
}

/// Call price with zero rates and volatility `vol`.
pub fn bs_price(vol: f64, strike: f64, maturity: f64, s0: f64) -> Result<f64> {
    check(strike, maturity, s0)?;
    if !(vol >= 0.0) {
        return Err(Error::invalid("vol", vol, "must be >= 0"));
    }
    let total = vol * maturity.sqrt();
    if total == 0.0 {
        return Ok((s0 - strike).max(0.0));
    }
    let d1 = (s0 / strike).ln() / total + 0.5 * total;
    let d2 = d1 - total;
    Ok(s0 * norm_cdf(d1) - strike * norm_cdf(d2))
}

/// `d price / d vol`.
pub fn bs_vega(vol: f64, strike: f64, maturity: f64, s0: f64) -> f64 {
    let total = vol * maturity.sqrt();
    let d1 = (s0 / strike).ln() / total + 0.5 * total;
    s0 * norm_pdf(d1) * maturity.sqrt()
}

/// Implied volatility by safeguarded Newton iteration inside a bisection
/// bracket, to `1e-10` in volatility.
pub fn bs_implied_vol(price: f64, strike: f64, maturity: f64, s0: f64) -> Result<f64> {
    check(strike, maturity, s0)?;
    let intrinsic = (s0 - strike).max(0.0);
    if !(price > intrinsic && price < s0) {
        return Err(Error::Domain(format!(
            "price {price} outside the invertible range ({intrinsic}, {s0})"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while bs_price(hi, strike, maturity, s0)? < price {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Numerical(format!(
                "implied volatility above 1e4 for price {price}"
            )));
        }
    }
    let mut vol = 0.5 * (lo + hi);
    for _ in 0..200 {
        let diff = bs_price(vol, strike, maturity, s0)? - price;
        if diff == 0.0 {
            break;
        }
        if diff > 0.0 {
            hi = vol;
        } else {
            lo = vol;
        }
        if hi - lo < 1e-12 {
            vol = 0.5 * (lo + hi);
            break;
        }
        let vg = bs_vega(vol, strike, maturity, s0);
        let newton = vol - diff / vg;
        if vg > 0.0 && newton > lo && newton < hi {
            let step = (newton - vol).abs();
            vol = newton;
            if step < 1e-13 {
                break;
            }
        } else {
            vol = 0.5 * (lo + hi);
        }
    }
    Ok(vol)
}
