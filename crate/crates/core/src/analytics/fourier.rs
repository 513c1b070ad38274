//! European option prices by Fourier inversion of the Heston transform.
//!
//! With `X = log(S_T / S_0)`, `M(u) = E[e^{u X}]` and `kappa = log(K / S_0)`,
//! for a contour `Re u = gamma` in `(0, 1)`:
//!
//! ```text
//! call = S_0 + 1/pi int_0^inf Re[ M(gamma + iz) K e^{-(gamma+iz) kappa}
//!                                 / ((gamma + iz)(gamma + iz - 1)) ] dz
//! put  = call - S_0 + K
//! ```
//!
//! `gamma` must stay in `(0, 1)` so that the contour is admissible for the
//! transform; `gamma = 1/2` is the default.

use num_complex::Complex64;

use super::riccati::{heston_log_cf, FrequencyPair};
use super::transforms::variance_swap;
use crate::error::{Error, Result};
use crate::heston::HestonParams;
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierConfig {
    /// Real part of the integration contour, in `(0, 1)`.
    pub damping: f64,
    pub tol: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-8,
        }
    }
}

pub fn fourier_price(
    kind: OptionKind,
    strike: f64,
    maturity: f64,
    p: &HestonParams,
    cfg: FourierConfig,
) -> Result<f64> {
    if !(strike > 0.0) || !strike.is_finite() {
        return Err(Error::invalid("strike", strike, "must be finite and > 0"));
    }
    if !(maturity > 0.0) || !maturity.is_finite() {
        return Err(Error::invalid("T", maturity, "must be finite and > 0"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::invalid("tol", cfg.tol, "must be > 0"));
    }
    let gamma = cfg.damping;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(
            "damping",
            gamma,
            "contour must satisfy 0 < Re u < 1",
        ));
    }
    p.validate()?;
    let s0 = p.s0;
    let kappa = (strike / s0).ln();
    let v0 = p.cir.v0;

    let failure: std::cell::RefCell<Option<Error>> = Default::default();
    let integrand = |z: f64| -> f64 {
        let u = Complex64::new(gamma, z);
        let f = FrequencyPair::new(u, Complex64::new(0.0, 0.0));
        match heston_log_cf(&f, maturity, v0, p) {
            Ok(lcf) => {
                let num = (lcf - u * kappa).exp() * strike;
                (num / (u * (u - 1.0))).re
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };

    // The integrand decays on the scale 1/sqrt(E[U_T]); integrate panels of
    // doubling width until a panel and the integrand at its end are negligible.
    let scale = 1.0 / variance_swap(maturity, &p.cir).max(1e-10).sqrt();
    let panel_tol = cfg.tol * std::f64::consts::PI;
    let mut lo = 0.0;
    let mut width = 4.0 * scale;
    let mut total = 0.0;
    let mut k = 0;
    loop {
        let hi = lo + width;
        let part = quad::integrate(integrand, lo, hi, panel_tol / 2f64.powi(k + 2), 2000)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total += part.value;
        let tail = integrand(hi).abs() * hi;
        if part.value.abs() < 0.1 * panel_tol && tail < 0.1 * panel_tol {
            break;
        }
        lo = hi;
        width *= 2.0;
        k += 1;
        if k > 40 {
            return Err(Error::Quadrature {
                estimate: total,
                error_estimate: tail,
            });
        }
    }
    let call = s0 + total / std::f64::consts::PI;
    Ok(match kind {
        OptionKind::Call => call.max(0.0),
        OptionKind::Put => (call - s0 + strike).max(0.0),
    })
}

/// Undiscounted European call `E[(S_T - K)^+]` at absolute tolerance `tol`.
pub fn fourier_call(strike: f64, maturity: f64, p: &HestonParams, tol: f64) -> Result<f64> {
    fourier_price(
        OptionKind::Call,
        strike,
        maturity,
        p,
        FourierConfig {
            tol,
            ..Default::default()
        },
    )
}

pub fn fourier_put(strike: f64, maturity: f64, p: &HestonParams, tol: f64) -> Result<f64> {
    fourier_price(
        OptionKind::Put,
        strike,
        maturity,
        p,
        FourierConfig {
            tol,
            ..Default::default()
        },
    )
}
