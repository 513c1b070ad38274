//! Closed-form solution of the Heston/CIR Riccati system
//!
//! ```text
//! phi'(t) = a psi(t),                                                phi(0) = 0
//! psi'(t) = c^2/2 psi^2 + (rho c u + b) psi + w + (u^2 - u)/2,        psi(0) = 0
//! ```
//!
//! giving `E[exp(u log(S_T/S_t) + w U_{t,T}) | V_t = v] = exp(phi(T-t) + psi(T-t) v)`.
//!
//! With `beta = -b - u rho c`, `D = sqrt(beta^2 + c^2 (u - u^2 - 2w))` and
//! `G = (beta - D)/(beta + D)`:
//!
//! ```text
//! psi(t) = (beta - D)/c^2 * (1 - e^{-Dt}) / (1 - G e^{-Dt})
//! phi(t) = a/c^2 * ((beta - D) t - 2 log((1 - G e^{-Dt}) / (1 - G)))
//! ```
//!
//! `(beta - D)/c^2` is evaluated as `k / (beta + D)` with `k = 2w - u + u^2`,
//! which stays accurate as `c -> 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heston::HestonParams;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Frequencies of the joint transform: `u` for the log-price, `w` for the
/// integrated variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPair {
    pub u: Complex64,
    pub w: Complex64,
}

impl FrequencyPair {
    pub fn new(u: Complex64, w: Complex64) -> Self {
        Self { u, w }
    }

    /// Integrated-variance transform only (`u = 0`).
    pub fn variance(w: Complex64) -> Self {
        Self {
            u: Complex64::new(0.0, 0.0),
            w,
        }
    }

    /// `Re w + ((Re u)^2 - Re u)/2 <= 0`.
    pub fn is_admissible(&self) -> bool {
        self.w.re + 0.5 * (self.u.re * self.u.re - self.u.re) <= 0.0
    }

    pub fn check(&self) -> Result<()> {
        if !self.u.is_finite() || !self.w.is_finite() || !self.is_admissible() {
            return Err(Error::Domain(format!(
                "frequencies (u = {}, w = {}) violate Re w + ((Re u)^2 - Re u)/2 <= 0",
                self.u, self.w
            )));
        }
        Ok(())
    }
}

/// `(phi(t), psi(t))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiValue {
    pub phi: Complex64,
    pub psi: Complex64,
}

/// `e^z - 1` without cancellation for small `|z|`.
pub(crate) fn cexpm1(z: Complex64) -> Complex64 {
    let half = 0.5 * z.im;
    let s = half.sin();
    Complex64::new(
        z.re.exp_m1() * z.im.cos() - 2.0 * s * s,
        z.re.exp() * z.im.sin(),
    )
}

/// `log(1 + z)`, principal branch, accurate for small `|z|`.
pub(crate) fn clog1p(z: Complex64) -> Complex64 {
    let x = z.re;
    let y = z.im;
    let re = 0.5 * (x * (2.0 + x) + y * y).ln_1p();
    let im = y.atan2(1.0 + x);
    Complex64::new(re, im)
}

/// Coefficients that do not depend on `t`.
#[derive(Clone, Copy, Debug)]
struct RiccatiCoefficients {
    a: f64,
    c2: f64,
    d: Complex64,
    // (beta - D)/c^2
    q: Complex64,
    // G / c^2
    g_over_c2: Complex64,
    g: Complex64,
    degenerate: Option<Complex64>,
}

impl RiccatiCoefficients {
    fn new(f: &FrequencyPair, p: &HestonParams) -> Self {
        let (a, b, c, rho) = (p.cir.a, p.cir.b, p.cir.c, p.rho);
        let c2 = c * c;
        let beta = Complex64::new(-b, 0.0) - f.u * (rho * c);
        let k = 2.0 * f.w - f.u + f.u * f.u;
        let mut d = (beta * beta - c2 * k).sqrt();
        if (beta + d).norm_sqr() < (beta - d).norm_sqr() {
            d = -d;
        }
        let denom = beta + d;
        if denom.norm_sqr() == 0.0 {
            // beta = D = 0: psi' = k/2 + c^2/2 psi^2 with c = 0.
            return Self {
                a,
                c2,
                d,
                q: Complex64::new(0.0, 0.0),
                g_over_c2: Complex64::new(0.0, 0.0),
                g: Complex64::new(0.0, 0.0),
                degenerate: Some(k),
            };
        }
        let q = k / denom;
        let g_over_c2 = q / denom;
        Self {
            a,
            c2,
            d,
            q,
            g_over_c2,
            g: g_over_c2 * c2,
            degenerate: None,
        }
    }

    /// `log((1 - G e^{-Dt}) / (1 - G)) / c^2`, continuous in `t`.
    fn log_term_over_c2(&self, t: f64) -> Result<Complex64> {
        let em = cexpm1(-self.d * t);
        // G (1 - e^{-Dt}) / (1 - G) is the first-order part; exact as c -> 0.
        let first = -self.g_over_c2 * em;
        let g = self.g;
        let ge_minus = g * em; // G (e^{-Dt} - 1)
        if ge_minus.norm() == 0.0 || self.c2 == 0.0 {
            return Ok(first / (ONE - g));
        }
        let log = if g.norm() < 1.0 {
            // 1 - G e^{-Dt} and 1 - G stay in the unit disc around 1 for
            // Re D >= 0, so the principal logs are continuous in t.
            clog1p(-(g + ge_minus)) - clog1p(-g)
        } else {
            self.unwrapped_log(t)?
        };
        Ok(log / self.c2)
    }

    /// Rotation-count evaluation: sums principal logs of ratios between
    /// successive points of a refinement of `[0, t]`, refining until every
    /// ratio stays within a quarter turn.
    fn unwrapped_log(&self, t: f64) -> Result<Complex64> {
        let ratio = |s: f64| (ONE - self.g * (-self.d * s).exp()) / (ONE - self.g);
        let mut m = 1 + (2.0 * self.d.im.abs() * t / std::f64::consts::PI).ceil() as usize;
        while m <= 1 << 16 {
            let mut prev = ONE;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut ok = true;
            for i in 1..=m {
                let cur = ratio(t * i as f64 / m as f64);
                let step = (cur / prev).ln();
                if step.im.abs() > std::f64::consts::FRAC_PI_2 {
                    ok = false;
                    break;
                }
                acc += step;
                prev = cur;
            }
            if ok {
                return Ok(acc);
            }
            m *= 4;
        }
        Err(Error::Numerical(
            "could not track the branch of the Riccati logarithm".into(),
        ))
    }

    fn evaluate(&self, t: f64) -> Result<RiccatiValue> {
        if let Some(k) = self.degenerate {
            return Ok(RiccatiValue {
                phi: self.a * k * (t * t / 4.0),
                psi: k * (t / 2.0),
            });
        }
        let e = (-self.d * t).exp();
        let ge = self.g * e;
        if (ge - ONE).norm() < 1e-14 {
            return Err(Error::Numerical(format!(
                "Riccati denominator 1 - G e^(-Dt) vanishes at t = {t}"
            )));
        }
        let em = cexpm1(-self.d * t);
        let psi = self.q * (-em) / (ONE - ge);
        let phi = self.a * (self.q * t - 2.0 * self.log_term_over_c2(t)?);
        if !psi.is_finite() || !phi.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite Riccati solution at t = {t}"
            )));
        }
        Ok(RiccatiValue { phi, psi })
    }
}

/// Closed-form `(phi(t), psi(t))` for admissible frequencies.
pub fn riccati_closed_form(f: &FrequencyPair, t: f64, p: &HestonParams) -> Result<RiccatiValue> {
    f.check()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", t, "must be finite and >= 0"));
    }
    p.validate()?;
    if t == 0.0 {
        return Ok(RiccatiValue {
            phi: Complex64::new(0.0, 0.0),
            psi: Complex64::new(0.0, 0.0),
        });
    }
    RiccatiCoefficients::new(f, p).evaluate(t)
}

/// `phi(t) + psi(t) v`, the log of the joint transform.
pub fn heston_log_cf(f: &FrequencyPair, t: f64, v: f64, p: &HestonParams) -> Result<Complex64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "variance must be finite and >= 0, got {v}"
        )));
    }
    let r = riccati_closed_form(f, t, p)?;
    Ok(r.phi + r.psi * v)
}

/// `E[exp(u log(S_T/S_t) + w U_{t,T}) | V_t = v]`.
pub fn heston_cf(f: &FrequencyPair, t: f64, v: f64, p: &HestonParams) -> Result<Complex64> {
    Ok(heston_log_cf(f, t, v, p)?.exp())
}
