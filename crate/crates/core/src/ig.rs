//! Inverse Gaussian (Wald) distribution: sampler, density and characteristic
//! function.
//!
//! The sampler is the one-Gaussian/one-uniform transformation with acceptance
//! step of Michael, Schucany and Haas. `IG(0, 0)` is the point mass at zero.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Parameters of `IG(mu, lambda)`: mean `mu` and shape `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IgParams {
    mu: f64,
    lambda: f64,
}

impl IgParams {
    /// Validates `mu >= 0`, `lambda >= 0`, with `mu > 0` requiring `lambda > 0`.
    /// `lambda = +inf` is accepted and gives the point mass at `mu`.
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::invalid("mu", mu, "must be finite and >= 0"));
        }
        if !(lambda >= 0.0) {
            return Err(Error::invalid("lambda", lambda, "must be >= 0"));
        }
        if mu > 0.0 && lambda == 0.0 {
            return Err(Error::invalid("lambda", lambda, "must be > 0 when mu > 0"));
        }
        if mu == 0.0 && lambda != 0.0 {
            return Err(Error::invalid(
                "lambda",
                lambda,
                "mu = 0 is only allowed as the degenerate IG(0, 0)",
            ));
        }
        Ok(Self { mu, lambda })
    }

    /// The point mass at zero.
    pub const fn degenerate() -> Self {
        Self {
            mu: 0.0,
            lambda: 0.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_degenerate(&self) -> bool {
        self.mu == 0.0
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        if self.is_degenerate() {
            0.0
        } else {
            self.mu.powi(3) / self.lambda
        }
    }

    /// Maps one standard Gaussian and one uniform draw to an IG variate.
    #[inline]
    pub fn sample_with(&self, gaussian: f64, uniform: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        ig_from_draws(self.mu, self.mu / self.lambda, gaussian, uniform)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gaussian: f64 = rng.sample(StandardNormal);
        let uniform: f64 = rng.random();
        self.sample_with(gaussian, uniform)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_degenerate() || self.lambda.is_infinite() {
            return Err(Error::Domain(
                "density undefined for a degenerate inverse Gaussian".into(),
            ));
        }
        if !(x > 0.0) {
            return Err(Error::Domain(format!("density evaluated at x = {x} <= 0")));
        }
        Ok(pdf_unchecked(self.mu, self.lambda, x))
    }

    /// `E[exp(w X)]` for `Re(w) <= 0`.
    pub fn char_fn(&self, w: Complex64) -> Result<Complex64> {
        if w.re > 0.0 {
            return Err(Error::Domain(format!(
                "characteristic function needs Re(w) <= 0, got {w}"
            )));
        }
        if self.is_degenerate() {
            return Ok(Complex64::new(1.0, 0.0));
        }
        // (lambda/mu)(1 - sqrt(1 - z)) with z = 2 w mu^2 / lambda, written as
        // 2 w mu / (1 + sqrt(1 - z)) to avoid cancellation for small z.
        let z = 2.0 * w * (self.mu * self.mu / self.lambda);
        let root = (Complex64::new(1.0, 0.0) - z).sqrt();
        Ok((2.0 * w * self.mu / (1.0 + root)).exp())
    }
}

#[inline]
pub(crate) fn pdf_unchecked(mu: f64, lambda: f64, x: f64) -> f64 {
    let d = x - mu;
    (lambda / (2.0 * std::f64::consts::PI * x.powi(3))).sqrt()
        * (-lambda * d * d / (2.0 * mu * mu * x)).exp()
}

/// Core transformation with the dispersion `mu / lambda` passed directly, so
/// callers holding `(alpha, sigma)` never form `lambda = (alpha/sigma)^2`,
/// which can underflow or overflow.
///
/// The candidate `mu + mu^2 Y/(2 lambda) - (mu/(2 lambda)) sqrt(4 mu lambda Y
/// + mu^2 Y^2)` is evaluated as `mu / (1 + r + sqrt(r^2 + 2r))` with
/// `r = mu Y / (2 lambda)`, the same quantity without cancellation.
#[inline]
pub(crate) fn ig_from_draws(mu: f64, mu_over_lambda: f64, gaussian: f64, uniform: f64) -> f64 {
    let y = gaussian * gaussian;
    let r = 0.5 * mu_over_lambda * y;
    let candidate = if r.is_finite() {
        mu / (1.0 + r + (r * (r + 2.0)).sqrt())
    } else {
        0.0
    };
    if uniform * (mu + candidate) <= mu {
        candidate
    } else {
        mu * (mu / candidate)
    }
}

/// Samples `IG(p.mu, p.lambda)` from `rng`, consuming one Gaussian and one
/// uniform draw even for the degenerate law.
pub fn sample_ig<R: Rng + ?Sized>(p: &IgParams, rng: &mut R) -> f64 {
    p.sample(rng)
}

pub fn ig_pdf(p: &IgParams, x: f64) -> Result<f64> {
    p.pdf(x)
}

pub fn ig_char(p: &IgParams, w: Complex64) -> Result<Complex64> {
    p.char_fn(w)
}
