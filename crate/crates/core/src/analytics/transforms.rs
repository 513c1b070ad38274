//! Transforms of the integrated variance: exact moments, Laplace transform,
//! the volatility swap, and the iVi one-step characteristic function.

use num_complex::Complex64;

use super::riccati::{heston_log_cf, FrequencyPair};
use crate::error::{Error, Result};
use crate::heston::HestonParams;
use crate::ivi::{phi1, phi2, CirParams};
use crate::quad;

/// `(phi_hat, psi_hat)` with `E[exp(w U_hat) | V_hat_i = v] = exp(phi_hat + psi_hat v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneStepCharCoefficients {
    pub phi_hat: Complex64,
    pub psi_hat: Complex64,
}

impl OneStepCharCoefficients {
    pub fn char_fn(&self, v: f64) -> Complex64 {
        (self.phi_hat + self.psi_hat * v).exp()
    }
}

/// One-step coefficients of the iVi scheme. The returned values do not
/// depend on `v`; it is validated only.
///
/// `psi_hat = (1 - sqrt(1 - 2 w sigma^2)) / (c sigma)` is evaluated as
/// `2 w phi1 / (1 + sqrt(1 - 2 w sigma^2))`, its cancellation-free form, and
/// `phi_hat = (a c / sigma) phi2 psi_hat = a phi2 / phi1 * psi_hat`.
pub fn one_step_char(
    v: f64,
    w: Complex64,
    p: &CirParams,
    dt: f64,
) -> Result<OneStepCharCoefficients> {
    if w.re > 0.0 || !w.is_finite() {
        return Err(Error::Domain(format!(
            "one-step transform needs Re(w) <= 0, got {w}"
        )));
    }
    if p.c == 0.0 {
        return Err(Error::invalid("c", p.c, "one-step transform needs c != 0"));
    }
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("variance must be >= 0, got {v}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", dt, "must be > 0"));
    }
    let f1 = phi1(p.b, dt);
    let sigma = p.c * f1;
    let root = (Complex64::new(1.0, 0.0) - 2.0 * w * sigma * sigma).sqrt();
    let psi_hat = 2.0 * w * f1 / (1.0 + root);
    let phi_hat = p.a * phi2(p.b, dt) / f1 * psi_hat;
    Ok(OneStepCharCoefficients { phi_hat, psi_hat })
}

/// `E[U_{0,T}] = V0 phi1(b, T) + a phi2(b, T)`.
pub fn variance_swap(maturity: f64, p: &CirParams) -> f64 {
    p.v0 * phi1(p.b, maturity) + p.a * phi2(p.b, maturity)
}

fn variance_only(p: &CirParams) -> HestonParams {
    // rho and S0 are irrelevant when u = 0
    HestonParams {
        cir: *p,
        rho: 0.0,
        s0: 1.0,
    }
}

/// `log E[exp(-q U_{0,T}) | V_0 = v]`.
pub fn log_laplace_u(maturity: f64, q: f64, v: f64, p: &CirParams) -> Result<f64> {
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::invalid("q", q, "must be finite and >= 0"));
    }
    let f = FrequencyPair::variance(Complex64::new(-q, 0.0));
    Ok(heston_log_cf(&f, maturity, v, &variance_only(p))?.re)
}

/// `E[exp(-q U_{0,T}) | V_0 = v]`.
pub fn laplace_u(maturity: f64, q: f64, v: f64, p: &CirParams) -> Result<f64> {
    Ok(log_laplace_u(maturity, q, v, p)?.exp())
}

/// `E[sqrt(U_{0,T})]` from
///
/// ```text
/// E[sqrt(U)] = 1/(2 sqrt(pi)) int_0^inf (1 - E[e^{-s U}]) / s^{3/2} ds
///            = 1/sqrt(pi)     int_0^inf (1 - L(x^2)) / x^2 dx        (s = x^2)
/// ```
///
/// The integral is cut at `X`, where the remainder equals
/// `1/X - int_X^inf L(x^2)/x^2 dx`. The `1/X` part is added exactly and the
/// second part is bounded by `L(X^2)/X` because `L` is decreasing; `X` grows
/// until that bound is below `tol/2`.
pub fn volatility_swap(maturity: f64, p: &CirParams, tol: f64) -> Result<f64> {
    if !(maturity > 0.0) {
        return Err(Error::invalid("T", maturity, "must be > 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", tol, "must be > 0"));
    }
    let mean = variance_swap(maturity, p);
    if mean == 0.0 {
        return Ok(0.0);
    }
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let log_l = |x: f64| log_laplace_u(maturity, x * x, p.v0, p);

    let mut cut = 4.0 / mean.sqrt();
    loop {
        let bound = inv_sqrt_pi * log_l(cut)?.exp() / cut;
        if bound < 0.5 * tol {
            break;
        }
        cut *= 2.0;
        if cut > 1e12 {
            return Err(Error::Quadrature {
                estimate: f64::NAN,
                error_estimate: bound,
            });
        }
    }

    let mut failure = None;
    let integrand = |x: f64| {
        if x == 0.0 {
            return mean;
        }
        match log_l(x) {
            Ok(l) => -l.exp_m1() / (x * x),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    // Split at the natural scale so the adaptive rule sees the bulk early.
    let knee = (1.0 / mean.sqrt()).min(cut);
    let head = quad::integrate(integrand, 0.0, knee, 0.25 * tol / inv_sqrt_pi, 4000);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let head = head?;
    let mut failure = None;
    let integrand = |x: f64| match log_l(x) {
        Ok(l) => -l.exp_m1() / (x * x),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let body = quad::integrate(integrand, knee, cut, 0.25 * tol / inv_sqrt_pi, 4000);
    if let Some(e) = failure {
        return Err(e);
    }
    let body = body?;
    Ok(inv_sqrt_pi * (head.value + body.value + 1.0 / cut))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: u32) -> CirParams {
        match id {
            1 => CirParams::new(0.006, 17.25 * 0.018, -17.25, 2.95).unwrap(),
            2 => CirParams::new(0.023, 2.15 * 0.057, -2.15, 0.86).unwrap(),
            _ => CirParams::new(0.04, 0.5 * 0.04, -0.5, 1.0).unwrap(),
        }
    }

    #[test]
    fn variance_swap_values() {
        let p = CirParams::new(0.1, 0.3, 0.0, 0.5).unwrap();
        assert!((variance_swap(2.0, &p) - (0.1 * 2.0 + 0.3 * 2.0)).abs() < 1e-15);
        assert!((variance_swap(1.0, &case(3)) - 0.04).abs() < 1e-16);
        assert!((variance_swap(1.0, &case(1)) - 0.017_304_347_848_516_08).abs() < 1e-16);
        assert!((variance_swap(1.0, &case(2)) - 0.043_028_121_564_790_19).abs() < 1e-16);
    }

    #[test]
    fn one_step_trivial_at_zero() {
        let c = one_step_char(0.02, Complex64::new(0.0, 0.0), &case(2), 1.0).unwrap();
        assert_eq!(c.psi_hat, Complex64::new(0.0, 0.0));
        assert_eq!(c.phi_hat, Complex64::new(0.0, 0.0));
        assert_eq!(c.char_fn(0.02), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn one_step_errors() {
        assert!(one_step_char(0.02, Complex64::new(0.1, 0.0), &case(2), 1.0).is_err());
        let p = CirParams { c: 0.0, ..case(2) };
        assert!(one_step_char(0.02, Complex64::new(-1.0, 0.0), &p, 1.0).is_err());
    }

    #[test]
    fn one_step_matches_literal_formula() {
        let p = case(2);
        let dt = 0.7;
        let w = Complex64::new(-1.3, 2.0);
        let sigma = p.c * phi1(p.b, dt);
        let one = Complex64::new(1.0, 0.0);
        let lit_psi = (one - (one - 2.0 * w * sigma * sigma).sqrt()) / (p.c * sigma);
        let lit_phi = p.a * p.c / (sigma * p.b) * (phi1(p.b, dt) - dt) * lit_psi;
        let got = one_step_char(0.0, w, &p, dt).unwrap();
        assert!((got.psi_hat - lit_psi).norm() < 1e-13);
        assert!((got.phi_hat - lit_phi).norm() < 1e-13);
    }

    #[test]
    fn one_step_equals_ig_transform() {
        // U_hat ~ IG(alpha, (alpha/sigma)^2) so the one-step transform is the
        // IG characteristic function.
        let p = case(1);
        let (v, dt) = (0.01, 0.25);
        let w = Complex64::new(-2.0, 0.5);
        let sc = crate::ivi::step_coefficients(v, &p, dt).unwrap();
        let ig = crate::ig::IgParams::new(sc.alpha, (sc.alpha / sc.sigma).powi(2)).unwrap();
        let want = ig.char_fn(w).unwrap();
        let got = one_step_char(v, w, &p, dt).unwrap().char_fn(v);
        assert!((got - want).norm() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn laplace_small_q_expansion() {
        for id in 1..=3 {
            let p = case(id);
            let h = 1e-6;
            let l = laplace_u(1.0, h, p.v0, &p).unwrap();
            let slope = (1.0 - l) / h;
            let vs = variance_swap(1.0, &p);
            assert!((slope - vs).abs() / vs < 1e-4, "case {id}: {slope} vs {vs}");
            assert!((laplace_u(1.0, 1e-14, p.v0, &p).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn vol_swap_deterministic_limit() {
        let p = CirParams::new(0.04, 0.02, -0.5, 0.0).unwrap();
        let got = volatility_swap(1.0, &p, 1e-10).unwrap();
        let want = variance_swap(1.0, &p).sqrt();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn vol_swap_jensen() {
        for id in 1..=3 {
            let p = case(id);
            let vol = volatility_swap(1.0, &p, 1e-9).unwrap();
            let var = variance_swap(1.0, &p);
            assert!(vol < var.sqrt(), "case {id}: {vol} vs {}", var.sqrt());
            assert!(vol > 0.0);
        }
    }
}
