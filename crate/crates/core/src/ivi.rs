//! The integrated-variance implicit (iVi) scheme for square-root diffusions
//!
//! ```text
//! dV = (a + b V) dt + c sqrt(V) dW
//! ```
//!
//! Each step samples the integrated variance `U` over the step first, as an
//! Inverse Gaussian first-passage time with mean `alpha` and shape
//! `(alpha / sigma)^2`, then recovers the Brownian integral `Z` and the next
//! variance algebraically.
//!
//! The next variance is evaluated through the equivalent form
//! `V' = (U + a phi2(-b, dt)) / phi1(-b, dt)`, which is a sum of two
//! non-negative terms, so `V' >= 0` holds exactly in floating point rather
//! than only up to rounding. It agrees with `V + a dt + b U + c Z` to
//! rounding error.

use crate::error::{Error, Result};
use crate::ig::ig_from_draws;
use crate::rng::{PathRng, RngStream, StepDraws};

const TAYLOR_CUTOFF: f64 = 1e-5;

/// `(e^{b t} - 1) / b`, extended by continuity to `t` at `b = 0`.
pub fn phi1(b: f64, t: f64) -> f64 {
    let x = b * t;
    if x.abs() < TAYLOR_CUTOFF {
        t * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0)))
    } else {
        x.exp_m1() / b
    }
}

/// `(phi1(b, t) - t) / b`, extended by continuity to `t^2 / 2` at `b = 0`.
/// Non-negative for every `b`.
pub fn phi2(b: f64, t: f64) -> f64 {
    let x = b * t;
    if x.abs() < TAYLOR_CUTOFF {
        t * t * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    } else {
        (x.exp_m1() - x) / (b * b)
    }
}

/// Square-root diffusion coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CirParams {
    pub v0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CirParams {
    pub fn new(v0: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { v0, a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0 >= 0.0) || !self.v0.is_finite() {
            return Err(Error::invalid("v0", self.v0, "must be finite and >= 0"));
        }
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::invalid("a", self.a, "must be finite and >= 0"));
        }
        if !self.b.is_finite() {
            return Err(Error::invalid("b", self.b, "must be finite"));
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("c", self.c, "must be finite"));
        }
        Ok(())
    }

    /// `a - c^2 / 2`; negative when the Feller condition fails.
    pub fn feller_gap(&self) -> f64 {
        self.a - 0.5 * self.c * self.c
    }
}

/// Partition `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    knots: Vec<f64>,
}

impl TimeGrid {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("a time grid needs at least two knots".into()));
        }
        if knots[0] != 0.0 {
            return Err(Error::Domain(format!(
                "time grid must start at 0, got {}",
                knots[0]
            )));
        }
        for w in knots.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::Domain(format!(
                    "time grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn uniform(maturity: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("number of steps must be >= 1".into()));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::invalid("T", maturity, "must be finite and > 0"));
        }
        let knots = (0..=steps)
            .map(|i| {
                if i == steps {
                    maturity
                } else {
                    maturity * i as f64 / steps as f64
                }
            })
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn maturity(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots.windows(2).map(|w| w[1] - w[0])
    }
}

/// Inverse Gaussian mean `alpha` and scale `sigma` of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients {
    pub alpha: f64,
    pub sigma: f64,
}

/// Increments produced by one variance step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput {
    pub u_inc: f64,
    pub z_inc: f64,
    pub v_next: f64,
}

/// A simulated variance path on a grid with `n` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct CirPath {
    pub v: Vec<f64>,
    pub u_incs: Vec<f64>,
    pub z_incs: Vec<f64>,
    pub u_total: f64,
}

impl CirPath {
    pub(crate) fn with_capacity(v0: f64, steps: usize) -> Self {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(v0);
        Self {
            v,
            u_incs: Vec::with_capacity(steps),
            z_incs: Vec::with_capacity(steps),
            u_total: 0.0,
        }
    }

    pub(crate) fn push(&mut self, out: StepOutput) {
        self.v.push(out.v_next);
        self.u_incs.push(out.u_inc);
        self.z_incs.push(out.z_inc);
        self.u_total += out.u_inc;
    }
}

pub fn step_coefficients(v: f64, p: &CirParams, dt: f64) -> Result<StepCoefficients> {
    check_step_inputs(v, p, dt)?;
    let f1 = phi1(p.b, dt);
    Ok(StepCoefficients {
        alpha: v * f1 + p.a * phi2(p.b, dt),
        sigma: p.c * f1,
    })
}

fn check_step_inputs(v: f64, p: &CirParams, dt: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "variance must be finite and >= 0, got {v}"
        )));
    }
    if !(p.a >= 0.0) {
        return Err(Error::invalid("a", p.a, "must be >= 0"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", dt, "must be finite and > 0"));
    }
    Ok(())
}

/// Per-step constants of the iVi scheme; depend on the step length only.
#[derive(Clone, Copy, Debug)]
pub(crate) struct IviStep {
    phi1: f64,
    a_phi2: f64,
    sigma: f64,
    // V' = slope * U + intercept
    slope: f64,
    intercept: f64,
}

impl IviStep {
    pub(crate) fn new(p: &CirParams, dt: f64) -> Self {
        let (b, a) = (p.b, p.a);
        let f1 = phi1(b, dt);
        let x = b * dt;
        // slope = 1 / phi1(-b, dt)
        let slope = if x.abs() < TAYLOR_CUTOFF {
            1.0 / phi1(-b, dt)
        } else {
            -b / (-x).exp_m1()
        };
        // intercept = a phi2(-b, dt) / phi1(-b, dt) = a (dt * slope - 1) / b
        let intercept = if a == 0.0 {
            0.0
        } else if x.abs() < 1.0 {
            a * phi2(-b, dt) / phi1(-b, dt)
        } else {
            a * (dt * slope - 1.0) / b
        };
        Self {
            phi1: f1,
            a_phi2: a * phi2(b, dt),
            sigma: p.c * f1,
            slope,
            intercept,
        }
    }

    #[inline]
    pub(crate) fn coefficients(&self, v: f64) -> StepCoefficients {
        StepCoefficients {
            alpha: v * self.phi1 + self.a_phi2,
            sigma: self.sigma,
        }
    }

    #[inline]
    pub(crate) fn advance(&self, v: f64, draws: StepDraws) -> StepOutput {
        let alpha = v * self.phi1 + self.a_phi2;
        let u_inc = if alpha == 0.0 {
            0.0
        } else if self.sigma == 0.0 {
            alpha
        } else {
            ig_from_draws(
                alpha,
                self.sigma * self.sigma / alpha,
                draws.gaussian,
                draws.uniform,
            )
        };
        let z_inc = if alpha == 0.0 || self.sigma == 0.0 {
            0.0
        } else {
            (u_inc - alpha) / self.sigma
        };
        StepOutput {
            u_inc,
            z_inc,
            v_next: self.slope * u_inc + self.intercept,
        }
    }
}

/// One iVi step from `v` using the supplied draws.
pub fn ivi_step_with(v: f64, p: &CirParams, dt: f64, draws: StepDraws) -> Result<StepOutput> {
    check_step_inputs(v, p, dt)?;
    Ok(IviStep::new(p, dt).advance(v, draws))
}

/// One iVi step from `v`, consuming one Gaussian and one uniform from `rng`.
pub fn ivi_step(v: f64, p: &CirParams, dt: f64, rng: &mut PathRng) -> Result<StepOutput> {
    let draws = rng.step_draws();
    ivi_step_with(v, p, dt, draws)
}

/// Per-step constants of the simplified scheme without variation of constants.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SimpleStep {
    dt: f64,
    a_half_dt2: f64,
    sigma: f64,
    shrink: f64,
    half_a_dt: f64,
}

impl SimpleStep {
    pub(crate) fn new(p: &CirParams, dt: f64) -> Result<Self> {
        let shrink = 1.0 - p.b * dt;
        if !(shrink > 0.0) {
            return Err(Error::Precondition(format!(
                "simplified scheme needs 1 - b dt > 0, got {shrink}"
            )));
        }
        Ok(Self {
            dt,
            a_half_dt2: 0.5 * p.a * dt * dt,
            sigma: p.c * dt,
            shrink,
            half_a_dt: 0.5 * p.a * dt,
        })
    }

    #[inline]
    pub(crate) fn advance(&self, v: f64, draws: StepDraws) -> StepOutput {
        let alpha = v * self.dt + self.a_half_dt2;
        let mean = alpha / self.shrink;
        let u_inc = if alpha == 0.0 {
            0.0
        } else if self.sigma == 0.0 {
            mean
        } else {
            // mu / lambda = (alpha / shrink) * sigma^2 / alpha^2
            let dispersion = self.sigma * self.sigma / (alpha * self.shrink);
            ig_from_draws(mean, dispersion, draws.gaussian, draws.uniform)
        };
        let z_inc = if alpha == 0.0 || self.sigma == 0.0 {
            0.0
        } else {
            (self.shrink * u_inc - alpha) / self.sigma
        };
        // v + a dt + b U + c Z collapses to U / dt + a dt / 2.
        StepOutput {
            u_inc,
            z_inc,
            v_next: u_inc / self.dt + self.half_a_dt,
        }
    }
}

pub fn ivi_simple_step_with(
    v: f64,
    p: &CirParams,
    dt: f64,
    draws: StepDraws,
) -> Result<StepOutput> {
    check_step_inputs(v, p, dt)?;
    Ok(SimpleStep::new(p, dt)?.advance(v, draws))
}

/// One step of the simplified scheme; requires `1 - b dt > 0`.
pub fn ivi_simple_step(v: f64, p: &CirParams, dt: f64, rng: &mut PathRng) -> Result<StepOutput> {
    let draws = rng.step_draws();
    ivi_simple_step_with(v, p, dt, draws)
}

/// Runs the iVi scheme over `grid`.
pub fn simulate_cir_path(p: &CirParams, grid: &TimeGrid, stream: RngStream) -> Result<CirPath> {
    p.validate()?;
    let steps: Vec<IviStep> = grid.increments().map(|dt| IviStep::new(p, dt)).collect();
    let mut rng = stream.open();
    let mut path = CirPath::with_capacity(p.v0, steps.len());
    let mut v = p.v0;
    for s in &steps {
        let out = s.advance(v, rng.step_draws());
        v = out.v_next;
        path.push(out);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case2() -> CirParams {
        CirParams::new(0.023, 2.15 * 0.057, -2.15, 0.86).unwrap()
    }

    fn three_term(v: f64, p: &CirParams, dt: f64, out: &StepOutput) -> f64 {
        v + p.a * dt + p.b * out.u_inc + p.c * out.z_inc
    }

    #[test]
    fn phi_conventions_at_zero_b() {
        assert_eq!(phi1(0.0, 0.5), 0.5);
        assert_eq!(phi2(0.0, 2.0), 2.0);
    }

    #[test]
    fn phi_reference_values() {
        // direct evaluations of (1 - e^{-0.5})/0.5, (1 - e^{-17.25})/17.25, and
        // ((1 - e^{-2.15})/2.15 - 1)/(-2.15)
        assert!((phi1(-0.5, 1.0) - 0.786_938_680_574_733).abs() < 1e-14);
        assert!((phi1(-17.25, 1.0) - 0.057_971_012_623_659_86).abs() < 1e-15);
        assert!((phi1(-2.15, 1.0) - 0.410_937_601_035_582_8).abs() < 1e-15);
        assert!((phi2(-2.15, 1.0) - 0.273_982_511_146_240_56).abs() < 1e-15);
    }

    #[test]
    fn phi_continuous_through_cutoff() {
        for &t in &[0.1f64, 1.0, 3.0] {
            for &x in &[0.999e-5f64, 1.001e-5, -0.999e-5, -1.001e-5] {
                let b = x / t;
                let exact1 = (b * t).exp_m1() / b;
                let exact2 = t * t * (0.5 + x / 6.0 + x * x / 24.0);
                assert!((phi1(b, t) - exact1).abs() < 1e-15 * t.max(1.0));
                assert!((phi2(b, t) - exact2).abs() / exact2 < 1e-9);
            }
        }
    }

    #[test]
    fn step_coefficients_case2() {
        let p = case2();
        let sc = step_coefficients(0.023, &p, 1.0).unwrap();
        let f1 = phi1(-2.15, 1.0);
        let f2 = phi2(-2.15, 1.0);
        assert!((sc.alpha - (0.023 * f1 + 0.12255 * f2)).abs() < 1e-15);
        assert!((sc.sigma - 0.86 * f1).abs() < 1e-15);
        assert!((sc.alpha - 0.043_028_121_564_790_19).abs() < 1e-15);
        assert!((sc.sigma - 0.353_406_336_890_601_2).abs() < 1e-15);
    }

    #[test]
    fn step_coefficients_zero_b_and_absorbing() {
        let p = CirParams::new(0.3, 0.2, 0.0, 0.5).unwrap();
        let sc = step_coefficients(0.3, &p, 0.25).unwrap();
        assert!((sc.alpha - (0.3 * 0.25 + 0.2 * 0.25 * 0.25 / 2.0)).abs() < 1e-16);
        assert_eq!(sc.sigma, 0.5 * 0.25);
        let p0 = CirParams::new(0.0, 0.0, -3.0, 1.2).unwrap();
        assert_eq!(step_coefficients(0.0, &p0, 0.5).unwrap().alpha, 0.0);
    }

    #[test]
    fn step_coefficients_domain_errors() {
        let p = case2();
        assert!(step_coefficients(-1e-3, &p, 1.0).is_err());
        assert!(step_coefficients(0.1, &p, 0.0).is_err());
        let bad = CirParams { a: -0.1, ..p };
        assert!(step_coefficients(0.1, &bad, 1.0).is_err());
        assert!(CirParams::new(0.1, -0.1, 0.0, 1.0).is_err());
        assert!(CirParams::new(-0.1, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_is_absorbing_without_drift() {
        let p = CirParams::new(0.0, 0.0, -1.0, 0.8).unwrap();
        let draws = StepDraws {
            gaussian: 1.3,
            uniform: 0.7,
        };
        let out = ivi_step_with(0.0, &p, 0.1, draws).unwrap();
        assert_eq!(
            out,
            StepOutput {
                u_inc: 0.0,
                z_inc: 0.0,
                v_next: 0.0
            }
        );
        let out = ivi_simple_step_with(0.0, &p, 0.1, draws).unwrap();
        assert_eq!(
            out,
            StepOutput {
                u_inc: 0.0,
                z_inc: 0.0,
                v_next: 0.0
            }
        );
    }

    #[test]
    fn zero_vol_of_vol_is_deterministic() {
        let p = CirParams::new(0.04, 0.02, -0.5, 0.0).unwrap();
        let dt = 0.7;
        let out = ivi_step_with(
            0.04,
            &p,
            dt,
            StepDraws {
                gaussian: 2.0,
                uniform: 0.9,
            },
        )
        .unwrap();
        let sc = step_coefficients(0.04, &p, dt).unwrap();
        assert_eq!(out.u_inc, sc.alpha);
        assert_eq!(out.z_inc, 0.0);
        let exact = 0.04 * (-0.5 * dt).exp() + 0.02 * phi1(-0.5, dt);
        assert!((out.v_next - exact).abs() < 1e-15);
    }

    #[test]
    fn a_zero_path_stays_at_zero_after_hitting() {
        let p = CirParams::new(0.02, 0.0, 0.5, 3.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 400).unwrap();
        let mut found = false;
        for id in 0..200 {
            let path = simulate_cir_path(&p, &grid, RngStream::new(11, id)).unwrap();
            if let Some(k) = path.v.iter().position(|&v| v == 0.0) {
                found = true;
                assert!(path.v[k..].iter().all(|&v| v == 0.0));
                assert!(path.u_incs[k..].iter().all(|&u| u == 0.0));
            }
        }
        assert!(found, "no path was absorbed");
    }

    #[test]
    fn simple_scheme_precondition() {
        let p = CirParams::new(0.1, 0.1, 2.0, 0.5).unwrap();
        let d = StepDraws {
            gaussian: 0.1,
            uniform: 0.1,
        };
        assert!(matches!(
            ivi_simple_step_with(0.1, &p, 0.6, d),
            Err(Error::Precondition(_))
        ));
        assert!(ivi_simple_step_with(0.1, &p, 0.4, d).is_ok());
    }

    #[test]
    fn simple_scheme_coincides_at_zero_b() {
        let p = CirParams::new(0.05, 0.3, 0.0, 0.7).unwrap();
        for k in 0..50 {
            let d = StepDraws {
                gaussian: -2.0 + 0.08 * k as f64,
                uniform: (k as f64 * 0.618).fract(),
            };
            let a = ivi_step_with(0.05, &p, 0.3, d).unwrap();
            let s = ivi_simple_step_with(0.05, &p, 0.3, d).unwrap();
            assert!((a.u_inc - s.u_inc).abs() < 1e-15);
            assert!((a.z_inc - s.z_inc).abs() < 1e-13);
            assert!((a.v_next - s.v_next).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        let g = TimeGrid::uniform(1.0, 3).unwrap();
        assert_eq!(g.steps(), 3);
        assert_eq!(g.maturity(), 1.0);
    }

    #[test]
    fn path_is_deterministic_and_accumulates() {
        let p = case2();
        let grid = TimeGrid::new(vec![0.0, 0.1, 0.35, 0.5, 1.0]).unwrap();
        let s = RngStream::new(123, 45);
        let a = simulate_cir_path(&p, &grid, s).unwrap();
        let b = simulate_cir_path(&p, &grid, s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.v[0], p.v0);
        assert_eq!(a.v.len(), 5);
        assert_eq!(a.u_total, a.u_incs.iter().sum::<f64>());
    }

    #[test]
    fn continuity_in_b_near_zero() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let base = CirParams::new(0.04, 0.03, 0.0, 0.6).unwrap();
        let p0 = simulate_cir_path(&base, &grid, RngStream::new(5, 5)).unwrap();
        for b in [1e-8, -1e-8] {
            let pb =
                simulate_cir_path(&CirParams { b, ..base }, &grid, RngStream::new(5, 5)).unwrap();
            for (x, y) in p0.v.iter().zip(&pb.v) {
                assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12), "{x} vs {y}");
            }
            assert!((p0.u_total - pb.u_total).abs() <= 1e-6 * p0.u_total);
        }
    }

    proptest! {
        #[test]
        fn phi2_nonnegative(b in -50.0f64..50.0, t in 1e-6f64..10.0) {
            prop_assert!(phi2(b, t) >= 0.0);
            prop_assert!(phi1(b, t) > 0.0);
        }

        #[test]
        fn update_identity_matches_three_term_form(
            v in 0.0f64..1.0, a in 0.0f64..1.0, b in -20.0f64..5.0, c in -3.0f64..3.0,
            dt in 0.001f64..2.0, g in -4.0f64..4.0, eta in 0.0f64..1.0
        ) {
            prop_assume!(c.abs() > 1e-3);
            let p = CirParams::new(v, a, b, c).unwrap();
            let out = ivi_step_with(v, &p, dt, StepDraws { gaussian: g, uniform: eta }).unwrap();
            let direct = three_term(v, &p, dt, &out);
            let scale = v + a * dt + (b * out.u_inc).abs() + (c * out.z_inc).abs();
            prop_assert!((out.v_next - direct).abs() <= 1e-12 * scale.max(1e-300),
                "{} vs {}", out.v_next, direct);
            prop_assert!(out.v_next >= 0.0);
            prop_assert!(out.u_inc >= 0.0);
        }

        #[test]
        fn simple_update_matches_three_term_form(
            v in 0.0f64..1.0, a in 0.0f64..1.0, b in -20.0f64..0.0, c in 0.01f64..3.0,
            dt in 0.001f64..2.0, g in -4.0f64..4.0, eta in 0.0f64..1.0
        ) {
            let p = CirParams::new(v, a, b, c).unwrap();
            let out = ivi_simple_step_with(v, &p, dt, StepDraws { gaussian: g, uniform: eta }).unwrap();
            let direct = three_term(v, &p, dt, &out);
            let scale = v + a * dt + (b * out.u_inc).abs() + (c * out.z_inc).abs();
            prop_assert!((out.v_next - direct).abs() <= 1e-12 * scale.max(1e-300));
            prop_assert!(out.v_next >= 0.0);
        }

        #[test]
        fn coefficients_nonnegative(
            v in 0.0f64..5.0, a in 0.0f64..5.0, b in -50.0f64..50.0, c in -5.0f64..5.0, dt in 1e-4f64..5.0
        ) {
            let p = CirParams::new(v, a, b, c).unwrap();
            let sc = step_coefficients(v, &p, dt).unwrap();
            prop_assert!(sc.alpha >= 0.0);
            prop_assert!(sc.sigma == 0.0 || sc.sigma.signum() == c.signum());
        }
    }
}
