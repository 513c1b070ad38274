//! Comparison schemes: Andersen's Quadratic-Exponential step and a
//! full-truncation Euler step. Both report the integrated variance through
//! the trapezoidal (mid-point) rule and back out `Z` from the dynamics, and
//! both consume one Gaussian and one uniform per step so streams stay aligned
//! with the iVi scheme.

use crate::error::{Error, Result};
use crate::ivi::{phi1, CirParams, StepOutput};
use crate::rng::{PathRng, StepDraws};

/// Tuning of the QE step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QeConfig {
    pub psi_c: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Default for QeConfig {
    fn default() -> Self {
        Self {
            psi_c: 1.5,
            gamma1: 0.5,
            gamma2: 0.5,
        }
    }
}

impl QeConfig {
    pub fn new(psi_c: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&psi_c) {
            return Err(Error::invalid("psi_c", psi_c, "must lie in [1, 2]"));
        }
        if (gamma1 + gamma2 - 1.0).abs() > 1e-12 || gamma1 < 0.0 || gamma2 < 0.0 {
            return Err(Error::invalid(
                "gamma1",
                gamma1,
                "gamma1 and gamma2 must be non-negative and sum to 1",
            ));
        }
        Ok(Self {
            psi_c,
            gamma1,
            gamma2,
        })
    }
}

/// Exact conditional mean and variance of `V_{t+dt}` given `V_t = v`.
pub fn cir_conditional_moments(v: f64, p: &CirParams, dt: f64) -> (f64, f64) {
    let growth = (p.b * dt).exp();
    let f1 = phi1(p.b, dt);
    let mean = v * growth + p.a * f1;
    let var = p.c * p.c * (v * growth * f1 + 0.5 * p.a * f1 * f1);
    (mean, var)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct QeStep {
    dt: f64,
    a: f64,
    b: f64,
    c: f64,
    growth: f64,
    f1: f64,
    c2: f64,
    cfg: QeConfig,
}

impl QeStep {
    pub(crate) fn new(p: &CirParams, dt: f64, cfg: QeConfig) -> Self {
        Self {
            dt,
            a: p.a,
            b: p.b,
            c: p.c,
            growth: (p.b * dt).exp(),
            f1: phi1(p.b, dt),
            c2: p.c * p.c,
            cfg,
        }
    }

    #[inline]
    pub(crate) fn advance(&self, v: f64, draws: StepDraws) -> StepOutput {
        let m = v * self.growth + self.a * self.f1;
        let s2 = self.c2 * (v * self.growth * self.f1 + 0.5 * self.a * self.f1 * self.f1);
        let v_next = if m <= 0.0 {
            0.0
        } else if s2 == 0.0 {
            m
        } else {
            let psi = s2 / (m * m);
            if psi <= self.cfg.psi_c {
                let inv = 2.0 / psi;
                let bb2 = inv - 1.0 + inv.sqrt() * (inv - 1.0).sqrt();
                let scale = m / (1.0 + bb2);
                let x = bb2.sqrt() + draws.gaussian;
                scale * x * x
            } else {
                let prob_zero = (psi - 1.0) / (psi + 1.0);
                let beta = (1.0 - prob_zero) / m;
                if draws.uniform <= prob_zero {
                    0.0
                } else {
                    ((1.0 - prob_zero) / (1.0 - draws.uniform)).ln() / beta
                }
            }
        };
        let u_inc = self.dt * (self.cfg.gamma1 * v + self.cfg.gamma2 * v_next);
        let z_inc = if self.c == 0.0 {
            0.0
        } else {
            (v_next - v - self.a * self.dt - self.b * u_inc) / self.c
        };
        StepOutput {
            u_inc,
            z_inc,
            v_next,
        }
    }
}

fn check(v: f64, p: &CirParams, dt: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!(
            "variance must be finite and >= 0, got {v}"
        )));
    }
    p.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", dt, "must be finite and > 0"));
    }
    Ok(())
}

pub fn qe_step_with(
    v: f64,
    p: &CirParams,
    dt: f64,
    cfg: QeConfig,
    draws: StepDraws,
) -> Result<StepOutput> {
    check(v, p, dt)?;
    Ok(QeStep::new(p, dt, cfg).advance(v, draws))
}

pub fn qe_step(
    v: f64,
    p: &CirParams,
    dt: f64,
    cfg: QeConfig,
    rng: &mut PathRng,
) -> Result<StepOutput> {
    let draws = rng.step_draws();
    qe_step_with(v, p, dt, cfg, draws)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct EulerStep {
    dt: f64,
    sqrt_dt: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl EulerStep {
    pub(crate) fn new(p: &CirParams, dt: f64) -> Self {
        Self {
            dt,
            sqrt_dt: dt.sqrt(),
            a: p.a,
            b: p.b,
            c: p.c,
        }
    }

    /// `v` may be negative (the raw state of the previous step); only its
    /// positive part enters the coefficients. The uniform draw is unused.
    #[inline]
    pub(crate) fn advance(&self, v: f64, draws: StepDraws) -> StepOutput {
        let vp = v.max(0.0);
        let z_inc = vp.sqrt() * self.sqrt_dt * draws.gaussian;
        let v_next = v + (self.a + self.b * vp) * self.dt + self.c * z_inc;
        let u_inc = 0.5 * self.dt * (vp + v_next.max(0.0));
        StepOutput {
            u_inc,
            z_inc,
            v_next,
        }
    }
}

/// Full-truncation Euler step. Unlike the other schemes the exported
/// `v_next` can be negative.
pub fn euler_ft_step_with(v: f64, p: &CirParams, dt: f64, draws: StepDraws) -> Result<StepOutput> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("variance must be finite, got {v}")));
    }
    p.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", dt, "must be finite and > 0"));
    }
    Ok(EulerStep::new(p, dt).advance(v, draws))
}

pub fn euler_ft_step(v: f64, p: &CirParams, dt: f64, rng: &mut PathRng) -> Result<StepOutput> {
    let draws = rng.step_draws();
    euler_ft_step_with(v, p, dt, draws)
}
