//! Heston log-price layer on top of any variance scheme.
//!
//! Given a step's integrated variance `U` and Brownian integral `Z`, the
//! log-price moves by `-U/2 + rho Z + sqrt(1 - rho^2) sqrt(U) N` where `N` is
//! an independent standard Gaussian taken from the path's orthogonal
//! sub-stream.

use crate::error::{Error, Result};
use crate::ivi::{CirParams, CirPath, StepOutput, TimeGrid};
use crate::mc::{self, McEstimate};
use crate::rng::{PathRng, RngStream};
use crate::scheme::{VariancePlan, VarianceScheme};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HestonParams {
    pub cir: CirParams,
    pub rho: f64,
    pub s0: f64,
}

impl HestonParams {
    pub fn new(cir: CirParams, rho: f64, s0: f64) -> Result<Self> {
        let p = Self { cir, rho, s0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.cir.validate()?;
        check_rho(self.rho)?;
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            return Err(Error::invalid("s0", self.s0, "must be finite and > 0"));
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::invalid("rho", rho, "must lie in [-1, 1]"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HestonPath {
    pub cir: CirPath,
    pub log_s: Vec<f64>,
}

impl HestonPath {
    pub fn terminal_spot(&self) -> f64 {
        self.log_s.last().copied().unwrap_or(f64::NAN).exp()
    }
}

#[inline]
fn log_increment(step: &StepOutput, rho: f64, rho_perp: f64, normal: f64) -> f64 {
    -0.5 * step.u_inc + rho * step.z_inc + rho_perp * step.u_inc.sqrt() * normal
}

/// Advances the log-price by one step. Always consumes one orthogonal
/// Gaussian, including when `|rho| = 1`.
pub fn heston_step(log_s: f64, step: &StepOutput, rho: f64, rng: &mut PathRng) -> Result<f64> {
    check_rho(rho)?;
    if !(step.u_inc >= 0.0) {
        return Err(Error::Domain(format!(
            "integrated variance increment must be >= 0, got {}",
            step.u_inc
        )));
    }
    let normal = rng.orthogonal_gaussian();
    Ok(log_s + log_increment(step, rho, (1.0 - rho * rho).sqrt(), normal))
}

/// Simulates variance and log-price jointly with the selected scheme.
pub fn simulate_heston(
    p: &HestonParams,
    grid: &TimeGrid,
    scheme: VarianceScheme,
    stream: RngStream,
) -> Result<HestonPath> {
    p.validate()?;
    let plan = VariancePlan::new(scheme, &p.cir, grid)?;
    let mut rng = stream.open();
    let rho_perp = (1.0 - p.rho * p.rho).sqrt();
    let mut cir = CirPath::with_capacity(p.cir.v0, plan.len());
    let mut log_s = Vec::with_capacity(plan.len() + 1);
    log_s.push(p.s0.ln());
    let mut v = p.cir.v0;
    let mut x = p.s0.ln();
    for i in 0..plan.len() {
        let out = plan.advance(i, v, rng.step_draws());
        x += log_increment(&out, p.rho, rho_perp, rng.orthogonal_gaussian());
        v = out.v_next;
        cir.push(out);
        log_s.push(x);
    }
    Ok(HestonPath { cir, log_s })
}

/// Variance-only path for any scheme.
pub fn simulate_variance(
    p: &CirParams,
    grid: &TimeGrid,
    scheme: VarianceScheme,
    stream: RngStream,
) -> Result<CirPath> {
    let plan = VariancePlan::new(scheme, p, grid)?;
    let mut rng = stream.open();
    let mut path = CirPath::with_capacity(p.v0, plan.len());
    let mut v = p.v0;
    for i in 0..plan.len() {
        let out = plan.advance(i, v, rng.step_draws());
        v = out.v_next;
        path.push(out);
    }
    Ok(path)
}

/// Payoffs of the experiment set. European options are undiscounted (zero
/// rates).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Payoff {
    Call {
        strike: f64,
    },
    Put {
        strike: f64,
    },
    /// `U_{0,T}` (variance swap leg).
    IntegratedVariance,
    /// `sqrt(U_{0,T})` (volatility swap leg).
    SqrtIntegratedVariance,
    /// `exp(-q U_{0,T})`.
    Laplace {
        q: f64,
    },
    Constant(f64),
}

impl Payoff {
    #[inline]
    pub fn evaluate(&self, spot: f64, u_total: f64) -> f64 {
        match *self {
            Payoff::Call { strike } => (spot - strike).max(0.0),
            Payoff::Put { strike } => (strike - spot).max(0.0),
            Payoff::IntegratedVariance => u_total,
            Payoff::SqrtIntegratedVariance => u_total.max(0.0).sqrt(),
            Payoff::Laplace { q } => (-q * u_total).exp(),
            Payoff::Constant(c) => c,
        }
    }

    pub fn needs_price(&self) -> bool {
        matches!(self, Payoff::Call { .. } | Payoff::Put { .. })
    }
}

/// Mean and standard error of `payoff` over an in-memory batch of paths.
pub fn mc_price(payoff: &Payoff, paths: &[HestonPath]) -> Result<McEstimate> {
    mc::summarize(
        paths
            .iter()
            .map(|p| payoff.evaluate(p.terminal_spot(), p.cir.u_total)),
    )
}

/// End-of-path quantities collected by the streaming simulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSummary {
    pub u_total: f64,
    pub z_total: f64,
    pub v_final: f64,
    pub min_v: f64,
    /// `ln S_T`; equals `ln S_0` when the price layer is off.
    pub log_s: f64,
}

impl PathSummary {
    pub fn spot(&self) -> f64 {
        self.log_s.exp()
    }
}

/// Streaming path simulator: no per-path allocation, one stream per path.
#[derive(Clone, Debug)]
pub struct PathSimulator {
    plan: VariancePlan,
    rho: f64,
    rho_perp: f64,
    log_s0: f64,
    price_layer: bool,
}

impl PathSimulator {
    pub fn heston(p: &HestonParams, grid: &TimeGrid, scheme: VarianceScheme) -> Result<Self> {
        p.validate()?;
        Ok(Self {
            plan: VariancePlan::new(scheme, &p.cir, grid)?,
            rho: p.rho,
            rho_perp: (1.0 - p.rho * p.rho).sqrt(),
            log_s0: p.s0.ln(),
            price_layer: true,
        })
    }

    /// Variance-only simulator; the orthogonal sub-stream is never touched.
    pub fn variance(p: &CirParams, grid: &TimeGrid, scheme: VarianceScheme) -> Result<Self> {
        Ok(Self {
            plan: VariancePlan::new(scheme, p, grid)?,
            rho: 0.0,
            rho_perp: 1.0,
            log_s0: 0.0,
            price_layer: false,
        })
    }

    pub fn with_price_layer(mut self, on: bool) -> Self {
        self.price_layer = on;
        self
    }

    pub fn plan(&self) -> &VariancePlan {
        &self.plan
    }

    #[inline]
    pub fn run(&self, stream: RngStream) -> PathSummary {
        let mut rng = stream.open();
        let mut v = self.plan.v0();
        let mut min_v = v;
        let mut u_total = 0.0;
        let mut z_total = 0.0;
        let mut x = self.log_s0;
        for i in 0..self.plan.len() {
            let out = self.plan.advance(i, v, rng.step_draws());
            if self.price_layer {
                x += log_increment(&out, self.rho, self.rho_perp, rng.orthogonal_gaussian());
            }
            u_total += out.u_inc;
            z_total += out.z_inc;
            v = out.v_next;
            min_v = min_v.min(v);
        }
        PathSummary {
            u_total,
            z_total,
            v_final: v,
            min_v,
            log_s: x,
        }
    }

    /// Estimates arbitrary functionals of the path summary.
    pub fn estimate_with<F>(
        &self,
        n_paths: u64,
        seed: u64,
        n_out: usize,
        f: F,
    ) -> Result<Vec<McEstimate>>
    where
        F: Fn(&PathSummary, &mut [f64]) + Sync,
    {
        mc::estimate(n_paths, n_out, |id, out| {
            let s = self.run(RngStream::new(seed, id));
            f(&s, out);
        })
    }

    pub fn estimate(&self, payoffs: &[Payoff], n_paths: u64, seed: u64) -> Result<Vec<McEstimate>> {
        if !self.price_layer && payoffs.iter().any(Payoff::needs_price) {
            return Err(Error::Config(
                "price payoffs need the price layer enabled".into(),
            ));
        }
        self.estimate_with(n_paths, seed, payoffs.len(), |s, out| {
            let spot = s.spot();
            for (o, p) in out.iter_mut().zip(payoffs) {
                *o = p.evaluate(spot, s.u_total);
            }
        })
    }
}
