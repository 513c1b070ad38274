use std::time::Instant;

use super::config::{ExperimentConfig, Quantity};
use super::record::{Flag, ResultRecord};
use crate::analytics::{
    bs_implied_vol, bs_vega, fourier_call, laplace_u, variance_swap, volatility_swap,
};
use crate::error::{Error, Result};
use crate::heston::{HestonParams, PathSimulator};
use crate::ivi::TimeGrid;
use crate::mc::McEstimate;
use crate::scheme::VarianceScheme;

const REFERENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub records: Vec<ResultRecord>,
    pub flags: Vec<Flag>,
    /// Set when an analytical reference could not be computed.
    pub reference_failed: bool,
}

impl RunReport {
    fn extend(&mut self, other: RunReport) {
        self.records.extend(other.records);
        self.flags.extend(other.flags);
        self.reference_failed |= other.reference_failed;
    }
}

/// Analytical reference for each payoff of `q`. For an implied-volatility
/// slice these are the reference implied volatilities.
pub fn reference_value(q: &Quantity, p: &HestonParams, maturity: f64) -> Result<Vec<f64>> {
    match q {
        Quantity::VarianceSwap => Ok(vec![variance_swap(maturity, &p.cir)]),
        Quantity::VolSwap => Ok(vec![volatility_swap(maturity, &p.cir, REFERENCE_TOL)?]),
        Quantity::Laplace { q } => Ok(vec![laplace_u(maturity, *q, p.cir.v0, &p.cir)?]),
        Quantity::Call { strike } => Ok(vec![fourier_call(*strike, maturity, p, REFERENCE_TOL)?]),
        Quantity::IvSlice { strikes } => strikes
            .iter()
            .map(|&k| {
                let price = fourier_call(k, maturity, p, REFERENCE_TOL)?;
                bs_implied_vol(price, k, maturity, p.s0)
            })
            .collect(),
    }
}

struct Cell<'a> {
    cfg: &'a ExperimentConfig,
    params: HestonParams,
    case: String,
    references: Vec<Result<Vec<f64>>>,
}

impl Cell<'_> {
    fn run(&self, scheme: VarianceScheme, n_steps: usize, n_paths: u64) -> Result<RunReport> {
        let grid = TimeGrid::uniform(self.cfg.maturity, n_steps)?;
        let sim = if self.cfg.quantities.iter().any(Quantity::needs_price) {
            PathSimulator::heston(&self.params, &grid, scheme)?
        } else {
            PathSimulator::variance(&self.params.cir, &grid, scheme)?
        };
        let payoffs: Vec<_> = self
            .cfg
            .quantities
            .iter()
            .flat_map(|q| q.payoffs())
            .collect();
        let start = Instant::now();
        let estimates = sim.estimate(&payoffs, n_paths, self.cfg.seed)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;

        let mut report = RunReport::default();
        let mut offset = 0;
        for (q, reference) in self.cfg.quantities.iter().zip(&self.references) {
            let n = q.payoffs().len();
            let est = &estimates[offset..offset + n];
            offset += n;
            let label = q.to_string();
            let flag = |quantity: &str, message: String| Flag {
                scheme: scheme.to_string(),
                case: self.case.clone(),
                quantity: quantity.to_string(),
                n_steps,
                message,
            };
            let reference = match reference {
                Ok(r) => r,
                Err(e) => {
                    report.reference_failed = true;
                    report
                        .flags
                        .push(flag(&label, format!("reference failed: {e}")));
                    continue;
                }
            };
            let record = |quantity: &str, estimate: f64, std_error: f64, reference: f64| {
                ResultRecord::new(
                    scheme.name(),
                    &self.case,
                    quantity,
                    n_steps,
                    n_paths,
                    estimate,
                    std_error,
                    reference,
                    wall_ms,
                )
            };
            match q {
                Quantity::IvSlice { strikes } => {
                    let mut errors = Vec::new();
                    for ((&k, e), &iv_ref) in strikes.iter().zip(est).zip(reference) {
                        let quantity = format!("iv({k})");
                        match self.implied_vol(e, k) {
                            Ok((iv, se)) => {
                                errors.push((iv - iv_ref).abs());
                                report.records.push(record(&quantity, iv, se, iv_ref)?);
                            }
                            Err(err) => report.flags.push(flag(&quantity, err.to_string())),
                        }
                    }
                    let mae_label =
                        format!("iv_mae({})", &label["iv_slice(".len()..label.len() - 1]);
                    if errors.is_empty() {
                        report
                            .flags
                            .push(flag(&mae_label, "no strike could be inverted".into()));
                    } else {
                        let mae = errors.iter().sum::<f64>() / errors.len() as f64;
                        report.records.push(record(&mae_label, mae, 0.0, 0.0)?);
                    }
                }
                _ => report.records.push(record(
                    &label,
                    est[0].mean,
                    est[0].std_error,
                    reference[0],
                )?),
            }
        }
        Ok(report)
    }

    /// Implied volatility of an MC call price and its delta-method standard
    /// error.
    fn implied_vol(&self, e: &McEstimate, strike: f64) -> Result<(f64, f64)> {
        let t = self.cfg.maturity;
        let iv = bs_implied_vol(e.mean, strike, t, self.params.s0)?;
        let vega = bs_vega(iv, strike, t, self.params.s0);
        if !(vega > 0.0) {
            return Err(Error::Numerical(format!("zero vega at strike {strike}")));
        }
        Ok((iv, e.std_error / vega))
    }
}

fn prepare(cfg: &ExperimentConfig) -> Result<Cell<'_>> {
    cfg.validate()?;
    let params = cfg.params();
    let references = cfg
        .quantities
        .iter()
        .map(|q| reference_value(q, &params, cfg.maturity))
        .collect();
    Ok(Cell {
        cfg,
        params,
        case: cfg.case.label(),
        references,
    })
}

/// One record per (scheme, n_steps, quantity), ordered by scheme, then step
/// count, then quantity.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cell = prepare(cfg)?;
    let mut report = RunReport::default();
    for &scheme in &cfg.schemes {
        for &n in &cfg.steps {
            report.extend(cell.run(scheme, n, cfg.n_paths)?);
        }
    }
    Ok(report)
}

/// Implied-volatility slices; quantities other than `iv_slice` are ignored.
pub fn run_smile(cfg: &ExperimentConfig) -> Result<RunReport> {
    let quantities: Vec<_> = cfg
        .quantities
        .iter()
        .filter(|q| matches!(q, Quantity::IvSlice { .. }))
        .cloned()
        .collect();
    if quantities.is_empty() {
        return Err(Error::Config("smile needs an iv_slice quantity".into()));
    }
    run_convergence(&ExperimentConfig {
        quantities,
        ..cfg.clone()
    })
}

/// Path-count sweep: every configured step count at every path count.
pub fn run_paths(cfg: &ExperimentConfig) -> Result<RunReport> {
    let cell = prepare(cfg)?;
    let mut report = RunReport::default();
    for &scheme in &cfg.schemes {
        for &n_paths in &cfg.path_counts {
            for &n in &cfg.steps {
                report.extend(cell.run(scheme, n, n_paths)?);
            }
        }
    }
    Ok(report)
}
