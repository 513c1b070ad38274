//! Variance-scheme selection and per-grid precomputation.

use std::fmt;
use std::str::FromStr;

use crate::baseline::{EulerStep, QeConfig, QeStep};
use crate::error::{Error, Result};
use crate::ivi::{CirParams, IviStep, SimpleStep, StepCoefficients, StepOutput, TimeGrid};
use crate::rng::StepDraws;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarianceScheme {
    Ivi,
    /// The simplified scheme without the variation-of-constants drift.
    IviSimple,
    Qe(QeConfig),
    EulerFt,
}

impl VarianceScheme {
    pub fn name(&self) -> &'static str {
        match self {
            VarianceScheme::Ivi => "ivi",
            VarianceScheme::IviSimple => "ivi-simple",
            VarianceScheme::Qe(_) => "qe",
            VarianceScheme::EulerFt => "euler",
        }
    }
}

impl fmt::Display for VarianceScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VarianceScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ivi" => Ok(VarianceScheme::Ivi),
            "ivi-simple" | "ivi_simple" | "simple" => Ok(VarianceScheme::IviSimple),
            "qe" => Ok(VarianceScheme::Qe(QeConfig::default())),
            "euler" | "euler-ft" => Ok(VarianceScheme::EulerFt),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum PreparedStep {
    Ivi(IviStep),
    Simple(SimpleStep),
    Qe(QeStep),
    Euler(EulerStep),
}

impl PreparedStep {
    #[inline]
    fn advance(&self, v: f64, draws: StepDraws) -> StepOutput {
        match self {
            PreparedStep::Ivi(s) => s.advance(v, draws),
            PreparedStep::Simple(s) => s.advance(v, draws),
            PreparedStep::Qe(s) => s.advance(v, draws),
            PreparedStep::Euler(s) => s.advance(v, draws),
        }
    }
}

/// A scheme bound to parameters and a grid, with all step constants
/// precomputed. Shared read-only across paths.
#[derive(Clone, Debug)]
pub struct VariancePlan {
    scheme: VarianceScheme,
    v0: f64,
    steps: Vec<PreparedStep>,
}

impl VariancePlan {
    pub fn new(scheme: VarianceScheme, p: &CirParams, grid: &TimeGrid) -> Result<Self> {
        p.validate()?;
        let steps = grid
            .increments()
            .map(|dt| {
                Ok(match scheme {
                    VarianceScheme::Ivi => PreparedStep::Ivi(IviStep::new(p, dt)),
                    VarianceScheme::IviSimple => PreparedStep::Simple(SimpleStep::new(p, dt)?),
                    VarianceScheme::Qe(cfg) => PreparedStep::Qe(QeStep::new(p, dt, cfg)),
                    VarianceScheme::EulerFt => PreparedStep::Euler(EulerStep::new(p, dt)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scheme,
            v0: p.v0,
            steps,
        })
    }

    pub fn scheme(&self) -> VarianceScheme {
        self.scheme
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    #[inline]
    pub fn advance(&self, i: usize, v: f64, draws: StepDraws) -> StepOutput {
        self.steps[i].advance(v, draws)
    }

    /// Inverse Gaussian coefficients of step `i` from state `v`; `None` for
    /// schemes other than iVi.
    #[inline]
    pub fn coefficients(&self, i: usize, v: f64) -> Option<StepCoefficients> {
        match &self.steps[i] {
            PreparedStep::Ivi(s) => Some(s.coefficients(v)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scheme_names() {
        assert_eq!(
            "ivi".parse::<VarianceScheme>().unwrap(),
            VarianceScheme::Ivi
        );
        assert_eq!("QE".parse::<VarianceScheme>().unwrap().name(), "qe");
        assert_eq!(
            "euler".parse::<VarianceScheme>().unwrap(),
            VarianceScheme::EulerFt
        );
        assert!("al".parse::<VarianceScheme>().is_err());
        for s in [
            VarianceScheme::Ivi,
            VarianceScheme::IviSimple,
            VarianceScheme::Qe(QeConfig::default()),
            VarianceScheme::EulerFt,
        ] {
            assert_eq!(s.name().parse::<VarianceScheme>().unwrap(), s);
        }
    }

    #[test]
    fn simple_plan_rejects_explosive_steps() {
        let p = CirParams::new(0.1, 0.1, 3.0, 0.5).unwrap();
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(VariancePlan::new(VarianceScheme::IviSimple, &p, &grid).is_err());
        assert!(VariancePlan::new(VarianceScheme::Ivi, &p, &grid).is_ok());
    }
}
