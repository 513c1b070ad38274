use crate::error::{Error, Result};
use crate::heston::HestonParams;
use crate::ivi::CirParams;

pub const CASE_IDS: [u32; 3] = [1, 2, 3];

/// The three benchmark parameter sets, with `S0 = 1`.
pub fn builtin_case(id: u32) -> Result<HestonParams> {
    let (v0, kappa, theta, c, rho) = match id {
        1 => (0.006, 17.25, 0.018, 2.95, -0.68),
        2 => (0.023, 2.15, 0.057, 0.86, -0.70),
        3 => (0.04, 0.5, 0.04, 1.0, -0.9),
        _ => return Err(Error::UnknownCase(id)),
    };
    HestonParams::new(CirParams::new(v0, kappa * theta, -kappa, c)?, rho, 1.0)
}
