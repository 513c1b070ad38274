//! Analytical reference values: the affine transform of `(log S, U)`, the
//! iVi one-step transform, swap prices and Fourier option prices.

pub mod black_scholes;
pub mod fourier;
pub mod riccati;
pub mod transforms;

pub use black_scholes::{bs_implied_vol, bs_price, bs_vega};
pub use fourier::{fourier_call, fourier_price, fourier_put, FourierConfig, OptionKind};
pub use riccati::{heston_cf, heston_log_cf, riccati_closed_form, FrequencyPair, RiccatiValue};
pub use transforms::{
    laplace_u, log_laplace_u, one_step_char, variance_swap, volatility_swap,
    OneStepCharCoefficients,
};
