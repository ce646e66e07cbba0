//! Estimators of the roughness `H`, integrated volatility `C_T` and
//! integrated noise variance `Π_T`, plus the limit constants they rely on.

mod constants;
mod estimators;

pub use constants::{deriv_square_integral, eta_g, eta_g_discrete, gamma_h, mu_f, mu_f_quadrature};
pub use estimators::{
    balanced_kappa, estimate_all, estimate_h_adaptive, estimate_integrated_vol, estimate_noise_var,
    h_from_ratio, ratio_statistic, EstimationOptions, EstimationResult, HurstEstimate,
};
