use serde::{Deserialize, Serialize};

use super::constants::eta_g;
use crate::error::{Error, IterationRecord, Result};
use crate::preavg::{
    increments_in_horizon, sq_preavg_sum_of, variation_functional, window_size, PreAvgConfig,
    TestFunction, WeightSpec,
};
use crate::scalar::Real;
use crate::simulate::{Hurst, SampledPath};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct EstimationOptions<T = f64> {
    #[serde(default)]
    pub g: WeightSpec<T>,
    pub theta: T,
    pub kappa_init: T,
    pub conv_threshold: T,
    pub max_iters: usize,
    /// Bounds applied to `Ĥ` when it is used to pick a window; reported values are raw.
    pub clamp: (T, T),
    /// When set, skip the adaptive loop and evaluate the ratio once at this `κ`.
    #[serde(default)]
    pub fixed_kappa: Option<T>,
}

impl<T: Real> Default for EstimationOptions<T> {
    fn default() -> Self {
        Self {
            g: WeightSpec::triangular(),
            theta: T::one(),
            kappa_init: T::lit(2.0 / 3.0),
            conv_threshold: T::lit(0.025),
            max_iters: 100,
            clamp: (T::lit(0.001), T::lit(0.999)),
            fixed_kappa: None,
        }
    }
}

impl<T: Real> EstimationOptions<T> {
    /// Single ratio evaluation at `κ = 0`, i.e. no pre-averaging smoothing.
    pub fn without_preaveraging() -> Self {
        Self { fixed_kappa: Some(T::zero()), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.conv_threshold > T::zero()) {
            return Err(Error::Config("conv_threshold must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.kappa_init >= T::zero() && self.kappa_init < T::one()) {
            return Err(Error::Config("kappa_init must lie in [0, 1)".into()));
        }
        if !(self.theta > T::zero()) {
            return Err(Error::Config("theta must be positive".into()));
        }
        let (lo, hi) = self.clamp;
        if !(lo > T::zero() && hi < T::one() && lo < hi) {
            return Err(Error::Config("clamp must satisfy 0 < lo < hi < 1".into()));
        }
        if let Some(k) = self.fixed_kappa {
            if !(k >= T::zero() && k < T::one()) {
                return Err(Error::Config("fixed_kappa must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }

    /// `Ĥ` clamped into the window-selection range.
    pub fn clamp_h(&self, h: T) -> Result<Hurst<T>> {
        if !h.is_finite() {
            return Err(Error::Domain(format!("Hurst estimate {h} is not finite")));
        }
        Hurst::new(h.max(self.clamp.0).min(self.clamp.1))
    }

    fn preavg(&self, kappa: T) -> Result<PreAvgConfig<T>> {
        PreAvgConfig::new(kappa, self.theta)
    }
}

/// `κ = 2H/(2H+1)`, the window exponent balancing signal and noise.
pub fn balanced_kappa<T: Real>(h: T) -> T {
    (h + h) / (h + h + T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimate {
    pub h_hat: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub h_hat: f64,
    pub c_hat: f64,
    pub pi_hat: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

/// `Ĥ = (1 + log₂ R) / (2(1 − κ))`. Not clamped.
pub fn h_from_ratio<T: Real>(r: T, kappa: T) -> Result<T> {
    if !(r > T::zero() && r.is_finite()) {
        return Err(Error::Domain(format!("ratio must be positive, got {r}")));
    }
    if !(kappa < T::one()) {
        return Err(Error::Domain(format!("kappa must be < 1, got {kappa}")));
    }
    Ok((T::one() + r.log2()) / (T::lit(2.0) * (T::one() - kappa)))
}

fn horizon_values<T: Real>(path: &SampledPath<T>, t_end: T) -> &[T] {
    &path.values[..=increments_in_horizon(path, t_end)]
}

/// Change-of-frequency ratio: `Σ bar²` at step `2/n` with `k_{n/2}` over `Σ bar²` at step `1/n` with `k_n`.
pub fn ratio_statistic<T: Real>(
    path: &SampledPath<T>,
    g: &WeightSpec<T>,
    cfg: &PreAvgConfig<T>,
    t_end: T,
) -> Result<T> {
    ratio_with_windows(path, g, cfg, t_end).map(|(r, _)| r)
}

fn ratio_with_windows<T: Real>(
    path: &SampledPath<T>,
    g: &WeightSpec<T>,
    cfg: &PreAvgConfig<T>,
    t_end: T,
) -> Result<(T, usize)> {
    cfg.validate()?;
    let n = path.n();
    if n < 4 {
        return Err(Error::Config(format!("path grid gives n = {n}, need >= 4")));
    }
    let k_full = window_size(n, cfg);
    let k_half = window_size(n / 2, cfg);
    let values = horizon_values(path, t_end);
    let denominator = sq_preavg_sum_of(values, 1, k_full, g)?;
    let numerator = sq_preavg_sum_of(values, 2, k_half, g)?;
    if !(denominator > T::zero()) {
        return Err(Error::Degenerate("pre-averaged sum of squares is zero".into()));
    }
    Ok((numerator / denominator, k_full))
}

/// Adaptive Hurst estimation: start at `κ_init`, then repeatedly set
/// `κ = 2Ĥ/(2Ĥ+1)` (or 0 when `Ĥ ≤ 0`) until successive estimates differ by
/// at most `conv_threshold` or `max_iters` estimates have been made.
pub fn estimate_h_adaptive<T: Real>(
    path: &SampledPath<T>,
    opts: &EstimationOptions<T>,
    t_end: T,
) -> Result<HurstEstimate> {
    opts.validate()?;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let fail = |e: Error, trace: &Vec<IterationRecord>| Error::Estimation {
        source: Box::new(e),
        trace: trace.clone(),
    };

    let mut kappa = opts.fixed_kappa.unwrap_or(opts.kappa_init);
    let mut previous: Option<T> = None;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let cfg = opts.preavg(kappa).map_err(|e| fail(e, &trace))?;
        let (ratio, k) = ratio_with_windows(path, &opts.g, &cfg, t_end).map_err(|e| fail(e, &trace))?;
        let h = h_from_ratio(ratio, kappa).map_err(|e| fail(e, &trace))?;
        trace.push(IterationRecord { kappa: kappa.as_f64(), k, ratio: ratio.as_f64(), h: h.as_f64() });
        log::trace!("iteration {}: kappa={kappa} k={k} R={ratio} H={h}", trace.len());
        if opts.fixed_kappa.is_some() {
            converged = true;
            break;
        }
        if let Some(prev) = previous {
            if (h - prev).abs() <= opts.conv_threshold {
                converged = true;
                break;
            }
        }
        previous = Some(h);
        kappa = if h > T::zero() {
            balanced_kappa(opts.clamp_h(h).map_err(|e| fail(e, &trace))?.value())
        } else {
            T::zero()
        };
    }
    let h_hat = trace.last().expect("max_iters >= 1").h;
    Ok(HurstEstimate { h_hat, iterations: trace, converged })
}

/// `Π̂ = (1 / 2N) Σ_{i=1}^{N} (ΔY_i)²` with `N = ⌊n·t_end⌋`.
///
/// The normalization by `N` rather than `n` makes this the time-average of
/// `ρ²` over `[0, t_end]`; it equals `∫ρ²` only for `t_end = 1`.
pub fn estimate_noise_var<T: Real>(path: &SampledPath<T>, t_end: T) -> Result<T> {
    let count = increments_in_horizon(path, t_end);
    if count == 0 {
        return Err(Error::Config("horizon contains no increments".into()));
    }
    let values = &path.values[..=count];
    let sum: T = values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(sum / T::from_usize_lossy(2 * count))
}

/// `Ĉ = V^{n,F}/η(g)` with `F(x, y) = x² − y/2`, both evaluated at the clamped
/// `Ĥ` and with window exponent `κ̂ = 2Ĥ/(2Ĥ+1)`.
pub fn estimate_integrated_vol<T: Real>(
    path: &SampledPath<T>,
    h_hat: T,
    opts: &EstimationOptions<T>,
    t_end: T,
) -> Result<T> {
    let h = opts.clamp_h(h_hat)?;
    let cfg = opts.preavg(balanced_kappa(h.value()))?;
    let v = variation_functional(path, &TestFunction::SquareMinusHalfY, &opts.g, h, &cfg, t_end)?;
    Ok(v / eta_g(&opts.g, h)?)
}

/// Full chain: adaptive `Ĥ`, then `Ĉ` at `Ĥ`, then `Π̂`.
pub fn estimate_all<T: Real>(
    path: &SampledPath<T>,
    opts: &EstimationOptions<T>,
    t_end: T,
) -> Result<EstimationResult> {
    let hurst = estimate_h_adaptive(path, opts, t_end)?;
    let c_hat = estimate_integrated_vol(path, T::lit(hurst.h_hat), opts, t_end)?;
    let pi_hat = estimate_noise_var(path, t_end)?;
    Ok(EstimationResult {
        h_hat: hurst.h_hat,
        c_hat: c_hat.as_f64(),
        pi_hat: pi_hat.as_f64(),
        iterations: hurst.iterations,
        converged: hurst.converged,
    })
}
