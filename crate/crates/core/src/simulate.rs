//! Sample paths of the noisy observation model
//! `Y_t = X_0 + a·t + X^H_t + ρ_t·Z_t`.
//!
//! The rough component `X^H` is either a stationary-increment fractional
//! Brownian motion scaled by a constant volatility (exact, circulant
//! embedding) or a Riemann–Liouville process with a volatility schedule
//! (kernel-discretized FFT convolution).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::gamma_h;
use crate::fft::convolve;
use crate::scalar::Real;
use crate::seed::{rng_for, StreamRole};

/// Roughness parameter, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64", bound = "T: Real")]
pub struct Hurst<T = f64>(T);

impl<T: Real> Hurst<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value < T::one() {
            Ok(Self(value))
        } else {
            Err(Error::InvalidHurst(value.as_f64()))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Real> TryFrom<f64> for Hurst<T> {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(T::lit(value))
    }
}

impl<T: Real> From<Hurst<T>> for f64 {
    fn from(h: Hurst<T>) -> f64 {
        h.0.as_f64()
    }
}

/// A nonnegative volatility: constant, or piecewise constant with
/// `(start_time, value)` breakpoints sorted by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule<T = f64> {
    Constant(T),
    Piecewise(Vec<(T, T)>),
}

impl<T: Real> Schedule<T> {
    pub fn constant_value(&self) -> Option<T> {
        match self {
            Schedule::Constant(v) => Some(*v),
            Schedule::Piecewise(points) => {
                let first = points.first()?.1;
                points.iter().all(|p| p.1 == first).then_some(first)
            }
        }
    }

    /// Value in force at time `t` (the last breakpoint at or before `t`).
    pub fn value_at(&self, t: T) -> T {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Piecewise(points) => points
                .iter()
                .take_while(|p| p.0 <= t)
                .last()
                .map_or(T::zero(), |p| p.1),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Schedule::Constant(v) => {
                if !(v.is_finite() && *v >= T::zero()) {
                    return Err(Error::Config(format!("{name} must be finite and >= 0")));
                }
            }
            Schedule::Piecewise(points) => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::Config(format!("{name} schedule is empty")))?;
                if first.0 > T::zero() {
                    return Err(Error::Config(format!(
                        "{name} schedule starts at {} and does not cover t = 0",
                        first.0
                    )));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Config(format!("{name} schedule times must increase")));
                }
                if points.iter().any(|p| !(p.1.is_finite() && p.1 >= T::zero())) {
                    return Err(Error::Config(format!("{name} schedule values must be >= 0")));
                }
            }
        }
        Ok(())
    }
}

/// Unit-variance measurement-noise law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    #[default]
    Gaussian,
    /// ±1 with equal probability.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformCentered,
}

impl NoiseDist {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::Gaussian => StandardNormal.sample(rng),
            NoiseDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseDist::UniformCentered => {
                let s = 3.0_f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    StationaryFbm,
    RiemannLiouville,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct SimConfig<T = f64> {
    pub h: Hurst<T>,
    /// Observations per unit time.
    pub n: usize,
    pub t_end: T,
    pub sigma: Schedule<T>,
    pub rho: Schedule<T>,
    #[serde(default)]
    pub noise_dist: NoiseDist,
    #[serde(default)]
    pub x0: T,
    #[serde(default)]
    pub drift: T,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> SimConfig<T> {
    /// Unit-volatility, noise-free stationary fBm on `[0, t_end]`.
    pub fn new(h: Hurst<T>, n: usize, t_end: T) -> Self {
        Self {
            h,
            n,
            t_end,
            sigma: Schedule::Constant(T::one()),
            rho: Schedule::Constant(T::zero()),
            noise_dist: NoiseDist::Gaussian,
            x0: T::zero(),
            drift: T::zero(),
            kernel: Kernel::StationaryFbm,
            seed: 0,
        }
    }

    /// Number of increments `⌊n·t_end⌋`.
    pub fn steps(&self) -> usize {
        grid_steps(self.n, self.t_end)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.t_end.is_finite() && self.t_end > T::zero()) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        if self.steps() < 1 {
            return Err(Error::Config("n·t_end must be at least 1".into()));
        }
        if !(self.x0.is_finite() && self.drift.is_finite()) {
            return Err(Error::Config("x0 and drift must be finite".into()));
        }
        self.sigma.validate("sigma")?;
        self.rho.validate("rho")?;
        if self.kernel == Kernel::StationaryFbm && self.sigma.constant_value().is_none() {
            return Err(Error::Config(
                "the stationary fBm kernel requires a constant sigma".into(),
            ));
        }
        Ok(())
    }
}

fn grid_steps<T: Real>(n: usize, t_end: T) -> usize {
    // Tolerate representation error in n·t_end (e.g. 0.1·10).
    let x = T::from_usize_lossy(n) * t_end;
    (x + x.abs() * T::lit(1e-12)).floor().to_usize().unwrap_or(0)
}

/// Equally spaced observations at `0, dt, 2·dt, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath<T = f64> {
    pub dt: T,
    pub values: Vec<T>,
    #[serde(default)]
    pub label: String,
}

impl<T: Real> SampledPath<T> {
    pub fn new(dt: T, values: Vec<T>, label: impl Into<String>) -> Result<Self> {
        if !(dt.is_finite() && dt > T::zero()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if values.len() < 2 {
            return Err(Error::Config(format!(
                "a path needs at least 2 observations, got {}",
                values.len()
            )));
        }
        Ok(Self { dt, values, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Observations per unit time, `round(1/dt)`.
    pub fn n(&self) -> usize {
        (T::one() / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn increments(&self) -> Vec<T> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same observations, every value mapped through `f`.
    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dt: self.dt,
            values: self.values.iter().map(|&v| f(v)).collect(),
            label: self.label.clone(),
        }
    }

    /// Same observations on a different time scale.
    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }
}

/// Normalizing constant `K_H = Γ(H+½) / √(Γ(2H+1)·sin(πH))`.
pub fn k_h<T: Real>(h: Hurst<T>) -> T {
    use statrs::function::gamma::gamma;
    let h = h.value().as_f64();
    T::lit(gamma(h + 0.5) / (gamma(2.0 * h + 1.0) * (std::f64::consts::PI * h).sin()).sqrt())
}

/// Fractional Gaussian noise with `Cov(e_i, e_j) = Γ^H_{|i−j|}` by circulant
/// embedding of the Toeplitz covariance (Davies–Harte).
pub fn gen_fgn<T: Real>(h: Hurst<T>, count: usize, seed: u64) -> Result<Vec<T>> {
    if count == 0 {
        return Err(Error::Config("count must be >= 1".into()));
    }
    let half = count.next_power_of_two();
    let size = 2 * half;
    let mut row = vec![Complex::new(T::zero(), T::zero()); size];
    for lag in 0..=half {
        row[lag].re = gamma_h(h, lag);
    }
    for lag in 1..half {
        row[size - lag].re = row[lag].re;
    }
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);

    let (min_ev, max_ev) = row.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), c| {
        (lo.min(c.re), hi.max(c.re))
    });
    if min_ev < -T::lit(1e-10) * max_ev {
        return Err(Error::Embedding {
            min_eigenvalue: min_ev.as_f64(),
            max_eigenvalue: max_ev.as_f64(),
        });
    }

    let mut rng = rng_for(seed, StreamRole::Signal);
    let inv_size = T::one() / T::from_usize_lossy(size);
    let mut spectrum: Vec<Complex<T>> = row
        .iter()
        .map(|ev| {
            let scale = (ev.re.max(T::zero()) * inv_size).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::lit(re) * scale, T::lit(im) * scale)
        })
        .collect();
    fft.process(&mut spectrum);
    Ok(spectrum.iter().take(count).map(|c| c.re).collect())
}

/// Standard fBm sampled at spacing `1/n` on `[0, t_end]`, starting at 0.
pub fn gen_fbm_path<T: Real>(h: Hurst<T>, n: usize, t_end: T, seed: u64) -> Result<SampledPath<T>> {
    let steps = grid_steps(n, t_end);
    if n == 0 || steps < 1 {
        return Err(Error::Config("n·t_end must be at least 1".into()));
    }
    let noise = gen_fgn(h, steps, seed)?;
    let scale = T::from_usize_lossy(n).powf(-h.value());
    let mut values = Vec::with_capacity(steps + 1);
    values.push(T::zero());
    let mut level = T::zero();
    for e in noise {
        level = level + e * scale;
        values.push(level);
    }
    SampledPath::new(T::one() / T::from_usize_lossy(n), values, format!("fbm H={}", h.value()))
}

/// Riemann–Liouville process `K_H^{-1} ∫_0^t (t−s)^{H−½} σ_s dB_s` on the grid `1/n`.
///
/// Each cell weight carries the exact L²-mass of the kernel over its cell,
/// `w_m = δ^{H−½}·√(((m+1)^{2H} − m^{2H}) / 2H)`, and σ is taken at the left
/// end of each Brownian increment. For constant σ the marginal variances are
/// exact on the grid: `Var X_t = σ²·t^{2H} / (2H·K_H²)`.
pub fn gen_rl_path<T: Real>(config: &SimConfig<T>) -> Result<SampledPath<T>> {
    config.sigma.validate("sigma")?;
    let steps = config.steps();
    if config.n == 0 || steps < 1 {
        return Err(Error::Config("n·t_end must be at least 1".into()));
    }
    let h = config.h.value();
    let delta = T::one() / T::from_usize_lossy(config.n);
    let sqrt_delta = delta.sqrt();
    let mut rng = rng_for(config.seed, StreamRole::Signal);
    let driven: Vec<T> = (0..steps)
        .map(|j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sigma = config.sigma.value_at(T::from_usize_lossy(j) * delta);
            sigma * T::lit(z) * sqrt_delta
        })
        .collect();

    let two_h = h + h;
    let cell_scale = delta.powf(h - T::lit(0.5)) / (two_h).sqrt();
    let weights: Vec<T> = (0..steps)
        .map(|m| {
            let m = T::from_usize_lossy(m);
            cell_scale * ((m + T::one()).powf(two_h) - m.powf(two_h)).sqrt()
        })
        .collect();

    let inv_k = T::one() / k_h(config.h);
    let conv = convolve(&weights, &driven);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(T::zero());
    values.extend(conv.iter().take(steps).map(|&x| x * inv_k));
    SampledPath::new(delta, values, format!("rl H={h}"))
}

/// Noisy observations `Y_{i/n} = x0 + a·i/n + X^H_{i/n} + ρ_{i/n}·Z_i`, `i = 0..=⌊n·t_end⌋`.
///
/// Signal and noise draw from separate substreams of `config.seed`, so
/// changing the noise law leaves the signal path untouched.
pub fn synthesize_observations<T: Real>(config: &SimConfig<T>) -> Result<SampledPath<T>> {
    config.validate()?;
    let signal = match config.kernel {
        Kernel::StationaryFbm => {
            let sigma = config.sigma.constant_value().expect("validated constant sigma");
            gen_fbm_path(config.h, config.n, config.t_end, config.seed)?.map_values(|x| sigma * x)
        }
        Kernel::RiemannLiouville => gen_rl_path(config)?,
    };
    let delta = T::one() / T::from_usize_lossy(config.n);
    let mut rng = rng_for(config.seed, StreamRole::Noise);
    let values = signal
        .values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = T::from_usize_lossy(i) * delta;
            let z = T::lit(config.noise_dist.sample(&mut rng));
            config.x0 + config.drift * t + x + config.rho.value_at(t) * z
        })
        .collect();
    SampledPath::new(
        delta,
        values,
        format!("H={} n={} seed={}", config.h.value(), config.n, config.seed),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    #[test]
    fn hurst_bounds_are_strict() {
        assert!(Hurst::new(0.0).is_err());
        assert!(Hurst::new(1.0).is_err());
        assert!(Hurst::new(f64::NAN).is_err());
        assert!(Hurst::<f32>::new(0.5).is_ok());
        let parsed: std::result::Result<Hurst, _> = serde_json::from_str("1.5");
        assert!(parsed.is_err());
    }

    #[test]
    fn fgn_is_deterministic_and_seed_sensitive() {
        let a = gen_fgn(h(0.3), 100, 9).unwrap();
        let b = gen_fgn(h(0.3), 100, 9).unwrap();
        let c = gen_fgn(h(0.3), 100, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(gen_fgn(h(0.5), 4, 1).unwrap().len(), 4);
        assert!(gen_fgn(h(0.5), 0, 1).is_err());
    }

    #[test]
    fn fbm_starts_at_zero_with_grid_length() {
        let p = gen_fbm_path(h(0.7), 100, 2.5, 3).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.len(), 251);
        assert_eq!(p.increments().len(), 250);
        assert_eq!(p.n(), 100);
    }

    #[test]
    fn zero_volatility_rl_path_is_zero() {
        let mut cfg = SimConfig::new(h(0.3), 64, 1.0);
        cfg.kernel = Kernel::RiemannLiouville;
        cfg.sigma = Schedule::Constant(0.0);
        let p = gen_rl_path(&cfg).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn k_h_is_one_at_half_and_rl_variance_factor_differs_elsewhere() {
        assert!((k_h(h(0.5)) - 1.0).abs() < 1e-14);
        // K_H normalizes the two-sided (Mandelbrot–Van Ness) integral; the
        // one-sided process has Var X_1 = 1/(2H K_H²) < 1 away from H = 1/2.
        let factor = |v: f64| 1.0 / (2.0 * v * k_h(h(v)).powi(2));
        assert!((factor(0.5) - 1.0).abs() < 1e-14);
        assert!((factor(0.3) - 0.888_86).abs() < 1e-4);
    }

    #[test]
    fn constant_path_from_degenerate_config() {
        let mut cfg = SimConfig::new(h(0.4), 10, 1.0);
        cfg.sigma = Schedule::Constant(0.0);
        cfg.x0 = 5.0;
        let p = synthesize_observations(&cfg).unwrap();
        assert_eq!(p.len(), 11);
        assert!(p.values.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn drift_enters_linearly() {
        let mut cfg = SimConfig::new(h(0.4), 10, 1.0);
        cfg.sigma = Schedule::Constant(0.0);
        cfg.drift = 2.0;
        let p = synthesize_observations(&cfg).unwrap();
        assert!((p.values[10] - 2.0).abs() < 1e-12);
        assert!((p.values[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_errors() {
        let mut cfg = SimConfig::new(h(0.4), 10, 1.0);
        cfg.sigma = Schedule::Piecewise(vec![(0.0, 1.0), (0.5, 2.0)]);
        assert!(matches!(synthesize_observations(&cfg), Err(Error::Config(_))));
        cfg.kernel = Kernel::RiemannLiouville;
        assert!(synthesize_observations(&cfg).is_ok());
        cfg.sigma = Schedule::Piecewise(vec![(0.2, 1.0)]);
        assert!(matches!(synthesize_observations(&cfg), Err(Error::Config(_))));
        cfg.sigma = Schedule::Constant(-1.0);
        assert!(synthesize_observations(&cfg).is_err());
        let cfg = SimConfig::new(h(0.4), 1, 1.0);
        assert!(synthesize_observations(&cfg).is_err());
    }

    #[test]
    fn noise_law_does_not_touch_the_signal() {
        let mut cfg = SimConfig::new(h(0.3), 200, 1.0);
        cfg.seed = 11;
        let clean = synthesize_observations(&cfg).unwrap();
        cfg.rho = Schedule::Constant(0.0);
        cfg.noise_dist = NoiseDist::Rademacher;
        let clean2 = synthesize_observations(&cfg).unwrap();
        assert_eq!(clean.values, clean2.values);
        cfg.seed = 12;
        assert_ne!(synthesize_observations(&cfg).unwrap().values, clean.values);
    }

    #[test]
    fn schedule_lookup() {
        let s = Schedule::Piecewise(vec![(0.0, 1.0), (0.5, 3.0)]);
        assert_eq!(s.value_at(0.25), 1.0);
        assert_eq!(s.value_at(0.5), 3.0);
        assert_eq!(s.value_at(0.9), 3.0);
        assert_eq!(s.constant_value(), None);
        assert_eq!(Schedule::Piecewise(vec![(0.0, 2.0), (0.3, 2.0)]).constant_value(), Some(2.0));
    }

    #[test]
    fn schedules_deserialize_from_either_shape() {
        let c: Schedule = serde_json::from_str("0.5").unwrap();
        assert_eq!(c, Schedule::Constant(0.5));
        let p: Schedule = serde_json::from_str("[[0.0, 1.0], [0.5, 2.0]]").unwrap();
        assert_eq!(p, Schedule::Piecewise(vec![(0.0, 1.0), (0.5, 2.0)]));
    }

    #[test]
    fn single_precision_generation() {
        let p = gen_fbm_path(Hurst::<f32>::new(0.3).unwrap(), 256, 1.0, 5).unwrap();
        assert_eq!(p.len(), 257);
        assert!(p.values.iter().all(|v| v.is_finite()));
    }
}
