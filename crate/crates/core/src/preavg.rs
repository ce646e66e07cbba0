//! Pre-averaging weights, pre-averaged increment statistics and the
//! normalized variation functional built from them.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fft::sliding_dot;
use crate::scalar::{round_ties_even, Real};
use crate::simulate::{Hurst, SampledPath};

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightKind {
    /// `g(x) = 2·min(x, 1 − x)`.
    Triangular,
    Custom(String),
}

/// A pre-averaging weight function `g` on `[0, 1]` with `g(0) = g(1) = 0`,
/// together with its derivative and the interior points where `g'` is not smooth.
#[derive(Clone)]
pub struct WeightSpec<T = f64> {
    kind: WeightKind,
    eval: ScalarFn<T>,
    deriv: ScalarFn<T>,
    second_deriv: Option<ScalarFn<T>>,
    breakpoints: Vec<T>,
}

impl<T: Real> WeightSpec<T> {
    pub fn triangular() -> Self {
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        Self {
            kind: WeightKind::Triangular,
            eval: Arc::new(move |x: T| two * x.min(T::one() - x)),
            deriv: Arc::new(move |x: T| if x < half { two } else { -two }),
            second_deriv: Some(Arc::new(|_| T::zero())),
            breakpoints: vec![half],
        }
    }

    /// A user-supplied weight. `breakpoints` lists the interior points of
    /// `(0, 1)` where `g'` jumps or kinks; quadrature splits there.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
        deriv: impl Fn(T) -> T + Send + Sync + 'static,
        breakpoints: Vec<T>,
    ) -> Result<Self> {
        let tol = T::lit(1e-12);
        let (g0, g1) = (eval(T::zero()), eval(T::one()));
        if !(g0.abs() <= tol && g1.abs() <= tol) {
            return Err(Error::Config(format!(
                "weight function must vanish at 0 and 1, got g(0) = {g0}, g(1) = {g1}"
            )));
        }
        if breakpoints.iter().any(|&b| !(b > T::zero() && b < T::one())) {
            return Err(Error::Config("weight breakpoints must lie in (0, 1)".into()));
        }
        Ok(Self {
            kind: WeightKind::Custom(name.into()),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            second_deriv: None,
            breakpoints,
        })
    }

    pub fn with_second_derivative(mut self, f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.second_deriv = Some(Arc::new(f));
        self
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn eval(&self, x: T) -> T {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: T) -> T {
        (self.deriv)(x)
    }

    pub fn second_deriv(&self, x: T) -> Option<T> {
        self.second_deriv.as_ref().map(|f| f(x))
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            WeightKind::Triangular => "triangular",
            WeightKind::Custom(name) => name,
        }
    }
}

impl<T> fmt::Debug for WeightSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightSpec").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl<T: Real> Default for WeightSpec<T> {
    fn default() -> Self {
        Self::triangular()
    }
}

impl<T: Real> Serialize for WeightSpec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de, T: Real> Deserialize<'de> for WeightSpec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        match name.as_str() {
            "triangular" => Ok(Self::triangular()),
            other => Err(serde::de::Error::custom(format!(
                "unknown weight function {other:?} (supported: triangular)"
            ))),
        }
    }
}

/// `g` sampled on the window grid: `g_vals[j−1] = g(j/k)` for `j = 1..k−1`
/// and `dg_vals[j−1] = g(j/k) − g((j−1)/k)` for `j = 1..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedWeights<T = f64> {
    pub k: usize,
    pub g_vals: Vec<T>,
    pub dg_vals: Vec<T>,
}

impl<T: Real> DiscretizedWeights<T> {
    /// `Σ_j (Δg_j)²`.
    pub fn dg_square_sum(&self) -> T {
        self.dg_vals.iter().map(|&d| d * d).sum()
    }
}

pub fn discretize_weights<T: Real>(g: &WeightSpec<T>, k: usize) -> Result<DiscretizedWeights<T>> {
    if k < 2 {
        return Err(Error::Config(format!("window size must be >= 2, got {k}")));
    }
    let kf = T::from_usize_lossy(k);
    // Grid endpoints are pinned to the boundary values g(0) = g(1) = 0.
    let grid: Vec<T> = (0..=k)
        .map(|j| if j == 0 || j == k { T::zero() } else { g.eval(T::from_usize_lossy(j) / kf) })
        .collect();
    let tol = T::lit(1e-12);
    if g.eval(T::zero()).abs() > tol || g.eval(T::one()).abs() > tol {
        return Err(Error::Config("weight function must vanish at 0 and 1".into()));
    }
    Ok(DiscretizedWeights {
        k,
        g_vals: grid[1..k].to_vec(),
        dg_vals: grid.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// Index-range policy for windows near the end of the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Only windows that fit entirely inside the data are used.
    #[default]
    TruncateTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreAvgConfig<T = f64> {
    pub kappa: T,
    pub theta: T,
    pub k_override: Option<usize>,
    #[serde(default)]
    pub boundary_policy: BoundaryPolicy,
}

impl<T: Real> PreAvgConfig<T> {
    pub fn new(kappa: T, theta: T) -> Result<Self> {
        let cfg = Self { kappa, theta, k_override: None, boundary_policy: BoundaryPolicy::TruncateTail };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_window(k: usize) -> Result<Self> {
        let cfg = Self {
            kappa: T::zero(),
            theta: T::one(),
            k_override: Some(k),
            boundary_policy: BoundaryPolicy::TruncateTail,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= T::zero() && self.kappa < T::one()) {
            return Err(Error::Config(format!("kappa must lie in [0, 1), got {}", self.kappa)));
        }
        if !(self.theta > T::zero() && self.theta.is_finite()) {
            return Err(Error::Config(format!("theta must be positive, got {}", self.theta)));
        }
        if matches!(self.k_override, Some(k) if k < 2) {
            return Err(Error::Config("window override must be >= 2".into()));
        }
        Ok(())
    }
}

/// Window size `k = max(2, round(n^κ/θ))` (ties to even) unless overridden.
pub fn window_size<T: Real>(n: usize, cfg: &PreAvgConfig<T>) -> usize {
    if let Some(k) = cfg.k_override {
        return k;
    }
    let raw = T::from_usize_lossy(n).powf(cfg.kappa) / cfg.theta;
    round_ties_even(raw).to_usize().unwrap_or(usize::MAX).max(2)
}

/// `(bar_i, hat_i)` for the window starting at 1-based increment index `i`:
/// `bar = Σ_{j=1}^{k−1} g_j·Δ_{i+j−1}` and `hat = Σ_{j=1}^{k} (Δg_j)²·Δ²_{i+j−1}`.
pub fn preavg_stats<T: Real>(increments: &[T], i: usize, w: &DiscretizedWeights<T>) -> Result<(T, T)> {
    let k = w.k;
    if i == 0 || i + k - 1 > increments.len() {
        return Err(Error::Range { index: i, k, len: increments.len() });
    }
    let window = &increments[i - 1..i - 1 + k];
    let bar = w.g_vals.iter().zip(window).fold(T::zero(), |acc, (&g, &d)| acc + g * d);
    let hat = w
        .dg_vals
        .iter()
        .zip(window)
        .fold(T::zero(), |acc, (&dg, &d)| acc + dg * dg * d * d);
    Ok((bar, hat))
}

/// All `bar_i` for `i = 1..=len − k + 1` (full windows only).
pub fn preaveraged_bars<T: Real>(increments: &[T], w: &DiscretizedWeights<T>) -> Vec<T> {
    if increments.len() < w.k {
        return Vec::new();
    }
    // bar only reads k−1 increments; drop the windows that would not also fit `hat`.
    let count = increments.len() - w.k + 1;
    let mut bars = sliding_dot(&increments[..count + w.k - 2], &w.g_vals);
    bars.truncate(count);
    bars
}

/// All `hat_i` for `i = 1..=len − k + 1`.
pub fn preaveraged_hats<T: Real>(increments: &[T], w: &DiscretizedWeights<T>) -> Vec<T> {
    let squares: Vec<T> = increments.iter().map(|&d| d * d).collect();
    let dg2: Vec<T> = w.dg_vals.iter().map(|&d| d * d).collect();
    sliding_dot(&squares, &dg2)
}

/// Test function `f(x, y)` applied to the normalized pair `(bar, hat)`.
#[derive(Clone)]
pub enum TestFunction<T = f64> {
    /// `f(x, y) = x²`.
    Square,
    /// `F(x, y) = x² − y/2`, the noise-corrected square.
    SquareMinusHalfY,
    Custom(Arc<dyn Fn(T, T) -> T + Send + Sync>),
}

impl<T: Real> TestFunction<T> {
    pub fn custom(f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        TestFunction::Custom(Arc::new(f))
    }

    pub fn apply(&self, x: T, y: T) -> T {
        match self {
            TestFunction::Square => x * x,
            TestFunction::SquareMinusHalfY => x * x - y * T::lit(0.5),
            TestFunction::Custom(f) => f(x, y),
        }
    }
}

impl<T> fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Square => f.write_str("Square"),
            TestFunction::SquareMinusHalfY => f.write_str("SquareMinusHalfY"),
            TestFunction::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Number of increments in `[0, t_end]`, capped by the data.
pub(crate) fn increments_in_horizon<T: Real>(path: &SampledPath<T>, t_end: T) -> usize {
    let n = T::from_usize_lossy(path.n());
    let x = n * t_end;
    let horizon = (x + x.abs() * T::lit(1e-12)).floor().to_usize().unwrap_or(0);
    horizon.min(path.len() - 1)
}

/// `V = (1/n) Σ_{i=1}^{I_max} f(bar_i/(k/n)^H, hat_i/(k/n)^{2H})` with
/// `I_max = min(⌊n·t_end⌋, N_inc − k + 1)`.
pub fn variation_functional<T: Real>(
    path: &SampledPath<T>,
    f: &TestFunction<T>,
    g: &WeightSpec<T>,
    h: Hurst<T>,
    cfg: &PreAvgConfig<T>,
    t_end: T,
) -> Result<T> {
    cfg.validate()?;
    let n = path.n();
    if n < 2 {
        return Err(Error::Config(format!("path grid gives n = {n}, need >= 2")));
    }
    let k = window_size(n, cfg);
    let increments = path.increments();
    let available = increments.len();
    if k >= available {
        return Err(Error::WindowTooLarge { k, available });
    }
    let horizon = T::from_usize_lossy(n) * t_end;
    let horizon = (horizon + horizon.abs() * T::lit(1e-12)).floor().to_usize().unwrap_or(0);
    let i_max = horizon.min(available - k + 1);
    let w = discretize_weights(g, k)?;
    let scale = (T::from_usize_lossy(k) / T::from_usize_lossy(n)).powf(h.value());
    let bars = preaveraged_bars(&increments[..i_max + k - 1], &w);
    let total = match f {
        TestFunction::Square => bars.iter().map(|&b| (b / scale).powi(2)).sum::<T>(),
        _ => {
            let hats = preaveraged_hats(&increments[..i_max + k - 1], &w);
            let scale2 = scale * scale;
            bars.iter().zip(&hats).map(|(&b, &hh)| f.apply(b / scale, hh / scale2)).sum::<T>()
        }
    };
    Ok(total / T::from_usize_lossy(n))
}

/// Subsample at `step_multiplier·dt` (phase 0), then `Σ_i bar_i²` over all full windows of size `k`.
pub fn sq_preavg_sum<T: Real>(
    path: &SampledPath<T>,
    step_multiplier: usize,
    k: usize,
    g: &WeightSpec<T>,
) -> Result<T> {
    if step_multiplier == 0 {
        return Err(Error::Config("step multiplier must be >= 1".into()));
    }
    sq_preavg_sum_of(&path.values, step_multiplier, k, g)
}

pub(crate) fn sq_preavg_sum_of<T: Real>(
    values: &[T],
    step: usize,
    k: usize,
    g: &WeightSpec<T>,
) -> Result<T> {
    let sub: Vec<T> = values.iter().step_by(step).copied().collect();
    let increments: Vec<T> = sub.windows(2).map(|w| w[1] - w[0]).collect();
    if increments.len() < k {
        return Err(Error::WindowTooLarge { k, available: increments.len() });
    }
    let w = discretize_weights(g, k)?;
    Ok(preaveraged_bars(&increments, &w).iter().map(|&b| b * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri() -> WeightSpec {
        WeightSpec::triangular()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn window_sizes() {
        let cfg = PreAvgConfig::new(2.0 / 3.0, 1.0).unwrap();
        assert_eq!(window_size(10_000, &cfg), 464);
        assert_eq!(window_size(10_000, &PreAvgConfig::new(0.0, 1.0).unwrap()), 2);
        assert_eq!(window_size(10_000, &PreAvgConfig::<f64>::with_window(50).unwrap()), 50);
        // θ shrinks the window: 10000^0.5 / 4 = 25
        assert_eq!(window_size(10_000, &PreAvgConfig::new(0.5, 4.0).unwrap()), 25);
    }

    #[test]
    fn config_validation() {
        assert!(PreAvgConfig::new(1.0, 1.0).is_err());
        assert!(PreAvgConfig::new(-0.1, 1.0).is_err());
        assert!(PreAvgConfig::new(0.5, 0.0).is_err());
        assert!(PreAvgConfig::<f64>::with_window(1).is_err());
    }

    #[test]
    fn triangular_weights_at_k4() {
        let w = discretize_weights(&tri(), 4).unwrap();
        assert_eq!(w.g_vals, vec![0.5, 1.0, 0.5]);
        assert_eq!(w.dg_vals, vec![0.5, 0.5, -0.5, -0.5]);
        assert!(close(w.dg_square_sum(), 1.0, 1e-15));
        assert!(discretize_weights(&tri(), 1).is_err());
    }

    #[test]
    fn custom_weight_must_vanish_at_ends() {
        let bad = WeightSpec::custom("ramp", |x: f64| x, |_| 1.0, vec![]);
        assert!(matches!(bad, Err(Error::Config(_))));
        let sine = WeightSpec::custom(
            "sine",
            |x: f64| (std::f64::consts::PI * x).sin(),
            |x: f64| std::f64::consts::PI * (std::f64::consts::PI * x).cos(),
            vec![],
        )
        .unwrap();
        let w = discretize_weights(&sine, 10).unwrap();
        assert_eq!(w.g_vals.len(), 9);
        assert!(w.dg_vals.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn stats_on_constant_increments() {
        let w = discretize_weights(&tri(), 4).unwrap();
        let ones = vec![1.0; 6];
        let (bar, hat) = preavg_stats(&ones, 1, &w).unwrap();
        assert!(close(bar, 2.0, 1e-15) && close(hat, 1.0, 1e-15));
        assert_eq!(preavg_stats(&[0.0; 6], 2, &w).unwrap(), (0.0, 0.0));
        assert!(matches!(preavg_stats(&ones, 4, &w), Err(Error::Range { .. })));
        assert!(preavg_stats(&ones, 3, &w).is_ok());
        assert!(preavg_stats(&ones, 0, &w).is_err());
    }

    #[test]
    fn bulk_series_match_pointwise_stats() {
        let incs: Vec<f64> = (0..300).map(|i| ((i * 7919) % 113) as f64 / 50.0 - 1.0).collect();
        for k in [2, 4, 17, 64, 100] {
            let w = discretize_weights(&tri(), k).unwrap();
            let bars = preaveraged_bars(&incs, &w);
            let hats = preaveraged_hats(&incs, &w);
            assert_eq!(bars.len(), incs.len() - k + 1);
            assert_eq!(hats.len(), bars.len());
            for i in [1, 2, bars.len() / 2, bars.len()] {
                let (b, h) = preavg_stats(&incs, i, &w).unwrap();
                assert!(close(bars[i - 1], b, 1e-10), "k={k} i={i}");
                assert!(close(hats[i - 1], h, 1e-10), "k={k} i={i}");
            }
        }
    }

    #[test]
    fn constant_test_function_counts_windows() {
        let values: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.37).sin()).collect();
        let path = SampledPath::new(0.01, values, "").unwrap();
        let one = TestFunction::custom(|_, _| 1.0);
        let cfg = PreAvgConfig::with_window(10).unwrap();
        let h = Hurst::new(0.3).unwrap();
        let v = variation_functional(&path, &one, &tri(), h, &cfg, 1.0).unwrap();
        // I_max = min(100, 100 − 10 + 1) = 91
        assert!(close(v, 0.91, 1e-15));
        let v = variation_functional(&path, &one, &tri(), h, &cfg, 0.5).unwrap();
        assert!(close(v, 0.5, 1e-15));
        let zero = SampledPath::new(0.01, vec![3.0; 101], "").unwrap();
        let v = variation_functional(&zero, &TestFunction::Square, &tri(), h, &cfg, 1.0).unwrap();
        assert_eq!(v, 0.0);
        let big = PreAvgConfig::with_window(100).unwrap();
        assert!(matches!(
            variation_functional(&path, &one, &tri(), h, &big, 1.0),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn sq_sum_is_unnormalized_variation() {
        let values: Vec<f64> = (0..=400).map(|i| (i as f64 * 0.11).sin() + (i as f64 * 0.7).cos()).collect();
        let path = SampledPath::new(1.0 / 400.0, values, "").unwrap();
        let h = Hurst::new(0.37).unwrap();
        let k = 12;
        let cfg = PreAvgConfig::with_window(k).unwrap();
        let v = variation_functional(&path, &TestFunction::Square, &tri(), h, &cfg, 1.0).unwrap();
        let s = sq_preavg_sum(&path, 1, k, &tri()).unwrap();
        let n = 400.0_f64;
        let expected = v * n * (k as f64 / n).powf(2.0 * 0.37);
        assert!(close(s, expected, 1e-10 * s.abs()));
        assert_eq!(sq_preavg_sum(&path.map_values(|_| 1.5), 2, k, &tri()).unwrap(), 0.0);
        assert!(sq_preavg_sum(&path, 40, k, &tri()).is_err());
        assert!(sq_preavg_sum(&path, 0, k, &tri()).is_err());
    }

    #[test]
    fn triangular_dg_square_sum_even_k() {
        for k in [2, 4, 10, 64, 464] {
            let w = discretize_weights(&tri(), k).unwrap();
            assert!(close(w.dg_square_sum(), 4.0 / k as f64, 1e-12), "k={k}");
        }
    }

    proptest! {
        #[test]
        fn weights_telescope(k in 2usize..600) {
            let w = discretize_weights(&tri(), k).unwrap();
            prop_assert_eq!(w.g_vals.len(), k - 1);
            prop_assert_eq!(w.dg_vals.len(), k);
            prop_assert!(w.dg_vals.iter().sum::<f64>().abs() < 1e-12);
        }

        #[test]
        fn stats_homogeneity_and_shift_invariance(
            values in prop::collection::vec(-10.0f64..10.0, 40..120),
            c in -5.0f64..5.0,
            shift in -100.0f64..100.0,
            k in 2usize..20,
        ) {
            let path = SampledPath::new(0.01, values, "").unwrap();
            let g = tri();
            let base = sq_preavg_sum(&path, 1, k, &g).unwrap();
            let scaled = sq_preavg_sum(&path.map_values(|v| c * v), 1, k, &g).unwrap();
            let shifted = sq_preavg_sum(&path.map_values(|v| v + shift), 1, k, &g).unwrap();
            prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + base.abs() * c * c));
            prop_assert!((shifted - base).abs() <= 1e-8 * (1.0 + base.abs()));

            let w = discretize_weights(&g, k).unwrap();
            let incs = path.increments();
            let (b, h) = preavg_stats(&incs, 1, &w).unwrap();
            let scaled_incs: Vec<f64> = incs.iter().map(|d| c * d).collect();
            let (bc, hc) = preavg_stats(&scaled_incs, 1, &w).unwrap();
            prop_assert!((bc - c * b).abs() <= 1e-9 * (1.0 + b.abs()));
            prop_assert!((hc - c * c * h).abs() <= 1e-9 * (1.0 + h.abs()));
        }
    }
}
