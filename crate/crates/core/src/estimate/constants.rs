//! Limit constants: the fGn autocorrelation `Γ^H_r`, the signal constant
//! `η(g)` and the Gaussian expectation `μ_f`.

use crate::error::{Error, Result};
use crate::preavg::{TestFunction, WeightSpec};
use crate::quadrature::{integrate_piecewise, standard_normal_rule};
use crate::scalar::Real;
use crate::simulate::Hurst;

/// `Γ^H_r = ½((r+1)^{2H} − 2r^{2H} + |r−1|^{2H})`, the lag-`r` autocorrelation
/// of unit-spaced fBm increments.
pub fn gamma_h<T: Real>(h: Hurst<T>, r: usize) -> T {
    let two_h = h.value() + h.value();
    if r == 0 {
        return T::one();
    }
    let r = T::from_usize_lossy(r);
    let one = T::one();
    T::lit(0.5) * ((r + one).powf(two_h) - T::lit(2.0) * r.powf(two_h) + (r - one).powf(two_h))
}

/// `η(g) = −½ ∫₀¹∫₀¹ g'(x) g'(y) |x − y|^{2H} dx dy`, evaluated as the
/// one-dimensional integral `−∫₀¹ u^{2H} φ(u) du` with
/// `φ(u) = ∫₀^{1−u} g'(x) g'(x+u) dx`, both by adaptive Gauss–Kronrod on the
/// pieces where `g'` is smooth.
pub fn eta_g<T: Real>(g: &WeightSpec<T>, h: Hurst<T>) -> Result<T> {
    let tol = T::lit(1e-8).max(T::tolerance_floor() * T::lit(100.0));
    let breaks = g.breakpoints();
    let two_h = h.value() + h.value();

    let mut outer_breaks: Vec<T> = Vec::new();
    for &b in breaks {
        outer_breaks.push(b);
        outer_breaks.push(T::one() - b);
        for &c in breaks {
            if c > b {
                outer_breaks.push(c - b);
            }
        }
    }

    let inner_tol = tol * T::lit(0.01);
    let failure = std::cell::Cell::new(None);
    let autocorrelation = |u: T| -> T {
        let upper = T::one() - u;
        let mut cuts: Vec<T> = breaks.to_vec();
        cuts.extend(breaks.iter().map(|&b| b - u));
        let integrand = |x: T| g.deriv(x) * g.deriv(x + u);
        match integrate_piecewise(&integrand, T::zero(), upper, &cuts, inner_tol) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                T::zero()
            }
        }
    };
    let integrand = |u: T| -> T {
        if u <= T::zero() {
            return T::zero();
        }
        u.powf(two_h) * autocorrelation(u)
    };
    let value = integrate_piecewise(&integrand, T::zero(), T::one(), &outer_breaks, tol)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(-value)
}

/// Pre-limit form `k^{−2H} Σ_{j,l=1}^{k−1} g(j/k) g(l/k) Γ^H_{|j−l|}` of `η(g)`,
/// summed by lag.
pub fn eta_g_discrete<T: Real>(g: &WeightSpec<T>, h: Hurst<T>, k: usize) -> Result<T> {
    if k < 2 {
        return Err(Error::Config(format!("discrete eta needs k >= 2, got {k}")));
    }
    let kf = T::from_usize_lossy(k);
    let vals: Vec<T> = (1..k).map(|j| g.eval(T::from_usize_lossy(j) / kf)).collect();
    let mut total = T::zero();
    for lag in 0..vals.len() {
        let lagged: T = vals.iter().zip(&vals[lag..]).map(|(&a, &b)| a * b).sum();
        let weight = if lag == 0 { T::one() } else { T::lit(2.0) };
        total = total + weight * gamma_h(h, lag) * lagged;
    }
    Ok(total / kf.powf(h.value() + h.value()))
}

/// `∫₀¹ g'(r)² dr`.
pub fn deriv_square_integral<T: Real>(g: &WeightSpec<T>) -> Result<T> {
    let tol = T::lit(1e-10).max(T::tolerance_floor() * T::lit(100.0));
    integrate_piecewise(&|x: T| g.deriv(x).powi(2), T::zero(), T::one(), g.breakpoints(), tol)
}

/// `μ_f(v1, v2) = E[f(√v1·Z1 + √v2·Z2, 2·v2)]` with independent standard normals.
///
/// Closed forms for the two built-in test functions, tensor Gauss–Hermite
/// quadrature otherwise.
pub fn mu_f<T: Real>(f: &TestFunction<T>, v1: T, v2: T) -> Result<T> {
    check_variances(v1, v2)?;
    match f {
        TestFunction::Square => Ok(v1 + v2),
        TestFunction::SquareMinusHalfY => Ok(v1),
        TestFunction::Custom(_) => mu_f_quadrature(f, v1, v2),
    }
}

/// `μ_f` by 21×21 Gauss–Hermite quadrature regardless of `f`.
pub fn mu_f_quadrature<T: Real>(f: &TestFunction<T>, v1: T, v2: T) -> Result<T> {
    check_variances(v1, v2)?;
    let rule = standard_normal_rule();
    let (s1, s2) = (v1.sqrt(), v2.sqrt());
    let y = v2 + v2;
    let mut total = T::zero();
    for &(x1, w1) in rule {
        let mut row = T::zero();
        for &(x2, w2) in rule {
            row = row + T::lit(w2) * f.apply(s1 * T::lit(x1) + s2 * T::lit(x2), y);
        }
        total = total + T::lit(w1) * row;
    }
    Ok(total)
}

fn check_variances<T: Real>(v1: T, v2: T) -> Result<()> {
    if v1 >= T::zero() && v2 >= T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mu_f needs nonnegative variances, got ({v1}, {v2})")))
    }
}
