//! Numerical integration: globally adaptive Gauss–Kronrod on intervals and
//! Gauss–Hermite rules for Gaussian expectations.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Real;

// 15-point Kronrod extension of the 7-point Gauss–Legendre rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gauss_kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half_len * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let value = kronrod * half_len;
    let err = ((kronrod - gauss) * half_len).abs();
    (value, err)
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` by repeatedly
/// bisecting the interval with the largest Kronrod error estimate.
pub(crate) fn integrate<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let (v, e) = gauss_kronrod(f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol {
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                achieved: total_err.as_f64(),
                target: tol.as_f64(),
            });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, iv)| if iv.3 > best.1 { (i, iv.3) } else { best });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval can no longer be split in this precision.
            return Err(Error::Quadrature {
                achieved: total_err.as_f64(),
                target: tol.as_f64(),
            });
        }
        let (v1, e1) = gauss_kronrod(f, lo, mid);
        let (v2, e2) = gauss_kronrod(f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        total_err = intervals.iter().fold(T::zero(), |acc, iv| acc + iv.3);
    }
    Ok(intervals.iter().fold(T::zero(), |acc, iv| acc + iv.2))
}

/// Integrates over `[a, b]` split at the given interior breakpoints, with the
/// tolerance shared between pieces in proportion to their length.
pub(crate) fn integrate_piecewise<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    breakpoints: &[T],
    tol: T,
) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    let mut cuts: Vec<T> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let width = b - a;
    let mut total = T::zero();
    for w in edges.windows(2) {
        let share = tol * (w[1] - w[0]) / width;
        total = total + integrate(f, w[0], w[1], share.max(T::tolerance_floor()))?;
    }
    Ok(total)
}

/// Nodes and weights of the `n`-point rule for `E[φ(Z)]`, `Z ~ N(0, 1)`,
/// derived from the physicists' Gauss–Hermite rule by Newton iteration.
fn probabilists_hermite(n: usize) -> Vec<(f64, f64)> {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let nf = n as f64;
    let mut nodes = vec![0.0_f64; n];
    let mut weights = vec![0.0_f64; n];
    let m = n.div_ceil(2);
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    let norm = std::f64::consts::PI.sqrt();
    nodes
        .into_iter()
        .zip(weights)
        .map(|(x, w)| (std::f64::consts::SQRT_2 * x, w / norm))
        .collect()
}

pub(crate) const HERMITE_POINTS: usize = 21;

/// 21-point standard-normal rule (exact for polynomials up to degree 41).
pub(crate) fn standard_normal_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| probabilists_hermite(HERMITE_POINTS))
}
