use fracnoise::estimate::gamma_h;
use fracnoise::simulate::{gen_fbm_path, gen_fgn, gen_rl_path, k_h, synthesize_observations};
use fracnoise::{Hurst, Kernel, NoiseDist, Schedule, SimConfig};

fn h(v: f64) -> Hurst {
    Hurst::new(v).unwrap()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Bartlett's large-sample variance of the lag-`lag` sample autocovariance of
/// a Gaussian series with autocorrelation `Γ`, summed over every lag the
/// sample can see.
fn autocov_standard_error(hv: f64, lag: usize, len: usize) -> f64 {
    let g = |m: i64| gamma_h(h(hv), m.unsigned_abs() as usize);
    let lag = lag as i64;
    let mut total = 0.0;
    for m in -(len as i64 - 1)..(len as i64) {
        total += g(m).powi(2) + g(m + lag) * g(m - lag);
    }
    (total / len as f64).sqrt()
}

#[test]
fn fgn_autocovariance_matches_gamma() {
    let len = 1 << 18;
    for hv in [0.25, 0.5, 0.75] {
        let e = gen_fgn(h(hv), len, 11).unwrap();
        for lag in 0..=5 {
            let acov = e.iter().zip(&e[lag..]).map(|(a, b)| a * b).sum::<f64>() / len as f64;
            let se = autocov_standard_error(hv, lag, len);
            let target = gamma_h(h(hv), lag);
            assert!(
                (acov - target).abs() < 4.0 * se,
                "H={hv} lag={lag}: {acov} vs {target} (se {se})"
            );
        }
    }
}

#[test]
fn fbm_increments_scale_with_spacing() {
    let n = 1 << 16;
    for hv in [0.3, 0.7] {
        let mut ratios = [0.0; 3];
        let seeds = 8;
        for seed in 0..seeds {
            let path = gen_fbm_path(h(hv), n, 1.0, seed).unwrap();
            for (slot, m) in [1usize, 2, 4].into_iter().enumerate() {
                let sq: Vec<f64> = path.values.windows(m + 1).map(|w| (w[m] - w[0]).powi(2)).collect();
                let target = (m as f64 / n as f64).powf(2.0 * hv);
                ratios[slot] += mean_var(&sq).0 / target / seeds as f64;
            }
        }
        for r in ratios {
            assert!((r - 1.0).abs() < 0.03, "H={hv}: {ratios:?}");
        }
    }
}

#[test]
fn fbm_at_half_is_brownian() {
    let ends: Vec<f64> = (0..4000)
        .map(|s| *gen_fbm_path(h(0.5), 64, 1.0, s).unwrap().values.last().unwrap())
        .collect();
    let (m, v) = mean_var(&ends);
    let se = (2.0 / ends.len() as f64).sqrt();
    assert!((v - 1.0).abs() < 3.0 * se, "Var B_1 = {v}");
    assert!(m.abs() < 3.0 / (ends.len() as f64).sqrt());
}

#[test]
fn riemann_liouville_terminal_variance() {
    // Var X_1 = K_H^{-2} ∫₀¹ (1−s)^{2H−1} ds = K_H^{-2} / (2H).
    let hv = 0.3;
    let target = k_h(h(hv)).powi(-2) / (2.0 * hv);
    let mut cfg = SimConfig::new(h(hv), 512, 1.0);
    cfg.kernel = Kernel::RiemannLiouville;
    let reps = 40_000;
    let ends: Vec<f64> = (0..reps)
        .map(|s| {
            cfg.seed = s;
            *gen_rl_path(&cfg).unwrap().values.last().unwrap()
        })
        .collect();
    let (_, v) = mean_var(&ends);
    let se = target * (2.0 / reps as f64).sqrt();
    assert!((v - target).abs() < 3.0 * se, "{v} vs {target} (se {se})");
    assert!((target - 1.0).abs() > 0.05);
}

#[test]
fn riemann_liouville_at_half_matches_brownian_scaling() {
    let mut cfg = SimConfig::new(h(0.5), 256, 2.0);
    cfg.kernel = Kernel::RiemannLiouville;
    cfg.sigma = Schedule::Constant(1.5);
    let reps = 8000;
    let mut mid = Vec::with_capacity(reps);
    let mut end = Vec::with_capacity(reps);
    for s in 0..reps as u64 {
        cfg.seed = s;
        let p = gen_rl_path(&cfg).unwrap();
        mid.push(p.values[256]);
        end.push(p.values[512]);
    }
    let se = (2.0 / reps as f64).sqrt();
    assert!((mean_var(&mid).1 / 2.25 - 1.0).abs() < 3.0 * se);
    assert!((mean_var(&end).1 / 4.5 - 1.0).abs() < 3.0 * se);
}

#[test]
fn piecewise_volatility_changes_local_variance() {
    let mut cfg = SimConfig::new(h(0.5), 1000, 2.0);
    cfg.kernel = Kernel::RiemannLiouville;
    cfg.sigma = Schedule::Piecewise(vec![(0.0, 1.0), (1.0, 3.0)]);
    cfg.seed = 5;
    let p = gen_rl_path(&cfg).unwrap();
    let rv = |a: usize, b: usize| p.values[a..=b].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    let first = rv(0, 1000);
    let second = rv(1000, 2000);
    assert!((first - 1.0).abs() < 0.15, "{first}");
    assert!((second - 9.0).abs() < 1.2, "{second}");
}

#[test]
fn observations_carry_the_configured_noise() {
    for dist in [NoiseDist::Gaussian, NoiseDist::Rademacher, NoiseDist::UniformCentered] {
        let mut cfg = SimConfig::new(h(1.0 / 3.0), 10_000, 1.0);
        cfg.rho = Schedule::Constant(0.1);
        cfg.noise_dist = dist;
        cfg.seed = 99;
        let y = synthesize_observations(&cfg).unwrap();
        assert_eq!(y.len(), 10_001);
        let x = gen_fbm_path(h(1.0 / 3.0), 10_000, 1.0, 99).unwrap();
        let z: Vec<f64> = y.values.iter().zip(&x.values).map(|(a, b)| (a - b) / 0.1).collect();
        let (m, v) = mean_var(&z);
        assert!(m.abs() < 0.05 && (v - 1.0).abs() < 0.06, "{dist:?}: mean {m} var {v}");
        if dist == NoiseDist::Rademacher {
            assert!(z.iter().all(|v| (v.abs() - 1.0).abs() < 1e-9));
        }
        if dist == NoiseDist::UniformCentered {
            assert!(z.iter().all(|v| v.abs() <= 3f64.sqrt() + 1e-9));
        }
    }
}
