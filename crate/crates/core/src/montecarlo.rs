//! Replicated simulate-then-estimate experiments summarized as bias / SE / RMSE rows.
//!
//! Replication `i` simulates with seed [`replication_seed`]`(base_seed, i)`.
//! Replications run in parallel on the current rayon pool, but results are
//! reduced in index order, so every number in a table depends only on the
//! scenario and not on the worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_all, EstimationOptions};
use crate::scalar::Real;
use crate::seed::replication_seed;
use crate::simulate::{synthesize_observations, Hurst, NoiseDist, Schedule, SimConfig};

/// The roughness grid of the reference study.
pub const PAPER_GRID: [f64; 10] = [0.1, 0.2, 0.3, 1.0 / 3.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Column order of [`McTable::to_csv`].
pub const CSV_HEADER: &str =
    "H,H_bias,H_se,H_rmse,C_bias_pct,C_se_pct,C_rmse_pct,Pi_bias_pct,Pi_se_pct,Pi_rmse_pct";

/// Rows with more than this fraction of failed replications are flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub h: f64,
    /// `∫σ² dt` over the horizon.
    pub c_t: f64,
    /// `∫ρ² dt` over the horizon.
    pub pi_t: f64,
}

#[derive(Debug, Clone)]
pub struct MCScenario<T = f64> {
    /// Simulation template; its `seed` is replaced per replication.
    pub sim: SimConfig<T>,
    pub opts: EstimationOptions<T>,
    pub replications: usize,
    pub base_seed: u64,
    pub truth: Truth,
}

fn schedule_square_integral<T: Real>(s: &Schedule<T>, t_end: T) -> f64 {
    match s {
        Schedule::Constant(v) => (*v * *v * t_end).as_f64(),
        Schedule::Piecewise(points) => {
            let mut total = 0.0;
            for (i, &(start, value)) in points.iter().enumerate() {
                let end = points.get(i + 1).map_or(t_end, |p| p.0).min(t_end);
                let start = start.max(T::zero());
                if end > start {
                    total += (value * value * (end - start)).as_f64();
                }
            }
            total
        }
    }
}

impl<T: Real> MCScenario<T> {
    /// Scenario with the truth implied by the simulation template.
    pub fn new(
        sim: SimConfig<T>,
        opts: EstimationOptions<T>,
        replications: usize,
        base_seed: u64,
    ) -> Result<Self> {
        let truth = Truth {
            h: sim.h.value().as_f64(),
            c_t: schedule_square_integral(&sim.sigma, sim.t_end),
            pi_t: schedule_square_integral(&sim.rho, sim.t_end),
        };
        let scenario = Self { sim, opts, replications, base_seed, truth };
        scenario.validate()?;
        Ok(scenario)
    }

    /// `Y = σ·B^H + ρ·Z` on `[0, 1]` with `n = 10 000`, `σ = 1`, `ρ = 0.1`, Gaussian noise.
    pub fn reference(h: T, replications: usize, base_seed: u64) -> Result<Self> {
        let mut sim = SimConfig::new(Hurst::new(h)?, 10_000, T::one());
        sim.rho = Schedule::Constant(T::lit(0.1));
        sim.noise_dist = NoiseDist::Gaussian;
        Self::new(sim, EstimationOptions::default(), replications, base_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        self.sim.validate()?;
        self.opts.validate()?;
        let expected_c = schedule_square_integral(&self.sim.sigma, self.sim.t_end);
        if (self.truth.c_t - expected_c).abs() > 1e-9 * expected_c.abs().max(1.0) {
            return Err(Error::Config(format!(
                "truth c_t = {} inconsistent with the simulated sigma (expected {expected_c})",
                self.truth.c_t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReplicationOutcome {
    Estimated { h_hat: f64, c_hat: f64, pi_hat: f64 },
    Failed { reason: String },
}

/// Simulates and estimates replication `index`. Estimation errors become
/// [`ReplicationOutcome::Failed`]; only invalid arguments return `Err`.
pub fn run_replication<T: Real>(scenario: &MCScenario<T>, index: usize) -> Result<ReplicationOutcome> {
    if index >= scenario.replications {
        return Err(Error::Config(format!(
            "replication index {index} out of range (replications = {})",
            scenario.replications
        )));
    }
    let mut sim = scenario.sim.clone();
    sim.seed = replication_seed(scenario.base_seed, index as u64);
    let outcome = synthesize_observations(&sim)
        .and_then(|path| estimate_all(&path, &scenario.opts, sim.t_end));
    Ok(match outcome {
        Ok(r) => ReplicationOutcome::Estimated { h_hat: r.h_hat, c_hat: r.c_hat, pi_hat: r.pi_hat },
        Err(e) => ReplicationOutcome::Failed { reason: e.to_string() },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
}

impl ColumnStats {
    /// Bias against `truth`, population standard deviation, and their root-sum-square.
    pub fn from_samples(samples: &[f64], truth: f64) -> Self {
        let count = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / count;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
        let bias = mean - truth;
        let se = var.sqrt();
        Self { bias, se, rmse: bias.hypot(se) }
    }

    fn scaled(self, factor: f64) -> Self {
        Self { bias: self.bias * factor, se: self.se * factor, rmse: self.rmse * factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCRow {
    pub h_true: f64,
    pub h: ColumnStats,
    /// Percent of `C_T` (absolute when `C_T = 0`).
    pub c: ColumnStats,
    /// Percent of `Π_T` (absolute when `Π_T = 0`).
    pub pi: ColumnStats,
    pub replications: usize,
    pub n_failed: usize,
    pub flagged: bool,
}

fn relative_stats(samples: &[f64], truth: f64) -> ColumnStats {
    if truth == 0.0 {
        return ColumnStats::from_samples(samples, 0.0);
    }
    let rel: Vec<f64> = samples.iter().map(|x| x / truth).collect();
    ColumnStats::from_samples(&rel, 1.0).scaled(100.0)
}

pub fn run_mc<T: Real>(scenario: &MCScenario<T>) -> Result<MCRow> {
    scenario.validate()?;
    let outcomes: Vec<ReplicationOutcome> = (0..scenario.replications)
        .into_par_iter()
        .map(|i| run_replication(scenario, i))
        .collect::<Result<_>>()?;

    let mut h = Vec::with_capacity(outcomes.len());
    let mut c = Vec::with_capacity(outcomes.len());
    let mut pi = Vec::with_capacity(outcomes.len());
    let mut n_failed = 0;
    for (index, outcome) in outcomes.iter().enumerate() {
        match outcome {
            ReplicationOutcome::Estimated { h_hat, c_hat, pi_hat } => {
                h.push(*h_hat);
                c.push(*c_hat);
                pi.push(*pi_hat);
            }
            ReplicationOutcome::Failed { reason } => {
                log::debug!("replication {index} failed: {reason}");
                n_failed += 1;
            }
        }
    }
    if h.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} replications failed",
            scenario.replications
        )));
    }
    let flagged = n_failed as f64 > FAILURE_FLAG_FRACTION * scenario.replications as f64;
    if flagged {
        log::warn!(
            "H={}: {n_failed} of {} replications failed",
            scenario.truth.h,
            scenario.replications
        );
    }
    Ok(MCRow {
        h_true: scenario.truth.h,
        h: ColumnStats::from_samples(&h, scenario.truth.h),
        c: relative_stats(&c, scenario.truth.c_t),
        pi: relative_stats(&pi, scenario.truth.pi_t),
        replications: scenario.replications,
        n_failed,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McTable {
    pub rows: Vec<MCRow>,
}

fn h_label(h: f64) -> String {
    if (h - 1.0 / 3.0).abs() < 1e-12 {
        "1/3".to_string()
    } else {
        format!("{h}")
    }
}

impl McTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                r.h_true,
                r.h.bias,
                r.h.se,
                r.h.rmse,
                r.c.bias,
                r.c.se,
                r.c.rmse,
                r.pi.bias,
                r.pi.se,
                r.pi.rmse
            );
        }
        out
    }

    /// Aligned text with the three estimator groups side by side.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5} | {:^26} | {:^29} | {:^29}",
            "H", "H estimate", "C estimate (%)", "Pi estimate (%)"
        );
        let _ = writeln!(
            out,
            "{:>5} | {:>8} {:>8} {:>8} | {:>9} {:>9} {:>9} | {:>9} {:>9} {:>9}",
            "", "Bias", "SE", "RMSE", "Bias", "SE", "RMSE", "Bias", "SE", "RMSE"
        );
        let _ = writeln!(out, "{}", "-".repeat(102));
        for r in &self.rows {
            let _ = write!(
                out,
                "{:>5} | {:>8.3} {:>8.3} {:>8.3} | {:>9.2} {:>9.2} {:>9.2} | {:>9.2} {:>9.2} {:>9.2}",
                h_label(r.h_true),
                r.h.bias,
                r.h.se,
                r.h.rmse,
                r.c.bias,
                r.c.se,
                r.c.rmse,
                r.pi.bias,
                r.pi.se,
                r.pi.rmse
            );
            if r.n_failed > 0 {
                let _ = write!(out, "  ({} failed{})", r.n_failed, if r.flagged { ", flagged" } else { "" });
            }
            out.push('\n');
        }
        out
    }
}

/// One [`MCRow`] per scenario, in input order.
pub fn table_sweep<T: Real>(scenarios: &[MCScenario<T>]) -> Result<McTable> {
    if scenarios.is_empty() {
        return Err(Error::Config("table sweep needs at least one scenario".into()));
    }
    let rows = scenarios.iter().map(run_mc).collect::<Result<Vec<_>>>()?;
    Ok(McTable { rows })
}
