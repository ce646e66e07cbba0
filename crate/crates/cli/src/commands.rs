use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use fracnoise::estimate::{estimate_all, eta_g, eta_g_discrete, gamma_h, mu_f};
use fracnoise::montecarlo::{table_sweep, PAPER_GRID};
use fracnoise::pipeline::{frequency_sweep, load_series, LoadOptions, RawSeries, SweepConfig};
use fracnoise::simulate::synthesize_observations;
use fracnoise::{
    EstimationOptions, EstimationResult, Hurst, Kernel, MCScenario, NoiseDist, SampledPath, Schedule,
    SimConfig, TestFunction, WeightSpec,
};

use crate::args::{
    AnalyzeArgs, ConstantsArgs, EstimateArgs, EstimationArgs, GridArg, InputArgs, KernelArg, McArgs,
    NoiseArg, OutputFormat, SimulateArgs, TableFormat, TestFunctionArg,
};
use crate::config::{parse_schedule, ConfigFile, EstimationSection, InputSection};
use crate::error::CliError;

impl From<NoiseArg> for NoiseDist {
    fn from(a: NoiseArg) -> Self {
        match a {
            NoiseArg::Gaussian => NoiseDist::Gaussian,
            NoiseArg::Rademacher => NoiseDist::Rademacher,
            NoiseArg::UniformCentered => NoiseDist::UniformCentered,
        }
    }
}

impl From<KernelArg> for Kernel {
    fn from(a: KernelArg) -> Self {
        match a {
            KernelArg::StationaryFbm => Kernel::StationaryFbm,
            KernelArg::RiemannLiouville => Kernel::RiemannLiouville,
        }
    }
}

fn schedule(flag: Option<&str>, file: Option<&Schedule>, default: f64) -> Result<Schedule, CliError> {
    match (flag, file) {
        (Some(text), _) => parse_schedule(text),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Ok(Schedule::Constant(default)),
    }
}

fn estimation_options(args: &EstimationArgs, file: &EstimationSection) -> Result<EstimationOptions, CliError> {
    let d = EstimationOptions::default();
    let opts = EstimationOptions {
        g: d.g,
        theta: args.theta.or(file.theta).unwrap_or(d.theta),
        kappa_init: args.kappa_init.or(file.kappa_init).unwrap_or(d.kappa_init),
        conv_threshold: args.conv_threshold.or(file.conv_threshold).unwrap_or(d.conv_threshold),
        max_iters: args.max_iters.or(file.max_iters).unwrap_or(d.max_iters),
        clamp: (
            args.h_min.or(file.h_min).unwrap_or(d.clamp.0),
            args.h_max.or(file.h_max).unwrap_or(d.clamp.1),
        ),
        fixed_kappa: args.fixed_kappa.or(file.fixed_kappa),
    };
    opts.validate()?;
    Ok(opts)
}

fn read_series(args: &InputArgs, file: &InputSection) -> Result<RawSeries, CliError> {
    let handle = File::open(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot open input {}: {e}", args.input.display())))?;
    let opts = LoadOptions {
        dt: args.dt.or(file.dt),
        value_col: args.value_col.clone().or_else(|| file.value_col.clone()),
        timestamp_col: args.timestamp_col.clone().or_else(|| file.timestamp_col.clone()),
    };
    load_series(BufReader::new(handle), &opts).map_err(|e| match e {
        fracnoise::Error::Format { .. } => CliError::Domain(format!("{}: {e}", args.input.display())),
        other => other.into(),
    })
}

/// Writes to `path` when given, otherwise to `out`.
fn emit(path: Option<&Path>, content: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Domain(format!("cannot write output: {e}"))),
    }
}

pub fn simulate(args: &SimulateArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let file = &cfg.simulate;
    let h = args
        .h
        .or(file.h)
        .ok_or_else(|| CliError::Usage("simulate needs --h (or simulate.h in the config)".into()))?;
    let mut sim = SimConfig::new(Hurst::new(h)?, args.n.or(file.n).unwrap_or(10_000), args.t_end.or(file.t_end).unwrap_or(1.0));
    sim.sigma = schedule(args.sigma.as_deref(), file.sigma.as_ref(), 1.0)?;
    sim.rho = schedule(args.rho.as_deref(), file.rho.as_ref(), 0.0)?;
    sim.noise_dist = args.noise_dist.map(NoiseDist::from).or(file.noise_dist).unwrap_or_default();
    sim.kernel = args.kernel.map(Kernel::from).or(file.kernel).unwrap_or_default();
    sim.x0 = args.x0.or(file.x0).unwrap_or(0.0);
    sim.drift = args.drift.or(file.drift).unwrap_or(0.0);
    sim.seed = args.seed.or(file.seed).unwrap_or(0);
    let path = synthesize_observations(&sim)?;
    log::info!("simulated {} observations (H={h}, seed={})", path.len(), sim.seed);

    let n = sim.n as f64;
    let mut text = String::with_capacity(path.len() * 32);
    text.push_str("time,value\n");
    for (i, v) in path.values.iter().enumerate() {
        let _ = writeln!(text, "{},{v}", i as f64 / n);
    }
    emit(args.output.as_deref().or(file.output.as_deref()), &text, out)
}

fn render_estimate(r: &EstimationResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "H_hat      {:.6}", r.h_hat);
    let _ = writeln!(s, "C_hat      {:.6}", r.c_hat);
    let _ = writeln!(s, "Pi_hat     {:.6e}", r.pi_hat);
    let _ = writeln!(s, "converged  {} after {} iteration(s)", r.converged, r.iterations.len());
    let _ = writeln!(s, "{:>4} {:>10} {:>7} {:>12} {:>10}", "step", "kappa", "k", "ratio", "H");
    for (i, it) in r.iterations.iter().enumerate() {
        let _ = writeln!(s, "{:>4} {:>10.6} {:>7} {:>12.6} {:>10.6}", i + 1, it.kappa, it.k, it.ratio, it.h);
    }
    s
}

pub fn estimate(args: &EstimateArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let opts = estimation_options(&args.estimation, &cfg.estimation)?;
    let series = read_series(&args.input, &cfg.input)?;
    if !series.gaps.is_empty() {
        return Err(CliError::Domain(format!(
            "{}: the series has {} gap(s); estimate needs equally spaced data",
            args.input.input.display(),
            series.gaps.len()
        )));
    }
    let len = series.values.len();
    let path = SampledPath::new(series.sample_dt, series.values, args.input.input.display().to_string())?;
    let t_end = args
        .t_end
        .or(cfg.estimate.t_end)
        .unwrap_or((len - 1) as f64 * path.dt);
    let result = estimate_all(&path, &opts, t_end)?;
    let text = match args.format.or(cfg.estimate.format).unwrap_or_default() {
        OutputFormat::Text => render_estimate(&result),
        OutputFormat::Json => serde_json::to_string_pretty(&result).expect("result serializes") + "\n",
    };
    emit(args.output.as_deref().or(cfg.estimate.output.as_deref()), &text, out)
}

pub fn mc(args: &McArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let file = &cfg.mc;
    let opts = estimation_options(&args.estimation, &cfg.estimation)?;
    let grid = match (args.grid, &args.h, file.grid, &file.h) {
        (Some(GridArg::Paper), _, _, _) => PAPER_GRID.to_vec(),
        (None, Some(h), _, _) => h.clone(),
        (None, None, Some(GridArg::Paper), _) => PAPER_GRID.to_vec(),
        (None, None, None, Some(h)) => h.clone(),
        (None, None, None, None) => {
            return Err(CliError::Usage("mc needs --grid paper or --h H1,H2,...".into()))
        }
    };
    if grid.is_empty() {
        return Err(CliError::Usage("the H grid is empty".into()));
    }
    let reps = args.reps.or(file.reps).unwrap_or(500);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let sigma = schedule(args.sigma.as_deref(), file.sigma.as_ref(), 1.0)?;
    let rho = schedule(args.rho.as_deref(), file.rho.as_ref(), 0.1)?;
    let scenarios = grid
        .iter()
        .map(|&h| {
            let mut sim = SimConfig::new(
                Hurst::new(h)?,
                args.n.or(file.n).unwrap_or(10_000),
                args.t_end.or(file.t_end).unwrap_or(1.0),
            );
            sim.sigma = sigma.clone();
            sim.rho = rho.clone();
            sim.noise_dist = args.noise_dist.map(NoiseDist::from).or(file.noise_dist).unwrap_or_default();
            sim.kernel = args.kernel.map(Kernel::from).or(file.kernel).unwrap_or_default();
            MCScenario::new(sim, opts.clone(), reps, seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    log::info!("running {} scenario(s) x {reps} replications", scenarios.len());
    let table = table_sweep(&scenarios)?;
    for row in table.rows.iter().filter(|r| r.flagged) {
        log::warn!("H={}: {} of {} replications failed", row.h_true, row.n_failed, row.replications);
    }
    let text = match args.format.or(file.format).unwrap_or_default() {
        TableFormat::Csv => table.to_csv(),
        TableFormat::Text => table.to_text(),
    };
    emit(args.output.as_deref().or(file.output.as_deref()), &text, out)
}

pub fn analyze(args: &AnalyzeArgs, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    let file = &cfg.analyze;
    let opts = estimation_options(&args.estimation, &cfg.estimation)?;
    let defaults = SweepConfig::default();
    let sweep = SweepConfig {
        deltas: args.deltas.clone().or_else(|| file.deltas.clone()).unwrap_or(defaults.deltas),
        block_length: args.block_length.or(file.block_length).unwrap_or(defaults.block_length),
        opts,
        with_preavg: !(args.no_preavg || file.no_preavg.unwrap_or(false)),
        kappa_zero_baseline: args.baseline || file.baseline.unwrap_or(false),
    };
    let series = read_series(&args.input, &cfg.input)?;
    log::info!(
        "{} observations at {} s, {} gap(s)",
        series.values.len(),
        series.sample_dt,
        series.gaps.len()
    );
    let report = frequency_sweep(&series, &sweep)?;
    if let Some(csv_path) = args.csv.as_deref().or(file.csv.as_deref()) {
        emit(Some(csv_path), &report.to_csv(), out)?;
    }
    emit(args.output.as_deref().or(file.output.as_deref()), &(report.to_json() + "\n"), out)
}

pub fn constants(args: &ConstantsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(args.gamma || args.eta || args.mu) {
        return Err(CliError::Usage("choose at least one of --gamma, --eta, --mu".into()));
    }
    if args.g != "triangular" {
        return Err(CliError::Usage(format!("unknown weight function {:?}; only triangular is built in", args.g)));
    }
    let g = WeightSpec::triangular();
    let need_h = || -> Result<Hurst, CliError> {
        let h = args.h.ok_or_else(|| CliError::Usage("--h is required".into()))?;
        Ok(Hurst::new(h)?)
    };
    let mut text = String::new();
    if args.gamma {
        let h = need_h()?;
        let r = args.r.ok_or_else(|| CliError::Usage("--gamma needs --r".into()))?;
        let _ = writeln!(text, "gamma H={} r={r} {:.12}", h.value(), gamma_h(h, r));
    }
    if args.eta {
        let h = need_h()?;
        let _ = writeln!(text, "eta g={} H={} {:.12}", args.g, h.value(), eta_g(&g, h)?);
        if let Some(k) = args.k {
            let _ = writeln!(text, "eta_discrete g={} H={} k={k} {:.12}", args.g, h.value(), eta_g_discrete(&g, h, k)?);
        }
    }
    if args.mu {
        let v1 = args.v1.ok_or_else(|| CliError::Usage("--mu needs --v1".into()))?;
        let v2 = args.v2.ok_or_else(|| CliError::Usage("--mu needs --v2".into()))?;
        let (name, f) = match args.f {
            TestFunctionArg::Square => ("square", TestFunction::Square),
            TestFunctionArg::SquareMinusHalfY => ("square_minus_half_y", TestFunction::SquareMinusHalfY),
        };
        let _ = writeln!(text, "mu f={name} v1={v1} v2={v2} {:.12}", mu_f(&f, v1, v2)?);
    }
    emit(None, &text, out)
}
