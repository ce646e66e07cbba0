//! Command-line front end: `simulate`, `estimate`, `mc`, `analyze` and
//! `constants`. Exit codes: 0 success, 1 domain error, 2 usage error.

pub mod args;
mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::ConfigFile;
use crate::error::{CliError, EXIT_USAGE};

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("FRACNOISE_LOG")
        .format_timestamp(None)
        .try_init();
}

fn dispatch(cli: &Cli, cfg: &ConfigFile, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, cfg, out),
        Command::Estimate(a) => commands::estimate(a, cfg, out),
        Command::Mc(a) => commands::mc(a, cfg, out),
        Command::Analyze(a) => commands::analyze(a, cfg, out),
        Command::Constants(a) => commands::constants(a, out),
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile { schema_version: config::SCHEMA_VERSION, ..ConfigFile::default() },
    };
    match cli.threads.or(cfg.threads) {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Domain(format!("cannot start {threads} worker threads: {e}")))?;
            // Output is buffered so the worker pool never touches `out`.
            let mut buf = Vec::new();
            pool.install(|| dispatch(&cli, &cfg, &mut buf))?;
            out.write_all(&buf)
                .map_err(|e| CliError::Domain(format!("cannot write output: {e}")))
        }
        None => dispatch(&cli, &cfg, out),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Results go to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    init_logging(cli.verbose);
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("fracnoise").chain(args.iter().copied());
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn golden_path(name: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
    }

    #[test]
    fn help_matches_golden_files() {
        let update = std::env::var_os("UPDATE_GOLDEN").is_some();
        for sub in ["", "simulate", "estimate", "mc", "analyze", "constants"] {
            let args: Vec<&str> = [sub, "--help"].into_iter().filter(|s| !s.is_empty()).collect();
            let (code, help, _) = call(&args);
            assert_eq!(code, 0);
            let name = if sub.is_empty() { "help.txt".to_string() } else { format!("{sub}_help.txt") };
            let path = golden_path(&name);
            if update {
                std::fs::write(&path, &help).unwrap();
            }
            let expected = std::fs::read_to_string(&path)
                .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
            assert_eq!(help, expected, "{name} differs from its golden file");
        }
    }

    #[test]
    fn help_lists_every_flag() {
        use clap::CommandFactory;
        let root = Cli::command();
        for sub in root.get_subcommands() {
            let (_, help, _) = call(&[sub.get_name(), "--help"]);
            for arg in sub.get_arguments().chain(root.get_arguments()) {
                if let Some(long) = arg.get_long() {
                    assert!(help.contains(&format!("--{long}")), "{} --help lacks --{long}", sub.get_name());
                }
            }
        }
    }

    #[test]
    fn usage_errors_exit_with_two() {
        let (code, _, err) = call(&["estimate", "missing.csv"]);
        assert_eq!(code, 2);
        assert!(err.contains("missing.csv"), "{err}");
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["simulate", "--h", "1.5"]).0, 2);
        assert_eq!(call(&["simulate"]).0, 2);
        assert_eq!(call(&["constants"]).0, 2);
        assert_eq!(call(&["constants", "--eta", "--g", "cosine", "--h", "0.5"]).0, 2);
        assert_eq!(call(&["mc", "--h", "0.5", "--threads", "0"]).0, 2);
        let (code, _, err) = call(&["mc", "--config", "absent.toml", "--h", "0.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("absent.toml"));
    }

    #[test]
    fn domain_errors_exit_with_one() {
        let (code, _, err) = call(&["constants", "--mu", "--v1=-1", "--v2", "0"]);
        assert_eq!(code, 1, "{err}");
        let dir = tempfile::tempdir().unwrap();
        let flat = dir.path().join("flat.csv");
        std::fs::write(&flat, "value\n".to_string() + &"1.0\n".repeat(2000)).unwrap();
        let (code, _, err) = call(&["estimate", flat.to_str().unwrap(), "--dt", "0.001"]);
        assert_eq!(code, 1, "{err}");
        let garbled = dir.path().join("garbled.csv");
        std::fs::write(&garbled, "value\n1.0\nabc\n").unwrap();
        let (code, _, err) = call(&["estimate", garbled.to_str().unwrap(), "--dt", "0.1"]);
        assert_eq!(code, 1);
        assert!(err.contains("row 3"), "{err}");
    }

    #[test]
    fn constants_output() {
        let (code, out, _) = call(&["constants", "--eta", "--g", "triangular", "--h", "0.5", "--k", "4096"]);
        assert_eq!(code, 0);
        let value = |line: &str| line.rsplit(' ').next().unwrap().parse::<f64>().unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert!((value(lines[0]) - 1.0 / 3.0).abs() < 1e-6);
        assert!((value(lines[1]) - 1.0 / 3.0).abs() < 1e-3);
        let (_, out, _) = call(&["constants", "--gamma", "--h", "0.75", "--r", "1"]);
        assert!((value(out.trim()) - 0.414_213_562_373).abs() < 1e-9);
        let (_, out, _) = call(&["constants", "--mu", "--f", "square_minus_half_y", "--v1", "0.7", "--v2", "0.2"]);
        assert!((value(out.trim()) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn simulate_then_estimate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("path.csv");
        let p = path.to_str().unwrap();
        let (code, _, err) = call(&["simulate", "--h", "0.4", "--n", "4096", "--rho", "0.001", "--seed", "1", "-o", p]);
        assert_eq!(code, 0, "{err}");
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,value\n0,"));
        assert_eq!(text.lines().count(), 4098);

        let (code, out, err) = call(&["estimate", p, "--format", "json"]);
        assert_eq!(code, 0, "{err}");
        let r: fracnoise::EstimationResult = serde_json::from_str(&out).unwrap();
        assert!((r.h_hat - 0.4).abs() < 0.1, "{}", r.h_hat);
        assert_eq!(r.iterations.last().unwrap().h, r.h_hat);
        let (code, out, _) = call(&["estimate", p]);
        assert_eq!(code, 0);
        assert!(out.starts_with("H_hat"));
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "schema_version = 1\n[simulate]\nh = 0.3\nn = 100\nseed = 9\n").unwrap();
        let c = cfg.to_str().unwrap();
        let (code, from_file, _) = call(&["simulate", "--config", c]);
        assert_eq!(code, 0);
        assert_eq!(from_file.lines().count(), 102);
        let (_, overridden, _) = call(&["simulate", "--config", c, "--n", "50"]);
        assert_eq!(overridden.lines().count(), 52);
        let (_, again, _) = call(&["simulate", "--config", c]);
        assert_eq!(from_file, again);

        std::fs::write(&cfg, "schema_version = 1\n[simulate]\nhurst = 0.3\n").unwrap();
        let (code, _, err) = call(&["simulate", "--config", c]);
        assert_eq!(code, 2);
        assert!(err.contains("hurst"), "{err}");
    }

    #[test]
    fn mc_csv_shape() {
        let (code, out, err) = call(&["mc", "--h", "0.3,0.7", "--reps", "4", "--n", "2000", "--seed", "1"]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], fracnoise::montecarlo::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.3"));
    }

    #[test]
    fn analyze_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let series = dir.path().join("series.csv");
        let mut text = String::new();
        let mut cfg = fracnoise::SimConfig::new(fracnoise::Hurst::new(0.33).unwrap(), 600, 1.0);
        cfg.rho = fracnoise::Schedule::Constant(0.1);
        for v in fracnoise::simulate::synthesize_observations(&cfg).unwrap().values {
            text.push_str(&format!("{v}\n"));
        }
        std::fs::write(&series, text).unwrap();
        let report = dir.path().join("report.json");
        let rows = dir.path().join("rows.csv");
        let (code, _, err) = call(&[
            "analyze",
            series.to_str().unwrap(),
            "--dt",
            "0.1",
            "--deltas",
            "0.1,0.2",
            "--block-length",
            "30",
            "--baseline",
            "-o",
            report.to_str().unwrap(),
            "--csv",
            rows.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["per_delta"].as_array().unwrap().len(), 2);
        assert!(json["baseline"].is_object());
        assert_eq!(std::fs::read_to_string(&rows).unwrap().lines().count(), 1 + 2 * 2 * 2);
    }
}
