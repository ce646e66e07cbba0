//! Frequency-sweep analysis of a real sampled series.
//!
//! For each target spacing `Δ` the series is split into `Δ/sample_dt`
//! phase-shifted sub-series, cut into blocks (one hour by default), and each
//! block is estimated per phase and averaged over phases. Each block is
//! rescaled to the unit time interval, so a phase path with spacing `Δ` gets
//! `dt = Δ / block_length`; block-level `Ĉ` and `Π̂` are therefore integrated
//! quantities per block in rescaled time, and `time_unit_s` in the report
//! records the block length needed to convert them back.

use std::fmt::Write as _;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_all, EstimationOptions};
use crate::simulate::SampledPath;

const SPACING_TOLERANCE: f64 = 1e-6;
const MULTIPLE_TOLERANCE: f64 = 1e-9;
/// Fewest observations a phase path may have inside one block.
pub const MIN_PHASE_OBSERVATIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    /// Index in `values` of the first observation after the gap.
    pub index: usize,
    /// Number of missing grid points.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub sample_dt: f64,
    pub values: Vec<f64>,
    pub start_time: Option<String>,
    pub gaps: Vec<Gap>,
}

impl RawSeries {
    /// A gap-free series.
    pub fn new(sample_dt: f64, values: Vec<f64>) -> Result<Self> {
        let s = Self { sample_dt, values, start_time: None, gaps: Vec::new() };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("series has no values".into()));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return Err(Error::Config("sample_dt must be positive".into()));
        }
        if self.gaps.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(Error::Config("gap indices must increase strictly".into()));
        }
        Ok(())
    }

    /// Length of the underlying time grid including missing points.
    pub fn grid_len(&self) -> usize {
        self.values.len() + self.gaps.iter().map(|g| g.length).sum::<usize>()
    }

    /// Missing grid ranges `[start, end)`.
    fn missing_ranges(&self) -> Vec<(usize, usize)> {
        let mut shift = 0;
        self.gaps
            .iter()
            .map(|g| {
                let start = g.index + shift;
                shift += g.length;
                (start, start + g.length)
            })
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadOptions {
    /// Sample spacing in seconds; required when the input has no timestamps.
    pub dt: Option<f64>,
    pub value_col: Option<String>,
    pub timestamp_col: Option<String>,
}

fn format_err(row: usize, message: impl Into<String>) -> Error {
    Error::Format { row, message: message.into() }
}

type Instant = chrono::DateTime<chrono::FixedOffset>;

/// Seconds for a timestamp cell. RFC 3339 stamps are measured from the first
/// one seen, which keeps sub-second spacing exact for epoch-scale dates.
fn parse_timestamp(cell: &str, row: usize, origin: &mut Option<Instant>) -> Result<f64> {
    if let Ok(v) = cell.parse::<f64>() {
        return Ok(v);
    }
    let dt = chrono::DateTime::parse_from_rfc3339(cell)
        .map_err(|e| format_err(row, format!("unparseable timestamp {cell:?}: {e}")))?;
    let start = *origin.get_or_insert(dt);
    let offset = dt - start;
    Ok(offset.num_seconds() as f64 + f64::from(offset.subsec_nanos()) * 1e-9)
}

/// Reads a CSV series: either a single value column (spacing from
/// `opts.dt`) or `timestamp,value` columns with timestamps in seconds or
/// RFC 3339. A header row is detected when the value cell of the first row is
/// not numeric. Timestamp jumps that are whole multiples of the spacing are
/// recorded as gaps.
pub fn load_series<R: Read>(source: R, opts: &LoadOptions) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            format_err(row, e.to_string())
        })?;
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec));
    }
    let Some((first_line, first)) = records.first() else {
        return Err(format_err(0, "empty input"));
    };

    let columns = first.len();
    let named = opts.value_col.is_some() || opts.timestamp_col.is_some();
    let default_value_idx = columns - 1;
    let has_header = named || first.get(default_value_idx).is_some_and(|c| c.parse::<f64>().is_err());

    let (value_idx, ts_idx) = if has_header {
        let find = |name: &str| first.iter().position(|h| h.eq_ignore_ascii_case(name));
        let value_name = opts.value_col.as_deref().unwrap_or("value");
        let value_idx = match find(value_name) {
            Some(i) => i,
            None if columns == 1 && opts.value_col.is_none() => 0,
            None => {
                return Err(format_err(*first_line, format!("no column named {value_name:?}")))
            }
        };
        let ts_idx = match &opts.timestamp_col {
            Some(name) => Some(
                find(name).ok_or_else(|| format_err(*first_line, format!("no column named {name:?}")))?,
            ),
            None => ["timestamp", "time", "t"].iter().find_map(|n| find(n)),
        };
        (value_idx, ts_idx)
    } else {
        match columns {
            1 => (0, None),
            2 => (1, Some(0)),
            c => {
                return Err(format_err(
                    *first_line,
                    format!("{c} unnamed columns; pass a value column name"),
                ))
            }
        }
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(format_err(*first_line, "no data rows"));
    }
    let mut values = Vec::with_capacity(body.len());
    let mut stamps = Vec::new();
    let mut start_time = None;
    let mut origin = None;
    for (line, rec) in body {
        let cell = rec.get(value_idx).ok_or_else(|| format_err(*line, "missing value cell"))?;
        let v: f64 = cell
            .parse()
            .map_err(|_| format_err(*line, format!("unparseable value {cell:?}")))?;
        if !v.is_finite() {
            return Err(format_err(*line, format!("non-finite value {cell:?}")));
        }
        values.push(v);
        if let Some(ti) = ts_idx {
            let cell = rec.get(ti).ok_or_else(|| format_err(*line, "missing timestamp cell"))?;
            let t = parse_timestamp(cell, *line, &mut origin)?;
            if origin.is_some() && start_time.is_none() {
                start_time = Some(cell.to_string());
            }
            stamps.push((*line, t));
        }
    }

    let mut gaps = Vec::new();
    let sample_dt = if stamps.is_empty() {
        opts.dt
            .ok_or_else(|| format_err(*first_line, "no timestamp column; a sample spacing (dt) is required"))?
    } else {
        let dt = match opts.dt {
            Some(dt) => dt,
            None if stamps.len() >= 2 => stamps[1].1 - stamps[0].1,
            None => {
                return Err(format_err(stamps[0].0, "cannot infer spacing from one timestamp"))
            }
        };
        if !(dt > 0.0) {
            return Err(format_err(stamps[0].0, format!("non-positive spacing {dt}")));
        }
        for (i, pair) in stamps.windows(2).enumerate() {
            let (line, t) = pair[1];
            let steps = (t - pair[0].1) / dt;
            let whole = steps.round();
            if whole < 1.0 || (steps - whole).abs() > SPACING_TOLERANCE * whole {
                return Err(format_err(
                    line,
                    format!("timestamp {t} breaks the uniform spacing {dt} ({steps:.6} steps)"),
                ));
            }
            if whole > 1.0 {
                gaps.push(Gap { index: i + 1, length: whole as usize - 1 });
            }
        }
        dt
    };
    if !(sample_dt > 0.0 && sample_dt.is_finite()) {
        return Err(format_err(*first_line, format!("invalid spacing {sample_dt}")));
    }
    let series = RawSeries { sample_dt, values, start_time, gaps };
    series.validate()?;
    Ok(series)
}

fn integer_ratio(numerator: f64, denominator: f64, what: &str) -> Result<usize> {
    let ratio = numerator / denominator;
    let whole = ratio.round();
    if whole < 1.0 || (ratio - whole).abs() > MULTIPLE_TOLERANCE * whole {
        return Err(Error::Config(format!(
            "{what} {numerator} is not a positive integer multiple of {denominator}"
        )));
    }
    Ok(whole as usize)
}

/// Splits into `m = Δ/sample_dt` phase-shifted sub-series; phase `p` holds
/// indices `p, p+m, p+2m, …` and has spacing `Δ`.
pub fn subsample_split(series: &RawSeries, delta: f64) -> Result<Vec<SampledPath>> {
    let m = integer_ratio(delta, series.sample_dt, "delta")?;
    split_phases(&series.values, m, delta)
}

fn split_phases(values: &[f64], m: usize, dt: f64) -> Result<Vec<SampledPath>> {
    (0..m)
        .map(|p| {
            let phase: Vec<f64> = values.iter().skip(p).step_by(m).copied().collect();
            SampledPath::new(dt, phase, format!("phase {p}/{m}"))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub h: f64,
    pub c: f64,
    pub pi: f64,
    pub phases_used: usize,
    pub phases_failed: usize,
}

/// Estimates every phase over its full length and averages `Ĥ`, `Ĉ`, `Π̂`
/// across the phases that succeed.
pub fn analyze_block(phases: &[SampledPath], opts: &EstimationOptions) -> Result<BlockEstimate> {
    let mut sums = (0.0, 0.0, 0.0);
    let mut used = 0;
    let mut last_err = None;
    for phase in phases {
        let t_end = (phase.len() - 1) as f64 * phase.dt;
        match estimate_all(phase, opts, t_end) {
            Ok(r) => {
                sums.0 += r.h_hat;
                sums.1 += r.c_hat;
                sums.2 += r.pi_hat;
                used += 1;
            }
            Err(e) => last_err = Some(e),
        }
    }
    if used == 0 {
        return Err(last_err.unwrap_or_else(|| Error::Config("block has no phases".into())));
    }
    let count = used as f64;
    Ok(BlockEstimate {
        h: sums.0 / count,
        c: sums.1 / count,
        pi: sums.2 / count,
        phases_used: used,
        phases_failed: phases.len() - used,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Target spacings in seconds.
    pub deltas: Vec<f64>,
    /// Block duration in seconds.
    pub block_length: f64,
    pub opts: EstimationOptions,
    pub with_preavg: bool,
    pub kappa_zero_baseline: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas: (1..=30).map(f64::from).collect(),
            block_length: 3600.0,
            opts: EstimationOptions::default(),
            with_preavg: true,
            kappa_zero_baseline: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self, sample_dt: f64) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::Config("at least one delta is required".into()));
        }
        self.opts.validate()?;
        let block = integer_ratio(self.block_length, sample_dt, "block_length")?;
        for &d in &self.deltas {
            let m = integer_ratio(d, sample_dt, "delta")?;
            if block / m < MIN_PHASE_OBSERVATIONS {
                return Err(Error::Config(format!(
                    "block_length {} s leaves fewer than {MIN_PHASE_OBSERVATIONS} observations per phase at delta {d} s",
                    self.block_length
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    /// Seconds from the start of the series.
    pub start: f64,
    pub h: Option<f64>,
    pub c: Option<f64>,
    pub pi: Option<f64>,
    pub phases_failed: usize,
    /// `ok`, `gap` (skipped because it contains missing points) or `failed`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub delta_s: f64,
    pub blocks: Vec<BlockReport>,
    /// Mean of the block `Ĥ` values.
    pub day_h: Option<f64>,
    /// Sum of the block `Ĉ` values.
    pub day_c: Option<f64>,
    /// Sum of the block `Π̂` values.
    pub day_pi: Option<f64>,
    pub blocks_failed: usize,
    pub blocks_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub per_delta: Vec<DeltaReport>,
    pub mean_h_across_deltas: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    /// Seconds per rescaled time unit (the block length).
    pub time_unit_s: f64,
    #[serde(flatten)]
    pub main: SweepSection,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub baseline: Option<SweepSection>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `(section, delta, block)`; missing estimates are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,delta_s,block,start_s,h,c,pi,phases_failed,status\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let sections = std::iter::once(("main", &self.main))
            .chain(self.baseline.as_ref().map(|b| ("baseline", b)));
        for (name, section) in sections {
            for d in &section.per_delta {
                for (i, b) in d.blocks.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{name},{},{i},{},{},{},{},{},{}",
                        d.delta_s,
                        b.start,
                        cell(b.h),
                        cell(b.c),
                        cell(b.pi),
                        b.phases_failed,
                        b.status
                    );
                }
            }
        }
        out
    }
}

struct BlockLayout {
    /// Grid start of each full block and the value index it maps to, or `None` if it contains a gap.
    blocks: Vec<(usize, Option<usize>)>,
    block_len: usize,
}

fn layout_blocks(series: &RawSeries, block_len: usize) -> BlockLayout {
    let missing = series.missing_ranges();
    let count = series.grid_len() / block_len;
    let blocks = (0..count)
        .map(|b| {
            let (lo, hi) = (b * block_len, (b + 1) * block_len);
            if missing.iter().any(|&(s, e)| s < hi && e > lo) {
                return (lo, None);
            }
            let shift: usize = missing.iter().filter(|&&(_, e)| e <= lo).map(|&(s, e)| e - s).sum();
            (lo, Some(lo - shift))
        })
        .collect();
    BlockLayout { blocks, block_len }
}

fn sweep_section(
    series: &RawSeries,
    cfg: &SweepConfig,
    opts: &EstimationOptions,
    layout: &BlockLayout,
) -> Result<SweepSection> {
    let time_unit = cfg.block_length;
    let work: Vec<(usize, usize)> = (0..cfg.deltas.len())
        .flat_map(|d| (0..layout.blocks.len()).map(move |b| (d, b)))
        .collect();
    let results: Vec<BlockReport> = work
        .par_iter()
        .map(|&(d, b)| {
            let delta = cfg.deltas[d];
            let (grid_start, value_start) = layout.blocks[b];
            let start = grid_start as f64 * series.sample_dt;
            let Some(v0) = value_start else {
                return Ok(BlockReport { start, h: None, c: None, pi: None, phases_failed: 0, status: "gap".into() });
            };
            let m = integer_ratio(delta, series.sample_dt, "delta")?;
            let block = &series.values[v0..v0 + layout.block_len];
            let phases = split_phases(block, m, delta / time_unit)?;
            Ok(match analyze_block(&phases, opts) {
                Ok(e) => BlockReport {
                    start,
                    h: Some(e.h),
                    c: Some(e.c),
                    pi: Some(e.pi),
                    phases_failed: e.phases_failed,
                    status: "ok".into(),
                },
                Err(e) => {
                    log::debug!("delta {delta} s, block at {start} s failed: {e}");
                    BlockReport { start, h: None, c: None, pi: None, phases_failed: m, status: "failed".into() }
                }
            })
        })
        .collect::<Result<_>>()?;

    let nblocks = layout.blocks.len();
    let per_delta: Vec<DeltaReport> = cfg
        .deltas
        .iter()
        .enumerate()
        .map(|(d, &delta_s)| {
            let blocks = results[d * nblocks..(d + 1) * nblocks].to_vec();
            let ok: Vec<&BlockReport> = blocks.iter().filter(|b| b.h.is_some()).collect();
            let (day_h, day_c, day_pi) = if ok.is_empty() {
                (None, None, None)
            } else {
                let h = ok.iter().filter_map(|b| b.h).sum::<f64>() / ok.len() as f64;
                (
                    Some(h),
                    Some(ok.iter().filter_map(|b| b.c).sum()),
                    Some(ok.iter().filter_map(|b| b.pi).sum()),
                )
            };
            DeltaReport {
                delta_s,
                day_h,
                day_c,
                day_pi,
                blocks_failed: blocks.iter().filter(|b| b.status == "failed").count(),
                blocks_skipped: blocks.iter().filter(|b| b.status == "gap").count(),
                blocks,
            }
        })
        .collect();
    let hs: Vec<f64> = per_delta.iter().filter_map(|d| d.day_h).collect();
    let mean_h_across_deltas = (!hs.is_empty()).then(|| hs.iter().sum::<f64>() / hs.len() as f64);
    Ok(SweepSection { per_delta, mean_h_across_deltas })
}

/// Runs the sweep over every delta and block, plus an optional `κ = 0` baseline.
pub fn frequency_sweep(series: &RawSeries, cfg: &SweepConfig) -> Result<SweepReport> {
    series.validate()?;
    cfg.validate(series.sample_dt)?;
    let block_len = integer_ratio(cfg.block_length, series.sample_dt, "block_length")?;
    let layout = layout_blocks(series, block_len);
    if layout.blocks.is_empty() {
        return Err(Error::Config(format!(
            "series spans {} s, shorter than one block of {} s",
            series.grid_len() as f64 * series.sample_dt,
            cfg.block_length
        )));
    }
    let no_preavg = EstimationOptions { fixed_kappa: Some(0.0), ..cfg.opts.clone() };
    let main_opts = if cfg.with_preavg { cfg.opts.clone() } else { no_preavg.clone() };
    let main = sweep_section(series, cfg, &main_opts, &layout)?;
    let baseline = if cfg.kappa_zero_baseline {
        Some(sweep_section(series, cfg, &no_preavg, &layout)?)
    } else {
        None
    };
    Ok(SweepReport { config: cfg.clone(), time_unit_s: cfg.block_length, main, baseline })
}
