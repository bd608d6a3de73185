use std::io::Write;
use std::path::Path;

use crate::receivers::ReceiverKind;
use crate::{Error, Result};

use super::sweep::SweepResult;

pub const CSV_HEADER: [&str; 13] = [
    "n",
    "channel_model",
    "lo",
    "hi",
    "constellation",
    "receiver",
    "user",
    "noise_std",
    "measured_snr_db",
    "symbols_sent",
    "symbol_errors",
    "ser",
    "ci95_half_width",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: usize,
    pub channel_model: String,
    pub lo: f64,
    pub hi: f64,
    pub constellation: String,
    pub receiver: ReceiverKind,
    /// `"1"`, `"2"`, `"3"` or `"all"`.
    pub user: String,
    pub noise_std: f64,
    pub measured_snr_db: f64,
    pub symbols_sent: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    pub ci95_half_width: f64,
}

/// Writes one row per grid point × receiver × user (plus `all`), grid-major.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let cfg = &result.config;
    let (lo, hi) = cfg.model.bounds();
    for point in &result.points {
        for cell in &point.cells {
            w.write_record([
                cfg.n.to_string(),
                cfg.model.tag().to_string(),
                fmt_f64(lo),
                fmt_f64(hi),
                cfg.constellation_tag(),
                cell.receiver.name().to_string(),
                cell.user.to_string(),
                fmt_f64(point.noise_std),
                fmt_f64(point.measured_snr_db),
                cell.symbols_sent.to_string(),
                cell.symbol_errors.to_string(),
                fmt_f64(cell.ser),
                fmt_f64(cell.ci95_half_width()),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    let header = r.headers().map_err(|source| Error::Csv { path: path.to_path_buf(), source })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::SchemaMismatch { row: 0, message: format!("unexpected header {header:?}") });
    }
    let mut rows = vec![];
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::SchemaMismatch { row, message: e.to_string() })?;
        let bad = |field: &str| Error::SchemaMismatch { row, message: format!("cannot parse {field}") };
        let f = |idx: usize| -> Result<f64> { rec[idx].parse().map_err(|_| bad(CSV_HEADER[idx])) };
        let u = |idx: usize| -> Result<u64> { rec[idx].parse().map_err(|_| bad(CSV_HEADER[idx])) };
        rows.push(CsvRow {
            n: u(0)? as usize,
            channel_model: rec[1].to_string(),
            lo: f(2)?,
            hi: f(3)?,
            constellation: rec[4].to_string(),
            receiver: ReceiverKind::parse(&rec[5]).ok_or_else(|| bad("receiver"))?,
            user: rec[6].to_string(),
            noise_std: f(7)?,
            measured_snr_db: f(8)?,
            symbols_sent: u(9)?,
            symbol_errors: u(10)?,
            ser: f(11)?,
            ci95_half_width: f(12)?,
        });
    }
    Ok(rows)
}

/// Sidecar `key = value` file with the full configuration and counters.
pub fn write_metadata(result: &SweepResult, path: &Path) -> Result<()> {
    let cfg = &result.config;
    let (lo, hi) = cfg.model.bounds();
    let receivers: Vec<&str> = cfg.receivers.iter().map(|r| r.name()).collect();
    let grid: Vec<String> = cfg.noise_std.iter().map(|&s| fmt_f64(s)).collect();
    let mut lines = vec![
        format!("software = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        "rng = ChaCha8 (seed_from_u64), trial seeds SplitMix64(base_seed ^ (i+1)*0x9E3779B97F4A7C15)".to_string(),
        format!("n = {}", cfg.n),
        format!("block_length = {}", 2 * cfg.n + 1),
        format!("model = {}", cfg.model.tag()),
        format!("lo = {}", fmt_f64(lo)),
        format!("hi = {}", fmt_f64(hi)),
        format!("constellation = {}", cfg.constellation_tag()),
        format!("receivers = {}", receivers.join(",")),
        format!("noise_std = {}", grid.join(",")),
        format!("trials_per_point = {}", cfg.trials_per_point),
        format!("seed = {}", cfg.base_seed),
        format!("gap_tol = {}", fmt_f64(cfg.gap_tol)),
        format!("node_budget = {}", cfg.node_budget),
        format!("max_resamples_per_trial = {}", cfg.max_resamples_per_trial),
        format!("search_domain = {:?}", cfg.search_domain),
    ];
    if let Some(t) = &cfg.target_snr_db {
        let t: Vec<String> = t.iter().map(|v| v.to_string()).collect();
        lines.push(format!("target_snr_db = {}", t.join(",")));
    }
    lines.extend([
        format!("mean_power_user1 = {}", fmt_f64(result.mean_power[0])),
        format!("mean_power_user2 = {}", fmt_f64(result.mean_power[1])),
        format!("mean_power_user3 = {}", fmt_f64(result.mean_power[2])),
        format!("trials_completed = {}", result.trials_completed),
        format!("aborted_trials = {}", result.aborted_trials),
        format!("resample_count = {}", result.resample_count),
        format!("degenerate_count = {}", result.degenerate_count),
        format!("singular_count = {}", result.singular_count),
        format!("budget_exceeded_count = {}", result.budget_exceeded_count),
        format!("clipped_count = {}", result.clipped_count),
    ]);
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for line in lines {
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
