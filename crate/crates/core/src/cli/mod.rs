//! Command-line front end of the `ia-sim` binary.

mod args;
mod plot;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

pub use args::{
    parse_args, parse_config_text, parse_receivers, parse_snr_grid, CliError, CliInvocation, Grid, PlotArgs,
    SweepArgs, Threads, VerifyArgs, OUT_DIR_ENV,
};
pub use plot::{collect_series, emit_plot, render_svg, Series};

use crate::harness::{calibrate_noise_grid, run_sweep_with_threads, write_csv, write_metadata, SweepConfig, UserSel};
use crate::verify::{run_all, VerifyConfig};
use crate::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

/// Base name of the sweep outputs, e.g. `ser_n5_trunc_0.8_1.4_qam4`.
pub fn output_stem(cfg: &SweepConfig) -> String {
    let model = match cfg.model {
        crate::channel::ChannelModel::UnitModulus => "unit".to_string(),
        crate::channel::ChannelModel::TruncatedGaussian { lo, hi } => format!("trunc_{lo}_{hi}"),
    };
    format!("ser_n{}_{}_{}", cfg.n, model, cfg.constellation_tag())
}

/// Turns parsed sweep arguments into a config, calibrating the grid when it
/// is given as target SNRs.
pub fn sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = SweepConfig {
        n: a.n,
        model: a.model,
        constellation_order: a.constellation_order,
        receivers: a.receivers.clone(),
        trials_per_point: a.trials,
        base_seed: a.seed,
        node_budget: a.node_budget,
        search_domain: a.search_domain,
        ..Default::default()
    };
    match &a.grid {
        Grid::NoiseStd(v) => cfg.noise_std = v.clone(),
        Grid::TargetSnrDb(t) => {
            cfg.noise_std = calibrate_noise_grid(&cfg, t, a.pilot_trials.unwrap_or(a.trials))?;
            cfg.target_snr_db = Some(t.clone());
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a sweep and writes `<stem>.csv` and `<stem>.meta.txt` into the
/// output directory. Returns the CSV path.
pub fn run_sweep_command(a: &SweepArgs) -> Result<PathBuf> {
    let cfg = sweep_config(a)?;
    let threads = match a.threads {
        Threads::Auto => 0,
        Threads::Fixed(k) => k,
    };
    let res = run_sweep_with_threads(&cfg, threads)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let stem = output_stem(&cfg);
    let csv = a.out.join(format!("{stem}.csv"));
    write_csv(&res, &csv)?;
    write_metadata(&res, &a.out.join(format!("{stem}.meta.txt")))?;
    for p in &res.points {
        let cells: Vec<String> = cfg
            .receivers
            .iter()
            .filter_map(|&r| p.cell(r, UserSel::All).map(|c| format!("{}={:.3e}", r.name(), c.ser)))
            .collect();
        println!("snr {:7.2} dB  {}", p.measured_snr_db, cells.join("  "));
    }
    println!(
        "{} trials completed, {} aborted, {} resamples; wrote {}",
        res.trials_completed,
        res.aborted_trials,
        res.resample_count,
        csv.display()
    );
    Ok(csv)
}

/// Runs the oracle suite; `Ok(true)` when every property passed.
pub fn run_verify_command(a: &VerifyArgs) -> Result<bool> {
    let cfg = VerifyConfig {
        n: a.n,
        model: a.model,
        constellation_order: a.constellation_order,
        instances: a.trials,
        seed: a.seed,
    };
    let reports = run_all(&cfg)?;
    for r in &reports {
        println!("{r}");
    }
    Ok(reports.iter().all(|r| r.passed))
}

/// Parses `argv`, runs the subcommand and maps the outcome to an exit code.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_args(argv) {
        Ok(inv) => inv,
        Err(CliError::Display(text)) => {
            print!("{text}");
            return ExitCode::from(EXIT_OK);
        }
        Err(e) => {
            eprintln!("ia-sim: {e}");
            eprintln!("run 'ia-sim --help' for usage");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match &inv {
        CliInvocation::Sweep(a) => run_sweep_command(a).map(|_| EXIT_OK),
        CliInvocation::Verify(a) => run_verify_command(a).map(|ok| if ok { EXIT_OK } else { EXIT_VERIFY_FAILED }),
        CliInvocation::Plot(a) => emit_plot(&a.csv, &a.out).map(|_| {
            println!("wrote {}", a.out.display());
            EXIT_OK
        }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ia-sim: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
