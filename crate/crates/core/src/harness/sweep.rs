use rayon::prelude::*;

use crate::receivers::ReceiverKind;
use crate::rng::derive_seed;
use crate::{Error, Result};

use super::stats::wilson_interval;
use super::trial::{alphabets, prepare_trial, run_prepared, TrialOutcome};
use super::SweepConfig;

/// Which user a row aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserSel {
    One(usize),
    All,
}

impl std::fmt::Display for UserSel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UserSel::One(u) => write!(f, "{u}"),
            UserSel::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub receiver: ReceiverKind,
    pub user: UserSel,
    pub symbols_sent: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CellResult {
    fn new(receiver: ReceiverKind, user: UserSel, symbols_sent: u64, symbol_errors: u64) -> Self {
        let ser = if symbols_sent == 0 { 0.0 } else { symbol_errors as f64 / symbols_sent as f64 };
        let (ci_low, ci_high) = wilson_interval(symbol_errors, symbols_sent);
        Self { receiver, user, symbols_sent, symbol_errors, ser, ci_low, ci_high }
    }

    pub fn ci95_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub noise_std: f64,
    pub measured_snr_db: f64,
    /// Receiver-major, then users 1, 2, 3 and the aggregate.
    pub cells: Vec<CellResult>,
    /// Decodes that hit the node budget, per receiver.
    pub budget_exceeded: Vec<u64>,
}

impl PointResult {
    pub fn cell(&self, receiver: ReceiverKind, user: UserSel) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.receiver == receiver && c.user == user)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub points: Vec<PointResult>,
    /// Mean realized per-subcarrier power of each user over completed trials.
    pub mean_power: [f64; 3],
    pub trials_completed: u64,
    pub aborted_trials: u64,
    pub resample_count: u64,
    pub degenerate_count: u64,
    pub singular_count: u64,
    pub budget_exceeded_count: u64,
    pub clipped_count: u64,
}

impl SweepResult {
    /// Mean power over users, the numerator of the measured SNR.
    pub fn mean_power_all(&self) -> f64 {
        self.mean_power.iter().sum::<f64>() / 3.0
    }

    /// `(measured SNR dB, aggregate SER cell)` per grid point for one receiver.
    pub fn curve(&self, receiver: ReceiverKind) -> Vec<(f64, &CellResult)> {
        self.points
            .iter()
            .filter_map(|p| p.cell(receiver, UserSel::All).map(|c| (p.measured_snr_db, c)))
            .collect()
    }
}

fn desired_symbols(n: usize) -> [u64; 3] {
    [(n + 1) as u64, n as u64, n as u64]
}

fn aggregate(cfg: &SweepConfig, outcomes: Vec<Result<TrialOutcome>>) -> Result<SweepResult> {
    let points = cfg.noise_std.len();
    let receivers = cfg.receivers.len();
    let mut errors = vec![vec![[0u64; 3]; receivers]; points];
    let mut budget = vec![vec![0u64; receivers]; points];
    let mut power_sum = [0.0f64; 3];
    let (mut completed, mut aborted) = (0u64, 0u64);
    let (mut resamples, mut degenerate, mut singular, mut clipped) = (0u64, 0u64, 0u64, 0u64);

    // fixed trial order keeps floating-point sums reproducible
    for outcome in outcomes {
        let out = match outcome {
            Ok(o) => o,
            Err(Error::ResampleBudgetExceeded { attempts }) => {
                aborted += 1;
                resamples += attempts as u64;
                continue;
            }
            Err(e) => return Err(e),
        };
        completed += 1;
        resamples += out.resamples as u64;
        degenerate += out.degenerate as u64;
        singular += out.singular as u64;
        clipped += out.clipped;
        for u in 0..3 {
            power_sum[u] += out.powers[u];
        }
        for p in 0..points {
            for r in 0..receivers {
                for u in 0..3 {
                    errors[p][r][u] += out.errors[p][r][u] as u64;
                }
                budget[p][r] += out.budget_exceeded[p][r] as u64;
            }
        }
    }

    let mean_power = if completed == 0 { [0.0; 3] } else { power_sum.map(|s| s / completed as f64) };
    let mean_all = mean_power.iter().sum::<f64>() / 3.0;
    let per_user = desired_symbols(cfg.n).map(|d| d * completed);

    let point_results = cfg
        .noise_std
        .iter()
        .enumerate()
        .map(|(p, &sigma)| {
            let mut cells = Vec::with_capacity(receivers * 4);
            for (r, &kind) in cfg.receivers.iter().enumerate() {
                for u in 0..3 {
                    cells.push(CellResult::new(kind, UserSel::One(u + 1), per_user[u], errors[p][r][u]));
                }
                cells.push(CellResult::new(kind, UserSel::All, per_user.iter().sum(), errors[p][r].iter().sum()));
            }
            PointResult {
                noise_std: sigma,
                measured_snr_db: 10.0 * (mean_all / (sigma * sigma)).log10(),
                cells,
                budget_exceeded: budget[p].clone(),
            }
        })
        .collect();

    Ok(SweepResult {
        config: cfg.clone(),
        points: point_results,
        mean_power,
        trials_completed: completed,
        aborted_trials: aborted,
        resample_count: resamples,
        degenerate_count: degenerate,
        singular_count: singular,
        budget_exceeded_count: budget.iter().flatten().sum(),
        clipped_count: clipped,
    })
}

/// Runs every trial of the sweep on the current rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let (c, cs) = alphabets(cfg)?;
    let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.trials_per_point)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.base_seed, i);
            let setup = prepare_trial(cfg, &c, &cs, seed)?;
            run_prepared(cfg, &setup, seed)
        })
        .collect();
    aggregate(cfg, outcomes)
}

/// [`run_sweep`] on a dedicated pool; `threads = 0` means one per core.
pub fn run_sweep_with_threads(cfg: &SweepConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

/// Noise levels that put the measured SNR at `targets_db` (ascending).
///
/// The pilot pass draws the channels and symbols of the first `pilot_trials`
/// trials exactly as the main pass will, and averages their realized power.
pub fn calibrate_noise_grid(cfg: &SweepConfig, targets_db: &[f64], pilot_trials: u64) -> Result<Vec<f64>> {
    if targets_db.is_empty() || targets_db.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("target SNRs must be non-empty and strictly increasing".into()));
    }
    if pilot_trials == 0 {
        return Err(Error::InvalidConfig("pilot pass needs at least one trial".into()));
    }
    let (c, cs) = alphabets(cfg)?;
    let powers: Vec<Result<[f64; 3]>> = (0..pilot_trials)
        .into_par_iter()
        .map(|i| prepare_trial(cfg, &c, &cs, derive_seed(cfg.base_seed, i)).map(|s| s.powers))
        .collect();
    let mut sum = 0.0;
    let mut count = 0u64;
    for p in powers {
        match p {
            Ok(p) => {
                sum += p.iter().sum::<f64>() / 3.0;
                count += 1;
            }
            Err(Error::ResampleBudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if count == 0 {
        return Err(Error::InvalidConfig("no pilot trial produced a usable channel".into()));
    }
    let mean = sum / count as f64;
    Ok(targets_db.iter().map(|db| (mean / 10f64.powf(db / 10.0)).sqrt()).collect())
}
