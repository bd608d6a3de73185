use crate::channel::ChannelRealization;
use crate::constellation::{make_qam, make_sum_set, Constellation, SumConstellation};
use crate::linalg::CVec;
use crate::mimo::{add_noise, build_equivalent, noiseless_received, realized_power, EquivalentChannel, TransmitBlock};
use crate::precoding::{build_precoders, PrecoderSet};
use crate::receivers::{build_projector, GlrtZf, LatticeDecoder, LinearZf, ReceiverKind};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

use super::SweepConfig;

/// XOR-ed into the trial seed before deriving the noise seed.
pub const NOISE_TAG: u64 = 0x6E6F_6973_655F_7A30;

#[derive(Debug, Clone)]
enum Prepared {
    LzfLinear(LinearZf),
    LzfGlrt(GlrtZf),
    Ld(LatticeDecoder),
}

/// Everything about a trial that does not depend on the noise level.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub channel: ChannelRealization,
    pub precoders: PrecoderSet,
    pub equivalent: [EquivalentChannel; 3],
    pub block: TransmitBlock,
    pub clean: [CVec; 3],
    pub powers: [f64; 3],
    /// Channel draws discarded before this one.
    pub resamples: u32,
    pub degenerate: u32,
    pub singular: u32,
    /// Decoders indexed `[receiver kind in config order][receiver k - 1]`.
    decoders: Vec<[Prepared; 3]>,
}

fn prepare_decoders(
    cfg: &SweepConfig,
    eq: &[EquivalentChannel; 3],
    c: &Constellation,
    cs: &SumConstellation,
) -> Result<Vec<[Prepared; 3]>> {
    let needs_projector = cfg.receivers.iter().any(|r| *r != ReceiverKind::Ld);
    let packs = if needs_projector {
        Some([build_projector(&eq[0])?, build_projector(&eq[1])?, build_projector(&eq[2])?])
    } else {
        None
    };
    cfg.receivers
        .iter()
        .map(|kind| {
            let build = |k: usize| -> Result<Prepared> {
                Ok(match kind {
                    ReceiverKind::LzfLinear => Prepared::LzfLinear(LinearZf::new(&packs.as_ref().unwrap()[k], c)?),
                    ReceiverKind::LzfGlrt => {
                        Prepared::LzfGlrt(GlrtZf::new(&packs.as_ref().unwrap()[k], c, cfg.node_budget)?)
                    }
                    ReceiverKind::Ld => {
                        Prepared::Ld(LatticeDecoder::new(&eq[k], c, cs, cfg.search_domain, cfg.node_budget)?)
                    }
                })
            };
            Ok([build(0)?, build(1)?, build(2)?])
        })
        .collect()
}

/// Draws a usable channel (redrawing on degenerate or singular realizations),
/// builds precoders, equivalent channels and decoders, and draws the symbol
/// block.
pub fn prepare_trial(
    cfg: &SweepConfig,
    c: &Constellation,
    cs: &SumConstellation,
    trial_seed: u64,
) -> Result<TrialSetup> {
    let mut degenerate = 0;
    let mut singular = 0;
    for attempt in 0..cfg.max_resamples_per_trial {
        let channel = cfg.model.sample(cfg.n, derive_seed(trial_seed, attempt as u64))?;
        let precoders = match build_precoders(&channel, cfg.gap_tol) {
            Ok(p) => p,
            Err(Error::DegenerateChannel { .. } | Error::RankDeficient { .. }) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let equivalent = (1..=3).map(|k| build_equivalent(&channel, &precoders, k)).collect::<Result<Vec<_>>>();
        let equivalent: [EquivalentChannel; 3] = match equivalent {
            Ok(v) => v.try_into().expect("three receivers"),
            Err(Error::SingularEquivalentChannel { .. }) => {
                singular += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let decoders = match prepare_decoders(cfg, &equivalent, c, cs) {
            Ok(d) => d,
            Err(
                Error::IllConditionedInterference { .. }
                | Error::IllConditionedProjectedChannel { .. }
                | Error::RankDeficientBasis { .. },
            ) => {
                singular += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let block = TransmitBlock::random(c, cfg.n, &mut stream_rng(trial_seed, 1));
        let clean = noiseless_received(&channel, &precoders, &block);
        let powers = realized_power(&precoders, &block);
        return Ok(TrialSetup {
            channel,
            precoders,
            equivalent,
            block,
            clean,
            powers,
            resamples: attempt,
            degenerate,
            singular,
            decoders,
        });
    }
    Err(Error::ResampleBudgetExceeded { attempts: cfg.max_resamples_per_trial })
}

/// Counts from one trial across the whole noise grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// Symbol errors `[grid point][receiver][user - 1]`.
    pub errors: Vec<Vec<[u32; 3]>>,
    /// Decodes that hit the node budget, `[grid point][receiver]`.
    pub budget_exceeded: Vec<Vec<u32>>,
    pub powers: [f64; 3],
    pub resamples: u32,
    pub degenerate: u32,
    pub singular: u32,
    pub clipped: u64,
}

pub(crate) fn run_prepared(cfg: &SweepConfig, setup: &TrialSetup, trial_seed: u64) -> Result<TrialOutcome> {
    let zeros: [CVec; 3] = std::array::from_fn(|_| CVec::zeros(2 * cfg.n + 1));
    let unit_noise = add_noise(&zeros, 1.0, derive_seed(trial_seed ^ NOISE_TAG, 0));
    let mut errors = Vec::with_capacity(cfg.noise_std.len());
    let mut budget_exceeded = Vec::with_capacity(cfg.noise_std.len());
    let mut clipped = 0u64;
    for &sigma in &cfg.noise_std {
        let y: [CVec; 3] = std::array::from_fn(|k| &setup.clean[k] + &unit_noise[k] * crate::C64::new(sigma, 0.0));
        let mut point_errors = Vec::with_capacity(cfg.receivers.len());
        let mut point_budget = Vec::with_capacity(cfg.receivers.len());
        for decoders in &setup.decoders {
            let mut errs = [0u32; 3];
            let mut over = 0u32;
            for k in 0..3 {
                let decided = match &decoders[k] {
                    Prepared::LzfLinear(d) => d.decode(&y[k]),
                    Prepared::LzfGlrt(d) => {
                        let dec = d.decode(&y[k])?;
                        over += dec.budget_exceeded as u32;
                        dec.desired
                    }
                    Prepared::Ld(d) => {
                        let dec = d.decode(&y[k])?;
                        over += dec.budget_exceeded as u32;
                        clipped += dec.clipped as u64;
                        dec.desired
                    }
                };
                let truth = &setup.block.symbol_indices[k];
                errs[k] = decided.iter().zip(truth).filter(|(a, b)| a != b).count() as u32;
            }
            point_errors.push(errs);
            point_budget.push(over);
        }
        errors.push(point_errors);
        budget_exceeded.push(point_budget);
    }
    Ok(TrialOutcome {
        errors,
        budget_exceeded,
        powers: setup.powers,
        resamples: setup.resamples,
        degenerate: setup.degenerate,
        singular: setup.singular,
        clipped,
    })
}

pub(crate) fn alphabets(cfg: &SweepConfig) -> Result<(Constellation, SumConstellation)> {
    let c = make_qam(cfg.constellation_order)?;
    let cs = make_sum_set(&c);
    Ok((c, cs))
}

/// One block: channel, symbols, and decisions of every configured receiver
/// at every grid point. Fully determined by `(cfg, trial_seed)`.
pub fn run_trial(cfg: &SweepConfig, trial_seed: u64) -> Result<TrialOutcome> {
    cfg.validate()?;
    let (c, cs) = alphabets(cfg)?;
    let setup = prepare_trial(cfg, &c, &cs, trial_seed)?;
    run_prepared(cfg, &setup, trial_seed)
}
