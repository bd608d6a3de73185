//! Oracle checks run by `ia-sim verify`.
//!
//! Each check draws its own random instances from `(seed, instance index)`
//! and compares a production code path against an independent evaluation.

use crate::channel::{ChannelModel, ChannelRealization};
use crate::constellation::{make_qam, make_sum_set, Constellation, SumConstellation};
use crate::lattice::{brute_force_ml, embed_columns, SearchDomain, DEFAULT_BRUTE_FORCE_CAP, DEFAULT_NODE_BUDGET};
use crate::linalg::{least_squares, CVec};
use crate::mimo::{build_equivalent, noiseless_received, transmit, EquivalentChannel, TransmitBlock};
use crate::precoding::{build_precoders, check_alignment, PrecoderSet};
use crate::receivers::{build_projector, glrt_metric, stacked_alphabets, LatticeDecoder};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

pub const ALIGNMENT_TOL: f64 = 1e-10;
pub const EQUIVALENCE_TOL: f64 = 1e-10;
pub const GLRT_TOL: f64 = 1e-8;
pub const PROJECTOR_TOL: f64 = 1e-10;

const MAX_REDRAWS: u64 = 1000;
/// Noise levels cycled through by instances that need an observation.
const NOISE_LEVELS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub n: usize,
    pub model: ChannelModel,
    pub constellation_order: usize,
    pub instances: u64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { n: 1, model: ChannelModel::UnitModulus, constellation_order: 4, instances: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: &'static str,
    pub passed: bool,
    pub instances: u64,
    /// Largest observed error (relative, or absolute for exact checks).
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl std::fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {} instances, worst {:.3e} (tol {:.1e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.worst,
            self.tolerance,
            if self.detail.is_empty() { String::new() } else { format!(", {}", self.detail) }
        )
    }
}

struct Instance {
    channel: ChannelRealization,
    precoders: PrecoderSet,
    equivalent: [EquivalentChannel; 3],
}

/// Instance `index`, redrawing degenerate or singular channels.
fn instance(cfg: &VerifyConfig, index: u64) -> Result<Instance> {
    let seed = derive_seed(cfg.seed, index);
    for attempt in 0..MAX_REDRAWS {
        let channel = cfg.model.sample(cfg.n, derive_seed(seed, attempt))?;
        let Ok(precoders) = build_precoders(&channel, crate::channel::DEFAULT_GAP_TOL) else { continue };
        let eq: Result<Vec<_>> = (1..=3).map(|k| build_equivalent(&channel, &precoders, k)).collect();
        let Ok(eq) = eq else { continue };
        let equivalent = eq.try_into().expect("three receivers");
        return Ok(Instance { channel, precoders, equivalent });
    }
    Err(Error::ResampleBudgetExceeded { attempts: MAX_REDRAWS as u32 })
}

fn alphabets(cfg: &VerifyConfig) -> Result<(Constellation, SumConstellation)> {
    let c = make_qam(cfg.constellation_order)?;
    let cs = make_sum_set(&c);
    Ok((c, cs))
}

fn rel(a: &CVec, b: &CVec) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn report(name: &'static str, instances: u64, worst: f64, tolerance: f64, detail: String) -> PropertyReport {
    PropertyReport { name, passed: worst <= tolerance, instances, worst, tolerance, detail }
}

/// The three alignment identities hold for every realization.
pub fn alignment_residuals(cfg: &VerifyConfig) -> Result<PropertyReport> {
    let mut worst = 0.0f64;
    for i in 0..cfg.instances {
        let inst = instance(cfg, i)?;
        worst = check_alignment(&inst.channel, &inst.precoders).into_iter().fold(worst, f64::max);
    }
    Ok(report("alignment residuals", cfg.instances, worst, ALIGNMENT_TOL, String::new()))
}

/// The three-term received signal equals `G_k X̃_k` without noise.
pub fn equivalent_channel_agreement(cfg: &VerifyConfig) -> Result<PropertyReport> {
    let (c, _) = alphabets(cfg)?;
    let mut worst = 0.0f64;
    for i in 0..cfg.instances {
        let inst = instance(cfg, i)?;
        let blk = TransmitBlock::random(&c, cfg.n, &mut stream_rng(derive_seed(cfg.seed, i), 1));
        let y = noiseless_received(&inst.channel, &inst.precoders, &blk);
        for k in 0..3 {
            worst = worst.max(rel(&y[k], &(&inst.equivalent[k].g_full * blk.stacked(k + 1))));
        }
    }
    Ok(report("received signal vs equivalent channel", cfg.instances, worst, EQUIVALENCE_TOL, String::new()))
}

/// Sphere-decoder distance equals the exhaustive minimum, bit for bit.
/// Differing solutions at equal distance are counted as ties.
pub fn sphere_vs_brute_force(cfg: &VerifyConfig) -> Result<PropertyReport> {
    let (c, cs) = alphabets(cfg)?;
    let mut worst = 0.0f64;
    let mut ties = 0u64;
    for i in 0..cfg.instances {
        let inst = instance(cfg, i)?;
        let seed = derive_seed(cfg.seed, i);
        let blk = TransmitBlock::random(&c, cfg.n, &mut stream_rng(seed, 1));
        let sigma = NOISE_LEVELS[i as usize % NOISE_LEVELS.len()];
        let y = transmit(&inst.channel, &inst.precoders, &blk, sigma, seed);
        let k = (i % 3) as usize;
        let eq = &inst.equivalent[k];
        let sys = embed_columns(&eq.g_full, &y[k], &stacked_alphabets(k + 1, cfg.n, &c, &cs));
        let exhaustive = brute_force_ml(&sys, DEFAULT_BRUTE_FORCE_CAP)?;
        let sphere =
            LatticeDecoder::new(eq, &c, &cs, SearchDomain::Constrained, DEFAULT_NODE_BUDGET)?.search(&y[k])?;
        worst = worst.max((sphere.sq_distance - exhaustive.sq_distance).abs());
        ties += (sphere.solution != exhaustive.solution) as u64;
    }
    Ok(report("sphere decoder vs exhaustive search", cfg.instances, worst, 0.0, format!("{ties} ties")))
}

/// `min_z ‖y − G1 x − G2 z‖²` by explicit least squares equals the projected
/// metric `‖P⊥(y − G1 x)‖²` for one random candidate `x` per instance.
pub fn glrt_identity(cfg: &VerifyConfig) -> Result<PropertyReport> {
    let (c, _) = alphabets(cfg)?;
    let mut worst = 0.0f64;
    for i in 0..cfg.instances {
        let inst = instance(cfg, i)?;
        let seed = derive_seed(cfg.seed, i);
        let blk = TransmitBlock::random(&c, cfg.n, &mut stream_rng(seed, 1));
        let y = transmit(&inst.channel, &inst.precoders, &blk, NOISE_LEVELS[i as usize % NOISE_LEVELS.len()], seed);
        let k = (i % 3) as usize;
        let eq = &inst.equivalent[k];
        let pack = build_projector(eq)?;
        let candidate = TransmitBlock::random(&c, cfg.n, &mut stream_rng(seed, 2));
        let x = &candidate.x[k];
        let r = &y[k] - eq.g_desired() * CVec::from_column_slice(x);
        let g2 = eq.g_interf();
        let z = least_squares(&g2, &r, 1e-12).ok_or(Error::IllConditionedInterference { receiver: k + 1 })?;
        let two_stage = (&r - &g2 * z).norm_squared();
        let projected = glrt_metric(&y[k], eq, &pack, x);
        worst = worst.max((two_stage - projected).abs() / two_stage.max(projected).max(f64::MIN_POSITIVE));
    }
    Ok(report("GLRT metric vs two-stage least squares", cfg.instances, worst, GLRT_TOL, String::new()))
}

/// `P⊥` is Hermitian, idempotent, annihilates the interference columns and
/// has trace equal to the desired dimension.
pub fn projector_invariants(cfg: &VerifyConfig) -> Result<PropertyReport> {
    let mut worst = 0.0f64;
    for i in 0..cfg.instances {
        let inst = instance(cfg, i)?;
        for eq in &inst.equivalent {
            let p = build_projector(eq)?.p_perp;
            let g2 = eq.g_interf();
            let hermitian = (&p - p.adjoint()).norm();
            let idempotent = (&p * &p - &p).norm() / p.norm();
            let annihilates = (&p * &g2).norm() / g2.norm();
            let trace = (p.trace().re - eq.desired_cols as f64).abs() / eq.desired_cols as f64;
            worst = [hermitian, idempotent, annihilates, trace].into_iter().fold(worst, f64::max);
        }
    }
    Ok(report("projector invariants", cfg.instances, worst, PROJECTOR_TOL, String::new()))
}

/// Every check, in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<PropertyReport>> {
    Ok(vec![
        alignment_residuals(cfg)?,
        equivalent_channel_agreement(cfg)?,
        sphere_vs_brute_force(cfg)?,
        glrt_identity(cfg)?,
        projector_invariants(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_properties_pass_small() {
        for model in [ChannelModel::UnitModulus, ChannelModel::TruncatedGaussian { lo: 0.8, hi: 1.4 }] {
            let cfg = VerifyConfig { n: 1, model, instances: 60, seed: 4, ..Default::default() };
            for r in run_all(&cfg).unwrap() {
                assert!(r.passed, "{r}");
                assert_eq!(r.instances, 60);
            }
        }
    }

    #[test]
    fn report_line_format() {
        let r = report("x", 3, 2e-12, 1e-10, "1 ties".into());
        assert_eq!(r.to_string(), "[PASS] x: 3 instances, worst 2.000e-12 (tol 1.0e-10), 1 ties");
        assert!(!report("x", 1, 1.0, 0.0, String::new()).passed);
    }
}
