//! Per-block channel realizations.
//!
//! A block holds the nine diagonal link matrices `H_ij` (receiver `i`,
//! transmitter `j`) over `N = 2n + 1` subcarriers. Two models are supported:
//! unit-modulus gains with uniform phase, and circularly-symmetric complex
//! normal gains (unit total variance, `E|h|² = 1`) whose magnitude is
//! truncated to `[lo, hi]` by rejection.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::precoding::build_t;
use crate::rng::stream_rng;
use crate::{Error, Result, C64};

/// Upper bound on redraws per entry for the truncated model.
pub const REDRAW_CAP: f64 = 1e6;

/// Default minimum separation between entries of `T`.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    UnitModulus,
    TruncatedGaussian { lo: f64, hi: f64 },
}

impl ChannelModel {
    /// Short name used in CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            ChannelModel::UnitModulus => "unit",
            ChannelModel::TruncatedGaussian { .. } => "trunc",
        }
    }

    /// Magnitude interval; `[1, 1]` for unit modulus.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            ChannelModel::UnitModulus => (1.0, 1.0),
            ChannelModel::TruncatedGaussian { lo, hi } => (lo, hi),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<ChannelRealization> {
        match *self {
            ChannelModel::UnitModulus => Ok(sample_unit_modulus(n, seed)),
            ChannelModel::TruncatedGaussian { lo, hi } => sample_truncated_gaussian(n, lo, hi, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n: usize,
    /// `h[rx][tx][t]`, zero-based.
    h: [[Vec<C64>; 3]; 3],
    model: ChannelModel,
}

impl ChannelRealization {
    /// Wraps explicit link gains; every vector must have length `2n + 1` and
    /// every entry must be nonzero.
    pub fn from_links(n: usize, h: [[Vec<C64>; 3]; 3], model: ChannelModel) -> Result<Self> {
        let len = 2 * n + 1;
        for row in &h {
            for link in row {
                if link.len() != len {
                    return Err(Error::InvalidConfig(format!("link length {} != {len}", link.len())));
                }
                if link.iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
                    return Err(Error::InvalidConfig("channel gains must be finite and nonzero".into()));
                }
            }
        }
        Ok(Self { n, h, model })
    }

    /// Every link equal to 1 on every subcarrier.
    pub fn all_ones(n: usize) -> Self {
        let ones = vec![C64::new(1.0, 0.0); 2 * n + 1];
        let h = std::array::from_fn(|_| std::array::from_fn(|_| ones.clone()));
        Self { n, h, model: ChannelModel::UnitModulus }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of subcarriers `2n + 1`.
    pub fn block_len(&self) -> usize {
        2 * self.n + 1
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    /// Diagonal of `H_{rx,tx}` with one-based indices, as in `H_12`.
    pub fn link(&self, rx: usize, tx: usize) -> &[C64] {
        assert!((1..=3).contains(&rx) && (1..=3).contains(&tx), "link indices are 1..=3");
        &self.h[rx - 1][tx - 1]
    }

    pub fn link_mut(&mut self, rx: usize, tx: usize) -> &mut [C64] {
        assert!((1..=3).contains(&rx) && (1..=3).contains(&tx), "link indices are 1..=3");
        &mut self.h[rx - 1][tx - 1]
    }

    pub fn entries(&self) -> impl Iterator<Item = C64> + '_ {
        self.h.iter().flatten().flatten().copied()
    }
}

/// Unit-magnitude gains with i.i.d. phases uniform on `[0, 2π)`.
pub fn sample_unit_modulus(n: usize, seed: u64) -> ChannelRealization {
    assert!(n >= 1, "block parameter n must be at least 1");
    let mut rng = stream_rng(seed, 0);
    let len = 2 * n + 1;
    let h = std::array::from_fn(|_| {
        std::array::from_fn(|_| {
            (0..len)
                .map(|_| C64::from_polar(1.0, rng.random::<f64>() * TAU))
                .collect()
        })
    });
    ChannelRealization { n, h, model: ChannelModel::UnitModulus }
}

/// Circularly-symmetric complex normal draw with `E|z|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Probability that a unit-variance complex normal has magnitude in `[lo, hi]`.
///
/// `|z|` is Rayleigh with `P(|z| ≤ r) = 1 - exp(-r²)`.
pub fn acceptance_probability(lo: f64, hi: f64) -> f64 {
    (-lo * lo).exp() - (-hi * hi).exp()
}

pub fn sample_truncated_gaussian(n: usize, lo: f64, hi: f64, seed: u64) -> Result<ChannelRealization> {
    assert!(n >= 1, "block parameter n must be at least 1");
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let p = acceptance_probability(lo, hi);
    let expected_draws = if p > 0.0 { 1.0 / p } else { f64::INFINITY };
    if expected_draws > REDRAW_CAP {
        return Err(Error::RejectionBudgetExceeded { lo, hi, expected_draws, cap: REDRAW_CAP });
    }
    let mut rng = stream_rng(seed, 0);
    let len = 2 * n + 1;
    let mut h: [[Vec<C64>; 3]; 3] = Default::default();
    for row in h.iter_mut() {
        for link in row.iter_mut() {
            for _ in 0..len {
                let mut draws = 0u64;
                let z = loop {
                    let z = complex_normal(&mut rng);
                    let m = z.norm();
                    if (lo..=hi).contains(&m) {
                        break z;
                    }
                    draws += 1;
                    if draws as f64 >= REDRAW_CAP {
                        return Err(Error::RejectionBudgetExceeded { lo, hi, expected_draws, cap: REDRAW_CAP });
                    }
                };
                link.push(z);
            }
        }
    }
    Ok(ChannelRealization { n, h, model: ChannelModel::TruncatedGaussian { lo, hi } })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagnostics {
    /// Smallest `|T_s - T_t|` over `s ≠ t`.
    pub min_t_gap: f64,
    /// `(min |T_t|, max |T_t|)`.
    pub t_magnitude_range: (f64, f64),
    /// 2-norm condition numbers of `G_1, G_2, G_3`, once known.
    pub condition_estimates: Option<[f64; 3]>,
}

pub fn validate_channel(ch: &ChannelRealization, gap_tol: f64) -> Result<ChannelDiagnostics> {
    let t = build_t(ch);
    let mut min_t_gap = f64::INFINITY;
    for (i, a) in t.iter().enumerate() {
        for b in &t[i + 1..] {
            min_t_gap = min_t_gap.min((a - b).norm());
        }
    }
    let mags = t.iter().map(|z| z.norm());
    let range = mags.fold((f64::INFINITY, 0.0_f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
    if min_t_gap < gap_tol {
        return Err(Error::DegenerateChannel { min_gap: min_t_gap, tol: gap_tol });
    }
    Ok(ChannelDiagnostics { min_t_gap, t_magnitude_range: range, condition_estimates: None })
}
