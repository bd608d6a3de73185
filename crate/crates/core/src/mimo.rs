//! Equivalent per-receiver MIMO channels and block transmission.
//!
//! After alignment, receiver `k` sees `Y_k = G_k X̃_k + Z_k` with a square
//! `(2n+1)×(2n+1)` matrix `G_k = [G_k1 | G_k2]`:
//!
//! | k | `G_k1`   | `G_k2`   | desired | interference           |
//! |---|----------|----------|---------|------------------------|
//! | 1 | `H11V1`  | `H12V2`  | `X1`    | `X2 + X3`              |
//! | 2 | `H22V2`  | `H21V1`  | `X2`    | `X1 + P3X3 = X1 + (X3; 0)` |
//! | 3 | `H33V3`  | `H31V1`  | `X3`    | `X1 + P2X2 = X1 + (0; X2)` |
//!
//! For receivers 2 and 3 one entry of the interference vector is a bare
//! symbol of user 1 rather than a pairwise sum; see [`interference_layout`].

use rand::Rng;

use crate::channel::{complex_normal, ChannelRealization};
use crate::constellation::Constellation;
use crate::linalg::{diag_mul, diag_mul_vec, singular_values, CMat, CVec};
use crate::precoding::PrecoderSet;
use crate::rng::stream_rng;
use crate::{Error, Result, C64};

/// Relative singular-value threshold for the rank of `G_k`.
pub const EQUIV_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EquivalentChannel {
    pub receiver: usize,
    pub g_full: CMat,
    pub desired_cols: usize,
    /// `σ_max / σ_min` of `g_full`.
    pub cond_estimate: f64,
}

impl EquivalentChannel {
    pub fn dim(&self) -> usize {
        self.g_full.nrows()
    }

    pub fn interf_cols(&self) -> usize {
        self.g_full.ncols() - self.desired_cols
    }

    /// `G_k1`.
    pub fn g_desired(&self) -> CMat {
        self.g_full.columns(0, self.desired_cols).clone_owned()
    }

    /// `G_k2`.
    pub fn g_interf(&self) -> CMat {
        self.g_full.columns(self.desired_cols, self.interf_cols()).clone_owned()
    }
}

/// What each interference coordinate at a receiver carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceEntry {
    /// Sum of two symbols, an element of `C'`.
    Sum,
    /// A single symbol of user 1, an element of `C`.
    Single,
}

pub fn interference_layout(receiver: usize, n: usize) -> Vec<InterferenceEntry> {
    use InterferenceEntry::*;
    match receiver {
        1 => vec![Sum; n],
        2 => std::iter::repeat_n(Sum, n).chain([Single]).collect(),
        3 => std::iter::once(Single).chain(std::iter::repeat_n(Sum, n)).collect(),
        _ => panic!("receiver index {receiver} out of range 1..=3"),
    }
}

/// Number of desired symbols at receiver `k`.
pub fn desired_count(receiver: usize, n: usize) -> usize {
    if receiver == 1 { n + 1 } else { n }
}

pub fn build_equivalent(ch: &ChannelRealization, p: &PrecoderSet, k: usize) -> Result<EquivalentChannel> {
    let (desired, interf) = match k {
        1 => (diag_mul(ch.link(1, 1), &p.v1), diag_mul(ch.link(1, 2), &p.v2)),
        2 => (diag_mul(ch.link(2, 2), &p.v2), diag_mul(ch.link(2, 1), &p.v1)),
        3 => (diag_mul(ch.link(3, 3), &p.v3), diag_mul(ch.link(3, 1), &p.v1)),
        _ => panic!("receiver index {k} out of range 1..=3"),
    };
    let desired_cols = desired.ncols();
    let dim = desired.nrows();
    let mut g_full = CMat::zeros(dim, desired_cols + interf.ncols());
    g_full.columns_mut(0, desired_cols).copy_from(&desired);
    g_full.columns_mut(desired_cols, interf.ncols()).copy_from(&interf);

    let sv = singular_values(&g_full);
    let max = sv[0];
    let rank = sv.iter().filter(|&&s| s > EQUIV_RANK_TOL * max).count();
    if rank < g_full.ncols() {
        return Err(Error::SingularEquivalentChannel { receiver: k, rank, required: g_full.ncols() });
    }
    let cond_estimate = (max / sv[sv.len() - 1]).max(1.0);
    Ok(EquivalentChannel { receiver: k, g_full, desired_cols, cond_estimate })
}

/// One block of symbols for the three users.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitBlock {
    pub x: [Vec<C64>; 3],
    pub symbol_indices: [Vec<usize>; 3],
}

impl TransmitBlock {
    pub fn from_indices(c: &Constellation, symbol_indices: [Vec<usize>; 3]) -> Self {
        let x = std::array::from_fn(|u| symbol_indices[u].iter().map(|&i| c.point(i)).collect());
        Self { x, symbol_indices }
    }

    /// Uniform i.i.d. symbols: `n + 1` for user 1, `n` for users 2 and 3.
    pub fn random<R: Rng + ?Sized>(c: &Constellation, n: usize, rng: &mut R) -> Self {
        let indices = std::array::from_fn(|u| {
            (0..desired_count(u + 1, n)).map(|_| rng.random_range(0..c.len())).collect()
        });
        Self::from_indices(c, indices)
    }

    pub fn n(&self) -> usize {
        self.x[1].len()
    }

    /// `X_user`, one-based.
    pub fn symbols(&self, user: usize) -> &[C64] {
        &self.x[user - 1]
    }

    /// The aligned interference vector seen by receiver `k`.
    pub fn interference(&self, k: usize) -> Vec<C64> {
        let [x1, x2, x3] = &self.x;
        let n = self.n();
        match k {
            1 => x2.iter().zip(x3).map(|(a, b)| a + b).collect(),
            2 => (0..=n).map(|i| x1[i] + if i < n { x3[i] } else { C64::default() }).collect(),
            3 => (0..=n).map(|i| x1[i] + if i > 0 { x2[i - 1] } else { C64::default() }).collect(),
            _ => panic!("receiver index {k} out of range 1..=3"),
        }
    }

    /// `X̃_k = (X_k ; interference)`.
    pub fn stacked(&self, k: usize) -> CVec {
        let mut v = self.x[k - 1].clone();
        v.extend(self.interference(k));
        CVec::from_vec(v)
    }
}

/// `Y_k` without noise, from the three-term sum `Σ_j H_kj V_j X_j`.
pub fn noiseless_received(ch: &ChannelRealization, p: &PrecoderSet, blk: &TransmitBlock) -> [CVec; 3] {
    let tx: [CVec; 3] = std::array::from_fn(|u| p.precoder(u + 1) * CVec::from_column_slice(&blk.x[u]));
    std::array::from_fn(|r| {
        (0..3).fold(CVec::zeros(ch.block_len()), |acc, u| acc + diag_mul_vec(ch.link(r + 1, u + 1), &tx[u]))
    })
}

/// Adds circularly-symmetric complex Gaussian noise of per-entry variance
/// `noise_std²` to each received vector.
pub fn add_noise(clean: &[CVec; 3], noise_std: f64, seed: u64) -> [CVec; 3] {
    let mut rng = stream_rng(seed, 0);
    std::array::from_fn(|r| clean[r].map(|y| y + complex_normal(&mut rng) * noise_std))
}

pub fn transmit(
    ch: &ChannelRealization,
    p: &PrecoderSet,
    blk: &TransmitBlock,
    noise_std: f64,
    seed: u64,
) -> [CVec; 3] {
    add_noise(&noiseless_received(ch, p, blk), noise_std, seed)
}

/// `‖v x‖² / rows(v)`.
pub fn realized_power_of(v: &CMat, x: &[C64]) -> f64 {
    (v * CVec::from_column_slice(x)).norm_squared() / v.nrows() as f64
}

/// Per-user, per-subcarrier transmit power `‖V_i X_i‖² / (2n+1)`.
pub fn realized_power(p: &PrecoderSet, blk: &TransmitBlock) -> [f64; 3] {
    std::array::from_fn(|u| realized_power_of(p.precoder(u + 1), &blk.x[u]))
}
