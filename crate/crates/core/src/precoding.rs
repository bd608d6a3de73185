//! Vandermonde alignment precoders.
//!
//! With `T = H31⁻¹H32 · H12⁻¹H13 · H23⁻¹H21` (all diagonal) and the all-ones
//! vector `w`, user 1 sends along `V1 = [w, Tw, .., Tⁿw]` and users 2 and 3
//! along shifted, channel-corrected slices of it:
//!
//! * `V2 = H32⁻¹H31 · V1P2` where `V1P2` drops the first column of `V1`,
//! * `V3 = H23⁻¹H21 · V1P3` where `V1P3` drops the last column.
//!
//! Since `V1P2 = T·V1P3`, interference at every receiver lands in one
//! subspace. Precoder columns are not normalized; their raw energies feed the
//! measured SNR.

use crate::channel::{validate_channel, ChannelRealization};
use crate::linalg::{diag_mul, numerical_rank, relative_residual, CMat};
use crate::{Error, Result, C64};

/// Relative singular-value threshold for the rank of `V1`.
pub const V1_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub v1: CMat,
    pub v2: CMat,
    pub v3: CMat,
    pub t_diag: Vec<C64>,
    /// Squared column norms of `V1`, `V2`, `V3`.
    pub column_energies: [Vec<f64>; 3],
}

impl PrecoderSet {
    pub fn n(&self) -> usize {
        self.v2.ncols()
    }

    /// `V_user` for `user ∈ 1..=3`.
    pub fn precoder(&self, user: usize) -> &CMat {
        match user {
            1 => &self.v1,
            2 => &self.v2,
            3 => &self.v3,
            _ => panic!("user index {user} out of range 1..=3"),
        }
    }

    /// `V1P2`: the last `n` columns of `V1`.
    pub fn v1_p2(&self) -> CMat {
        drop_first(&self.v1)
    }

    /// `V1P3`: the first `n` columns of `V1`.
    pub fn v1_p3(&self) -> CMat {
        drop_last(&self.v1)
    }
}

fn drop_first(v: &CMat) -> CMat {
    v.columns(1, v.ncols() - 1).clone_owned()
}

fn drop_last(v: &CMat) -> CMat {
    v.columns(0, v.ncols() - 1).clone_owned()
}

fn ratio(num: &[C64], den: &[C64]) -> Vec<C64> {
    num.iter().zip(den).map(|(a, b)| a / b).collect()
}

fn column_energies(m: &CMat) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

/// Diagonal of `T`: `T_t = h32·h13·h21 / (h31·h12·h23)`.
pub fn build_t(ch: &ChannelRealization) -> Vec<C64> {
    (0..ch.block_len())
        .map(|t| {
            let num = ch.link(3, 2)[t] * ch.link(1, 3)[t] * ch.link(2, 1)[t];
            let den = ch.link(3, 1)[t] * ch.link(1, 2)[t] * ch.link(2, 3)[t];
            num / den
        })
        .collect()
}

/// `V1` with row `t` equal to `(1, T_t, .., T_tⁿ)`.
pub fn vandermonde(t_diag: &[C64], n: usize) -> CMat {
    CMat::from_fn(t_diag.len(), n + 1, |r, c| t_diag[r].powu(c as u32))
}

pub fn build_precoders(ch: &ChannelRealization, gap_tol: f64) -> Result<PrecoderSet> {
    let n = ch.n();
    let t_diag = build_t(ch);
    let v1 = vandermonde(&t_diag, n);
    let rank = numerical_rank(&v1, V1_RANK_TOL);
    if rank < n + 1 {
        return Err(Error::RankDeficient { rank, required: n + 1 });
    }
    validate_channel(ch, gap_tol)?;

    let v2 = diag_mul(&ratio(ch.link(3, 1), ch.link(3, 2)), &drop_first(&v1));
    let v3 = diag_mul(&ratio(ch.link(2, 1), ch.link(2, 3)), &drop_last(&v1));
    let column_energies = [column_energies(&v1), column_energies(&v2), column_energies(&v3)];
    Ok(PrecoderSet { v1, v2, v3, t_diag, column_energies })
}

/// Relative Frobenius residuals of the three alignment identities
/// `H12V2 = H13V3`, `H23V3 = H21V1P3`, `H32V2 = H31V1P2`.
pub fn check_alignment(ch: &ChannelRealization, p: &PrecoderSet) -> [f64; 3] {
    let first = relative_residual(&diag_mul(ch.link(1, 2), &p.v2), &diag_mul(ch.link(1, 3), &p.v3));
    let second = relative_residual(&diag_mul(ch.link(2, 3), &p.v3), &diag_mul(ch.link(2, 1), &p.v1_p3()));
    let third = relative_residual(&diag_mul(ch.link(3, 2), &p.v2), &diag_mul(ch.link(3, 1), &p.v1_p2()));
    [first, second, third]
}

/// Relative residual of the shift identity `V1P2 = T·V1P3`.
pub fn shift_residual(p: &PrecoderSet) -> f64 {
    relative_residual(&p.v1_p2(), &diag_mul(&p.t_diag, &p.v1_p3()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_truncated_gaussian, sample_unit_modulus, ChannelModel};

    #[test]
    fn t_of_identity_channel_is_one() {
        let t = build_t(&ChannelRealization::all_ones(4));
        assert!(t.iter().all(|&z| z == C64::new(1.0, 0.0)));
    }

    #[test]
    fn t_is_unit_for_unit_modulus() {
        let t = build_t(&sample_unit_modulus(10, 3));
        assert!(t.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn t_matches_scalar_loop() {
        let ch = sample_truncated_gaussian(1, 0.5, 2.0, 21).unwrap();
        let t = build_t(&ch);
        for s in 0..3 {
            // H31⁻¹H32 · H12⁻¹H13 · H23⁻¹H21, one factor at a time
            let mut acc = C64::new(1.0, 0.0);
            for (inv, fwd) in [((3, 1), (3, 2)), ((1, 2), (1, 3)), ((2, 3), (2, 1))] {
                acc = acc * ch.link(fwd.0, fwd.1)[s] / ch.link(inv.0, inv.1)[s];
            }
            assert!((acc - t[s]).norm() <= 1e-14 * acc.norm());
        }
    }

    #[test]
    fn identity_channel_collapses_v1() {
        let err = build_precoders(&ChannelRealization::all_ones(3), 1e-9).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, required: 4 }));
    }

    #[test]
    fn v1_rows_are_powers_of_t() {
        let ch = sample_unit_modulus(4, 8);
        let p = build_precoders(&ch, 1e-9).unwrap();
        for t in 0..ch.block_len() {
            let mut pow = C64::new(1.0, 0.0);
            for k in 0..=4 {
                assert!((p.v1[(t, k)] - pow).norm() < 1e-12);
                pow *= p.t_diag[t];
            }
        }
        assert_eq!(p.v1.shape(), (9, 5));
        assert_eq!(p.v2.shape(), (9, 4));
        assert_eq!(p.v3.shape(), (9, 4));
        assert!(shift_residual(&p) < 1e-14);
    }

    #[test]
    fn unit_modulus_column_energies_equal_block_length() {
        let p = build_precoders(&sample_unit_modulus(5, 1), 1e-9).unwrap();
        for energies in &p.column_energies {
            assert!(energies.iter().all(|e| (e - 11.0).abs() < 1e-9));
        }
    }

    #[test]
    fn column_energy_spread_grows_geometrically() {
        // |T_t| = 1.4 on one subcarrier forces the last column to carry at
        // least 1.4^(2n) on that row while the first column has unit rows.
        let n = 10;
        let mut ch = sample_unit_modulus(n, 4);
        ch.link_mut(3, 2)[0] *= 1.4;
        let p = build_precoders(&ch, 1e-9).unwrap();
        assert!((p.t_diag[0].norm() - 1.4).abs() < 1e-12);
        let e = &p.column_energies[0];
        let (min, max) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        // direct evaluation of the Vandermonde column norms
        let direct: Vec<f64> = (0..=n)
            .map(|k| p.t_diag.iter().map(|z| z.norm().powi(2 * k as i32)).sum())
            .collect();
        for (a, b) in e.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-9 * b);
        }
        assert!(max / min >= 1.4f64.powi(20) / 21.0);
        assert!(e[n] >= 1.4f64.powi(20));
    }

    #[test]
    fn alignment_holds_for_random_channels() {
        for n in [1, 5, 10] {
            for seed in 0..50 {
                for model in [ChannelModel::UnitModulus, ChannelModel::TruncatedGaussian { lo: 0.8, hi: 1.2 }] {
                    let ch = model.sample(n, seed).unwrap();
                    let Ok(p) = build_precoders(&ch, 1e-9) else { continue };
                    for r in check_alignment(&ch, &p) {
                        assert!(r <= 1e-10, "n={n} seed={seed} residual {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn perturbing_v2_shows_in_first_residual() {
        let ch = sample_unit_modulus(3, 17);
        let mut p = build_precoders(&ch, 1e-9).unwrap();
        let scale = p.v2.norm();
        let bump = CMat::from_fn(p.v2.nrows(), p.v2.ncols(), |r, c| {
            C64::new(((r * 7 + c * 3) % 5) as f64 - 2.0, 1.0)
        });
        let bump = bump.scale(1e-3 * scale / bump.norm());
        p.v2 += bump;
        let r = check_alignment(&ch, &p);
        assert!(r[0] > 2e-4 && r[0] < 2e-3, "{}", r[0]);
        assert!(r[1] < 1e-12);
    }

    #[test]
    fn hand_sized_n1_channel() {
        let c = |re: f64, im: f64| C64::new(re, im);
        let h = [
            [vec![c(1.0, 0.0); 3], vec![c(0.5, 0.5), c(1.0, -1.0), c(2.0, 0.0)], vec![c(1.0, 1.0), c(0.3, 0.0), c(0.0, 1.0)]],
            [vec![c(1.0, 0.0), c(0.0, 2.0), c(1.5, 0.0)], vec![c(1.0, 0.0); 3], vec![c(2.0, 0.0), c(1.0, 1.0), c(0.5, 0.0)]],
            [vec![c(0.8, 0.0), c(1.0, 0.0), c(0.0, -1.0)], vec![c(1.0, 2.0), c(0.7, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0); 3]],
        ];
        let ch = ChannelRealization::from_links(1, h, ChannelModel::UnitModulus).unwrap();
        let p = build_precoders(&ch, 1e-9).unwrap();
        assert_eq!(p.v1.shape(), (3, 2));
        for r in check_alignment(&ch, &p) {
            assert!(r <= 1e-12);
        }
    }
}
