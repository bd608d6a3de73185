//! QAM alphabets on the Gaussian integers and their sum sets.
//!
//! Points are kept as exact integer pairs; energy normalization is left to
//! SNR accounting so that the lattice arithmetic in the decoders stays exact.

use num_complex::Complex;

use crate::{Error, Result, C64};

pub type GaussInt = Complex<i32>;

fn to_c64(p: GaussInt) -> C64 {
    C64::new(p.re as f64, p.im as f64)
}

fn norm_sqr(p: GaussInt) -> i64 {
    (p.re as i64).pow(2) + (p.im as i64).pow(2)
}

/// Ordered finite alphabet `C ⊂ Z[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<GaussInt>,
    bits_per_symbol: u32,
    mean_energy: f64,
}

impl Constellation {
    /// Builds a constellation from distinct Gaussian integers, keeping the
    /// given order.
    pub fn from_points(points: Vec<GaussInt>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("empty constellation".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::InvalidConfig(format!("duplicate point {p}")));
            }
        }
        let mean_energy = points.iter().map(|&p| norm_sqr(p) as f64).sum::<f64>() / points.len() as f64;
        let bits_per_symbol = (points.len() as f64).log2().floor() as u32;
        Ok(Self { points, bits_per_symbol, mean_energy })
    }

    pub fn points(&self) -> &[GaussInt] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> C64 {
        to_c64(self.points[index])
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// Average `|x|²` over the points.
    pub fn mean_energy(&self) -> f64 {
        self.mean_energy
    }

    /// Sorted distinct real parts. For square QAM the alphabet is the product
    /// of this set with itself.
    pub fn real_levels(&self) -> Vec<f64> {
        distinct_sorted(self.points.iter().map(|p| p.re))
    }

    pub fn imag_levels(&self) -> Vec<f64> {
        distinct_sorted(self.points.iter().map(|p| p.im))
    }

    /// True when the points are exactly `real_levels × imag_levels`.
    pub fn is_cartesian(&self) -> bool {
        self.real_levels().len() * self.imag_levels().len() == self.points.len()
    }
}

fn distinct_sorted(values: impl Iterator<Item = i32>) -> Vec<f64> {
    let mut v: Vec<i32> = values.collect();
    v.sort_unstable();
    v.dedup();
    v.into_iter().map(f64::from).collect()
}

/// Centered square M-QAM on the odd Gaussian integers, ordered by real part
/// then imaginary part.
pub fn make_qam(order: usize) -> Result<Constellation> {
    let side = (order as f64).sqrt().round() as usize;
    if order < 4 || side * side != order {
        return Err(Error::UnsupportedOrder(order));
    }
    let levels: Vec<i32> = (0..side).map(|k| 2 * k as i32 - (side as i32 - 1)).collect();
    let points = levels
        .iter()
        .flat_map(|&re| levels.iter().map(move |&im| GaussInt::new(re, im)))
        .collect();
    Constellation::from_points(points)
}

/// Sum set `C' = {y + z : y, z ∈ C}` with the number of ordered pairs hitting
/// each point.
#[derive(Debug, Clone, PartialEq)]
pub struct SumConstellation {
    points: Vec<GaussInt>,
    multiplicity: Vec<u32>,
}

impl SumConstellation {
    pub fn points(&self) -> &[GaussInt] {
        &self.points
    }

    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: GaussInt) -> bool {
        self.points.binary_search_by(|q| cmp_point(q, &p)).is_ok()
    }

    pub fn multiplicity_of(&self, p: GaussInt) -> u32 {
        self.points
            .binary_search_by(|q| cmp_point(q, &p))
            .map(|i| self.multiplicity[i])
            .unwrap_or(0)
    }

    pub fn real_levels(&self) -> Vec<f64> {
        distinct_sorted(self.points.iter().map(|p| p.re))
    }

    pub fn imag_levels(&self) -> Vec<f64> {
        distinct_sorted(self.points.iter().map(|p| p.im))
    }
}

fn cmp_point(a: &GaussInt, b: &GaussInt) -> std::cmp::Ordering {
    (a.re, a.im).cmp(&(b.re, b.im))
}

pub fn make_sum_set(c: &Constellation) -> SumConstellation {
    let mut sums: std::collections::BTreeMap<(i32, i32), u32> = Default::default();
    for &y in c.points() {
        for &z in c.points() {
            *sums.entry((y.re + z.re, y.im + z.im)).or_default() += 1;
        }
    }
    let (points, multiplicity) = sums.into_iter().map(|((re, im), m)| (GaussInt::new(re, im), m)).unzip();
    SumConstellation { points, multiplicity }
}

/// Index of the point nearest to `y`; ties go to the lowest index.
pub fn slice_nearest(y: C64, c: &Constellation) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &p) in c.points().iter().enumerate() {
        let d = (y - to_c64(p)).norm_sqr();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(re: i32, im: i32) -> GaussInt {
        GaussInt::new(re, im)
    }

    #[test]
    fn qpsk_points_and_energy() {
        let c = make_qam(4).unwrap();
        assert_eq!(c.points(), &[g(-1, -1), g(-1, 1), g(1, -1), g(1, 1)]);
        assert_eq!(c.mean_energy(), 2.0);
        assert_eq!(c.bits_per_symbol(), 2);
    }

    #[test]
    fn qam16_energy_by_enumeration() {
        let c = make_qam(16).unwrap();
        assert_eq!(c.len(), 16);
        let mut total = 0i64;
        for re in [-3, -1, 1, 3] {
            for im in [-3, -1, 1, 3] {
                assert!(c.points().contains(&g(re, im)));
                total += (re * re + im * im) as i64;
            }
        }
        assert_eq!(total as f64 / 16.0, 10.0);
        assert_eq!(c.mean_energy(), 10.0);
    }

    #[test]
    fn non_square_orders_rejected() {
        for order in [0, 1, 2, 8, 32] {
            assert!(matches!(make_qam(order), Err(Error::UnsupportedOrder(o)) if o == order));
        }
    }

    #[test]
    fn qpsk_sum_set() {
        let s = make_sum_set(&make_qam(4).unwrap());
        assert_eq!(s.len(), 9);
        for re in [-2, 0, 2] {
            for im in [-2, 0, 2] {
                assert!(s.contains(g(re, im)));
            }
        }
        assert_eq!(s.multiplicity_of(g(0, 0)), 4);
        for (re, im) in [(2, 2), (2, -2), (-2, 2), (-2, -2)] {
            assert_eq!(s.multiplicity_of(g(re, im)), 1);
        }
        assert_eq!(s.multiplicity_of(g(2, 0)), 2);
        assert_eq!(s.multiplicity().iter().sum::<u32>(), 16);
    }

    #[test]
    fn singleton_sum_set() {
        let c = Constellation::from_points(vec![g(3, -1)]).unwrap();
        let s = make_sum_set(&c);
        assert_eq!(s.points(), &[g(6, -2)]);
        assert_eq!(s.multiplicity(), &[1]);
    }

    #[test]
    fn qam16_sum_set_size() {
        let s = make_sum_set(&make_qam(16).unwrap());
        assert_eq!(s.len(), 49);
        assert_eq!(s.multiplicity().iter().sum::<u32>(), 256);
    }

    #[test]
    fn slicing_examples() {
        let c = make_qam(4).unwrap();
        assert_eq!(slice_nearest(C64::new(1.0, 1.0), &c), 3);
        assert_eq!(slice_nearest(C64::new(0.0, 0.0), &c), 0);
        assert_eq!(slice_nearest(C64::new(0.9, 1.4), &c), 3);
    }

    #[test]
    fn duplicate_points_rejected() {
        assert!(Constellation::from_points(vec![g(1, 1), g(1, 1)]).is_err());
    }

    proptest! {
        #[test]
        fn sum_set_closed_and_slicer_fixes_points(order in prop::sample::select(vec![4usize, 16, 64])) {
            let c = make_qam(order).unwrap();
            let s = make_sum_set(&c);
            let side = (order as f64).sqrt() as usize;
            prop_assert_eq!(s.len(), (2 * side - 1).pow(2));
            for &y in c.points() {
                for &z in c.points() {
                    prop_assert!(s.contains(y + z));
                }
            }
            for i in 0..c.len() {
                prop_assert_eq!(slice_nearest(c.point(i), &c), i);
            }
            prop_assert!(c.is_cartesian());
        }
    }
}
