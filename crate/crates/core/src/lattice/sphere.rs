use crate::linalg::{RMat, RVec};
use crate::{Error, Result};

use super::{residual_sq, Alphabet, SearchDomain, SearchResult};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// A diagonal entry of `R` below `DIAG_REL_TOL · max |R_ii|` marks the basis
/// as rank deficient.
pub const DIAG_REL_TOL: f64 = 1e-10;

/// Values a coordinate may take, enumerated outward from a center.
#[derive(Debug, Clone, Copy)]
enum Support<'a> {
    Finite(&'a [f64]),
    Grid { offset: f64, step: f64 },
}

impl Support<'_> {
    fn nearest(&self, x: f64) -> i64 {
        match *self {
            Support::Finite(levels) => {
                let i = levels.partition_point(|&v| v < x);
                if i == 0 {
                    0
                } else if i == levels.len() || x - levels[i - 1] <= levels[i] - x {
                    i as i64 - 1
                } else {
                    i as i64
                }
            }
            Support::Grid { offset, step } => ((x - offset) / step).round() as i64,
        }
    }

    fn value(&self, i: i64) -> Option<f64> {
        match *self {
            Support::Finite(levels) => usize::try_from(i).ok().and_then(|i| levels.get(i)).copied(),
            Support::Grid { offset, step } => Some(offset + step * i as f64),
        }
    }
}

/// Schnorr–Euchner ordering: candidates in non-decreasing distance from the
/// center, alternating sides.
#[derive(Debug, Clone, Copy)]
struct ZigZag {
    center: f64,
    first: Option<i64>,
    lo: i64,
    hi: i64,
}

impl ZigZag {
    fn new(support: Support<'_>, center: f64) -> Self {
        let i = support.nearest(center);
        Self { center, first: Some(i), lo: i - 1, hi: i + 1 }
    }

    fn next(&mut self, support: Support<'_>) -> Option<f64> {
        if let Some(i) = self.first.take() {
            return support.value(i);
        }
        match (support.value(self.lo), support.value(self.hi)) {
            (None, None) => None,
            (Some(a), None) => {
                self.lo -= 1;
                Some(a)
            }
            (None, Some(b)) => {
                self.hi += 1;
                Some(b)
            }
            (Some(a), Some(b)) => {
                if self.center - a <= b - self.center {
                    self.lo -= 1;
                    Some(a)
                } else {
                    self.hi += 1;
                    Some(b)
                }
            }
        }
    }
}

/// Greedy V-BLAST ordering. Position `k-1` (decided first) gets the column
/// farthest from the span of the others, then the rule repeats on the rest.
/// The distance of column `j` to the span of the others is `1 / ‖row j of R⁻¹‖`.
fn blast_order(basis: &RMat) -> Vec<usize> {
    let k = basis.ncols();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut order = vec![0; k];
    for pos in (1..k).rev() {
        let len = remaining.len();
        let sub = RMat::from_fn(basis.nrows(), len, |r, c| basis[(r, remaining[c])]);
        let r = sub.qr().r();
        let Some(r_inv) = r.solve_upper_triangular(&RMat::identity(len, len)) else {
            // singular; keep natural order and let the rank check report it
            order[..=pos].copy_from_slice(&remaining);
            return order;
        };
        let norms: Vec<f64> = (0..len).map(|i| r_inv.row(i).norm_squared()).collect();
        if norms.iter().any(|v| !v.is_finite()) {
            order[..=pos].copy_from_slice(&remaining);
            return order;
        }
        let j = (0..len).fold(0, |best, i| if norms[i] < norms[best] { i } else { best });
        order[pos] = remaining.remove(j);
    }
    order[0] = remaining[0];
    order
}

/// Depth-first Schnorr–Euchner search on a QR-triangularized basis.
///
/// The factorization depends only on the basis, so one decoder serves any
/// number of observations. Columns are searched in V-BLAST order; results are
/// reported in the caller's column order.
#[derive(Debug, Clone)]
pub struct SphereDecoder {
    basis: RMat,
    q: RMat,
    /// Upper-triangular factor of the permuted basis, row-major `k×k`.
    r: Vec<f64>,
    k: usize,
    /// Search position `i` holds caller column `order[i]`.
    order: Vec<usize>,
    /// Alphabets in search order.
    alphabets: Vec<Alphabet>,
    domain: SearchDomain,
    budget: u64,
}

impl SphereDecoder {
    pub fn new(basis: &RMat, alphabets: Vec<Alphabet>, domain: SearchDomain, budget: u64) -> Result<Self> {
        let k = basis.ncols();
        assert!(k >= 1, "empty basis");
        assert_eq!(alphabets.len(), k, "one alphabet per column");
        assert!(basis.nrows() >= k, "basis must have at least as many rows as columns");
        let order = blast_order(basis);
        let permuted = RMat::from_fn(basis.nrows(), k, |r, c| basis[(r, order[c])]);
        let alphabets: Vec<Alphabet> = order.iter().map(|&c| alphabets[c].clone()).collect();
        let qr = permuted.qr();
        let r_mat = qr.r();
        let max = (0..k).map(|i| r_mat[(i, i)].abs()).fold(0.0, f64::max);
        let threshold = DIAG_REL_TOL * max;
        for i in 0..k {
            let value = r_mat[(i, i)].abs();
            if value < threshold || value == 0.0 {
                return Err(Error::RankDeficientBasis { column: order[i], value, threshold });
            }
        }
        let r = (0..k * k).map(|idx| r_mat[(idx / k, idx % k)]).collect();
        Ok(Self { basis: basis.clone(), q: qr.q(), r, k, order, alphabets, domain, budget })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn basis(&self) -> &RMat {
        &self.basis
    }

    fn support(&self, level: usize) -> Support<'_> {
        let a = &self.alphabets[level];
        match self.domain {
            SearchDomain::Constrained => Support::Finite(a.levels()),
            SearchDomain::Unbounded => Support::Grid { offset: a.levels()[0], step: a.step() },
        }
    }

    #[inline]
    fn center(&self, z: &[f64], s: &[f64], level: usize) -> f64 {
        let row = &self.r[level * self.k..(level + 1) * self.k];
        let mut acc = z[level];
        for j in level + 1..self.k {
            acc -= row[j] * s[j];
        }
        acc / row[level]
    }

    #[inline]
    fn increment(&self, level: usize, center: f64, value: f64) -> f64 {
        let d = (center - value) * self.r[level * self.k + level];
        d * d
    }

    /// Successive nearest-point (Babai) estimate and its triangular-domain
    /// distance.
    fn babai(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let mut s = vec![0.0; self.k];
        let mut dist = 0.0;
        for level in (0..self.k).rev() {
            let c = self.center(z, &s, level);
            let support = self.support(level);
            let v = support.value(support.nearest(c)).expect("nearest index is always in range");
            s[level] = v;
            dist += self.increment(level, c, v);
        }
        (s, dist)
    }

    pub fn decode(&self, observation: &RVec) -> Result<SearchResult> {
        assert_eq!(observation.len(), self.basis.nrows());
        let k = self.k;
        let z: Vec<f64> = (self.q.transpose() * observation).iter().copied().collect();

        let (mut best, mut radius) = self.babai(&z);
        let mut nodes: u64 = 0;
        let mut exhausted = false;

        let mut s = vec![0.0; k];
        // partial[i] = distance accumulated over levels i..k; partial[k] = 0
        let mut partial = vec![0.0; k + 1];
        let mut centers = vec![0.0; k];
        let top = k - 1;
        centers[top] = self.center(&z, &s, top);
        let mut iters: Vec<ZigZag> = vec![ZigZag::new(self.support(top), centers[top]); k];
        let mut level = top;

        loop {
            let support = self.support(level);
            let next = iters[level].next(support);
            let accepted = next.and_then(|v| {
                let d = partial[level + 1] + self.increment(level, centers[level], v);
                (d < radius).then_some((v, d))
            });
            match accepted {
                Some((v, d)) => {
                    nodes += 1;
                    if nodes > self.budget {
                        exhausted = true;
                        break;
                    }
                    s[level] = v;
                    partial[level] = d;
                    if level == 0 {
                        best.copy_from_slice(&s);
                        radius = d;
                        // siblings at this level are farther; climb
                        level = 1;
                        if level > top {
                            break;
                        }
                    } else {
                        level -= 1;
                        centers[level] = self.center(&z, &s, level);
                        iters[level] = ZigZag::new(self.support(level), centers[level]);
                    }
                }
                None => {
                    level += 1;
                    if level > top {
                        break;
                    }
                }
            }
        }

        let mut clipped = 0;
        if self.domain == SearchDomain::Unbounded {
            for (v, a) in best.iter_mut().zip(&self.alphabets) {
                let c = a.nearest(*v);
                if c != *v {
                    *v = c;
                    clipped += 1;
                }
            }
        }
        let mut solution = vec![0.0; k];
        for (i, &c) in self.order.iter().enumerate() {
            solution[c] = best[i];
        }
        let sq_distance = residual_sq(&self.basis, observation, &solution);
        let result = SearchResult { solution, sq_distance, nodes_visited: nodes, clipped };
        if exhausted {
            Err(Error::NodeBudgetExceeded { budget: self.budget, partial: Box::new(result) })
        } else {
            Ok(result)
        }
    }
}
