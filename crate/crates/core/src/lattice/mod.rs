//! Closest-point search over finite alphabets or integer-lattice translates.
//!
//! A complex system `y ≈ G x` is lifted to a real one (see [`crate::linalg`]
//! for the interleaved convention) and solved with a Schnorr–Euchner sphere
//! decoder ([`SphereDecoder`]). [`brute_force_ml`] is the exhaustive
//! reference.

mod brute;
mod sphere;

pub use brute::{brute_force_ml, DEFAULT_BRUTE_FORCE_CAP};
pub use sphere::{SphereDecoder, DEFAULT_NODE_BUDGET, DIAG_REL_TOL};

use crate::constellation::{Constellation, SumConstellation};
use crate::linalg::{embed_matrix, embed_vector, reconstruct_vector, CMat, CVec, RMat, RVec};
use crate::Result;

/// Sorted, distinct real values one coordinate may take.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    levels: Vec<f64>,
}

impl Alphabet {
    pub fn new(mut levels: Vec<f64>) -> Self {
        assert!(!levels.is_empty(), "alphabet must be non-empty");
        assert!(levels.iter().all(|v| v.is_finite()));
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Self { levels }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Smallest spacing between consecutive levels, or 1 for a singleton.
    pub fn step(&self) -> f64 {
        let s = self.levels.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if s.is_finite() { s } else { 1.0 }
    }

    /// Index of the level nearest to `x`; ties go to the lower level.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = self.levels.partition_point(|&v| v < x);
        if i == 0 {
            0
        } else if i == self.levels.len() {
            i - 1
        } else if x - self.levels[i - 1] <= self.levels[i] - x {
            i - 1
        } else {
            i
        }
    }

    pub fn nearest(&self, x: f64) -> f64 {
        self.levels[self.nearest_index(x)]
    }
}

/// Real and imaginary alphabets of one complex coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexAlphabet {
    pub re: Alphabet,
    pub im: Alphabet,
}

impl ComplexAlphabet {
    pub fn of_constellation(c: &Constellation) -> Self {
        debug_assert!(c.is_cartesian());
        Self { re: Alphabet::new(c.real_levels()), im: Alphabet::new(c.imag_levels()) }
    }

    pub fn of_sum_set(s: &SumConstellation) -> Self {
        Self { re: Alphabet::new(s.real_levels()), im: Alphabet::new(s.imag_levels()) }
    }
}

/// Where the search looks for each coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchDomain {
    /// Only the alphabet levels.
    #[default]
    Constrained,
    /// The whole arithmetic progression `levels[0] + step·Z` through the
    /// alphabet; out-of-alphabet results are clipped afterwards.
    Unbounded,
}

/// Real closest-point problem `min ‖observation − basis·s‖²`.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub basis: RMat,
    pub observation: RVec,
    pub alphabets: Vec<Alphabet>,
    pub domain: SearchDomain,
}

impl RealSystem {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Complex vector corresponding to a real solution.
    pub fn reconstruct(&self, solution: &[f64]) -> CVec {
        reconstruct_vector(solution)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub solution: Vec<f64>,
    pub sq_distance: f64,
    pub nodes_visited: u64,
    /// Coordinates moved back into the alphabet (unbounded search only).
    pub clipped: usize,
}

/// Lifts `y ≈ g x` where complex column `c` of `g` draws from
/// `column_alphabets[c]`.
pub fn embed_columns(g: &CMat, y: &CVec, column_alphabets: &[ComplexAlphabet]) -> RealSystem {
    assert_eq!(g.ncols(), column_alphabets.len());
    assert_eq!(g.nrows(), y.len());
    let alphabets = column_alphabets.iter().flat_map(|a| [a.re.clone(), a.im.clone()]).collect();
    RealSystem { basis: embed_matrix(g), observation: embed_vector(y), alphabets, domain: SearchDomain::Constrained }
}

/// Lifts `y ≈ g x` whose first `desired_count` columns draw from
/// `desired_alphabet` and the rest from `interf_alphabet`.
pub fn embed(
    g: &CMat,
    y: &CVec,
    desired_alphabet: &ComplexAlphabet,
    interf_alphabet: &ComplexAlphabet,
    desired_count: usize,
) -> RealSystem {
    let cols: Vec<ComplexAlphabet> = (0..g.ncols())
        .map(|c| if c < desired_count { desired_alphabet.clone() } else { interf_alphabet.clone() })
        .collect();
    embed_columns(g, y, &cols)
}

/// `‖observation − basis·s‖²`, evaluated directly.
pub fn residual_sq(basis: &RMat, observation: &RVec, s: &[f64]) -> f64 {
    let mut total = 0.0;
    for r in 0..basis.nrows() {
        let mut acc = observation[r];
        for (c, &v) in s.iter().enumerate() {
            acc -= basis[(r, c)] * v;
        }
        total += acc * acc;
    }
    total
}

/// Exact minimizer by sphere decoding with the default node budget.
pub fn sphere_decode(sys: &RealSystem) -> Result<SearchResult> {
    SphereDecoder::new(&sys.basis, sys.alphabets.clone(), sys.domain, DEFAULT_NODE_BUDGET)?.decode(&sys.observation)
}
