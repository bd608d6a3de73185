use crate::{Error, Result};

use super::{residual_sq, RealSystem, SearchResult};

pub const DEFAULT_BRUTE_FORCE_CAP: u64 = 1_000_000;

/// Exhaustive minimum of `‖observation − basis·s‖²` over the product of the
/// per-coordinate alphabets (the domain flag is ignored). Ties keep the
/// lexicographically smallest candidate.
pub fn brute_force_ml(sys: &RealSystem, cap: u64) -> Result<SearchResult> {
    let size: f64 = sys.alphabets.iter().map(|a| a.len() as f64).product();
    if size > cap as f64 {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let k = sys.alphabets.len();
    let mut idx = vec![0usize; k];
    let mut s: Vec<f64> = sys.alphabets.iter().map(|a| a.levels()[0]).collect();
    let mut best = s.clone();
    let mut best_d = f64::INFINITY;
    let mut visited = 0u64;
    loop {
        visited += 1;
        let d = residual_sq(&sys.basis, &sys.observation, &s);
        if d < best_d {
            best_d = d;
            best.copy_from_slice(&s);
        }
        // odometer, last coordinate fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(SearchResult { solution: best, sq_distance: best_d, nodes_visited: visited, clipped: 0 });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sys.alphabets[pos].len() {
                s[pos] = sys.alphabets[pos].levels()[idx[pos]];
                break;
            }
            idx[pos] = 0;
            s[pos] = sys.alphabets[pos].levels()[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Alphabet, SearchDomain};
    use crate::linalg::{RMat, RVec};

    #[test]
    fn two_candidate_example() {
        let sys = RealSystem {
            basis: RMat::identity(1, 1),
            observation: RVec::from_vec(vec![0.2]),
            alphabets: vec![Alphabet::new(vec![-1.0, 1.0])],
            domain: SearchDomain::Constrained,
        };
        let res = brute_force_ml(&sys, 10).unwrap();
        assert_eq!(res.solution, vec![1.0]);
        assert!((res.sq_distance - 0.64).abs() < 1e-15);
        assert_eq!(res.nodes_visited, 2);
    }

    #[test]
    fn cap_enforced() {
        let sys = RealSystem {
            basis: RMat::identity(7, 7),
            observation: RVec::zeros(7),
            alphabets: vec![Alphabet::new((0..10).map(f64::from).collect()); 7],
            domain: SearchDomain::Constrained,
        };
        assert!(matches!(
            brute_force_ml(&sys, DEFAULT_BRUTE_FORCE_CAP),
            Err(Error::SearchSpaceTooLarge { cap: DEFAULT_BRUTE_FORCE_CAP, .. })
        ));
    }

    #[test]
    fn ties_resolve_lexicographically() {
        // every candidate equidistant from the origin
        let sys = RealSystem {
            basis: RMat::identity(2, 2),
            observation: RVec::zeros(2),
            alphabets: vec![Alphabet::new(vec![-1.0, 1.0]); 2],
            domain: SearchDomain::Constrained,
        };
        assert_eq!(brute_force_ml(&sys, 10).unwrap().solution, vec![-1.0, -1.0]);
    }
}
