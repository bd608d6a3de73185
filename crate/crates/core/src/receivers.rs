//! Decision rules at one receiver.
//!
//! * [`LinearZf`]: project onto the orthogonal complement of the
//!   interference span, solve the projected least-squares problem, slice
//!   each symbol.
//! * [`GlrtZf`]: minimize `‖P⊥(y − G_k1 x)‖²` jointly over the desired
//!   alphabet product. This is the likelihood ratio test that treats the
//!   interference as an arbitrary vector of its subspace.
//! * [`LatticeDecoder`]: minimize `‖y − G_k x̃‖²` jointly over the desired
//!   symbols and the discrete interference sum.
//!
//! Each receiver factors its matrices once and can then decode any number of
//! observations; the free functions are one-shot conveniences.

use crate::constellation::{slice_nearest, Constellation, SumConstellation};
use crate::lattice::{ComplexAlphabet, SearchDomain, SearchResult, SphereDecoder, DEFAULT_NODE_BUDGET};
use crate::linalg::{embed_matrix, embed_vector, orthonormal_columns, reconstruct_vector, CMat, CVec, LeastSquares};
use crate::mimo::{interference_layout, EquivalentChannel, InterferenceEntry};
use crate::{Error, Result, C64};

/// Relative rank tolerance for orthonormalization and projected solves.
pub const PROJECTION_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReceiverKind {
    LzfLinear,
    LzfGlrt,
    Ld,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 3] = [ReceiverKind::LzfLinear, ReceiverKind::LzfGlrt, ReceiverKind::Ld];

    pub fn name(&self) -> &'static str {
        match self {
            ReceiverKind::LzfLinear => "lzf_linear",
            ReceiverKind::LzfGlrt => "lzf_glrt",
            ReceiverKind::Ld => "ld",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Orthogonal projector onto the complement of `span(G_k2)`.
#[derive(Debug, Clone)]
pub struct ProjectorPack {
    pub receiver: usize,
    pub p_perp: CMat,
    /// `P⊥ G_k1`.
    pub projected_desired: CMat,
}

/// Builds `P⊥ = I − QQ†` from an orthonormal basis `Q` of the interference
/// columns.
pub fn build_projector(eq: &EquivalentChannel) -> Result<ProjectorPack> {
    let q = orthonormal_columns(&eq.g_interf(), PROJECTION_RANK_TOL)
        .ok_or(Error::IllConditionedInterference { receiver: eq.receiver })?;
    let dim = eq.dim();
    let p_perp = CMat::identity(dim, dim) - &q * q.adjoint();
    let projected_desired = &p_perp * eq.g_desired();
    Ok(ProjectorPack { receiver: eq.receiver, p_perp, projected_desired })
}

/// `‖P⊥(y − G_k1 x)‖²`.
pub fn glrt_metric(y: &CVec, eq: &EquivalentChannel, pack: &ProjectorPack, x: &[C64]) -> f64 {
    let r = y - eq.g_desired() * CVec::from_column_slice(x);
    (&pack.p_perp * r).norm_squared()
}

/// Hard decision of one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Constellation indices of the desired symbols.
    pub desired: Vec<usize>,
    /// Estimate of the aligned interference vector (lattice decoding only).
    pub interference: Option<Vec<C64>>,
    pub nodes_visited: u64,
    /// The search ran out of nodes; the decision is the best point found.
    pub budget_exceeded: bool,
    pub clipped: usize,
}

fn search_outcome(res: Result<SearchResult>) -> Result<(SearchResult, bool)> {
    match res {
        Ok(r) => Ok((r, false)),
        Err(Error::NodeBudgetExceeded { partial, .. }) => Ok((*partial, true)),
        Err(e) => Err(e),
    }
}

/// Projection, least squares against `P⊥ G_k1`, per-symbol slicing.
#[derive(Debug, Clone)]
pub struct LinearZf {
    p_perp: CMat,
    solver: LeastSquares,
    constellation: Constellation,
}

impl LinearZf {
    pub fn new(pack: &ProjectorPack, c: &Constellation) -> Result<Self> {
        let solver = LeastSquares::new(&pack.projected_desired, PROJECTION_RANK_TOL)
            .ok_or(Error::IllConditionedProjectedChannel { receiver: pack.receiver })?;
        Ok(Self { p_perp: pack.p_perp.clone(), solver, constellation: c.clone() })
    }

    /// Unsliced least-squares estimate of the desired symbols.
    pub fn estimate(&self, y: &CVec) -> CVec {
        self.solver.solve(&(&self.p_perp * y))
    }

    pub fn decode(&self, y: &CVec) -> Vec<usize> {
        self.estimate(y).iter().map(|&z| slice_nearest(z, &self.constellation)).collect()
    }
}

/// Joint minimization of the projected metric over `C^desired`.
#[derive(Debug, Clone)]
pub struct GlrtZf {
    p_perp: CMat,
    decoder: SphereDecoder,
    constellation: Constellation,
}

impl GlrtZf {
    pub fn new(pack: &ProjectorPack, c: &Constellation, node_budget: u64) -> Result<Self> {
        let alpha = ComplexAlphabet::of_constellation(c);
        let cols = pack.projected_desired.ncols();
        let alphabets = (0..cols).flat_map(|_| [alpha.re.clone(), alpha.im.clone()]).collect();
        let decoder = SphereDecoder::new(
            &embed_matrix(&pack.projected_desired),
            alphabets,
            SearchDomain::Constrained,
            node_budget,
        )
        .map_err(|e| match e {
            Error::RankDeficientBasis { .. } => Error::IllConditionedProjectedChannel { receiver: pack.receiver },
            other => other,
        })?;
        Ok(Self { p_perp: pack.p_perp.clone(), decoder, constellation: c.clone() })
    }

    pub fn decode(&self, y: &CVec) -> Result<Decision> {
        let obs = embed_vector(&(&self.p_perp * y));
        let (res, budget_exceeded) = search_outcome(self.decoder.decode(&obs))?;
        let x = reconstruct_vector(&res.solution);
        Ok(Decision {
            desired: x.iter().map(|&z| slice_nearest(z, &self.constellation)).collect(),
            interference: None,
            nodes_visited: res.nodes_visited,
            budget_exceeded,
            clipped: 0,
        })
    }
}

/// Per-column alphabets of `X̃_k`: the constellation for desired columns, the
/// sum set (or the constellation, for an unshifted user-1 symbol) for
/// interference columns.
pub fn stacked_alphabets(receiver: usize, n: usize, c: &Constellation, c_sum: &SumConstellation) -> Vec<ComplexAlphabet> {
    let single = ComplexAlphabet::of_constellation(c);
    let sum = ComplexAlphabet::of_sum_set(c_sum);
    let desired = crate::mimo::desired_count(receiver, n);
    std::iter::repeat_n(single.clone(), desired)
        .chain(interference_layout(receiver, n).into_iter().map(|e| match e {
            InterferenceEntry::Sum => sum.clone(),
            InterferenceEntry::Single => single.clone(),
        }))
        .collect()
}

/// Joint closest-point search over desired symbols and interference sum.
#[derive(Debug, Clone)]
pub struct LatticeDecoder {
    decoder: SphereDecoder,
    desired_cols: usize,
    constellation: Constellation,
}

impl LatticeDecoder {
    pub fn new(
        eq: &EquivalentChannel,
        c: &Constellation,
        c_sum: &SumConstellation,
        domain: SearchDomain,
        node_budget: u64,
    ) -> Result<Self> {
        let n = eq.dim() / 2;
        let alphabets = stacked_alphabets(eq.receiver, n, c, c_sum)
            .into_iter()
            .flat_map(|a| [a.re, a.im])
            .collect();
        let decoder = SphereDecoder::new(&embed_matrix(&eq.g_full), alphabets, domain, node_budget)?;
        Ok(Self { decoder, desired_cols: eq.desired_cols, constellation: c.clone() })
    }

    pub fn search(&self, y: &CVec) -> Result<SearchResult> {
        self.decoder.decode(&embed_vector(y))
    }

    pub fn decode(&self, y: &CVec) -> Result<Decision> {
        let (res, budget_exceeded) = search_outcome(self.search(y))?;
        let x = reconstruct_vector(&res.solution);
        Ok(Decision {
            desired: x.iter().take(self.desired_cols).map(|&z| slice_nearest(z, &self.constellation)).collect(),
            interference: Some(x.iter().skip(self.desired_cols).copied().collect()),
            nodes_visited: res.nodes_visited,
            budget_exceeded,
            clipped: res.clipped,
        })
    }
}

pub fn decode_lzf_linear(y: &CVec, pack: &ProjectorPack, c: &Constellation) -> Result<Vec<usize>> {
    Ok(LinearZf::new(pack, c)?.decode(y))
}

pub fn decode_lzf_glrt(y: &CVec, pack: &ProjectorPack, c: &Constellation) -> Result<Decision> {
    GlrtZf::new(pack, c, DEFAULT_NODE_BUDGET)?.decode(y)
}

pub fn decode_ld(y: &CVec, eq: &EquivalentChannel, c: &Constellation, c_sum: &SumConstellation) -> Result<Decision> {
    LatticeDecoder::new(eq, c, c_sum, SearchDomain::Constrained, DEFAULT_NODE_BUDGET)?.decode(y)
}
