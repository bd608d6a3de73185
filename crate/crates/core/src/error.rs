use std::path::PathBuf;

use crate::lattice::SearchResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("truncation interval [{lo}, {hi}] needs ~{expected_draws:.3e} draws per entry (cap {cap:.0e})")]
    RejectionBudgetExceeded { lo: f64, hi: f64, expected_draws: f64, cap: f64 },

    #[error("degenerate channel: minimum gap between T entries {min_gap:.3e} below tolerance {tol:.3e}")]
    DegenerateChannel { min_gap: f64, tol: f64 },

    #[error("precoder V1 numerically rank deficient: rank {rank} < {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("equivalent channel of receiver {receiver} is singular: rank {rank} < {required}")]
    SingularEquivalentChannel { receiver: usize, rank: usize, required: usize },

    #[error("interference columns of receiver {receiver} lost rank during orthonormalization")]
    IllConditionedInterference { receiver: usize },

    #[error("projected desired channel of receiver {receiver} is rank deficient")]
    IllConditionedProjectedChannel { receiver: usize },

    #[error("triangular factor has diagonal entry {value:.3e} at column {column} (threshold {threshold:.3e})")]
    RankDeficientBasis { column: usize, value: f64, threshold: f64 },

    /// The search ran out of nodes. The best point found so far is attached,
    /// but it is not certified as the closest point.
    #[error("node budget of {budget} exceeded; best point so far is approximate")]
    NodeBudgetExceeded { budget: u64, partial: Box<SearchResult> },

    #[error("search space of {size:.3e} candidates exceeds cap {cap}")]
    SearchSpaceTooLarge { size: f64, cap: u64 },

    #[error("unsupported QAM order {0}: must be a perfect square >= 4")]
    UnsupportedOrder(usize),

    #[error("trial gave up after {attempts} channel draws without a usable realization")]
    ResampleBudgetExceeded { attempts: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema mismatch at row {row}: {message}")]
    SchemaMismatch { row: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
