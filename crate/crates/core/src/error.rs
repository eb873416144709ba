use std::fmt;

/// Location of an entry of a tailed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqIndex {
    At(i64),
    LeftTail,
    RightTail,
}

impl fmt::Display for SeqIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqIndex::At(j) => write!(f, "j={j}"),
            SeqIndex::LeftTail => f.write_str("left tail"),
            SeqIndex::RightTail => f.write_str("right tail"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-summable sequence: tails are ({left}, {right}), expected zero tails")]
    NonSummable { left: f64, right: f64 },

    #[error("state escaped the admissible interval at {index}: value {value} not in ({lo}, {hi})")]
    StateEscaped {
        index: SeqIndex,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no convergence after {steps} steps (last residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },

    #[error("profile window [{lo}, {hi}] exceeds the allowed half width {half_width}")]
    WindowOverflow { lo: i64, hi: i64, half_width: i64 },

    #[error("delta={delta} is not a solved member of the profile family")]
    UnsolvedMember { delta: f64 },

    #[error("mass {mass} is outside the tabulated family range [{lo}, {hi}]")]
    OutsideFamilyRange { mass: f64, lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("stencil mismatch: (p, q) = ({p_a}, {q_a}) vs ({p_b}, {q_b})")]
    StencilMismatch {
        p_a: usize,
        q_a: usize,
        p_b: usize,
        q_b: usize,
    },

    #[error("no diffusive order found up to mu = {mu_max}")]
    NoDiffusiveOrder { mu_max: u32 },

    #[error("root finder did not converge")]
    RootFinder,

    #[error("spectral probe stagnated: successive estimates {a} and {b}")]
    ProbeStagnation { a: f64, b: f64 },

    #[error("eigenvector construction failed: {0}")]
    Eigenvector(String),

    #[error("quadrature did not converge (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("condition (H) violated by triplet ({a}, {b}, {c})")]
    ConditionH { a: f64, b: f64, c: f64 },

    #[error("perturbation too large: sup norm {norm} is not below radius {radius}")]
    PerturbationTooLarge { norm: f64, radius: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
