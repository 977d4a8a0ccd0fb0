use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("depth {0} exceeds the supported maximum of 60")]
    DepthTooLarge(u64),
    #[error("depth {0} is too large to materialize an interval set")]
    SetTooLarge(u32),
    #[error("level {level} is outside 0..={depth}")]
    LevelOutOfRange { level: u32, depth: u32 },
    #[error("position {pos} is outside 0..2^{level}")]
    PosOutOfRange { pos: u64, level: u32 },
    #[error("leaf interval has no children in the finite tree")]
    LeafHasNoChildren,
    #[error("the root interval has no parent")]
    RootHasNoParent,
    #[error("ordinal {ordinal} is outside 1..={max}")]
    OrdinalOutOfRange { ordinal: u64, max: u64 },
    #[error("the intervals belong to trees of different depth")]
    DepthMismatch,
    #[error("interval is not contained in the requested ancestor")]
    NotNested,
    #[error("the endpoints are not ordered in the postorder")]
    NotPostorderOrdered,
    #[error("the endpoints are not ordered lexicographically")]
    NotLexOrdered,
    #[error("table is not a permutation of the tree")]
    NotAPermutation,
    #[error("two-adic valuation is undefined at 0")]
    ValuationOfZero,
    #[error("p must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("empty collection has no certificate")]
    EmptyCollection,
    #[error("signal length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("malformed coefficient set: {0}")]
    MalformedCoefficients(String),
}

pub type Result<T> = std::result::Result<T, Error>;
