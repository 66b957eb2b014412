use thiserror::Error;

/// Errors raised by the numeric and categorical operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("matrices do not commute: {0}")]
    NotCommuting(String),
    #[error("matrix is not normal: {0}")]
    NotNormal(String),
    #[error("matrix is singular")]
    Singular,
    #[error("not composable: {0}")]
    NotComposable(String),
    #[error("invalid category: {0}")]
    InvalidCategory(String),
    #[error("object map is not a bijection")]
    ObjectMapNotBijective,
    #[error("bad arity for cell {cell}: expected {expected}, got {got}")]
    BadArity { cell: &'static str, expected: usize, got: usize },
    #[error("unknown object {0}")]
    UnknownObject(usize),
    #[error("unknown point {0}")]
    UnknownPoint(usize),
    #[error("missing involution data")]
    MissingInvolution,
    #[error("base category is not an inverse *-category")]
    NotInverseBase,
    #[error("enriching objects carry no norm")]
    NoNorm,
    #[error("not a functor: {0}")]
    NotAFunctor(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("category is not commutative")]
    NotCommutative,
    #[error("category is not full")]
    NotFull,
    #[error("category is not unital")]
    NotUnital,
    #[error("spectrum mismatch: {0}")]
    SpectrumMismatch(String),
    #[error("invalid spaceoid: {0}")]
    InvalidSpaceoid(String),
    #[error("bundle is not rank one: {0}")]
    NotRankOne(String),
    #[error("base mismatch: {0}")]
    BaseMismatch(String),
    #[error("fiber is not one-dimensional: {0}")]
    FiberNotOneDimensional(String),
    #[error("object set mismatch: {0}")]
    ObjectSetMismatch(String),
    #[error("morphism failed verification: {0}")]
    NotVerified(String),
    #[error("bad size: {0}")]
    BadSize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
