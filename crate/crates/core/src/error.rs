use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("the flat model needs n >= 2 (dimension 4n >= 8), got n = {0}")]
    DimensionTooSmall(usize),

    #[error("{op}: result degree {needed} exceeds the degree bound {bound}")]
    DegreeOverflow { op: &'static str, needed: u32, bound: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("expected a unit element: {0}")]
    NotUnit(String),

    #[error("1-form must have Q-hermitian exterior derivative")]
    NotQHermitian,

    #[error("connection is not self-dual")]
    NotSelfDual,

    #[error("connection is not closed")]
    NotClosed,

    #[error("1-form is not co-closed")]
    NotCoClosed,

    #[error("vertical vector is not orthogonal to the base point of the fibre")]
    NotVertical,

    #[error("gauge function must be positive at the sample point")]
    NonPositive,
}

pub type Result<T> = std::result::Result<T, Error>;
