use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),

    #[error("quality scores must be strictly decreasing (w[{index}] = {left} <= w[{next}] = {right})", next = .index + 1)]
    NotStrictlyDecreasing { index: usize, left: f64, right: f64 },

    #[error("invalid link function: {0}")]
    InvalidLink(String),

    #[error("link produced {value} for argument {arg}, outside (0, 1) after clamping")]
    DegenerateLink { arg: f64, value: f64 },

    #[error("matrix is not a valid probability matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix rows are not ordered by strength (row {row} < row {next} at column {col})")]
    NotSst { row: usize, next: usize, col: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("not a permutation of 0..{0}")]
    InvalidPermutation(usize),

    #[error("parameter `{name}` = {value} out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("exhaustive MAP limited to n <= {max}, got {n}")]
    TooLargeForMap { n: usize, max: usize },

    #[error("bound inapplicable: {0}")]
    BoundInapplicable(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
