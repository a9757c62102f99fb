use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis index {index} out of range for {n_sites} sites")]
    IndexOutOfRange { index: usize, n_sites: usize },

    #[error("invalid spin configuration: {0}")]
    InvalidConfiguration(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("cosh vanishes at argument {re}+{im}i")]
    NumericSingularity { re: f64, im: f64 },

    #[error("ansatz element overflows at pair (bra {bra}, ket {ket}) with log-modulus {log_modulus}")]
    Overflow {
        bra: usize,
        ket: usize,
        log_modulus: f64,
    },

    #[error("degenerate trace {0:e}")]
    DegenerateTrace(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("iteration {n}: {source}")]
    Iteration {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn config(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            msg: msg.into(),
        }
    }

    /// True for failures that originate in the numerics rather than in input handling.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NumericSingularity { .. }
            | Error::Overflow { .. }
            | Error::DegenerateTrace(_)
            | Error::NonFinite(_) => true,
            Error::Iteration { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
