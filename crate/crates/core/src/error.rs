use thiserror::Error;

/// Errors raised anywhere in the DSL, compiler, backend or toolkits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SfError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("order error: {0}")]
    Order(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("expression is not linear in {0}")]
    NotLinear(String),
    #[error("singular coefficient while solving for {0}")]
    Singular(String),
    #[error("point lies outside the domain: {0}")]
    Location(String),
    #[error("binding error: {0}")]
    Binding(String),
    #[error("lowering error: {0}")]
    Lowering(String),
    #[error("scheduling error: {0}")]
    Scheduling(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("stability condition violated: {0}")]
    Stability(String),
    #[error("state error: {0}")]
    State(String),
    #[error("capability unavailable: {0}")]
    Capability(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for SfError {
    fn from(e: std::io::Error) -> Self {
        SfError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SfError>;
