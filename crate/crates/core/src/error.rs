use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch for `{name}`: expected {expected}, got {actual}")]
    Dimension {
        name: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter `{field}`: {detail}")]
    InvalidParameter { field: String, detail: String },

    #[error("network is not valid: {0}")]
    InvalidNetwork(String),

    #[error("non-finite state at t = {time} s, zone {zone}: {value}")]
    NonFinite { time: f64, zone: usize, value: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("zone {zone}: temperature {temp} equals the supply temperature")]
    SupplyTemperature { zone: usize, temp: f64 },

    #[error("assumption `{name}` violated: {detail}")]
    Assumption { name: &'static str, detail: String },

    #[error("negative multiplier `{name}` for zone {zone}: {value}")]
    NegativeMultiplier {
        name: &'static str,
        zone: usize,
        value: f64,
    },

    #[error("no strictly feasible point: {0}")]
    NoSlaterPoint(String),

    #[error("no feasible grid point: {0}")]
    NoFeasiblePoint(String),

    #[error("neighbor message error for zone {zone}: {detail}")]
    Message { zone: usize, detail: String },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("audit window error: {0}")]
    Window(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
