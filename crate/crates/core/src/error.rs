use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Array configuration rejected (non-square element count, bad frequency).
    InvalidConfig(&'static str),
    /// Two points coincide or a height difference has the wrong sign.
    DegenerateGeometry(&'static str),
    /// Vector or matrix sizes do not line up.
    DimensionMismatch { expected: usize, found: usize },
    /// A requested null sits on top of the pointing direction.
    NullConflict { separation_deg: f64 },
    /// Trajectory endpoints cannot be joined within the slot budget.
    InfeasibleTrajectory { distance_m: f64, budget_m: f64 },
    InvalidArgument(&'static str),
    EmptyDataset,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DegenerateGeometry(msg) => write!(f, "degenerate geometry: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NullConflict { separation_deg } => write!(
                f,
                "null direction is {separation_deg:.3} deg from the pointing direction"
            ),
            Error::InfeasibleTrajectory {
                distance_m,
                budget_m,
            } => write!(
                f,
                "endpoints are {distance_m:.1} m apart but the slot budget only covers {budget_m:.1} m"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::EmptyDataset => f.write_str("dataset is empty"),
        }
    }
}

impl core::error::Error for Error {}
