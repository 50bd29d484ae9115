use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("q = 0: the cosine series and alpha are undefined; use the numeric ODE path")]
    ZeroQ,

    #[error("`{what}` = {value} is outside the allowed range {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: &'static str,
    },

    #[error("record grid needs at least two samples, got {0}")]
    BadGrid(usize),

    #[error("record covers [{record_start}, {record_end}] but the window is [{window_start}, {window_end}]")]
    RecordWindowMismatch {
        record_start: f64,
        record_end: f64,
        window_start: f64,
        window_end: f64,
    },

    #[error("integrator could not meet the tolerance near t = {t} (step {step:e})")]
    ToleranceNotMet { t: f64, step: f64 },

    #[error("boundary problem is singular at t'' = {t_end}: |D(t'')| / max|D| = {ratio:e} (conjugate point)")]
    ConjugatePoint { t_end: f64, ratio: f64 },

    #[error("f vanishes on the window near t = {t}; the single-solution prefactor form is unusable here")]
    CausticOnWindow { t: f64 },

    #[error(
        "elimination pivot {index} of {n_slices} is numerically zero (|pivot| = {magnitude:e})"
    )]
    SingularSlice {
        index: usize,
        n_slices: usize,
        magnitude: f64,
    },

    #[error("expected a {expected:?}-axis scenario")]
    AxisMismatch { expected: crate::trapmodel::Axis },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for the failures that stem from a genuine singularity of the
    /// problem rather than bad input.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self,
            Error::ConjugatePoint { .. }
                | Error::SingularSlice { .. }
                | Error::CausticOnWindow { .. }
        )
    }
}
