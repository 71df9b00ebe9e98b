use alloc::string::String;
use core::fmt;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input value violates its domain (negative rate, out-of-range
    /// probability, ...).
    Domain(&'static str),
    /// A parameter combination makes the requested quantity undefined,
    /// e.g. `f` with `gamma_leak + 2*gamma_dp = 0`.
    Singular(&'static str),
    /// A frequency axis violates its contract (unsorted, non-uniform,
    /// length mismatch, too coarse for the requested kernel).
    Axis(&'static str),
    /// Fit input is structurally under-determined (too few points or
    /// no free parameters).
    UnderDetermined(&'static str),
    /// The model produced a non-finite value at the given parameter vector.
    NonFinite(String),
    /// No usable extremum was found in the data.
    NoExtremum,
    /// The supplied field grid cannot be normalized (max |E_r| = 0).
    DegenerateField,
    /// Fit windows that must be disjoint overlap.
    OverlappingWindows,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Singular(what) => write!(f, "singular parameters: {what}"),
            Error::Axis(what) => write!(f, "axis error: {what}"),
            Error::UnderDetermined(what) => write!(f, "under-determined problem: {what}"),
            Error::NonFinite(at) => write!(f, "model evaluated to a non-finite value at {at}"),
            Error::NoExtremum => write!(f, "no dominant extremum found in data"),
            Error::DegenerateField => write!(f, "degenerate field: max |E_r| is zero"),
            Error::OverlappingWindows => write!(f, "fit windows overlap"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
