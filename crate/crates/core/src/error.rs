use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {rule}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },

    #[error("duty ratio {0} outside the allowed range {1}")]
    InvalidDuty(f64, &'static str),

    #[error("zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("root {re}{im:+}j failed the residual check (relative residual {residual:e})")]
    RootResidual { re: f64, im: f64, residual: f64 },

    #[error("eigenvalue computation did not converge")]
    Eigen,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("grid too coarse to unwrap phase between {f_a} Hz and {f_b} Hz")]
    CoarseGrid { f_a: f64, f_b: f64 },

    #[error("transfer function denominator vanishes at {0} Hz")]
    SingularEval(f64),

    #[error("invalid sweep value {value} for axis {axis}: {reason}")]
    InvalidSweep {
        axis: &'static str,
        value: f64,
        reason: String,
    },

    #[error("invalid simulation setup: {0}")]
    InvalidSim(String),

    #[error("simulation diverged at t = {t} s ({signal} = {value})")]
    Diverged {
        t: f64,
        signal: &'static str,
        value: f64,
    },

    #[error("analysis window [{t0}, {t1}] s is not an integer number of {period} s periods")]
    NonIntegerWindow { t0: f64, t1: f64, period: f64 },

    #[error("only {got} samples per period in the analysis window, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("time {t} s lies outside the trace [{start}, {end}] s")]
    OutsideTrace { t: f64, start: f64, end: f64 },

    #[error("invalid controller: {0}")]
    InvalidController(String),
}
