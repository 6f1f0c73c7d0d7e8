use alloc::string::String;

/// Hypotheses a bound can depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `t * nu_bar(h_c(t)) <= 1/4`.
    SmallTailMass,
    /// `t * nu_bar(h_c(t)) < 1/2`, the weakened form used by the refined median bound.
    HalfTailMass,
    /// `nu_bar(R) <= A V(R) / R^2` at the radius in use.
    TailMassVsVariance,
    /// `M(R) <= K V(R) / R`.
    TailMomentVsVariance,
}

impl core::fmt::Display for Condition {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Condition::SmallTailMass => "t*nu_bar(h) <= 1/4",
            Condition::HalfTailMass => "t*nu_bar(h) < 1/2",
            Condition::TailMassVsVariance => "nu_bar(R) <= A*V(R)/R^2",
            Condition::TailMomentVsVariance => "M(R) <= K*V(R)/R",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("quadrature did not converge: estimate {estimate} with error estimate {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("level {level} is never attained (largest value seen {sup_seen})")]
    LevelNeverAttained { level: f64, sup_seen: f64 },

    #[error("root finder did not converge after {iterations} steps (last iterate {last})")]
    NonConvergence { iterations: usize, last: f64 },

    #[error("hypothesis `{condition}` violated: offending value {value}")]
    ConditionViolated { condition: Condition, value: f64 },

    #[error("the Levy measure has infinite mean tail M(R)")]
    InfiniteMean,

    #[error("inverse tail CDF could not bracket level {level}")]
    InverseCdf { level: f64 },

    #[error("small-jump cutoff unattainable: V does not fall to {target}")]
    EpsilonPolicy { target: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: &str) -> Error {
    Error::InvalidParameter(String::from(msg))
}
