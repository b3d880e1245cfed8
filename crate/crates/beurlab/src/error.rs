//! Crate-wide error type.
//!
//! Everything numerical in this crate is total over its declared domain and
//! reports breaches instead of returning NaN: a function evaluated left of
//! its domain, an integrand that vanishes, a bracket that cannot be closed.
//! Errors are cheap to clone so that function handles (`Func`) can resurface
//! the same failure on every call.

use thiserror::Error;

/// Any failure surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Arithmetic hit the excluded origin of a circle group, where the
    /// generator `1 + rho*u` vanishes and inverses blow up.
    #[error("circle-group origin: u = {u} is within 1e-13 of the excluded point -1/rho")]
    PopaOrigin { u: f64 },

    /// Reflection through the origin is only defined for a positive index.
    #[error("reflection requires rho > 0 (the excluded point must be finite)")]
    ReflectionUndefined,

    /// An evaluation point left a function's declared domain.
    #[error("domain breach: {what}")]
    Domain { what: String },

    /// The occupation-time integrand `1/f` hit a zero or sign change of `f`.
    #[error("singular integrand: f({w}) = {value} is not strictly positive")]
    SingularIntegrand { w: f64, value: f64 },

    /// Adaptive refinement exhausted its budget without meeting tolerance.
    #[error("refinement stalled: {what}")]
    Nonconvergence { what: String },

    /// A functional-equation check was invoked without one of its roles.
    #[error("missing function role `{role}` for equation {equation}")]
    MissingRole {
        role: &'static str,
        equation: &'static str,
    },

    /// The kernel solver only covers the eta / exponential-family pairs.
    #[error("unsupported kernel pair: {what}")]
    UnsupportedPair { what: String },

    /// Registry lookup failed.
    #[error("unknown function family `{name}`")]
    UnknownFamily { name: String },

    /// A constructor rejected its parameters.
    #[error("bad parameter: {what}")]
    BadParam { what: String },

    /// Monotone inversion could not bracket the target value.
    #[error("bracketing failed: {what}")]
    Bracket { what: String },

    /// A least-squares fit had a rank-deficient design.
    #[error("degenerate fit: {what}")]
    DegenerateFit { what: String },

    /// The eta-index estimates at the two largest grid points disagree; the
    /// function is, at this sampling scale, not behaving self-equivaryingly.
    #[error("eta-index estimates disagree beyond 10%: {first} vs {second}")]
    NonSeIndex { first: f64, second: f64 },

    /// The recurrence solver's closed form has a pole at b*r = 1.
    #[error("resonant recurrence: b*r = {br} is within 1e-12 of 1")]
    Resonance { br: f64 },

    /// An experiment's hypothesis gate failed; the run is aborted, not failed.
    #[error("hypothesis not met: {what}")]
    Hypothesis { what: String },

    /// Lexer or parser rejected an expression; `position` is a byte offset.
    #[error("syntax error at byte {position}: {msg}")]
    Syntax { position: usize, msg: String },

    /// An expression referenced a parameter missing from the binding map.
    #[error("unbound parameter `{name}`")]
    UnboundParam { name: String },

    /// Configuration file or flag errors (exit code 2 territory).
    #[error("config error: {what}")]
    Config { what: String },

    /// Filesystem failures while writing reports.
    #[error("io error: {what}")]
    Io { what: String },
}

impl Error {
    /// Shorthand for a domain breach with a formatted description.
    pub fn domain(what: impl Into<String>) -> Self {
        Error::Domain { what: what.into() }
    }

    /// True for the errors that signal "the evaluation point left the
    /// domain" as opposed to a genuine numerical failure; survey code treats
    /// these as a reportable breach rather than a hard stop.
    pub fn is_domain_breach(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::PopaOrigin { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io {
            what: e.to_string(),
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
