use thiserror::Error;

use crate::gapmap::Sign;

/// Why a map failed to be renormalizable.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocked {
    /// Index `j` of the gap iterate `f^j(G)` whose closure meets 0.
    pub iterate: usize,
    /// 0 sits within the geometric margin of an endpoint of that closure.
    pub boundary: bool,
    /// Sign of the map (from `b`), used to order blocked maps in parameter space.
    pub sigma: Sign,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: tail {tail:.3e} exceeds {tol:.1e} of the leading coefficient")]
    QuadratureNotConverged { tail: f64, tol: f64 },

    #[error("projection residual {residual:.3e} exceeds tolerance {tol:.1e} (raise the basis dimension)")]
    Accuracy { residual: f64, tol: f64 },

    #[error("degenerate interval [{lo}, {hi}]: width below {min:.0e}")]
    DegenerateInterval { lo: f64, hi: f64, min: f64 },

    #[error("map is not dissipative: nu = {nu} >= 1")]
    NotDissipative { nu: f64 },

    #[error("degenerate gap ({lo}, {hi})")]
    DegenerateGap { lo: f64, hi: f64 },

    #[error("orbit hits the discontinuity at iterate {iterate} (x = {x:e})")]
    OrbitHitsDiscontinuity { iterate: usize, x: f64 },

    #[error("not renormalizable: 0 lies in the closure of gap iterate {}{}", .0.iterate, if .0.boundary { " (boundary case)" } else { "" })]
    NotRenormalizable(Blocked),

    #[error("gap orbit did not cross 0 within {cap} iterations")]
    IterationCap { cap: usize },

    #[error("finite-difference step too large: combinatorics changed for column {column} after {halvings} halvings")]
    StepTooLarge { column: usize, halvings: u32 },

    #[error("target combinatorics not realizable in (0,1); deepest bracket [{lo}, {hi}]")]
    UnrealizableCombinatorics { lo: f64, hi: f64 },

    #[error("eigenvalue computation did not converge")]
    Eigen,

    #[error("at depth {depth}: {source}")]
    AtDepth {
        depth: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Strips any depth wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDepth { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_not_renormalizable(&self) -> bool {
        matches!(self.root(), Error::NotRenormalizable(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
