//! Numerical renormalization of dissipative gap maps.
//!
//! A gap map is a Lorenz-type interval map on `[b−1, b]` with two increasing,
//! contracting branches whose images leave a gap around the discontinuity.
//! The crate builds such maps from the coordinates `(α, β, b, φ_L, φ_R)`,
//! applies the renormalization operator (as a rescaled first-return map and in
//! decomposition space), differentiates it by finite differences, and checks
//! the resulting hyperbolic structure.

pub mod cheb;
pub mod decomp;
pub mod diffeo;
pub mod error;
pub mod gapmap;
pub mod renorm;
pub mod search;
pub mod tangent;

pub use decomp::{renormalize_decomposed, DecomposedGapMap, Decomposition, Item};
pub use diffeo::{Diffeo, Endpoint, NormReport};
pub use error::{Error, Result};
pub use gapmap::{GapMap, Sign};
pub use renorm::{
    affine_distance, find_k, renormalize, renormalize_n, renormalize_n_with, renormalize_with,
    return_map, Combinatorics, RenormOptions, RenormStep, ReturnMap, Trajectory,
};
pub use search::{bisect_b, rotation_number, transversality_check, Family, SearchResult};
pub use tangent::{block_report, jacobian, spectrum, BlockReport, Jacobian};
