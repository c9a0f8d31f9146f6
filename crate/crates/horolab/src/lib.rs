//! Numerical laboratory for geodesic-ball geometry on model Riemannian manifolds.
//!
//! The crate computes the basic objects of ball-and-sphere geometry — geodesic
//! balls `B(p,r)`, their volumes `V(p,r)` and boundary areas `A(p,r)`, the
//! ball center-of-mass field `H(p,r) = ∫_B exp_p⁻¹(q) dμ`, and mean values of
//! scalar fields — on a catalog of concrete manifolds (Euclidean space,
//! hyperbolic space in the hyperboloid model, the round sphere, and conformal
//! 2-D surfaces), and verifies a family of differential identities and bounds
//! relating them.
//!
//! Module layout:
//! - [`manifolds`]: model spaces with closed-form exponential/logarithm maps,
//!   parallel transport, and radial volume densities.
//! - [`geodesics`]: numerical geodesic machinery for conformal surfaces —
//!   ODE integration, inverse exponential map by Newton shooting, transport,
//!   and Jacobi-equation densities.
//! - [`integrals`]: quadrature over geodesic spheres and balls in geodesic
//!   polar coordinates.
//! - [`identities`]: the verified identities (volume-gradient identity,
//!   moving-ball derivative, the directional-derivative formula for
//!   mean-value fields, norm bounds, area/volume-ratio scans).
//! - [`catalog`]: named manifold instances, test fields, and default
//!   experiment parameters.
//! - [`config`] / [`runner`]: the batch experiment runner behind the
//!   `horolab` CLI.
//! - [`verify`]: the built-in acceptance suite (`horolab verify-all`).

pub mod catalog;
pub mod config;
pub mod geodesics;
pub mod identities;
pub mod integrals;
pub mod linalg;
pub mod manifolds;
pub mod runner;
pub mod verify;

pub use manifolds::{ConformalSurface, ManifoldModel, Point, TangentVector};

/// Crate-wide error type.
///
/// Every operation that can fail returns one of these; the variants map to
/// the failure classes of the underlying geometry (contract violations,
/// injectivity-domain violations, integration accuracy, Newton shooting,
/// conjugate points) plus configuration errors from the CLI layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A tangent vector was used at a point other than its base point, or a
    /// point does not satisfy the containing model's constraint surface.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A query point or radius lies at or beyond the injectivity bound.
    #[error("outside injectivity domain: {0}")]
    Domain(String),

    /// A geodesic integration exceeded the energy-drift tolerance even after
    /// the maximum number of step halvings.
    #[error("integration accuracy failure: {0}")]
    Accuracy(String),

    /// Newton shooting failed to reach the requested terminal tolerance.
    #[error("shooting failed after {iterations} iterations (best residual {residual:.3e})")]
    ShootingFailed { iterations: u32, residual: f64 },

    /// The scalar Jacobi solution became nonpositive before the requested
    /// radius: the configuration has left the conjugate-point-free domain.
    #[error("conjugate point encountered: jacobi solution nonpositive at r = {r}")]
    ConjugatePoint { r: f64 },

    /// An operation's stated precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Invalid experiment configuration (CLI layer).
    #[error("{0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
