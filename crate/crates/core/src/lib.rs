//! Pseudo-spectral simulator for the stochastic primitive equations in their
//! reduced two-component form on a periodic box, driven by bounded Haar-series
//! red noise, together with diagnostics for dissipativity, non-degeneracy and
//! exponential mixing of the resulting Markov chain.
//!
//! The crate is organized bottom-up:
//!
//! * [`spectral`]: fields, transforms, norms and the projection onto `V`;
//! * [`dynamics`]: the nonlinear operator `b`, `B = 𝔓b`, the vertical
//!   velocity, the tangent operator and its adjoint;
//! * [`timestep`]: the integrating-factor Heun integrator, the time-one map and
//!   the tangent/adjoint propagators;
//! * [`rednoise`]: Haar wavelets and the bounded random forcing;
//! * [`mixing`]: Markov chains, couplings, the dual-Lipschitz distance and the
//!   Gramian diagnostic;
//! * [`snapshot`]: the binary snapshot format.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod mixing;
pub mod rednoise;
pub mod snapshot;
pub mod spectral;
pub mod timestep;

pub use error::{Error, Result};
pub use grid::{Band, GridSpec};
pub use spectral::SpectralField;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/timestep.md")]
    mod timestep {}
    #[doc = include_str!("../../../book/src/rednoise.md")]
    mod rednoise {}
    #[doc = include_str!("../../../book/src/mixing.md")]
    mod mixing {}
}
