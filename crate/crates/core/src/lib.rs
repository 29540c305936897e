//! Spectra of Hill's equation
//!
//! ```text
//! (p(x) y')' + (λ s(x) - q(x)) y = 0
//! ```
//!
//! with periodic coefficients, truncated to `[τ, τ + N a]` with `y = 0` at
//! both ends.
//!
//! The pipeline runs through the modules in order:
//!
//! - [`coeffs`] builds and validates periodic coefficient triples.
//! - [`propagate`] gives transfer matrices, the monodromy and the
//!   discriminant `D(λ)`.
//! - [`spectrum`] locates the band edges `ν`, `μ` and the edge
//!   eigenfunctions.
//! - [`truncated`] finds the `N - 1` states in each band and the one state
//!   in each gap, labels the gap states, and sweeps them over `τ`.
//! - [`oracle`] cross-checks everything against a finite-difference solve.
//!
//! ```
//! use hill::coeffs::PeriodicCoefficients;
//! use hill::oracle::{oracle_check, Status};
//! use hill::truncated::TruncationConfig;
//!
//! let kp = PeriodicCoefficients::kronig_penney(1.0, 10.0, 0.5)?;
//! let config = TruncationConfig::new(0.0, 2)?;
//! let check = oracle_check(&kp, &config, 2, 128, true, 1e-4)?;
//! assert_eq!(check.report.status, Status::Pass);
//! # Ok::<(), hill::error::HillError>(())
//! ```
//!
//! The guide in `book/` walks through each step; its code listings are run
//! as doctests of this crate.

pub mod coeffs;
pub mod error;
pub mod oracle;
pub mod propagate;
mod roots;
pub mod spectrum;
pub mod truncated;

// Each chapter becomes a module so a failing listing points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/discriminant.md")]
    mod discriminant {}
    #[doc = include_str!("../../../book/src/band-edges.md")]
    mod band_edges {}
    #[doc = include_str!("../../../book/src/band-states.md")]
    mod band_states {}
    #[doc = include_str!("../../../book/src/gap-states.md")]
    mod gap_states {}
    #[doc = include_str!("../../../book/src/tau-sweep.md")]
    mod tau_sweep {}
    #[doc = include_str!("../../../book/src/eigenfunctions.md")]
    mod eigenfunctions {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
