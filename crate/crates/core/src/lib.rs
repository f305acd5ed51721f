//! Numerical laboratory for type II blow-up of the three dimensional
//! energy-critical heat equation `u_t = Δu + u⁵`.
//!
//! The crate builds the matched inner/outer blow-up ansatz around the
//! Aubin–Talenti bubble, evaluates its error in the weighted norms used by
//! the inner–outer gluing scheme, solves the nonlocal (Abel-type) reduced
//! equation for the scaling modulation, and runs a radial method-of-lines
//! simulator to measure blow-up rates.
//!
//! Modules map onto the pieces of the construction:
//!
//! * [`profiles`] — bubble `w`, dilation kernel `Z₀`, corrector `J`, Hermite
//!   outer profiles, and the negative eigenpair of `Δ + 5w⁴`.
//! * [`params`] — the parameter/exponent set and its inequality systems.
//! * [`ansatz`] — scaling law `μ₀`, modulation bookkeeping, cutoffs, the
//!   glued first approximation `U₁`, and matching diagnostics.
//! * [`residual`] — discrete radial operators, the error operator `S(u)`,
//!   and all weighted norms.
//! * [`nonlocal`] — heat-kernel Duhamel machinery, Gaussian blocks, `Υ`
//!   combinations, and the outer linear-theory bound probes.
//! * [`abel`] — half-order fractional calculus and the reduced-equation
//!   solver for the modulation amplitude `α(t)`.
//! * [`simulate`] — radial method-of-lines simulation, blow-up rate fitting,
//!   and the inner linear-evolution probe.
//! * [`cli`] / [`config`] / [`report`] — plain-text configuration, the
//!   subcommand orchestrator, and CSV/SVG emission.

pub mod abel;
pub mod ansatz;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod nonlocal;
pub mod numerics;
pub mod params;
pub mod profiles;
pub mod report;
pub mod residual;
pub mod simulate;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// `3^(1/4)`, the amplitude of the Aubin–Talenti bubble.
pub const THREE_Q: f64 = 1.316_074_012_952_492_4;
