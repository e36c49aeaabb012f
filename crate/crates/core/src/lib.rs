//! Optimal nonlinear damping (OND) motion control.
//!
//! The crate covers the whole desk-scale pipeline around the OND feedback law:
//!
//! - [`signals`]: references, square-wave dither and seeded sensor noise,
//! - [`plants`]: double integrator, first-order-lag motor and a synthetic
//!   voice-coil drive,
//! - [`controllers`]: the OND family, the one-parameter PD reference and the
//!   Lyapunov / convergence diagnostics,
//! - [`differentiator`]: second-order sliding-mode differentiator and a
//!   Butterworth-filtered finite difference,
//! - [`sim`]: fixed-step closed-loop simulation with full traces,
//! - [`sysid`]: closed-loop frequency-response measurement, two-parameter
//!   model fit and crossover / phase-margin tuning,
//! - [`landscape`]: energy-dissipation-rate grids,
//! - [`presets`]: the benchmark and rig scenario configurations.
//!
//! ```
//! use ond_core::controllers::{ond_regularized, ErrorState, OndGains};
//!
//! let gains = OndGains::regularized(100.0, 1e-4);
//! let u = ond_regularized(ErrorState::new(1.0, 0.0), &gains);
//! assert_eq!(u, -100.0);
//! ```

pub mod controllers;
pub mod differentiator;
pub mod error;
pub mod landscape;
pub mod math;
pub mod plants;
pub mod presets;
pub mod signals;
pub mod sim;
pub mod sysid;

pub use error::{Error, Result};
pub use plants::State2;
