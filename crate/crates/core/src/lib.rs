//! Modeling, simulation and control analysis for the buck converter stage
//! of a series-series compensated wireless power receiver.
//!
//! The receiver coil behaves as a sinusoidal current source. After the
//! diode bridge it charges a finite DC-link capacitor which feeds a
//! synchronous buck converter. That current-source input gives the
//! duty-to-inductor-current and duty-to-output-voltage transfer functions
//! a right-half-plane zero at `D²/(C_DC·R)`.
//!
//! Module map:
//!
//! - [`model`]: plant parameters, cycle-averaged model, operating point
//!   and small-signal state-space linearization.
//! - [`tf`]: polynomials, rational transfer functions, root finding, Bode
//!   evaluation, pole-zero maps and parameter sweeps.
//! - [`sim`]: event-aligned switched time-domain simulation.
//! - [`netan`]: virtual network analyzer driving [`sim`] with sinusoidal
//!   duty perturbations.
//! - [`control`]: PI and dual-loop compensators, stability margins and
//!   closed-loop switched simulation.

pub mod control;
pub mod error;
pub mod model;
pub mod netan;
pub mod sim;
pub mod tf;

pub use error::{Error, Result};
pub use model::{AvgState, OperatingPoint, ReceiverParams, SmallSignalSS};
