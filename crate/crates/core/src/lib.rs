//! Online approximate optimal tracking for control-affine nonlinear systems
//! with unknown drift dynamics.
//!
//! The library couples three learners in one closed loop:
//!
//! * a **concurrent-learning system identifier** ([`sysid`]) that estimates
//!   the drift from a recorded history stack, replacing persistent
//!   excitation with a rank condition;
//! * an **actor–critic value-function approximator** ([`adp`]) that descends
//!   the approximate Bellman error, extrapolated through the identified
//!   model to a fixed grid of off-trajectory points, so no probing signal is
//!   injected;
//! * a **tracking reformulation** ([`model`]) that turns the time-varying
//!   tracking problem into a stationary optimal control problem over the
//!   concatenated error/desired state.
//!
//! A fixed-step RK4 simulator ([`sim`]) integrates the coupled loop, a
//! Riccati oracle ([`oracle`]) provides ground truth on linear-quadratic
//! scenarios, and [`gains`] evaluates the sufficient gain conditions of the
//! convergence analysis as diagnostics. The `adptrack` binary exposes
//! `simulate`, `check-gains`, `oracle`, and `selftest` subcommands (see
//! [`cli`]).
//!
//! # Quick start
//!
//! ```
//! use adptrack::{scenarios, sim};
//!
//! let scenario = scenarios::scalar_lq_default();
//! let outcome = sim::run(&scenario, 1.0, 0.01).unwrap();
//! assert!(outcome.divergence.is_none());
//! let metrics = sim::metrics(&outcome.trace, &scenario, None).unwrap();
//! assert_eq!(metrics.rows, 101);
//! ```

pub mod adp;
pub mod cli;
pub mod error;
pub mod gains;
pub(crate) mod linalg;
pub mod model;
pub mod oracle;
pub mod scenarios;
pub mod sim;
pub mod sysid;

pub use error::{Error, Result};

// The guide chapters under book/src are compiled as doc-tests so their code
// blocks stay in sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }
    chapter!(Introduction, "../../../book/src/introduction.md");
    chapter!(TrackingProblem, "../../../book/src/tracking-problem.md");
    chapter!(SystemIdentification, "../../../book/src/system-identification.md");
    chapter!(ValueApproximation, "../../../book/src/value-approximation.md");
    chapter!(LearningLaws, "../../../book/src/learning-laws.md");
    chapter!(RiccatiOracle, "../../../book/src/riccati-oracle.md");
    chapter!(GainConditions, "../../../book/src/gain-conditions.md");
    chapter!(Simulation, "../../../book/src/simulation.md");
    chapter!(CommandLine, "../../../book/src/cli.md");
}
