//! Ready-made benchmark scenarios with their shipped default parameters.
//!
//! These are the same objects the CLI builds from config files; tests and
//! examples construct them directly.

use crate::cli::registry;
use crate::sim::Scenario;

/// Scalar linear plant tracking a constant setpoint; exactly parameterized,
/// with a Riccati ground truth.
pub fn scalar_lq_default() -> Scenario {
    registry::build_scenario(&registry::baseline("scalar_lq").expect("registered"))
        .expect("baseline config is valid")
}

/// Two-state linear plant tracking a harmonic orbit; exactly parameterized,
/// with a Riccati ground truth.
pub fn twostate_lq_default() -> Scenario {
    registry::build_scenario(&registry::baseline("twostate_lq").expect("registered"))
        .expect("baseline config is valid")
}

/// Two-state nonlinear plant tracking a harmonic orbit; the drift lies
/// outside the identifier basis span.
pub fn twostate_nl_default() -> Scenario {
    registry::build_scenario(&registry::baseline("twostate_nl").expect("registered"))
        .expect("baseline config is valid")
}
