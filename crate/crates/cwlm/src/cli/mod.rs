//! Command-line front end: declarative configs, presets and artifact
//! writers. The binary in `main.rs` is a thin argument-parsing shell around
//! this module, so integration tests can drive the same code paths directly.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{Scenario, ScenarioConfig};
pub use output::Sidecar;
pub use run::SweepQuantity;

use crate::error::CwlmError;

/// Process exit code for an error: 2 for configuration problems, 3 for
/// physics-validation failures (strict mode), 4 for numerical-quality
/// failures.
pub fn exit_code(e: &CwlmError) -> i32 {
    match e {
        CwlmError::InvalidParameter(_)
        | CwlmError::NonFiniteParameter(_)
        | CwlmError::NotNormalized(_)
        | CwlmError::NotOrthogonal(_)
        | CwlmError::ProbabilityOutOfRange(_)
        | CwlmError::InvalidK(_) => 2,
        CwlmError::ValidationFailed(_) => 3,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(exit_code(&CwlmError::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&CwlmError::ValidationFailed("x".into())), 3);
        assert_eq!(exit_code(&CwlmError::InsufficientDecay(1.0)), 4);
        assert_eq!(exit_code(&CwlmError::StateBlowup(-1.0)), 4);
    }
}
