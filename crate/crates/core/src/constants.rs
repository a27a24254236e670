//! The implicit constants hidden behind "less than up to a constant" relations.
//!
//! Every estimate that is only stated up to a multiplicative constant reads its
//! constant from this table. All default to 1.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImplicitConstants {
    /// Per-step contraction estimate of an averaging step.
    pub step: f64,
    /// Bracket estimate between weighted vector-field norms.
    pub bracket: f64,
    /// Multiple of `r` defining a nearly-periodic window `|∇h - ω| < window·r`.
    pub window: f64,
    /// Smallness clauses `m T ε < c r^2` and `T r < c s`.
    pub smallness: f64,
    /// Thresholds `ε < c·x^{1/e}` in the exponent ledger.
    pub threshold: f64,
}

impl Default for ImplicitConstants {
    fn default() -> Self {
        Self { step: 1.0, bracket: 1.0, window: 1.0, smallness: 1.0, threshold: 1.0 }
    }
}

impl ImplicitConstants {
    pub fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("step", self.step),
            ("bracket", self.bracket),
            ("window", self.window),
            ("smallness", self.smallness),
            ("threshold", self.threshold),
        ]
    }
}
