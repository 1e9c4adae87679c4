//! Deliberate fault injection, used to check that the reproduction checks
//! are not vacuous.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Faults {
    /// Use `[[c, -s], [s, c]]` instead of the Givens rotation.
    pub flip_givens_sign: bool,
    /// Added to every mixing coefficient `β`; `γ` is then taken as
    /// `±√(1 - β²)` so the state stays normalized.
    pub beta_offset: f64,
}

impl Faults {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_active(&self) -> bool {
        self.flip_givens_sign || self.beta_offset != 0.0
    }

    /// Applies the β perturbation to an exact `(β, γ)` pair.
    pub fn mixing(&self, beta: f64, gamma: f64) -> (f64, f64) {
        if self.beta_offset == 0.0 {
            return (beta, gamma);
        }
        let b = (beta + self.beta_offset).clamp(-1.0, 1.0);
        let g = (1.0 - b * b).max(0.0).sqrt();
        (b, if gamma < 0.0 { -g } else { g })
    }
}
