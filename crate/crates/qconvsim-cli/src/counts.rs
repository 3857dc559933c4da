//! Counts file for standalone tomography: six labeled projective counts
//! plus per-basis totals, checked for consistency, with an optional cardinal
//! target state for the fidelity quote.

use serde::{Deserialize, Serialize};

use qconvsim::statekit::{self, DensityMatrix};
use qconvsim::tomography::CountSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsFile {
    pub n_zero: u64,
    pub n_one: u64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_plus_i: u64,
    pub n_minus_i: u64,
    pub total_z: u64,
    pub total_x: u64,
    pub total_y: u64,
    /// One of: zero, one, plus, minus, plus_i, minus_i.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl CountsFile {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_zero + self.n_one != self.total_z {
            v.push(format!(
                "total_z: expected n_zero + n_one = {}, got {}",
                self.n_zero + self.n_one,
                self.total_z
            ));
        }
        if self.n_plus + self.n_minus != self.total_x {
            v.push(format!(
                "total_x: expected n_plus + n_minus = {}, got {}",
                self.n_plus + self.n_minus,
                self.total_x
            ));
        }
        if self.n_plus_i + self.n_minus_i != self.total_y {
            v.push(format!(
                "total_y: expected n_plus_i + n_minus_i = {}, got {}",
                self.n_plus_i + self.n_minus_i,
                self.total_y
            ));
        }
        if let Some(t) = &self.target {
            if self.target_density().is_none() {
                v.push(format!(
                    "target: unknown state label {t:?}; expected one of zero, one, plus, minus, plus_i, minus_i"
                ));
            }
        }
        v
    }

    pub fn to_count_set(&self) -> CountSet {
        CountSet {
            n_zero: self.n_zero,
            n_one: self.n_one,
            n_plus: self.n_plus,
            n_minus: self.n_minus,
            n_plus_i: self.n_plus_i,
            n_minus_i: self.n_minus_i,
        }
    }

    pub fn target_density(&self) -> Option<DensityMatrix> {
        let label = self.target.as_deref()?;
        statekit::cardinal_states()
            .into_iter()
            .find(|(name, _)| *name == label)
            .map(|(_, state)| state.density())
    }
}
