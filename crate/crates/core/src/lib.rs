//! Porosity at infinity, pretangent spaces at infinity and the criteria
//! linking them, evaluated on finite prefixes with explicit tolerances.

pub mod cli;
pub mod error;
pub mod model;
pub mod numeric;
pub mod porosity;
pub mod pretangent;
pub mod criteria;
pub mod gallery;
pub mod sequence;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Three-valued answer of a finite-prefix test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Undetermined,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_definite(self) -> bool {
        self != Verdict::Undetermined
    }
}
