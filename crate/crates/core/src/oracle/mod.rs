//! Ground truth for the heuristic: a sequence validator, exact solvers and
//! seeded graph generators.

mod exact;
mod generate;
mod validate;

pub use exact::{backtrack_solve, dp_solve, ExactError, ExactSolver, DEFAULT_CAP};
pub use generate::{generate, named, Family, GenError, NAMED};
pub use validate::{validate, walk_is_hamiltonian};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Path,
    #[default]
    Circuit,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "path" => Ok(Mode::Path),
            "circuit" | "cycle" => Ok(Mode::Circuit),
            other => Err(format!("unknown mode {other:?} (expected path or circuit)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Path => "path",
            Mode::Circuit => "circuit",
        })
    }
}
