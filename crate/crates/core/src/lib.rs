//! Two-phase heuristic for Hamiltonian paths and circuits.
//!
//! The mapping phase walks the graph under a set of labelling constraints and
//! leaves behind an ordered list of edge records. The reconstruction phase
//! grows two paths out of that list, adding junction edges where the records
//! run out, while a tolerance policy decides how to back off from states that
//! can no longer be completed. An exact solver, a validator and generators sit
//! alongside for checking results.
//!
//! ```
//! use sfcm::harness::{solve, SolveConfig, SolveStatus};
//! use sfcm::oracle::{generate, validate, Family, Mode};
//!
//! let g = generate(&Family::PlantedCycle { n: 12, p: 0.2 }, 3).unwrap();
//! let run = solve(&g, &SolveConfig { mode: Mode::Circuit, ..SolveConfig::default() });
//! if run.report.status == SolveStatus::Found {
//!     assert!(validate(&g, run.report.sequence.as_ref().unwrap(), Mode::Circuit));
//! }
//! ```

pub mod graph;
pub mod harness;
pub mod mapping;
pub mod oracle;
pub mod policy;
pub mod reconstruction;
pub mod scene;

pub use graph::{Graph, GraphError, VertexMask};
pub use harness::{solve, SolveConfig, SolveReport, SolveStatus};
pub use oracle::Mode;
