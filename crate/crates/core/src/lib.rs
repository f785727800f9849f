//! Pairwise-comparison (PC) matrices, EVM/GMM priorities, Saaty's
//! consistency index, and two heuristics that promote one alternative over
//! another by overwriting as few comparisons as possible.
//!
//! ```
//! use pcman::{find_m, Algorithm, ManipulationRequest, Method, PcMatrix};
//!
//! let c = PcMatrix::consistent_from_weights(&[0.5, 0.3, 0.2]).unwrap();
//! // Promote a_3 (index 2) over a_2 (index 1).
//! let req = ManipulationRequest::new(2, 1, Algorithm::Matrix, Method::Evm);
//! let res = find_m(&c, &req).unwrap();
//! assert!(res.swapped);
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod consistency;
pub mod detect;
pub mod error;
pub mod io;
pub mod manip;
pub mod matrix;
pub mod montecarlo;
pub mod priority;

pub use consistency::{consistency, consistency_index, ConsistencyReport, RandomIndexTable};
pub use detect::{detect_row_manipulation, DetectionReport, Suspect};
pub use error::{Error, Result};
pub use manip::{
    find_m, matrix_compute_changes, row_compute_changes, Algorithm, Changes, ManipulationRequest,
    ManipulationResult, ScaleMode, Selection, StepRecord,
};
pub use matrix::{hadamard_distance, PcMatrix};
pub use montecarlo::{BucketStats, ExperimentConfig, GenerationConfig};
pub use priority::{derive, derive_evm, derive_gmm, rank_of, Method, PriorityVector, Ranking};
