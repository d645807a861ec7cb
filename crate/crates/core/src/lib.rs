//! Multi-aircraft conflict resolution by discretised manoeuvre sequences.
//!
//! Each aircraft gets a domain of legal trajectories built from a catalog
//! of heading and speed orders issued at segment boundaries. Trajectory
//! pairs are checked for separation over a common resolution period, and a
//! best-first search picks one trajectory per aircraft minimising total
//! fuel with every pair compatible. A weighted-CSP export, a greedy method
//! and an anytime refinement loop sit around that core.
//!
//! All numeric code is generic over [`Scalar`] (`f64` or `f32`); the
//! `*F64`/`*F32` aliases name the common instantiations.

mod error;
mod scalar;

pub mod bench;
pub mod model;
pub mod separation;
pub mod solver_aux;
pub mod solver_sbf;
pub mod trajgen;

pub use error::{Error, Result};
pub use scalar::{bearing, heading_difference, heading_vector, knots_to_nm_per_s, normalize_heading, quantize_cost, Scalar};

pub use model::{AircraftSpec, AircraftState, ConflictInstance, FuelCategory, ManoeuvreOrder, PerformanceEnvelope, Trajectory};
pub use separation::{compatible, min_distance, SampledTrack, SeparationParams};
pub use solver_aux::{formalize_wcsp, solve_greedy, WcspInstance};
pub use solver_sbf::{solve_oracle, solve_sbf, SbfOptions, SbfOutcome, Solution};
pub use trajgen::{build_candidate_set, CandidateSet, DiscretisationParams};

pub type InstanceF64 = ConflictInstance<f64>;
pub type InstanceF32 = ConflictInstance<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type CandidateSetF64 = CandidateSet<f64>;
pub type CandidateSetF32 = CandidateSet<f32>;
pub type SolutionF64 = Solution<f64>;
pub type SolutionF32 = Solution<f32>;
