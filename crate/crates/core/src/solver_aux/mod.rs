//! The weighted-CSP view of a candidate set (formalization, `.wcsp` file
//! I/O, exhaustive evaluation), the external solver adapter and the greedy
//! sequential method.

mod external;
mod greedy;
mod wcsp;

pub use external::{resolve_binary, run_external_solver, ExternalFailure, ExternalOutcome, FailureKind};
pub use greedy::{solve_greedy, GreedyOptions, GreedySolution, GreedyStatus};
pub use wcsp::{export_wcsp, formalize_wcsp, parse_wcsp, write_wcsp, BinaryConstraint, WcspInstance, DEFAULT_SCALE};
