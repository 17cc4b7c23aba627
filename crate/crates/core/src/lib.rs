pub mod algebraic;
pub mod diagonal;
pub mod digits;
pub mod dyadic;
pub mod poly;
pub mod segments;
pub mod sigma;
pub mod verifier;

pub use algebraic::{compare, enumerate_algebraics, isolate_roots, refine, AlgebraicEnumeration, AlgebraicReal};
pub use diagonal::{diagonalize, prepend_and_shift, recursive_t_sequence};
pub use digits::{reals_differ, DigitStream, Separation, StreamSequence};
pub use dyadic::{Dyadic, DyadicInterval};
pub use poly::IntPolynomial;
pub use sigma::{build_sigma, index_of, SigmaEnumeration};
pub use segments::{fill_segment, hunt_target, FillerPolicy, HuntReport, PlacementMode, PlacementState};
pub use verifier::{certify_diagonal, certify_nonalgebraic, check, scan_collisions, Certificate};
