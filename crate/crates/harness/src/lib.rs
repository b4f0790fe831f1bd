//! Numerical experiments built on `chopkit`, and the brute-force oracles the
//! acceptance tests check it against.

pub mod bench;
pub mod geometric;
pub mod oracle;
pub mod refinement;
pub mod roundtrip;

pub use bench::{bench, BenchReport};
pub use geometric::{geometric_sum_demo, SumTrace};
pub use oracle::Grid;
pub use refinement::{iterative_refinement, IrReport};
pub use roundtrip::{exhaustive_roundtrip, RoundtripReport};
