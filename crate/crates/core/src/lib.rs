pub mod cli;
pub mod dominance;
pub mod envelopes;
pub mod harness;
pub mod measures;
pub mod scenario;
pub mod tol;
