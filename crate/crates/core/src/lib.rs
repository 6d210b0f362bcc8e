//! Exact and Monte Carlo expectations of products of random Fourier-Walsh
//! feature matrices on the boolean hypercube, together with the counting
//! bounds that control their operator norms.

pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod exec;
pub mod experiments;
pub mod family;
pub mod hypercube;
pub mod linalg;
pub mod matrix;
pub mod partition;

pub use error::{Error, Result};
pub use exec::Execution;
pub use hypercube::{Dataset, SignVector, SubsetMask};
pub use matrix::{ExpectationMatrix, McEstimate, ProductSpec};
